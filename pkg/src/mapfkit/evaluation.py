"""Scenarios, episode runner, baseline policies and evaluation metrics."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Sequence

import numpy as np

from mapfkit import env as mapf_env
from mapfkit.env import Action, EnvState, Status, action_between
from mapfkit.errors import InvalidArgumentError
from mapfkit.grid import Coord, GridMap
from mapfkit.planner import PlanResult, prioritized_plan

Policy = Callable[[EnvState], Sequence[int]]

THREADS_ENV = "ALPHA_MAPF_THREADS"


class PolicyError(RuntimeError):
    """A policy returned something that is not one valid action per agent."""


@dataclass
class Scenario:
    grid: GridMap
    starts: list[Coord]
    goals: list[Coord]
    max_steps: int = mapf_env.EVAL_MAX_STEPS
    seed: int = 0
    scenario_id: str = "scenario"
    plan: list[list[Coord]] | None = None

    @property
    def n_agents(self) -> int:
        return len(self.starts)

    def to_json(self) -> dict:
        out = {
            "id": self.scenario_id,
            "map": self.grid.to_json(),
            "starts": [list(s) for s in self.starts],
            "goals": [list(g) for g in self.goals],
            "max_steps": self.max_steps,
            "seed": self.seed,
        }
        if self.plan is not None:
            out["plan"] = [[list(c) for c in p] for p in self.plan]
        return out

    @classmethod
    def from_json(cls, obj: dict, default_id: str = "scenario") -> "Scenario":
        plan = obj.get("plan")
        return cls(
            grid=GridMap.from_json(obj["map"]),
            starts=[tuple(s) for s in obj["starts"]],
            goals=[tuple(g) for g in obj["goals"]],
            max_steps=int(obj.get("max_steps", mapf_env.EVAL_MAX_STEPS)),
            seed=int(obj.get("seed", 0)),
            scenario_id=str(obj.get("id", default_id)),
            plan=None if plan is None else [[tuple(c) for c in p] for p in plan],
        )


def random_scenario(grid: GridMap, n_agents: int, seed: int, max_steps: int = mapf_env.EVAL_MAX_STEPS,
                    scenario_id: str | None = None) -> Scenario:
    """Distinct random starts and goals inside the largest free component."""
    from mapfkit.grid import free_components

    labels, n = free_components(grid.free)
    if n == 0:
        raise InvalidArgumentError("map has no free cells")
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    ys, xs = np.nonzero(labels == int(np.argmax(sizes)))
    if len(xs) < n_agents:
        raise InvalidArgumentError(f"only {len(xs)} connected free cells for {n_agents} agents")
    rng = np.random.default_rng(seed)
    s_idx = rng.choice(len(xs), size=n_agents, replace=False)
    g_idx = rng.choice(len(xs), size=n_agents, replace=False)
    starts = [(int(xs[i]), int(ys[i])) for i in s_idx]
    goals = [(int(xs[i]), int(ys[i])) for i in g_idx]
    return Scenario(grid, starts, goals, max_steps, seed, scenario_id or f"s{seed}")


def load_scenarios(directory) -> list[Scenario]:
    files = sorted(FsPath(directory).glob("*.json"))
    return [Scenario.from_json(json.loads(f.read_text()), f.stem) for f in files]


@dataclass
class EpisodeRecord:
    scenario_id: str
    n_agents: int
    status: Status
    steps: int
    arrival_steps: list[int | None]
    max_steps: int
    map_size: tuple[int, int] = (0, 0)
    log: list[dict] = field(default_factory=list, repr=False)
    collisions: int = 0

    @property
    def arrived(self) -> int:
        return sum(a is not None for a in self.arrival_steps)


# -- policies ------------------------------------------------------------------

def idle_policy(state: EnvState) -> list[int]:
    return [int(Action.IDLE)] * state.n_agents


def replay_policy(paths: Sequence[Sequence[Coord]]) -> Policy:
    """Follow timed paths; agents idle once their path is exhausted."""
    paths = [[tuple(c) for c in p] for p in paths]

    def act(state: EnvState) -> list[int]:
        t = state.step
        out = []
        for i, p in enumerate(paths):
            if t + 1 < len(p):
                out.append(int(action_between(state.positions[i], p[t + 1])))
            else:
                out.append(int(Action.IDLE))
        return out

    return act


def prioritized_policy(scenario: Scenario) -> tuple[Policy, PlanResult]:
    result = prioritized_plan(scenario.grid, scenario.starts, scenario.goals, scenario.max_steps, seed=scenario.seed)
    if not result.success:
        return idle_policy, result
    return replay_policy(result.paths), result


# -- runner --------------------------------------------------------------------

def _check_actions(actions, n: int) -> list[int]:
    try:
        out = [int(a) for a in actions]
    except (TypeError, ValueError) as exc:
        raise PolicyError(f"policy returned non-integer actions {actions!r}") from exc
    if len(out) != n:
        raise PolicyError(f"policy returned {len(out)} actions for {n} agents")
    bad = [a for a in out if a not in {int(x) for x in Action}]
    if bad:
        raise PolicyError(f"policy returned unknown action ids {bad}")
    return out


def run_episode(scenario: Scenario, policy: Policy, max_steps: int | None = None,
                tau: int = mapf_env.DEFAULT_TAU, blocking: bool = True, keep_log: bool = True) -> EpisodeRecord:
    cap = scenario.max_steps if max_steps is None else max_steps
    state = mapf_env.reset(scenario.grid, scenario.starts, scenario.goals, cap)
    arrival = [0 if state.on_goal(i) else None for i in range(state.n_agents)]
    log: list[dict] = []
    collisions = 0
    status = mapf_env.is_done(state)
    while status is Status.RUNNING:
        actions = _check_actions(policy(state), state.n_agents)
        state, outcome = mapf_env.step_joint(state, actions, tau=tau, blocking=blocking)
        collisions += sum(outcome.collided)
        for i in range(state.n_agents):
            if not state.on_goal(i):
                arrival[i] = None
            elif arrival[i] is None:
                arrival[i] = state.step
        if keep_log:
            log.append(outcome.to_json(state.step, state.positions))
        status = outcome.status
    return EpisodeRecord(
        scenario.scenario_id, state.n_agents, status, state.step, arrival, cap,
        (scenario.grid.width, scenario.grid.height), log, collisions,
    )


def run_batch(scenarios: Sequence[Scenario], make_policy: Callable[[Scenario], Policy],
              threads: int | None = None, **kwargs) -> list[EpisodeRecord]:
    """Run independent episodes concurrently; results keep the input order."""
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, os.cpu_count() or 1))
    threads = max(1, threads)

    def one(sc: Scenario) -> EpisodeRecord:
        return run_episode(sc, make_policy(sc), **kwargs)

    if threads == 1:
        return [one(sc) for sc in scenarios]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, scenarios))


# -- metrics -------------------------------------------------------------------

def makespan(record: EpisodeRecord) -> int:
    """Step of the last arrival; the step cap for unsuccessful episodes."""
    if record.status is not Status.SUCCESS:
        return record.max_steps
    return max((a for a in record.arrival_steps if a is not None), default=0)


def _nonempty(records) -> list[EpisodeRecord]:
    records = list(records)
    if not records:
        raise ValueError("metrics are undefined for an empty set of episodes")
    return records


def success_rate(records) -> float:
    records = _nonempty(records)
    return sum(r.status is Status.SUCCESS for r in records) / len(records)


def arrival_rate(records) -> float:
    """Arrived agents over all agents; equals the per-episode formula for uniform team sizes."""
    records = _nonempty(records)
    total = sum(r.n_agents for r in records)
    return sum(r.arrived for r in records) / total if total else 0.0


def episode_length(records) -> float:
    records = _nonempty(records)
    return sum(makespan(r) for r in records) / len(records)


def aggregate(records) -> dict[str, float]:
    records = _nonempty(records)
    return {
        "MS": episode_length(records),
        "SR": success_rate(records),
        "AR": arrival_rate(records),
        "EL": episode_length(records),
        "episodes": len(records),
    }


def results_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario_id", "n_agents", "map_size", "status", "makespan"])
    for r in records:
        w.writerow([r.scenario_id, r.n_agents, f"{r.map_size[0]}x{r.map_size[1]}", r.status.value, makespan(r)])
    return buf.getvalue()

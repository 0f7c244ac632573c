"""Synchronous multi-agent grid environment.

All agents act at once. Moves into obstacles or off the map turn into idle
and count as a collision. Among the remaining moves, agents that would share
a cell or swap cells are sent back to their own cell; this repeats until no
conflict is left, since a reverted agent can in turn block someone moving
into its cell. Every reverted agent is flagged as collided.

Rewards per agent and step::

    move                      -0.3
    idle, not on goal         -0.3
    idle, on goal              0.0
    collided                  -2.0   (replaces the above)
    idle while blocking       -1.0 * eta   (added)

An agent blocks another if, with the blocker treated as an obstacle, the
other's shortest path to its goal disappears or grows by more than ``tau``.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, replace
from functools import lru_cache
from enum import Enum, IntEnum

from mapfkit.errors import InvalidArgumentError
from mapfkit.grid import Coord, GridMap
from mapfkit.pathfind import distance_field, grid_neighbours

REWARD_MOVE = -0.3
REWARD_IDLE = -0.3
REWARD_IDLE_ON_GOAL = 0.0
REWARD_COLLISION = -2.0
BLOCKING_PENALTY = -1.0

DEFAULT_TAU = 10
TRAIN_MAX_STEPS = 256
EVAL_MAX_STEPS = 512


class Action(IntEnum):
    IDLE = 0
    UP = 1
    DOWN = 2
    LEFT = 3
    RIGHT = 4


DELTAS = {
    Action.IDLE: (0, 0),
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}


def apply(pos: Coord, action: Action) -> Coord:
    dx, dy = DELTAS[action]
    return (pos[0] + dx, pos[1] + dy)


def action_between(a: Coord, b: Coord) -> Action:
    """The action that moves from ``a`` to the adjacent (or equal) cell ``b``."""
    d = (b[0] - a[0], b[1] - a[1])
    for act, delta in DELTAS.items():
        if delta == d:
            return act
    raise InvalidArgumentError(f"{a} -> {b} is not a single move")


class Status(str, Enum):
    RUNNING = "running"
    SUCCESS = "success"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class EnvState:
    grid: GridMap
    positions: tuple[Coord, ...]
    previous_positions: tuple[Coord, ...]
    goals: tuple[Coord, ...]
    step: int = 0
    max_steps: int = TRAIN_MAX_STEPS

    @property
    def n_agents(self) -> int:
        return len(self.positions)

    def on_goal(self, agent: int) -> bool:
        return self.positions[agent] == self.goals[agent]


@dataclass(frozen=True)
class StepOutcome:
    actions: tuple[Action, ...]
    rewards: tuple[float, ...]
    collided: tuple[bool, ...]
    eta: tuple[int, ...]
    status: Status

    @property
    def done(self) -> bool:
        return self.status is not Status.RUNNING

    def to_json(self, step: int, positions) -> dict:
        return {
            "step": step,
            "actions": [int(a) for a in self.actions],
            "rewards": list(self.rewards),
            "positions": [list(p) for p in positions],
            "collisions": list(self.collided),
            "eta": list(self.eta),
        }


def _as_coords(cells, what: str) -> tuple[Coord, ...]:
    out = []
    for c in cells:
        if len(c) != 2:
            raise InvalidArgumentError(f"{what} entries must be (x, y) pairs")
        out.append((int(c[0]), int(c[1])))
    return tuple(out)


def reset(grid: GridMap, starts, goals, max_steps: int = TRAIN_MAX_STEPS) -> EnvState:
    starts = _as_coords(starts, "starts")
    goals = _as_coords(goals, "goals")
    if len(starts) != len(goals) or not starts:
        raise InvalidArgumentError("need the same, non-zero number of starts and goals")
    if max_steps < 0:
        raise InvalidArgumentError("max_steps must be non-negative")
    for kind, cells in (("start", starts), ("goal", goals)):
        seen: dict[Coord, int] = {}
        for i, c in enumerate(cells):
            if not grid.is_free(c):
                raise InvalidArgumentError(f"agent {i}: {kind} {c} is not a free cell")
            if c in seen:
                raise InvalidArgumentError(f"agent {i}: {kind} {c} duplicates agent {seen[c]}")
            seen[c] = i
    for i, (s, g) in enumerate(zip(starts, goals)):
        if distance_field(grid, g)[s[1], s[0]] < 0:
            raise InvalidArgumentError(f"agent {i}: goal {g} unreachable from start {s}")
    return EnvState(grid, starts, starts, goals, 0, max_steps)


def valid_actions(state: EnvState, agent: int) -> list[Action]:
    """Idle plus every in-map move onto a free cell except stepping back.

    Other agents are deliberately ignored here.
    """
    pos = state.positions[agent]
    prev = state.previous_positions[agent]
    out = [Action.IDLE]
    for act in (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT):
        nxt = apply(pos, act)
        if state.grid.is_free(nxt) and nxt != prev:
            out.append(act)
    return out


def valid_action_mask(state: EnvState, agent: int) -> list[int]:
    allowed = set(valid_actions(state, agent))
    return [int(a in allowed) for a in Action]


def is_done(state: EnvState) -> Status:
    if all(p == g for p, g in zip(state.positions, state.goals)):
        return Status.SUCCESS
    if state.step >= state.max_steps:
        return Status.TIMEOUT
    return Status.RUNNING


def compute_reward(action: Action, on_goal: bool, collided: bool, eta: int = 0) -> float:
    if collided:
        base = REWARD_COLLISION
    elif action == Action.IDLE:
        base = REWARD_IDLE_ON_GOAL if on_goal else REWARD_IDLE
    else:
        base = REWARD_MOVE
    if action == Action.IDLE and eta > 0:
        base += BLOCKING_PENALTY * eta
    return base


def _detour_exceeds(grid: GridMap, start: Coord, ego: Coord, goal: Coord, limit: int) -> bool:
    """True if every start -> goal path avoiding ``ego`` is longer than ``limit``.

    A* whose heuristic is the exact goal distance on the map without the
    ego obstacle; removing a cell can only lengthen paths, so the heuristic
    stays consistent and the search hugs the original shortest path.
    """
    w = grid.width
    field = _flat_field(grid, goal)
    nbrs = grid_neighbours(grid)
    blocked = ego[1] * w + ego[0]
    src = start[1] * w + start[0]
    g_cost = {src: 0}
    # ties go to the deepest node so the search runs straight down one path
    heap = [(field[src], 0, src)]
    while heap:
        _, neg_g, cur = heapq.heappop(heap)
        g = -neg_g
        if g > g_cost[cur]:
            continue
        if field[cur] == 0:
            return False
        g += 1
        for n in nbrs[cur]:
            if n == blocked:
                continue
            f = g + field[n]
            if f > limit or g >= g_cost.get(n, limit + 1):
                continue
            g_cost[n] = g
            heapq.heappush(heap, (f, -g, n))
    return True


@lru_cache(maxsize=4096)
def _flat_field(grid: GridMap, goal: Coord) -> list[int]:
    return distance_field(grid, goal).ravel().tolist()


def is_blocking(state: EnvState, agent: int, tau: int = DEFAULT_TAU) -> tuple[bool, int]:
    """Count agents whose way to goal ``agent`` obstructs by more than ``tau``."""
    grid = state.grid
    ego = state.positions[agent]
    eta = 0
    w = grid.width
    ego_idx = ego[1] * w + ego[0]
    for j, (pos, goal) in enumerate(zip(state.positions, state.goals)):
        if j == agent:
            continue
        field = _flat_field(grid, goal)
        after = field[pos[1] * w + pos[0]]
        if after < 0:
            continue  # no path even without the ego agent
        if ego == goal:
            eta += 1
            continue
        # ego lies on no shortest path: removing it changes nothing
        to_ego = _flat_field(grid, pos)[ego_idx]
        if to_ego < 0 or to_ego + field[ego_idx] > after:
            continue
        if _detour_exceeds(grid, pos, ego, goal, after + tau):
            eta += 1
    return eta > 0, eta


def resolve_moves(grid: GridMap, positions, actions) -> tuple[list[Coord], list[bool]]:
    """Simultaneous move resolution. Returns new cells and collision flags."""
    n = len(positions)
    targets = []
    collided = [False] * n
    for i, (pos, act) in enumerate(zip(positions, actions)):
        nxt = apply(pos, act)
        if act != Action.IDLE and not grid.is_free(nxt):
            nxt = pos
            collided[i] = True
        targets.append(nxt)

    while True:
        revert = set()
        counts = Counter(targets)
        for i in range(n):
            if targets[i] != positions[i] and counts[targets[i]] > 1:
                revert.add(i)
        owner = {p: i for i, p in enumerate(positions)}
        for i in range(n):
            j = owner.get(targets[i])
            if j is not None and j != i and targets[i] != positions[i] and targets[j] == positions[i]:
                revert.update((i, j))
        if not revert:
            return targets, collided
        for i in revert:
            targets[i] = positions[i]
            collided[i] = True


def step_joint(state: EnvState, actions, tau: int = DEFAULT_TAU, blocking: bool = True) -> tuple[EnvState, StepOutcome]:
    """Advance all agents one step.

    ``blocking=False`` skips the blocking check (eta is reported as 0).
    """
    if len(actions) != state.n_agents:
        raise InvalidArgumentError(f"expected {state.n_agents} actions, got {len(actions)}")
    try:
        actions = [Action(int(a)) for a in actions]
    except (ValueError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed action vector {actions!r}") from exc

    new_pos, collided = resolve_moves(state.grid, state.positions, actions)
    executed = tuple(action_between(a, b) for a, b in zip(state.positions, new_pos))
    nxt = replace(
        state,
        positions=tuple(new_pos),
        previous_positions=state.positions,
        step=state.step + 1,
    )

    eta = [0] * state.n_agents
    if blocking:
        for i, act in enumerate(executed):
            if act == Action.IDLE:
                eta[i] = is_blocking(nxt, i, tau)[1]
    rewards = tuple(
        compute_reward(executed[i], nxt.on_goal(i), collided[i], eta[i]) for i in range(state.n_agents)
    )
    return nxt, StepOutcome(executed, rewards, tuple(collided), tuple(eta), is_done(nxt))

"""Agent-intent graph: short-horizon A* predictions summarised per agent.

Row layout follows ``(x, y, mu_x, sigma_x, mu_y, sigma_y, dx, dy, mag)``.
``sigma`` is the population variance of the predicted cells along each axis;
``(dx, dy, mag)`` is the unit direction and length of the vector from the
current cell to the last predicted cell.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

from mapfkit.errors import InvalidArgumentError, UnreachableError
from mapfkit.grid import Coord, GridMap
from mapfkit.pathfind import astar_grid4

DEFAULT_HORIZON = 10
INTENT_FIELDS = ("x", "y", "mu_x", "sigma_x", "mu_y", "sigma_y", "dx", "dy", "mag")


@dataclass(frozen=True)
class IntentVector:
    x_curr: float
    y_curr: float
    mu_x: float
    sigma_x: float
    mu_y: float
    sigma_y: float
    dx: float
    dy: float
    mag: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


def predict_trajectory(grid: GridMap, agent_pos: Coord, goal_pos: Coord, f: int = DEFAULT_HORIZON) -> list[Coord]:
    """Next ``f`` cells along the agent's individual A* path, goal-padded."""
    if f < 1:
        raise InvalidArgumentError(f"horizon f must be >= 1, got {f}")
    path = astar_grid4(grid, tuple(agent_pos), tuple(goal_pos))
    if path is None:
        raise UnreachableError(f"goal {goal_pos} unreachable from {agent_pos}")
    future = list(path.cells[1:f + 1])
    future += [tuple(goal_pos)] * (f - len(future))
    return future


def intent_vector(current: Coord, traj, f: int | None = None) -> IntentVector:
    pts = np.asarray(traj, dtype=np.float64).reshape(-1, 2)
    if f is not None and len(pts) != f:
        raise InvalidArgumentError(f"trajectory has {len(pts)} points, expected {f}")
    if len(pts) == 0:
        raise InvalidArgumentError("empty trajectory")
    mu = pts.mean(axis=0)
    var = pts.var(axis=0)
    vx = pts[-1, 0] - current[0]
    vy = pts[-1, 1] - current[1]
    mag = math.hypot(vx, vy)
    dx, dy = (vx / mag, vy / mag) if mag > 0 else (0.0, 0.0)
    return IntentVector(
        float(current[0]), float(current[1]),
        float(mu[0]), float(var[0]), float(mu[1]), float(var[1]),
        float(dx), float(dy), float(mag),
    )


@dataclass(frozen=True)
class IntentGraphObs:
    rows: np.ndarray
    reachable: tuple[bool, ...]
    horizon: int

    def __len__(self) -> int:
        return len(self.rows)

    def to_json(self) -> dict:
        return {
            "features": list(INTENT_FIELDS),
            "horizon": self.horizon,
            "reachable": list(self.reachable),
            "rows": [[float(v) for v in r] for r in self.rows],
        }


def agent_intent(grid: GridMap, pos: Coord, goal: Coord, f: int = DEFAULT_HORIZON) -> tuple[IntentVector, bool]:
    """One agent's row; unreachable goals give a zeroed prediction."""
    try:
        traj = predict_trajectory(grid, pos, goal, f)
    except UnreachableError:
        return IntentVector(float(pos[0]), float(pos[1]), 0, 0, 0, 0, 0, 0, 0), False
    return intent_vector(pos, traj, f), True


def build_intent_graph(grid: GridMap, agent_positions, goals, f: int = DEFAULT_HORIZON) -> IntentGraphObs:
    if len(agent_positions) != len(goals):
        raise InvalidArgumentError("one goal per agent is required")
    rows, ok = [], []
    for i, (pos, goal) in enumerate(zip(agent_positions, goals)):
        if not grid.is_free(tuple(pos)):
            raise InvalidArgumentError(f"agent {i} at {tuple(pos)} is not on a free cell")
        vec, reachable = agent_intent(grid, tuple(pos), tuple(goal), f)
        rows.append(vec.as_array())
        ok.append(reachable)
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), len(INTENT_FIELDS))
    return IntentGraphObs(arr, tuple(ok), f)


def gaussian_heatmap(obs: IntentGraphObs, width: int, height: int, floor: float = 0.25) -> np.ndarray:
    """Sum of per-agent axis-aligned Gaussians on the grid, scaled to [0, 1].

    Variances are floored at ``floor`` so that stationary agents still show
    up as a small blob.
    """
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    heat = np.zeros((height, width))
    for row, ok in zip(obs.rows, obs.reachable):
        if not ok:
            continue
        _, _, mx, sx, my, sy = row[:6]
        sx, sy = max(sx, floor), max(sy, floor)
        heat += np.exp(-0.5 * ((xs - mx) ** 2 / sx + (ys - my) ** 2 / sy))
    top = heat.max()
    return heat / top if top > 0 else heat

"""Augmented static graph: map nodes plus ego and goal rows with detour features.

Each row is ``(x, y, d_na, d_dg, d_od)``:

* ``d_na`` node accessibility -- shortest-path length from the agent minus the
  Manhattan distance,
* ``d_dg`` detour to goal -- the same measured from the goal,
* ``d_od`` off-route degree -- how much longer the agent->goal trip gets when
  forced through the node.

Coordinates are scaled to [0, 1] by the map size; the three detours stay in
raw move counts. Shortest-path lengths come from two BFS distance fields,
which on a unit-cost grid equal the A* lengths.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from mapfkit.errors import InvalidArgumentError, UnreachableError
from mapfkit.grid import Coord, GridMap
from mapfkit.pathfind import astar_grid4, distance_field, manhattan

log = logging.getLogger(__name__)

FEATURE_NAMES = ("x", "y", "d_na", "d_dg", "d_od")


def _path_len(grid: GridMap, a: Coord, b: Coord) -> int:
    path = astar_grid4(grid, a, b)
    if path is None:
        raise UnreachableError(f"no path between {a} and {b}")
    return path.length


def node_accessibility(grid: GridMap, agent_pos: Coord, node_pos: Coord) -> int:
    return _path_len(grid, agent_pos, node_pos) - manhattan(agent_pos, node_pos)


def detour_to_goal(grid: GridMap, goal_pos: Coord, node_pos: Coord) -> int:
    return _path_len(grid, goal_pos, node_pos) - manhattan(goal_pos, node_pos)


def off_route_degree(grid: GridMap, agent_pos: Coord, goal_pos: Coord, node_pos: Coord) -> int:
    return (
        _path_len(grid, agent_pos, node_pos)
        + _path_len(grid, goal_pos, node_pos)
        - _path_len(grid, agent_pos, goal_pos)
    )


@dataclass(frozen=True)
class StaticGraphObs:
    """Rows for the map nodes, then the ego row, then the goal row."""

    rows: np.ndarray
    positions: tuple[Coord, ...]
    excluded: int = 0
    names: tuple[str, ...] = field(default=FEATURE_NAMES, repr=False)

    @property
    def ego_index(self) -> int:
        return len(self.rows) - 2

    @property
    def goal_index(self) -> int:
        return len(self.rows) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.rows) - 2

    def to_json(self) -> dict:
        return {
            "features": list(self.names),
            "ego_index": self.ego_index,
            "goal_index": self.goal_index,
            "excluded": self.excluded,
            "positions": [list(p) for p in self.positions],
            "rows": [[float(v) for v in r] for r in self.rows],
        }


def build_static_graph(
    grid: GridMap, nodes, agent_pos: Coord, goal_pos: Coord
) -> StaticGraphObs:
    """Feature rows for ``nodes`` (MapNodes or coordinates) seen from one agent.

    Nodes not reachable from the agent are dropped and counted in
    ``excluded``.
    """
    agent_pos, goal_pos = tuple(agent_pos), tuple(goal_pos)
    for what, p in (("agent", agent_pos), ("goal", goal_pos)):
        if not grid.is_free(p):
            raise InvalidArgumentError(f"{what} position {p} is not a free cell")
    from_agent = distance_field(grid, agent_pos)
    from_goal = distance_field(grid, goal_pos)
    direct = int(from_agent[goal_pos[1], goal_pos[0]])
    if direct < 0:
        raise UnreachableError(f"goal {goal_pos} unreachable from {agent_pos}")

    positions = [tuple(getattr(n, "position", n)) for n in nodes]
    kept = []
    for x, y in positions:
        if from_agent[y, x] < 0:
            continue
        kept.append((x, y))
    excluded = len(positions) - len(kept)
    if excluded:
        log.warning("excluded %d unreachable node(s) from the static graph", excluded)

    kept += [agent_pos, goal_pos]
    pts = np.array(kept, dtype=np.int64)
    xs, ys = pts[:, 0], pts[:, 1]
    to_agent = from_agent[ys, xs]
    to_goal = from_goal[ys, xs]
    m_agent = np.abs(xs - agent_pos[0]) + np.abs(ys - agent_pos[1])
    m_goal = np.abs(xs - goal_pos[0]) + np.abs(ys - goal_pos[1])

    rows = np.empty((len(kept), 5), dtype=np.float64)
    rows[:, 0] = xs / max(grid.width - 1, 1)
    rows[:, 1] = ys / max(grid.height - 1, 1)
    rows[:, 2] = to_agent - m_agent
    rows[:, 3] = to_goal - m_goal
    rows[:, 4] = to_agent + to_goal - direct
    return StaticGraphObs(rows, tuple(kept), excluded)

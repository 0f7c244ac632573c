"""Prioritized planning with space-time A* and a reservation table.

Agents are planned one after another; each plan reserves its cells per time
step, the moves it makes (to rule out swaps) and, from its arrival onward,
its goal cell. Later agents plan around those reservations. If some agent
cannot be scheduled the whole attempt is retried with a shuffled priority
order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from mapfkit.grid import Coord, GridMap
from mapfkit.pathfind import distance_field

_MOVES = ((0, 0), (0, -1), (-1, 0), (1, 0), (0, 1))


class ReservationTable:
    def __init__(self):
        self.vertex: set[tuple[Coord, int]] = set()
        self.edge: set[tuple[Coord, Coord, int]] = set()
        self.parked: dict[Coord, int] = {}
        self.last_visit: dict[Coord, int] = {}

    def occupied(self, cell: Coord, t: int) -> bool:
        since = self.parked.get(cell)
        return (cell, t) in self.vertex or (since is not None and t >= since)

    def swap_blocked(self, a: Coord, b: Coord, t: int) -> bool:
        """True if someone moves b -> a between t and t + 1."""
        return (b, a, t) in self.edge

    def reserve(self, path: list[Coord]) -> None:
        for t, cell in enumerate(path):
            self.vertex.add((cell, t))
            self.last_visit[cell] = max(self.last_visit.get(cell, -1), t)
            if t + 1 < len(path):
                self.edge.add((cell, path[t + 1], t))
        self.parked[path[-1]] = len(path) - 1


def space_time_astar(grid: GridMap, start: Coord, goal: Coord, table: ReservationTable, max_t: int) -> list[Coord] | None:
    """Earliest conflict-free timed path that can then stay at ``goal`` forever."""
    h_field = distance_field(grid, goal)
    if h_field[start[1], start[0]] < 0:
        return None
    if goal in table.parked:
        return None
    earliest = table.last_visit.get(goal, -1) + 1
    w, h = grid.width, grid.height
    free = grid.free

    def heur(c: Coord) -> int:
        return int(h_field[c[1], c[0]])

    start_state = (start, 0)
    parent: dict[tuple[Coord, int], tuple[Coord, int]] = {}
    seen = {start_state}
    heap = [(heur(start), heur(start), start[1], start[0], 0)]
    while heap:
        _, _, y, x, t = heapq.heappop(heap)
        cur = (x, y)
        if cur == goal and t >= earliest:
            path = [cur]
            state = (cur, t)
            while state != start_state:
                state = parent[state]
                path.append(state[0])
            return path[::-1]
        if t >= max_t:
            continue
        for dx, dy in _MOVES:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or not free[ny, nx]:
                continue
            nxt = (nx, ny)
            state = (nxt, t + 1)
            if state in seen:
                continue
            hv = heur(nxt)
            if t + 1 + hv > max_t:
                continue
            if table.occupied(nxt, t + 1) or (nxt != cur and table.swap_blocked(cur, nxt, t)):
                continue
            seen.add(state)
            parent[state] = (cur, t)
            heapq.heappush(heap, (t + 1 + hv, hv, ny, nx, t + 1))
    return None


@dataclass
class PlanResult:
    success: bool
    paths: list[list[Coord]] = field(default_factory=list)
    order: list[int] = field(default_factory=list)
    attempts: int = 0
    failed_agent: int | None = None

    @property
    def makespan(self) -> int:
        return max((len(p) - 1 for p in self.paths), default=0)

    def padded(self) -> list[list[Coord]]:
        """Paths extended with goal waits to a common length."""
        T = self.makespan
        return [p + [p[-1]] * (T + 1 - len(p)) for p in self.paths]


def _plan_order(grid, starts, goals, order, max_steps) -> tuple[list | None, int | None]:
    table = ReservationTable()
    paths: list = [None] * len(starts)
    for i in order:
        path = space_time_astar(grid, starts[i], goals[i], table, max_steps)
        if path is None:
            return None, i
        table.reserve(path)
        paths[i] = path
    return paths, None


def prioritized_plan(grid: GridMap, starts, goals, max_steps: int = 256, attempts: int = 3, seed: int = 0) -> PlanResult:
    """Plan all agents; the first attempt uses index order, later ones shuffle it."""
    starts = [tuple(s) for s in starts]
    goals = [tuple(g) for g in goals]
    rng = np.random.default_rng(seed)
    order = list(range(len(starts)))
    failed = None
    for attempt in range(1, attempts + 1):
        paths, failed = _plan_order(grid, starts, goals, order, max_steps)
        if paths is not None:
            return PlanResult(True, paths, order, attempt)
        order = [int(i) for i in rng.permutation(len(starts))]
    return PlanResult(False, [], order, attempts, failed)

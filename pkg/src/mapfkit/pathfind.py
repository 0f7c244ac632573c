"""Shortest-path primitives on grids and skeleton masks.

All searches use unit move cost. Ties in the open list are broken by
``(f, y, x)`` so that results are reproducible.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from mapfkit.errors import InvalidArgumentError
from mapfkit.grid import Coord, GridMap

_STEPS4 = ((0, -1), (-1, 0), (1, 0), (0, 1))
_STEPS8 = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


@dataclass(frozen=True)
class Path:
    cells: tuple[Coord, ...]

    @property
    def length(self) -> int:
        """Number of moves."""
        return len(self.cells) - 1

    @property
    def start(self) -> Coord:
        return self.cells[0]

    @property
    def goal(self) -> Coord:
        return self.cells[-1]

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)


def manhattan(a: Coord, b: Coord) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def chebyshev(a: Coord, b: Coord) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _astar(passable: np.ndarray, start: Coord, goal: Coord, steps, heuristic) -> Path | None:
    h, w = passable.shape
    g_cost = {start: 0}
    parent: dict[Coord, Coord] = {}
    closed = set()
    heap = [(heuristic(start, goal), start[1], start[0])]
    while heap:
        _, y, x = heapq.heappop(heap)
        cur = (x, y)
        if cur in closed:
            continue
        if cur == goal:
            cells = [cur]
            while cells[-1] != start:
                cells.append(parent[cells[-1]])
            return Path(tuple(reversed(cells)))
        closed.add(cur)
        g = g_cost[cur] + 1
        for dx, dy in steps:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or not passable[ny, nx]:
                continue
            nxt = (nx, ny)
            if nxt in closed or g >= g_cost.get(nxt, 1 << 60):
                continue
            g_cost[nxt] = g
            parent[nxt] = cur
            heapq.heappush(heap, (g + heuristic(nxt, goal), ny, nx))
    return None


def _check_endpoint(passable: np.ndarray, pos: Coord, what: str, surface: str) -> None:
    x, y = pos
    h, w = passable.shape
    if not (0 <= x < w and 0 <= y < h):
        raise InvalidArgumentError(f"{what} {pos} is out of bounds")
    if not passable[y, x]:
        raise InvalidArgumentError(f"{what} {pos} is not a {surface}")


def astar_grid4(grid: GridMap, start: Coord, goal: Coord, blocked: Coord | None = None) -> Path | None:
    """Shortest 4-connected path over free cells, or None if unreachable.

    ``blocked`` marks one extra cell as a temporary obstacle (used when
    checking whether an agent is in another agent's way); blocking an
    endpoint makes the query unreachable.
    """
    free = grid.free
    _check_endpoint(free, start, "start", "free cell")
    _check_endpoint(free, goal, "goal", "free cell")
    if blocked is not None:
        blocked = tuple(blocked)
        if blocked in (tuple(start), tuple(goal)):
            return None
    if blocked is not None and grid.in_bounds(blocked):
        free = free.copy()
        free[blocked[1], blocked[0]] = False
    return _astar(free, tuple(start), tuple(goal), _STEPS4, manhattan)


def astar_skeleton8(skeleton, start: Coord, goal: Coord) -> Path | None:
    """Shortest 8-connected path confined to skeleton pixels, or None."""
    mask = np.asarray(getattr(skeleton, "mask", skeleton), dtype=bool)
    _check_endpoint(mask, start, "start", "skeleton pixel")
    _check_endpoint(mask, goal, "goal", "skeleton pixel")
    return _astar(mask, tuple(start), tuple(goal), _STEPS8, chebyshev)


@lru_cache(maxsize=64)
def grid_neighbours(grid: GridMap) -> tuple[tuple[int, ...], ...]:
    """Free 4-neighbours of every cell as flat indices ``y * W + x`` (empty for obstacles)."""
    w, h = grid.width, grid.height
    free = grid.free.tolist()
    out = []
    for y in range(h):
        for x in range(w):
            if not free[y][x]:
                out.append(())
                continue
            out.append(tuple(
                (y + dy) * w + (x + dx) for dx, dy in _STEPS4
                if 0 <= x + dx < w and 0 <= y + dy < h and free[y + dy][x + dx]
            ))
    return tuple(out)


def bfs_distances(grid: GridMap, source: Coord, blocked: Coord | None = None) -> np.ndarray:
    """Move counts from ``source`` to every cell (-1 where unreachable)."""
    _check_endpoint(grid.free, source, "source", "free cell")
    w = grid.width
    nbrs = grid_neighbours(grid)
    dist = [-1] * (w * grid.height)
    src = source[1] * w + source[0]
    if blocked is not None and grid.in_bounds(blocked) and tuple(blocked) != tuple(source):
        dist[blocked[1] * w + blocked[0]] = -2  # never entered
    dist[src] = 0
    queue = deque([src])
    while queue:
        cur = queue.popleft()
        d = dist[cur] + 1
        for n in nbrs[cur]:
            if dist[n] == -1:
                dist[n] = d
                queue.append(n)
    out = np.array(dist, dtype=np.int64).reshape(grid.height, w)
    out[out < 0] = -1
    return out


@lru_cache(maxsize=4096)
def distance_field(grid: GridMap, source: Coord) -> np.ndarray:
    """Cached, read-only :func:`bfs_distances` for an immutable map."""
    d = bfs_distances(grid, source)
    d.setflags(write=False)
    return d

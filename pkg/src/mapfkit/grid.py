"""Occupancy grid maps: data type, generators and text/JSON I/O.

Coordinates are ``(x, y)`` = (column, row) with the origin at the top-left
cell. Internally the occupancy array is indexed ``[y, x]``.

Text format, one line per row::

    ..#..
    ..#..
    .....

``.`` is a free cell and ``#`` an obstacle. All lines have the same length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import ndimage

from mapfkit.errors import InvalidArgumentError, MapParseError

Coord = tuple[int, int]

FREE_CHAR = "."
OBSTACLE_CHAR = "#"

_FOUR = ndimage.generate_binary_structure(2, 1)

MIN_GEN_SIDE = 10
MAX_GEN_SIDE = 256


class GridMap:
    """Immutable 2D occupancy grid.

    ``obstacles[y, x]`` is True for blocked cells. The array handed in is
    copied and frozen, so instances can be shared freely.
    """

    __slots__ = ("_obstacles", "_key")

    def __init__(self, obstacles: np.ndarray):
        arr = np.array(obstacles, dtype=bool, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"occupancy must be a non-empty 2D array, got shape {arr.shape}")
        arr.setflags(write=False)
        self._obstacles = arr
        self._key = (arr.shape, arr.tobytes())

    @classmethod
    def empty(cls, width: int, height: int) -> "GridMap":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def obstacles(self) -> np.ndarray:
        return self._obstacles

    @property
    def free(self) -> np.ndarray:
        return ~self._obstacles

    @property
    def width(self) -> int:
        return self._obstacles.shape[1]

    @property
    def height(self) -> int:
        return self._obstacles.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._obstacles.shape

    def in_bounds(self, pos: Coord) -> bool:
        x, y = pos
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, pos: Coord) -> bool:
        return self.in_bounds(pos) and not self._obstacles[pos[1], pos[0]]

    def free_cells(self) -> list[Coord]:
        """Free cells in (y, x) order."""
        ys, xs = np.nonzero(~self._obstacles)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    def neighbors4(self, pos: Coord) -> Iterator[Coord]:
        x, y = pos
        for nx, ny in ((x, y - 1), (x - 1, y), (x + 1, y), (x, y + 1)):
            if 0 <= nx < self.width and 0 <= ny < self.height and not self._obstacles[ny, nx]:
                yield (nx, ny)

    def obstacle_density(self) -> float:
        return float(self._obstacles.mean())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridMap):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"GridMap({self.width}x{self.height}, density={self.obstacle_density():.3f})"

    def __str__(self) -> str:
        return serialize_map(self)

    def to_json(self) -> dict:
        return {"width": self.width, "height": self.height, "rows": serialize_map(self).splitlines()}

    @classmethod
    def from_json(cls, obj: dict) -> "GridMap":
        m = parse_map("\n".join(obj["rows"]))
        if (m.width, m.height) != (obj.get("width", m.width), obj.get("height", m.height)):
            raise MapParseError("declared width/height disagree with rows", 0)
        return m


@dataclass(frozen=True)
class RoomGenParams:
    min_room_side: int = 3
    max_room_side: int = 8
    corridor_width_range: tuple[int, int] = (1, 3)
    door_width: int = 2
    seed: int = 0
    corridor_prob: float = 0.35

    def __post_init__(self):
        lo, hi = self.corridor_width_range
        if self.min_room_side < 1 or self.max_room_side < 1 or lo < 1 or hi < 1 or self.door_width < 1:
            raise InvalidArgumentError("room/corridor/door widths must be >= 1")
        if self.min_room_side > self.max_room_side:
            raise InvalidArgumentError("min_room_side must not exceed max_room_side")
        if lo > hi:
            raise InvalidArgumentError("corridor_width_range must be (low, high) with low <= high")
        if not 0.0 <= self.corridor_prob <= 1.0:
            raise InvalidArgumentError("corridor_prob must lie in [0, 1]")


def free_components(free: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 4-connected components of a boolean free mask."""
    labels, n = ndimage.label(free, structure=_FOUR)
    return labels, int(n)


def _check_dims(width: int, height: int) -> None:
    for name, v in (("width", width), ("height", height)):
        if not isinstance(v, (int, np.integer)) or not MIN_GEN_SIDE <= v <= MAX_GEN_SIDE:
            raise InvalidArgumentError(f"{name} must be an integer in [{MIN_GEN_SIDE}, {MAX_GEN_SIDE}], got {v!r}")


def _keep_largest_component(obst: np.ndarray) -> None:
    labels, n = free_components(~obst)
    if n <= 1:
        return
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    keep = int(np.argmax(sizes))  # lowest label wins ties
    obst[(labels != keep) & (labels != 0)] = True


def _connect_components(obst: np.ndarray, rng: np.random.Generator) -> None:
    """Knock doorways through 1-cell walls until free space is one component.

    Anything still separated afterwards (thicker barriers) is filled.
    """
    while True:
        labels, n = free_components(~obst)
        if n <= 1:
            return
        padded = np.pad(labels, 1)
        up, down = padded[:-2, 1:-1], padded[2:, 1:-1]
        left, right = padded[1:-1, :-2], padded[1:-1, 2:]
        joins = obst & (
            ((up > 0) & (down > 0) & (up != down)) | ((left > 0) & (right > 0) & (left != right))
        )
        cand = np.argwhere(joins)
        if len(cand) == 0:
            _keep_largest_component(obst)
            return
        y, x = cand[rng.integers(len(cand))]
        obst[y, x] = False


def generate_room_map(width: int, height: int, params: RoomGenParams | None = None) -> GridMap:
    """Room-and-corridor map by seeded binary space partitioning.

    Rectangles wider than ``max_room_side`` are cut by a one-cell wall, or
    with probability ``corridor_prob`` by a corridor flanked by two walls.
    Every wall gets a door gap of 1..``door_width`` cells. A final pass opens
    wall cells until the free space is 4-connected.
    """
    _check_dims(width, height)
    params = params or RoomGenParams()
    rng = np.random.default_rng(params.seed)
    obst = np.zeros((height, width), dtype=bool)
    lo_cw, hi_cw = params.corridor_width_range
    mn = params.min_room_side

    def door(wall_cells: list[Coord]) -> None:
        dw = int(rng.integers(1, params.door_width + 1))
        dw = min(dw, len(wall_cells))
        start = int(rng.integers(0, len(wall_cells) - dw + 1))
        for x, y in wall_cells[start:start + dw]:
            obst[y, x] = False

    def wall(vertical: bool, at: int, x0: int, y0: int, w: int, h: int) -> None:
        if vertical:
            cells = [(at, y) for y in range(y0, y0 + h)]
        else:
            cells = [(x, at) for x in range(x0, x0 + w)]
        for x, y in cells:
            obst[y, x] = True
        door(cells)

    stack = [(0, 0, width, height, True)]
    while stack:
        x0, y0, w, h, force = stack.pop()
        if max(w, h) <= params.max_room_side and not force:
            continue
        if w > h or (w == h and rng.random() < 0.5):
            vertical, span = True, w
        else:
            vertical, span = False, h
        if span < 2 * mn + 1:
            other = h if vertical else w
            if other < 2 * mn + 1:
                continue
            vertical, span = not vertical, other

        cw = int(rng.integers(lo_cw, hi_cw + 1))
        if rng.random() < params.corridor_prob and span >= 2 * mn + cw + 2:
            a = int(rng.integers(mn, span - mn - cw - 2 + 1))
            first, second = a, a + cw + 1
            if vertical:
                wall(True, x0 + first, x0, y0, w, h)
                wall(True, x0 + second, x0, y0, w, h)
                stack.append((x0, y0, first, h, False))
                stack.append((x0 + second + 1, y0, w - second - 1, h, False))
            else:
                wall(False, y0 + first, x0, y0, w, h)
                wall(False, y0 + second, x0, y0, w, h)
                stack.append((x0, y0, w, first, False))
                stack.append((x0, y0 + second + 1, w, h - second - 1, False))
            continue

        a = int(rng.integers(mn, span - mn - 1 + 1))
        if vertical:
            wall(True, x0 + a, x0, y0, w, h)
            stack.append((x0, y0, a, h, False))
            stack.append((x0 + a + 1, y0, w - a - 1, h, False))
        else:
            wall(False, y0 + a, x0, y0, w, h)
            stack.append((x0, y0, w, a, False))
            stack.append((x0, y0 + a + 1, w, h - a - 1, False))

    _connect_components(obst, rng)
    return GridMap(obst)


def generate_random_map(width: int, height: int, density: float, seed: int = 0) -> GridMap:
    """Uniformly scattered obstacles; unreachable pockets are filled in."""
    _check_dims(width, height)
    if not 0.0 <= density <= 0.5:
        raise InvalidArgumentError(f"density must lie in [0, 0.5], got {density!r}")
    rng = np.random.default_rng(seed)
    obst = rng.random((height, width)) < density
    if obst.all():
        obst[0, 0] = False
    _keep_largest_component(obst)
    return GridMap(obst)


def parse_map(text: str) -> GridMap:
    if text.endswith("\n"):
        text = text[:-1]
    if not text:
        raise MapParseError("empty map", 0)
    rows = text.split("\n")
    width = len(rows[0])
    out = np.zeros((len(rows), width), dtype=bool)
    for r, line in enumerate(rows):
        if len(line) != width:
            raise MapParseError(f"expected {width} cells, found {len(line)}", r)
        for c, ch in enumerate(line):
            if ch == OBSTACLE_CHAR:
                out[r, c] = True
            elif ch != FREE_CHAR:
                raise MapParseError(f"illegal character {ch!r} at column {c}", r)
    if width == 0:
        raise MapParseError("empty row", 0)
    return GridMap(out)


def serialize_map(grid: GridMap) -> str:
    lut = np.array([FREE_CHAR, OBSTACLE_CHAR])
    return "".join("".join(lut[row.astype(int)]) + "\n" for row in grid.obstacles)


def load_map(path) -> GridMap:
    """Read a map from ``.map`` text or ``.json`` form."""
    import json
    from pathlib import Path

    p = Path(path)
    text = p.read_text()
    if p.suffix == ".json":
        return GridMap.from_json(json.loads(text))
    return parse_map(text)

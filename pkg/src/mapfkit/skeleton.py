"""Free-space skeletons and the sparse map graph built on them.

Pipeline: thin the free cells to a one-pixel-wide skeleton, classify branch
(>= 3 skeleton neighbours) and leaf (<= 1) pixels as nodes, then connect
node pairs whose 8-connected skeleton path has no other node inside it.

Both thinning routines only ever delete *simple* pixels (8-connected
foreground, 4-connected background), so every 8-connected free region keeps
exactly one non-empty skeleton component.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from mapfkit.grid import Coord, GridMap
from mapfkit.pathfind import Path

# Neighbour offsets (dy, dx), bit i of a neighbourhood code. Order is
# N, NE, E, SE, S, SW, W, NW (the classic P2..P9 ring).
_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_EIGHT = ndimage.generate_binary_structure(2, 2)


def _bits(code: int) -> list[int]:
    return [(code >> i) & 1 for i in range(8)]


def _build_luts():
    n_fg = np.zeros(256, dtype=np.int8)
    simple = np.zeros(256, dtype=bool)
    zs = np.zeros((2, 256), dtype=bool)
    for code in range(256):
        p2, p3, p4, p5, p6, p7, p8, p9 = _bits(code)
        b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9
        n_fg[code] = b
        seq = [p2, p3, p4, p5, p6, p7, p8, p9, p2]
        a = sum(1 for i in range(8) if seq[i] == 0 and seq[i + 1] == 1)
        ok = 2 <= b <= 6 and a == 1
        zs[0, code] = ok and p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
        zs[1, code] = ok and p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
        # Yokoi 8-connectivity number; x1..x8 run counter-clockwise from E.
        x = [p4, p3, p2, p9, p8, p7, p6, p5]
        xb = [1 - v for v in x] + [1 - x[0]]
        nc8 = sum(xb[k] - xb[k] * xb[k + 1] * xb[k + 2] for k in (0, 2, 4, 6))
        simple[code] = nc8 == 1
    return n_fg, simple, zs


def _ring_components(code: int) -> int:
    """8-components formed by the set ring pixels among themselves."""
    on = [i for i in range(8) if (code >> i) & 1]
    seen: set[int] = set()
    n = 0
    for i in on:
        if i in seen:
            continue
        n += 1
        stack = [i]
        while stack:
            j = stack.pop()
            if j in seen:
                continue
            seen.add(j)
            nbrs = [(j + 1) % 8, (j - 1) % 8]
            if j % 2 == 0:
                nbrs += [(j + 2) % 8, (j - 2) % 8]
            stack.extend(k for k in nbrs if (code >> k) & 1 and k not in seen)
    return n


NEIGHBOR_COUNT, SIMPLE, _ZS_DELETE = _build_luts()
# Deleting such a pixel keeps its neighbours connected but may open a hole.
_LOCALLY_REMOVABLE = np.array([_ring_components(c) == 1 for c in range(256)])


def neighborhood_codes(mask: np.ndarray) -> np.ndarray:
    """8-bit ring code of every pixel (out-of-image counts as background)."""
    p = np.pad(mask.astype(np.uint8), 1)
    h, w = mask.shape
    code = np.zeros((h, w), dtype=np.uint8)
    for i, (dy, dx) in enumerate(_RING):
        code |= p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] << i
    return code


def _code_at(img: np.ndarray, y: int, x: int) -> int:
    # img is padded by one pixel, (y, x) are padded indices
    c = 0
    for i, (dy, dx) in enumerate(_RING):
        if img[y + dy, x + dx]:
            c |= 1 << i
    return c


def neighbor_counts(mask: np.ndarray) -> np.ndarray:
    """Number of 8-neighbours set, per pixel."""
    return NEIGHBOR_COUNT[neighborhood_codes(mask)].astype(np.int64)


def _zs_passes(img: np.ndarray) -> bool:
    """Guarded Zhang-Suen to fixpoint on a padded image, in place."""
    changed_any = False
    while True:
        changed = False
        for sub in (0, 1):
            codes = neighborhood_codes(img[1:-1, 1:-1])
            cand = np.argwhere(img[1:-1, 1:-1] & _ZS_DELETE[sub][codes])
            for y, x in cand + 1:
                c = _code_at(img, y, x)
                if NEIGHBOR_COUNT[c] >= 2 and SIMPLE[c]:
                    img[y, x] = False
                    changed = True
        if not changed:
            return changed_any
        changed_any = True


def _count_blocks(img: np.ndarray) -> int:
    return int((img[:-1, :-1] & img[:-1, 1:] & img[1:, :-1] & img[1:, 1:]).sum())


def _break_blocks(img: np.ndarray, free: np.ndarray) -> None:
    """Remove remaining 2x2 all-skeleton blocks.

    A simple pixel of the block is deleted when one exists. Otherwise (four
    diagonal arms meeting in the block) one block pixel is moved onto a free
    4-neighbour, accepted only if the 8-component count is unchanged and the
    number of blocks drops. ``free`` is the padded source foreground.
    """
    stuck: set[tuple[int, int]] = set()
    while True:
        inner = img[1:-1, 1:-1]
        blocks = inner[:-1, :-1] & inner[:-1, 1:] & inner[1:, :-1] & inner[1:, 1:]
        todo = [(int(y), int(x)) for y, x in np.argwhere(blocks) if (int(y), int(x)) not in stuck]
        if not todo:
            return
        y, x = todo[0]
        corners = [(y + dy + 1, x + dx + 1) for dy, dx in ((0, 0), (0, 1), (1, 0), (1, 1))]
        for py, px in corners:
            c = _code_at(img, py, px)
            if NEIGHBOR_COUNT[c] >= 2 and SIMPLE[c]:
                img[py, px] = False
                break
        else:
            if not (_swap_out(img, free, corners) or _cut_loop(img, corners)):
                stuck.add((y, x))


def _cut_loop(img: np.ndarray, corners) -> bool:
    """Delete a block pixel at the cost of a loop, never of connectivity."""
    for py, px in corners:
        c = _code_at(img, py, px)
        if NEIGHBOR_COUNT[c] >= 2 and _LOCALLY_REMOVABLE[c]:
            img[py, px] = False
            return True
    n_before = ndimage.label(img, structure=_EIGHT)[1]
    for py, px in corners:
        img[py, px] = False
        if ndimage.label(img, structure=_EIGHT)[1] == n_before:
            return True
        img[py, px] = True
    return False


def _swap_out(img: np.ndarray, free: np.ndarray, corners) -> bool:
    n_before = ndimage.label(img, structure=_EIGHT)[1]
    blocks_before = _count_blocks(img)
    for py, px in corners:
        for dy, dx in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            qy, qx = py + dy, px + dx
            if (qy, qx) in corners or not free[qy, qx] or img[qy, qx]:
                continue
            img[py, px] = False
            img[qy, qx] = True
            if ndimage.label(img, structure=_EIGHT)[1] == n_before and _count_blocks(img) < blocks_before:
                return True
            img[qy, qx] = False
            img[py, px] = True
    return False


@dataclass(frozen=True, eq=False)
class Skeleton:
    mask: np.ndarray

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return self.mask.shape == other.mask.shape and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.mask.shape, self.mask.tobytes()))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    def pixels(self) -> list[Coord]:
        ys, xs = np.nonzero(self.mask)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    def __len__(self) -> int:
        return int(self.mask.sum())

    def components(self) -> tuple[np.ndarray, int]:
        labels, n = ndimage.label(self.mask, structure=_EIGHT)
        return labels, int(n)


def _foreground(source) -> np.ndarray:
    if isinstance(source, GridMap):
        return source.free.copy()
    if isinstance(source, Skeleton):
        return source.mask.copy()
    return np.array(source, dtype=bool)


def thin_zhang_suen(grid) -> Skeleton:
    """Zhang-Suen thinning of the free cells.

    Candidates of each sub-iteration are found in parallel as in the
    original algorithm, then deleted one at a time only while they remain
    simple, which keeps thin diagonal strokes and 2x2 blobs from vanishing.
    Accepts a GridMap, a Skeleton or a boolean mask.
    """
    img = np.pad(_foreground(grid), 1)
    free = img.copy()
    _zs_passes(img)
    _break_blocks(img, free)
    return Skeleton(img[1:-1, 1:-1])


def chessboard_distance(free: np.ndarray) -> np.ndarray:
    """Chessboard distance of each free cell to the nearest obstacle or border."""
    padded = np.pad(free, 1)
    dt = ndimage.distance_transform_cdt(padded, metric="chessboard")
    return dt[1:-1, 1:-1].astype(np.int64)


def medial_ridge(free: np.ndarray) -> np.ndarray:
    """Free cells whose distance is >= that of all four 4-neighbours."""
    dt = chessboard_distance(free)
    p = np.pad(dt, 1)
    c = p[1:-1, 1:-1]
    return free & (c >= p[:-2, 1:-1]) & (c >= p[2:, 1:-1]) & (c >= p[1:-1, :-2]) & (c >= p[1:-1, 2:])


def thin_medial_axis(grid) -> Skeleton:
    """Medial-axis skeleton from the chessboard distance transform.

    Ridge pixels are kept as anchors while every other free pixel is peeled
    in order of increasing distance, provided it is simple. A guarded
    Zhang-Suen pass and a 2x2 sweep then enforce one-pixel width.
    """
    free = _foreground(grid)
    dt = chessboard_distance(free)
    anchors = medial_ridge(free)
    img = np.pad(free, 1)
    order = np.argwhere(free & ~anchors)
    if len(order):
        keys = np.lexsort((order[:, 1], order[:, 0], dt[order[:, 0], order[:, 1]]))
        order = order[keys] + 1
    while True:
        changed = False
        for y, x in order:
            if img[y, x] and SIMPLE[_code_at(img, y, x)]:
                img[y, x] = False
                changed = True
        if not changed:
            break
    _zs_passes(img)
    _break_blocks(img, np.pad(free, 1))
    return Skeleton(img[1:-1, 1:-1])


class NodeKind(str, Enum):
    BRANCH = "branch"
    LEAF = "leaf"


@dataclass(frozen=True)
class MapNode:
    position: Coord
    kind: NodeKind

    @property
    def x(self) -> int:
        return self.position[0]

    @property
    def y(self) -> int:
        return self.position[1]


@dataclass(frozen=True)
class MapEdge:
    a: int
    b: int
    path: Path

    @property
    def length(self) -> int:
        return self.path.length


def extract_nodes(skeleton: Skeleton) -> list[MapNode]:
    counts = neighbor_counts(skeleton.mask)
    nodes = []
    for y, x in np.argwhere(skeleton.mask):
        n = counts[y, x]
        if n >= 3:
            nodes.append(MapNode((int(x), int(y)), NodeKind.BRANCH))
        elif n <= 1:
            nodes.append(MapNode((int(x), int(y)), NodeKind.LEAF))
    return nodes


def _skeleton_bfs(mask: np.ndarray, source: Coord, stop: set[Coord] | frozenset = frozenset()):
    """8-connected BFS over skeleton pixels; cells in ``stop`` are reached but not expanded."""
    h, w = mask.shape
    dist = {source: 0}
    parent: dict[Coord, Coord] = {}
    frontier = [source]
    while frontier:
        nxt_frontier = []
        for cur in frontier:
            if cur != source and cur in stop:
                continue
            x, y = cur
            for dy, dx in _RING:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and mask[ny, nx] and (nx, ny) not in dist:
                    dist[(nx, ny)] = dist[cur] + 1
                    parent[(nx, ny)] = cur
                    nxt_frontier.append((nx, ny))
        frontier = nxt_frontier
    return dist, parent


def build_edges(skeleton: Skeleton, nodes: list[MapNode]) -> list[MapEdge]:
    """Connect node pairs joined by a shortest skeleton path with no node inside it.

    One unrestricted BFS per node gives the true 8-connected distances; a
    second BFS that refuses to pass through other nodes tells whether some
    shortest path avoids them.
    """
    mask = skeleton.mask
    index = {n.position: i for i, n in enumerate(nodes)}
    stop = set(index)
    edges = []
    for i, node in enumerate(nodes):
        full, _ = _skeleton_bfs(mask, node.position)
        near, parent = _skeleton_bfs(mask, node.position, stop)
        for pos, j in sorted(((p, index[p]) for p in near if p in index), key=lambda t: t[1]):
            if j <= i or near[pos] != full[pos]:
                continue
            cells = [pos]
            while cells[-1] != node.position:
                cells.append(parent[cells[-1]])
            edges.append(MapEdge(i, j, Path(tuple(reversed(cells)))))
    return edges


THINNING = {
    "medial_axis": thin_medial_axis,
    "mat": thin_medial_axis,
    "zhang_suen": thin_zhang_suen,
    "zs": thin_zhang_suen,
}


@dataclass(frozen=True)
class SkeletonGraph:
    skeleton: Skeleton
    nodes: list[MapNode]
    edges: list[MapEdge]

    def node_positions(self) -> list[Coord]:
        return [n.position for n in self.nodes]

    def to_json(self) -> dict:
        return {
            "nodes": [{"x": n.x, "y": n.y, "kind": n.kind.value} for n in self.nodes],
            "edges": [{"a": e.a, "b": e.b, "len": e.length} for e in self.edges],
        }


def extract_graph(grid: GridMap, method: str = "medial_axis") -> SkeletonGraph:
    try:
        thin = THINNING[method]
    except KeyError:
        raise ValueError(f"unknown thinning method {method!r}; choose from {sorted(THINNING)}") from None
    skel = thin(grid)
    nodes = extract_nodes(skel)
    return SkeletonGraph(skel, nodes, build_edges(skel, nodes))

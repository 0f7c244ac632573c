import numpy as np
import pytest

from mapfkit.errors import InvalidArgumentError
from mapfkit.grid import GridMap, generate_random_map, parse_map
from mapfkit.pathfind import astar_grid4, astar_skeleton8, bfs_distances, chebyshev, manhattan

from oracles import bfs_length, bfs_lengths, random_free_cells


@pytest.mark.parametrize("a,b,d", [((0, 0), (3, 4), 7), ((2, 2), (2, 2), 0), ((5, 1), (1, 5), 8)])
def test_manhattan(a, b, d):
    assert manhattan(a, b) == d


def test_chebyshev():
    assert chebyshev((0, 0), (3, 4)) == 4


def test_open_grid_length_is_manhattan():
    p = astar_grid4(GridMap.empty(5, 5), (0, 0), (4, 4))
    assert p.length == 8
    assert p.cells[0] == (0, 0) and p.cells[-1] == (4, 4)


def test_start_equals_goal():
    p = astar_grid4(GridMap.empty(3, 3), (1, 1), (1, 1))
    assert p.cells == ((1, 1),) and p.length == 0


def test_wall_splits_map():
    g = parse_map("..#..\n..#..\n..#..\n")
    assert astar_grid4(g, (0, 0), (4, 2)) is None


def test_endpoint_errors():
    g = parse_map("..#\n...\n")
    with pytest.raises(InvalidArgumentError):
        astar_grid4(g, (2, 0), (0, 0))
    with pytest.raises(InvalidArgumentError):
        astar_grid4(g, (0, 0), (5, 5))


def test_path_is_4_adjacent_and_free():
    g = generate_random_map(20, 20, 0.3, 11)
    rng = np.random.default_rng(0)
    for _ in range(30):
        a, b = random_free_cells(g.free, 2, rng)
        p = astar_grid4(g, a, b)
        for c in p.cells:
            assert g.is_free(c)
        for u, v in zip(p.cells, p.cells[1:]):
            assert manhattan(u, v) == 1


def test_matches_bfs_oracle_and_symmetric():
    rng = np.random.default_rng(5)
    for k in range(100):
        g = generate_random_map(int(rng.integers(10, 21)), int(rng.integers(10, 21)), 0.3, k)
        a, b, c = random_free_cells(g.free, 3, rng)
        ab, ba = astar_grid4(g, a, b), astar_grid4(g, b, a)
        assert ab.length == bfs_length(g.free, a, b) == ba.length
        bc, ac = astar_grid4(g, b, c), astar_grid4(g, a, c)
        assert ac.length <= ab.length + bc.length


def test_deterministic():
    g = generate_random_map(20, 20, 0.25, 3)
    a, b = g.free_cells()[0], g.free_cells()[-1]
    assert astar_grid4(g, a, b) == astar_grid4(g, a, b)


def test_blocked_cell_forces_detour():
    g = parse_map("...\n...\n")
    assert astar_grid4(g, (0, 0), (2, 0), blocked=(1, 0)).length == 4
    assert astar_grid4(g, (0, 0), (2, 0), blocked=(2, 0)) is None


def test_bfs_distances_matches_oracle():
    g = generate_random_map(15, 13, 0.3, 8)
    src = g.free_cells()[0]
    field = bfs_distances(g, src)
    ref = bfs_lengths(g.free, src)
    for y in range(g.height):
        for x in range(g.width):
            assert field[y, x] == ref.get((x, y), -1)


def test_skeleton_line():
    mask = np.zeros((3, 7), dtype=bool)
    mask[1, 1:6] = True
    assert astar_skeleton8(mask, (1, 1), (5, 1)).length == 4
    assert astar_skeleton8(mask, (3, 1), (3, 1)).length == 0


def test_skeleton_diagonal_steps_cost_one():
    mask = np.eye(5, dtype=bool)
    assert astar_skeleton8(mask, (0, 0), (4, 4)).length == 4


def test_skeleton_disjoint_components():
    mask = np.zeros((5, 5), dtype=bool)
    mask[0, :] = True
    mask[4, :] = True
    assert astar_skeleton8(mask, (0, 0), (4, 4)) is None


def test_skeleton_endpoint_must_be_on_skeleton():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    with pytest.raises(InvalidArgumentError):
        astar_skeleton8(mask, (0, 0), (1, 1))

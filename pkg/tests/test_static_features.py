import logging

import numpy as np
import pytest

from mapfkit.errors import UnreachableError
from mapfkit.grid import GridMap, RoomGenParams, generate_random_map, generate_room_map, parse_map
from mapfkit.skeleton import extract_graph
from mapfkit.static_features import (
    build_static_graph,
    detour_to_goal,
    node_accessibility,
    off_route_degree,
)

from oracles import bfs_length, random_free_cells, static_features_bruteforce

# a 3-cell wall stub between (1, 2) and (5, 2)
STUB = parse_map(
    ".......\n"
    "...#...\n"
    "...#...\n"
    "...#...\n"
    ".......\n"
)

# corridor along row 1 with a two-cell dead end hanging off (3, 1)
DEAD_END = parse_map(
    "#######\n"
    "#.....#\n"
    "###.###\n"
    "###.###\n"
    "#######\n"
)


def test_open_map_all_zero():
    g = GridMap.empty(8, 6)
    assert node_accessibility(g, (0, 0), (7, 5)) == 0
    assert detour_to_goal(g, (7, 5), (2, 3)) == 0
    assert off_route_degree(g, (0, 0), (7, 5), (2, 3)) == 0


def test_node_on_agent_or_goal():
    assert node_accessibility(STUB, (1, 2), (1, 2)) == 0
    assert detour_to_goal(STUB, (5, 2), (5, 2)) == 0
    assert off_route_degree(STUB, (1, 2), (5, 2), (1, 2)) == 0
    assert off_route_degree(STUB, (1, 2), (5, 2), (5, 2)) == 0


def test_wall_stub_detour_matches_bfs():
    want = bfs_length(STUB.free, (1, 2), (5, 2)) - 4
    assert want == 4
    assert node_accessibility(STUB, (1, 2), (5, 2)) == want
    assert detour_to_goal(STUB, (1, 2), (5, 2)) == want


def test_dead_end_off_route():
    # (3, 3) sits two moves off the only agent -> goal route
    assert off_route_degree(DEAD_END, (1, 1), (5, 1), (3, 3)) == 4
    assert off_route_degree(DEAD_END, (1, 1), (5, 1), (3, 1)) == 0


def test_unreachable_raises():
    g = parse_map("..#..\n..#..\n")
    with pytest.raises(UnreachableError):
        node_accessibility(g, (0, 0), (4, 0))


def test_row_layout_and_zero_patterns():
    obs = build_static_graph(DEAD_END, [(3, 1), (3, 3), (5, 1)], (1, 1), (5, 1))
    assert obs.rows.shape == (5, 5)
    assert obs.ego_index == 3 and obs.goal_index == 4 and obs.n_nodes == 3
    ego, goal = obs.rows[obs.ego_index], obs.rows[obs.goal_index]
    assert ego[2] == 0 and ego[4] == 0
    assert goal[3] == 0 and goal[4] == 0
    assert obs.rows[1, 4] > 0 and obs.rows[0, 4] == 0
    np.testing.assert_allclose(obs.rows[0, :2], [3 / 6, 1 / 4])


def test_open_map_rows_vanish():
    g = GridMap.empty(10, 10)
    obs = build_static_graph(g, [(2, 2), (7, 1), (5, 9)], (0, 0), (9, 9))
    assert np.all(obs.rows[:, 2:] == 0)


def test_coordinates_normalised():
    g = generate_room_map(20, 20, RoomGenParams(seed=2))
    nodes = extract_graph(g).nodes
    a, b = random_free_cells(g.free, 2, np.random.default_rng(0))
    obs = build_static_graph(g, nodes, a, b)
    assert np.all((obs.rows[:, :2] >= 0) & (obs.rows[:, :2] <= 1))
    assert np.all(obs.rows[:, 2:] >= 0)


def test_unreachable_nodes_dropped_with_warning(caplog):
    g = parse_map("..#..\n..#..\n")
    with caplog.at_level(logging.WARNING):
        obs = build_static_graph(g, [(1, 1), (4, 1), (3, 0)], (0, 0), (1, 0))
    assert obs.excluded == 2 and obs.n_nodes == 1
    assert "excluded 2" in caplog.text


def test_translation_invariance():
    g = generate_random_map(12, 12, 0.25, 6)
    big = np.ones((16, 15), dtype=bool)
    big[3:15, 2:14] = g.obstacles
    shifted = GridMap(big)
    rng = np.random.default_rng(2)
    a, b, n1, n2 = random_free_cells(g.free, 4, rng)
    shift = lambda p: (p[0] + 2, p[1] + 3)
    r1 = build_static_graph(g, [n1, n2], a, b).rows[:, 2:]
    r2 = build_static_graph(shifted, [shift(n1), shift(n2)], shift(a), shift(b)).rows[:, 2:]
    assert np.array_equal(r1, r2)


@pytest.mark.parametrize("seed", range(20))
def test_rows_match_bruteforce(seed):
    rng = np.random.default_rng(100 + seed)
    g = generate_random_map(int(rng.integers(10, 21)), int(rng.integers(10, 21)), 0.3, seed)
    nodes = extract_graph(g, "zhang_suen").nodes
    agent, goal = random_free_cells(g.free, 2, rng)
    obs = build_static_graph(g, nodes, agent, goal)
    for pos, row in zip(obs.positions, obs.rows):
        assert tuple(int(v) for v in row[2:]) == static_features_bruteforce(g.free, pos, agent, goal)
        assert tuple(row[2:]) == (
            node_accessibility(g, agent, pos),
            detour_to_goal(g, goal, pos),
            off_route_degree(g, agent, goal, pos),
        )

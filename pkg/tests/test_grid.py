import json

import numpy as np
import pytest

from mapfkit.errors import InvalidArgumentError, MapParseError
from mapfkit.grid import (
    GridMap,
    RoomGenParams,
    generate_random_map,
    generate_room_map,
    load_map,
    parse_map,
    serialize_map,
)

from oracles import flood_labels


def test_parse_small_example():
    g = parse_map("..\n.#")
    assert (g.width, g.height) == (2, 2)
    assert not g.is_free((1, 1))
    assert g.is_free((1, 0)) and g.is_free((0, 1))


def test_parse_ragged_reports_row():
    with pytest.raises(MapParseError) as err:
        parse_map("..\n...")
    assert err.value.row == 1


def test_parse_illegal_character_reports_row():
    with pytest.raises(MapParseError) as err:
        parse_map("...\n...\n.x.\n")
    assert err.value.row == 2


def test_parse_empty():
    with pytest.raises(MapParseError):
        parse_map("")


@pytest.mark.parametrize("seed", range(5))
def test_round_trip_generated(seed):
    for g in (generate_room_map(23, 17, RoomGenParams(seed=seed)), generate_random_map(15, 12, 0.3, seed)):
        text = serialize_map(g)
        assert parse_map(text) == g
        assert serialize_map(parse_map(text)) == text
        assert GridMap.from_json(json.loads(json.dumps(g.to_json()))) == g


def test_coordinates_are_column_row():
    g = parse_map("..#\n...\n")
    assert g.shape == (2, 3)
    assert not g.is_free((2, 0))
    assert g.is_free((0, 1))
    assert not g.in_bounds((3, 0)) and not g.in_bounds((0, 2))


def test_gridmap_is_read_only():
    g = GridMap.empty(4, 4)
    with pytest.raises(ValueError):
        g.obstacles[0, 0] = True


def test_free_cells_and_neighbours():
    g = parse_map(".#\n..")
    assert g.free_cells() == [(0, 0), (0, 1), (1, 1)]
    assert sorted(g.neighbors4((0, 1))) == [(0, 0), (1, 1)]
    assert g.obstacle_density() == 0.25


@pytest.mark.parametrize("seed", range(20))
def test_room_maps_connected_and_deterministic(seed):
    g = generate_room_map(30, 25, RoomGenParams(seed=seed))
    assert g == generate_room_map(30, 25, RoomGenParams(seed=seed))
    _, n = flood_labels(g.free)
    assert n == 1
    assert 0.0 < g.obstacle_density() < 0.6


@pytest.mark.parametrize("seed", range(20))
def test_random_maps_connected(seed):
    g = generate_random_map(20, 20, 0.35, seed)
    _, n = flood_labels(g.free)
    assert n == 1


def test_random_map_zero_density_is_open():
    assert generate_random_map(12, 10, 0.0, 3) == GridMap.empty(12, 10)


def test_different_seeds_differ():
    assert generate_room_map(40, 40, RoomGenParams(seed=1)) != generate_room_map(40, 40, RoomGenParams(seed=2))


@pytest.mark.parametrize("w,h", [(9, 20), (20, 257), (0, 10)])
def test_generator_dimension_bounds(w, h):
    with pytest.raises(InvalidArgumentError):
        generate_room_map(w, h)
    with pytest.raises(InvalidArgumentError):
        generate_random_map(w, h, 0.2)


@pytest.mark.parametrize("density", [-0.1, 0.51])
def test_density_bounds(density):
    with pytest.raises(InvalidArgumentError):
        generate_random_map(20, 20, density)


def test_room_params_validation():
    with pytest.raises(InvalidArgumentError):
        RoomGenParams(min_room_side=9, max_room_side=4)
    with pytest.raises(InvalidArgumentError):
        RoomGenParams(door_width=0)


def test_load_map_text_and_json(tmp_path):
    g = generate_random_map(12, 11, 0.2, 4)
    (tmp_path / "m.map").write_text(serialize_map(g))
    (tmp_path / "m.json").write_text(json.dumps(g.to_json()))
    assert load_map(tmp_path / "m.map") == g
    assert load_map(tmp_path / "m.json") == g


def test_hash_matches_equality():
    a = parse_map("..\n.#")
    b = GridMap(np.array([[False, False], [False, True]]))
    assert a == b and hash(a) == hash(b)

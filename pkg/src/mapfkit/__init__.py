"""Multi-agent pathfinding toolkit.

Grid environment, skeleton-graph and agent-intent observations, a small
numpy attention encoder, training-loss formulas and an evaluation harness.
"""

from mapfkit.errors import InvalidArgumentError, MapParseError, UnreachableError
from mapfkit.grid import GridMap, RoomGenParams, generate_random_map, generate_room_map

__all__ = [
    "GridMap",
    "InvalidArgumentError",
    "MapParseError",
    "RoomGenParams",
    "UnreachableError",
    "generate_random_map",
    "generate_room_map",
]

__version__ = "0.1.0"

"""Ego-centric field-of-view channels and the goal-direction scalars.

Channels of the ``(4, F, F)`` tensor, indexed ``[channel, row, col]`` with the
ego agent at the centre:

0. obstacles (cells outside the map count as obstacles)
1. other agents' positions
2. other agents' goals
3. own goal, or its projection onto the FOV border when it lies outside
"""

from __future__ import annotations

import math

import numpy as np

from mapfkit.errors import InvalidArgumentError
from mapfkit.grid import Coord, GridMap

DEFAULT_FOV = 11
N_CHANNELS = 4


def goal_direction(agent_pos: Coord, goal_pos: Coord) -> tuple[float, float, float]:
    vx = goal_pos[0] - agent_pos[0]
    vy = goal_pos[1] - agent_pos[1]
    mag = math.hypot(vx, vy)
    if mag == 0:
        return (0.0, 0.0, 0.0)
    return (vx / mag, vy / mag, mag)


def project_to_fov(offset: tuple[int, int], radius: int) -> tuple[int, int]:
    """Clamp a relative offset to the FOV square along the ego->target ray."""
    ox, oy = offset
    reach = max(abs(ox), abs(oy))
    if reach <= radius:
        return ox, oy
    scale = radius / reach
    px = int(math.floor(ox * scale + 0.5))
    py = int(math.floor(oy * scale + 0.5))
    return max(-radius, min(radius, px)), max(-radius, min(radius, py))


def fov_channels(grid: GridMap, positions, goals, ego_id: int, fov: int = DEFAULT_FOV) -> np.ndarray:
    if fov % 2 == 0 or not 5 <= fov <= 21:
        raise InvalidArgumentError(f"FOV size must be odd and within [5, 21], got {fov}")
    r = fov // 2
    ex, ey = positions[ego_id]
    obs = np.zeros((N_CHANNELS, fov, fov), dtype=np.uint8)

    padded = np.pad(grid.obstacles, r, constant_values=True)
    obs[0] = padded[ey:ey + fov, ex:ex + fov]

    for j, ((px, py), (gx, gy)) in enumerate(zip(positions, goals)):
        if j == ego_id:
            continue
        if abs(px - ex) <= r and abs(py - ey) <= r:
            obs[1, py - ey + r, px - ex + r] = 1
        if abs(gx - ex) <= r and abs(gy - ey) <= r:
            obs[2, gy - ey + r, gx - ex + r] = 1

    gx, gy = goals[ego_id]
    ox, oy = project_to_fov((gx - ex, gy - ey), r)
    obs[3, oy + r, ox + r] = 1
    return obs


class LocalObs:
    __slots__ = ("channels", "goal_vec")

    def __init__(self, channels: np.ndarray, goal_vec: tuple[float, float, float]):
        self.channels = channels
        self.goal_vec = goal_vec

    @property
    def fov(self) -> int:
        return self.channels.shape[-1]

    def to_json(self) -> dict:
        return {"channels": self.channels.tolist(), "goal_vec": [float(v) for v in self.goal_vec]}


def local_observation(grid: GridMap, positions, goals, ego_id: int, fov: int = DEFAULT_FOV) -> LocalObs:
    chans = fov_channels(grid, positions, goals, ego_id, fov)
    return LocalObs(chans, goal_direction(positions[ego_id], goals[ego_id]))

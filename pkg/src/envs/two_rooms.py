"""
Two-Rooms environment
A point mass moved by norm-limited displacements in a 64x64 arena split by a
wall with one door. Observations are two 64x64 channels: agent blob and walls.
"""

import logging
from functools import lru_cache
from typing import List, Optional

import numpy as np

from envs.base import IMAGE_SIZE, Environment, Observation, gaussian_blob
from envs.collision import Rect, arena_exterior, clip_norm, move_with_collision, points_inside
from error_handler import ConfigError, SimulationError
from models.geometry import TwoRoomsGeometry

logger = logging.getLogger(__name__)

ACTION_BOUND = 2.45
SUCCESS_RADIUS = 2.45
BLOB_SIGMA = 1.0
MAX_RESET_ATTEMPTS = 10_000


@lru_cache(maxsize=32)
def _obstacles(geometry: TwoRoomsGeometry) -> tuple:
    return tuple(geometry.wall_rects()) + tuple(
        arena_exterior(geometry.arena_size, geometry.arena_size)
    )


def clip_action(action: np.ndarray) -> np.ndarray:
    """Norm-clip displacements to 2.45, preserving direction."""
    return clip_norm(action, ACTION_BOUND)


def reset(
    rng: np.random.Generator, geometry: TwoRoomsGeometry, near_door: Optional[float] = None
) -> np.ndarray:
    """
    Rejection-sample a start position uniformly over free space.

    Args:
        rng: Random source
        geometry: Arena geometry
        near_door: If set, only positions within this distance of the door centre

    Returns:
        Position (2,)
    """
    obstacles = _obstacles(geometry)
    low = np.zeros(2)
    high = np.full(2, float(geometry.arena_size))
    if near_door is not None:
        center = np.array([geometry.wall_x, geometry.door_center_y], dtype=np.float64)
        low = np.maximum(low, center - near_door)
        high = np.minimum(high, center + near_door)
    for _ in range(MAX_RESET_ATTEMPTS):
        pos = rng.uniform(low, high)
        if near_door is not None and np.linalg.norm(pos - center) > near_door:
            continue
        if not points_inside(pos[None], obstacles, closed=True)[0]:
            return pos
    raise SimulationError(
        f"No free position found in {MAX_RESET_ATTEMPTS} attempts; geometry {geometry.to_dict()}"
    )


def door_heading(rng: np.random.Generator, pos: np.ndarray, geometry: TwoRoomsGeometry) -> float:
    """Heading from ``pos`` towards a uniform point of the door opening."""
    target_y = geometry.door_center_y + rng.uniform(-geometry.door_half_height, geometry.door_half_height)
    return float(np.arctan2(target_y - pos[1], geometry.wall_x - pos[0]))


def step_batch(positions: np.ndarray, actions: np.ndarray, geometry: TwoRoomsGeometry) -> np.ndarray:
    """Vectorized ``step`` over (N, 2) positions and actions."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    deltas = clip_action(np.asarray(actions).reshape(-1, 2))
    return move_with_collision(positions, deltas, _obstacles(geometry))


def step(pos: np.ndarray, action: np.ndarray, geometry: TwoRoomsGeometry) -> np.ndarray:
    """
    Apply one clipped displacement; a wall stops the agent just off its face.

    Args:
        pos: Position (2,)
        action: Raw displacement (2,)
        geometry: Arena geometry

    Returns:
        Next position (2,)
    """
    return step_batch(np.asarray(pos)[None], np.asarray(action)[None], geometry)[0]


@lru_cache(maxsize=32)
def _wall_mask(geometry: TwoRoomsGeometry) -> np.ndarray:
    centers = np.arange(IMAGE_SIZE) + 0.5
    mask = np.zeros((IMAGE_SIZE, IMAGE_SIZE), dtype=bool)
    for x0, y0, x1, y1 in geometry.wall_rects():
        rows = (centers >= y0) & (centers < y1)
        cols = (centers >= x0) & (centers < x1)
        mask |= rows[:, None] & cols[None, :]
    mask.setflags(write=False)
    return mask


def wall_mask(geometry: TwoRoomsGeometry) -> np.ndarray:
    """Pixels whose centre lies in a wall, indexed [row = y, col = x]."""
    if geometry.arena_size != IMAGE_SIZE:
        raise ConfigError(f"geometry.arena_size must be {IMAGE_SIZE} to render, got {geometry.arena_size}")
    return _wall_mask(geometry)


def render(pos: np.ndarray, geometry: TwoRoomsGeometry) -> np.ndarray:
    """
    Render the two-channel observation image.

    Args:
        pos: Position (2,)
        geometry: Arena geometry

    Returns:
        u8 array (2, 64, 64): agent channel, wall channel
    """
    image = np.empty((2, IMAGE_SIZE, IMAGE_SIZE), dtype=np.uint8)
    image[0] = np.round(gaussian_blob(pos, BLOB_SIGMA) * 255.0).astype(np.uint8)
    image[1] = wall_mask(geometry).astype(np.uint8) * 255
    return image


def crossed_door(positions: np.ndarray, geometry: TwoRoomsGeometry) -> bool:
    """True if a trajectory of positions ever changes rooms."""
    rooms = np.asarray(positions)[:, 0] < geometry.wall_x
    return bool(rooms.any() and (~rooms).any())


class TwoRoomsEnv(Environment):
    """Two-Rooms as an ``Environment``; the state is the position."""

    kind = "two_rooms"
    state_dim = 2
    action_bound = ACTION_BOUND
    default_success_radius = SUCCESS_RADIUS
    pixels_per_unit = 1.0

    def __init__(self, geometry: TwoRoomsGeometry = None):
        self.geometry = (geometry or TwoRoomsGeometry()).ensure_valid()

    def reset(self, rng: np.random.Generator, near_door: Optional[float] = None) -> np.ndarray:
        return reset(rng, self.geometry, near_door)

    def door_heading(self, rng: np.random.Generator, state: np.ndarray) -> float:
        return door_heading(rng, state, self.geometry)

    def step_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return step_batch(states, actions, self.geometry)

    def observe(self, state: np.ndarray) -> Observation:
        state = np.asarray(state, dtype=np.float64)
        return Observation(image=render(state, self.geometry), state=state.copy())

    def wall_rects(self) -> List[Rect]:
        return self.geometry.wall_rects()

    def free_mask(self) -> np.ndarray:
        return ~wall_mask(self.geometry)

    def room_of(self, state: np.ndarray) -> int:
        return self.geometry.room_of(float(state[0]))

    def describe(self) -> dict:
        return {"kind": self.kind, "geometry": self.geometry.to_dict()}

"""
Diverse PointMaze environment
A momentum point mass in a 4x4 maze interior (outer wall implicit), driven by
2D accelerations with action repeat 4. Observations are 3x64x64 RGB renders at
16 pixels per cell plus the velocity.
"""

import logging
from functools import lru_cache
from typing import Iterable, List

import numpy as np

from envs.base import IMAGE_SIZE, Environment, Observation, gaussian_blob
from envs.collision import EPSILON, Rect, clip_norm
from error_handler import ConfigError, SimulationError
from models.maze_layout import MAZE_SIZE, MazeLayout

logger = logging.getLogger(__name__)

DT = 0.1
ACTION_REPEAT = 4
MAX_SPEED = 5.0
ACCEL_BOUND = 1.0
SUCCESS_RADIUS = 0.5
CELL_PIXELS = IMAGE_SIZE // MAZE_SIZE
FREE_COLOR = (0.9, 0.9, 0.9)
WALL_COLOR = (0.2, 0.2, 0.2)
AGENT_COLOR = (1.0, 0.0, 0.0)
AGENT_SIGMA_PX = 1.5
MIN_WALLS = MAZE_SIZE * MAZE_SIZE - 12
MAX_WALLS = MAZE_SIZE * MAZE_SIZE - 8
MAX_LAYOUT_ATTEMPTS = 100_000


def generate_layout(rng: np.random.Generator) -> MazeLayout:
    """
    Sample a random valid layout.

    A wall count is drawn uniformly from the admissible range, that many cells
    are walled uniformly at random, and the grid is rejected unless it is
    connected.
    """
    cells = MAZE_SIZE * MAZE_SIZE
    for _ in range(MAX_LAYOUT_ATTEMPTS):
        walls = int(rng.integers(MIN_WALLS, MAX_WALLS + 1))
        grid = np.zeros(cells, dtype=bool)
        grid[rng.choice(cells, size=walls, replace=False)] = True
        layout = MazeLayout.from_grid(grid.reshape(MAZE_SIZE, MAZE_SIZE))
        if layout.validate():
            return layout
    raise SimulationError(f"No valid maze layout after {MAX_LAYOUT_ATTEMPTS} attempts")


def edit_distance(a: MazeLayout, b: MazeLayout) -> int:
    """Number of cells whose occupancy differs."""
    return int(np.count_nonzero(a.grid != b.grid))


def d_min(test: MazeLayout, train: Iterable[MazeLayout]) -> int:
    """
    Minimum edit distance from a test layout to a set of training layouts.

    Raises:
        ConfigError: If the training set is empty
    """
    train = list(train)
    if not train:
        raise ConfigError("d_min needs at least one training layout")
    return min(edit_distance(test, layout) for layout in train)


@lru_cache(maxsize=256)
def _blocked(layout: MazeLayout) -> np.ndarray:
    # Interior grid padded with the implicit outer wall, indexed [row + 1, col + 1].
    padded = np.ones((MAZE_SIZE + 2, MAZE_SIZE + 2), dtype=bool)
    padded[1:-1, 1:-1] = layout.grid
    padded.setflags(write=False)
    return padded


def _cells(values: np.ndarray) -> np.ndarray:
    return np.floor(values).astype(np.int64)


def _advance_axis(pos, vel, other, axis, padded):
    # Move along one axis; a blocked destination cell stops the agent on the face.
    moved = pos + vel * DT
    cur = _cells(pos)
    new = _cells(moved)
    fixed = np.clip(_cells(other) + 1, 0, MAZE_SIZE + 1)
    target = np.clip(new + 1, 0, MAZE_SIZE + 1)
    if axis == 0:
        hit = padded[fixed, target]
    else:
        hit = padded[target, fixed]
    hit = hit & (new != cur)
    face = np.where(vel > 0, cur + 1 - EPSILON, cur + EPSILON)
    return np.where(hit, face, moved), np.where(hit, 0.0, vel)


def step_batch(states: np.ndarray, accels: np.ndarray, layout: MazeLayout) -> np.ndarray:
    """Vectorized ``step`` over (N, 4) states and (N, 2) accelerations."""
    states = np.asarray(states, dtype=np.float64).reshape(-1, 4)
    accel = clip_norm(np.asarray(accels).reshape(-1, 2), ACCEL_BOUND)
    padded = _blocked(layout)
    x, y, vx, vy = (states[:, i].copy() for i in range(4))
    for _ in range(ACTION_REPEAT):
        vx = np.clip(vx + accel[:, 0] * DT, -MAX_SPEED, MAX_SPEED)
        vy = np.clip(vy + accel[:, 1] * DT, -MAX_SPEED, MAX_SPEED)
        x, vx = _advance_axis(x, vx, y, 0, padded)
        y, vy = _advance_axis(y, vy, x, 1, padded)
    return np.stack([x, y, vx, vy], axis=1)


def step(state: np.ndarray, accel: np.ndarray, layout: MazeLayout) -> np.ndarray:
    """
    Apply one acceleration for four semi-implicit Euler sub-steps.

    Args:
        state: (x, y, vx, vy)
        accel: Raw acceleration (2,), norm-clipped to 1
        layout: Maze layout

    Returns:
        Next state (4,)
    """
    return step_batch(np.asarray(state)[None], np.asarray(accel)[None], layout)[0]


@lru_cache(maxsize=256)
def _background(layout: MazeLayout) -> np.ndarray:
    walls = np.kron(layout.grid, np.ones((CELL_PIXELS, CELL_PIXELS), dtype=bool))
    image = np.empty((3, IMAGE_SIZE, IMAGE_SIZE), dtype=np.float64)
    for ch in range(3):
        image[ch] = np.where(walls, WALL_COLOR[ch], FREE_COLOR[ch])
    image.setflags(write=False)
    return image


def render_layout(layout: MazeLayout) -> np.ndarray:
    """Agent-free RGB render in [0, 1], shape (3, 64, 64)."""
    return _background(layout)


def render(layout: MazeLayout, state: np.ndarray) -> Observation:
    """
    Render the top-down observation of a state.

    Args:
        layout: Maze layout
        state: (x, y, vx, vy)

    Returns:
        Observation with a u8 (3, 64, 64) image and the velocity
    """
    state = np.asarray(state, dtype=np.float64)
    blob = gaussian_blob(state[:2] * CELL_PIXELS, AGENT_SIGMA_PX)
    image = _background(layout) * (1.0 - blob)
    for ch in range(3):
        image[ch] += blob * AGENT_COLOR[ch]
    return Observation(
        image=np.round(image * 255.0).astype(np.uint8),
        velocity=state[2:4].copy(),
        state=state.copy(),
    )


def free_cells(layout: MazeLayout) -> np.ndarray:
    """(row, col) pairs of free cells."""
    return np.argwhere(~layout.grid)


class PointMazeEnv(Environment):
    """PointMaze as an ``Environment``; the state is (x, y, vx, vy) in cell units."""

    kind = "pointmaze"
    state_dim = 4
    action_bound = ACCEL_BOUND
    default_success_radius = SUCCESS_RADIUS
    pixels_per_unit = float(CELL_PIXELS)

    def __init__(self, layout: MazeLayout):
        if not layout.validate():
            raise ConfigError(f"Invalid maze layout {layout}")
        self.layout = layout

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform position in a random free cell, velocity uniform in the disk of radius 5."""
        cells = free_cells(self.layout)
        row, col = cells[rng.integers(len(cells))]
        pos = np.array([col, row], dtype=np.float64) + rng.uniform(EPSILON, 1.0 - EPSILON, size=2)
        angle = rng.uniform(-np.pi, np.pi)
        speed = MAX_SPEED * np.sqrt(rng.uniform())
        vel = np.clip(speed * np.array([np.cos(angle), np.sin(angle)]), -MAX_SPEED, MAX_SPEED)
        return np.concatenate([pos, vel])

    def reset_at_rest(self, rng: np.random.Generator) -> np.ndarray:
        state = self.reset(rng)
        state[2:] = 0.0
        return state

    def step_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return step_batch(states, actions, self.layout)

    def observe(self, state: np.ndarray) -> Observation:
        return render(self.layout, state)

    def wall_rects(self) -> List[Rect]:
        return [(float(c), float(r), c + 1.0, r + 1.0) for r, c in np.argwhere(self.layout.grid)]

    def free_mask(self) -> np.ndarray:
        return ~np.kron(self.layout.grid, np.ones((CELL_PIXELS, CELL_PIXELS), dtype=bool))

    def cell_of(self, state: np.ndarray) -> tuple:
        x, y = np.asarray(state)[:2]
        return int(np.floor(y)), int(np.floor(x))

    def describe(self) -> dict:
        return {"kind": self.kind, "layout": self.layout.code}

"""
Environment interface shared by Two-Rooms and Diverse PointMaze.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from envs.collision import Rect, clip_norm, points_inside, segment_blocked

IMAGE_SIZE = 64
BLOB_TRUNCATE = 3.0


def gaussian_blob(center: np.ndarray, sigma: float, size: int = IMAGE_SIZE) -> np.ndarray:
    """
    Gaussian blob with peak 1, truncated at 3 sigma.

    Args:
        center: (x, y) in pixel units; pixel (r, c) has its centre at (c + 0.5, r + 0.5)
        sigma: Standard deviation in pixels
        size: Image side

    Returns:
        Array (size, size) in [0, 1], indexed [row = y, col = x]
    """
    x, y = float(center[0]), float(center[1])
    reach = BLOB_TRUNCATE * sigma
    blob = np.zeros((size, size), dtype=np.float64)
    r0, r1 = max(0, int(np.floor(y - reach))), min(size, int(np.ceil(y + reach)) + 1)
    c0, c1 = max(0, int(np.floor(x - reach))), min(size, int(np.ceil(x + reach)) + 1)
    if r0 >= r1 or c0 >= c1:
        return blob
    dy = np.arange(r0, r1) + 0.5 - y
    dx = np.arange(c0, c1) + 0.5 - x
    d2 = dy[:, None] ** 2 + dx[None, :] ** 2
    window = np.exp(-d2 / (2.0 * sigma * sigma))
    window[d2 > reach * reach] = 0.0
    blob[r0:r1, c0:c1] = window
    return blob


@dataclass
class Observation:
    """What an agent sees.

    ``image`` is a u8 (C, 64, 64) render and ``velocity`` the proprioceptive
    part (PointMaze only). ``state`` is the raw simulator state; learned
    models never read it.
    """

    image: np.ndarray
    velocity: Optional[np.ndarray] = None
    state: Optional[np.ndarray] = None

    def image_float(self) -> np.ndarray:
        return self.image.astype(np.float32) / 255.0


class Environment(ABC):
    """Deterministic navigation environment over a fixed wall layout."""

    kind: str = ""
    state_dim: int = 2
    action_dim: int = 2
    action_bound: float = 1.0
    default_success_radius: float = 1.0
    # Pixels of the rendered image per world unit.
    pixels_per_unit: float = 1.0

    @abstractmethod
    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """Sample a valid initial state."""
        pass

    @abstractmethod
    def step_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """
        Advance a batch of states by one action each.

        Args:
            states: Array (N, state_dim)
            actions: Array (N, action_dim); clipped to the action bound here

        Returns:
            Next states (N, state_dim)
        """
        pass

    @abstractmethod
    def observe(self, state: np.ndarray) -> Observation:
        """Render the observation of a state."""
        pass

    @abstractmethod
    def wall_rects(self) -> List[Rect]:
        """Interior walls as rectangles in world units."""
        pass

    @abstractmethod
    def free_mask(self) -> np.ndarray:
        """Boolean pixel grid (64, 64), True where free."""
        pass

    def step(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=np.float64)
        return self.step_batch(state[None], np.asarray(action)[None])[0]

    def clip_action(self, actions: np.ndarray) -> np.ndarray:
        return clip_norm(actions, self.action_bound)

    def position(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(states, dtype=np.float64)[..., :2]

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Euclidean distance between the positions of two (batches of) states."""
        return np.linalg.norm(self.position(a) - self.position(b), axis=-1)

    def in_wall(self, positions: np.ndarray) -> np.ndarray:
        return points_inside(positions, self.wall_rects())

    def line_of_sight(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """True where the straight segment between positions crosses no wall."""
        return ~segment_blocked(a, b, self.wall_rects())

    def describe(self) -> dict:
        """Env descriptor recorded in trial specs and metadata."""
        return {"kind": self.kind}

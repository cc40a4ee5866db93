"""
World model whose latent is the true environment state.

Used to check the planner independently of learning. With ``geodesic=True``
the goal distance follows the free space: Euclidean when the goal is in line
of sight, otherwise the breadth-first path length on the pixel grid.
"""

import logging
from typing import Dict, Tuple

import numpy as np

from envs.base import Environment, Observation
from envs.grid_paths import bfs_distance_map, nearest_free
from error_handler import ShapeError
from planning.world_model import WorldModel

logger = logging.getLogger(__name__)


class GroundTruthModel(WorldModel):
    """Single-member model that steps the environment itself."""

    def __init__(self, env: Environment, geodesic: bool = False):
        self.env = env
        self.geodesic = geodesic
        self._free = env.free_mask() if geodesic else None
        self._maps: Dict[Tuple[int, int], np.ndarray] = {}

    @property
    def ensemble_size(self) -> int:
        return 1

    def encode_observation(self, obs: Observation) -> np.ndarray:
        if obs.state is None:
            raise ShapeError("GroundTruthModel needs observations that carry the raw state")
        return np.asarray(obs.state, dtype=np.float64).reshape(-1)

    def predict_latents(self, k: int, z0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        states = np.asarray(z0, dtype=np.float64)
        b, horizon = actions.shape[:2]
        out = np.empty((b, horizon, states.shape[-1]), dtype=np.float64)
        for t in range(horizon):
            states = self.env.step_batch(states, actions[:, t])
            out[:, t] = states
        return out

    def _distance_map(self, goal_px: np.ndarray) -> np.ndarray:
        cell = nearest_free(self._free, goal_px)
        if cell not in self._maps:
            self._maps[cell] = bfs_distance_map(self._free, cell)
        return self._maps[cell]

    def goal_distance(self, latents: np.ndarray, z_goal: np.ndarray) -> np.ndarray:
        positions = np.asarray(latents, dtype=np.float64)[..., :2]
        goal = np.asarray(z_goal, dtype=np.float64)[:2]
        euclidean = np.linalg.norm(positions - goal, axis=-1)
        if not self.geodesic:
            return euclidean

        scale = self.env.pixels_per_unit
        dist = self._distance_map(goal * scale)
        rows, cols = dist.shape
        flat = positions.reshape(-1, 2)
        r = np.clip(np.floor(flat[:, 1] * scale).astype(np.int64), 0, rows - 1)
        c = np.clip(np.floor(flat[:, 0] * scale).astype(np.int64), 0, cols - 1)
        hops = dist[r, c].astype(np.float64)
        hops[hops < 0] = rows * cols
        path = (hops / scale).reshape(euclidean.shape)

        visible = self.env.line_of_sight(flat, np.broadcast_to(goal, flat.shape)).reshape(euclidean.shape)
        return np.where(visible, euclidean, np.maximum(path, euclidean))

"""
The interface the planner uses to query a dynamics model.

Latents are flat numpy vectors; learned and ground-truth models both
implement it.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np

from envs.base import Observation

logger = logging.getLogger(__name__)


class WorldModel(ABC):
    """Encoder plus an ensemble of one-step predictors, evaluated without gradients."""

    @property
    @abstractmethod
    def ensemble_size(self) -> int:
        pass

    @abstractmethod
    def encode_observation(self, obs: Observation) -> np.ndarray:
        """Flat latent (D,) of an observation."""
        pass

    @abstractmethod
    def predict_latents(self, k: int, z0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """
        Open-loop rollout of ensemble member ``k``.

        Args:
            k: Ensemble index
            z0: Start latents (B, D)
            actions: Action sequences (B, H, A)

        Returns:
            Predicted latents z_1..z_H, shape (B, H, D)
        """
        pass

    def goal_distance(self, latents: np.ndarray, z_goal: np.ndarray) -> np.ndarray:
        """Euclidean distance from latents (..., D) to the goal latent (D,)."""
        return np.linalg.norm(latents - z_goal, axis=-1)

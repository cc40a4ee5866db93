"""
The PLDM world model: encoder, K-member predictor ensemble and IDM head.
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from envs.base import Observation
from error_handler import ConfigError, ShapeError
from models.training import ModelConfig
from nn import tensor as T
from nn.checkpoint import load_checkpoint, save_checkpoint
from nn.layers import Module
from nn.tensor import Tensor
from planning.world_model import WorldModel
from pldm.networks import (
    MAZE_LATENT_CHANNELS,
    MAZE_LATENT_SIZE,
    InverseDynamics,
    build_encoder,
    build_predictor,
    latent_dim,
)

logger = logging.getLogger(__name__)


class PLDMModel(Module, WorldModel):
    """Latent dynamics model with an ensemble of predictors sharing one encoder."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        config.ensure_valid()
        self.config = config
        self.seed = seed
        rng = np.random.default_rng([seed, 0])
        self.encoder = build_encoder(config, rng)
        self.predictors = [
            build_predictor(config, np.random.default_rng([seed, 1, k])) for k in range(config.ensemble_size)
        ]
        self.idm = InverseDynamics(latent_dim(config), config.idm_hidden, config.action_dim, np.random.default_rng([seed, 2]))

    @property
    def ensemble_size(self) -> int:
        return len(self.predictors)

    @property
    def latent_size(self) -> int:
        return latent_dim(self.config)

    @property
    def latent_shape(self) -> Tuple[int, ...]:
        if self.config.env_kind == "pointmaze":
            return (MAZE_LATENT_CHANNELS, MAZE_LATENT_SIZE, MAZE_LATENT_SIZE)
        return (self.config.latent_dim,)

    def _check_images(self, images: Tensor) -> None:
        expected = (self.config.image_channels, self.config.image_size, self.config.image_size)
        if images.ndim != 4 or tuple(images.shape[1:]) != expected:
            raise ShapeError(f"encode: expected images (N, {expected[0]}, {expected[1]}, {expected[2]}), got {images.shape}")

    def encode(self, images: Tensor, velocities: Optional[Tensor] = None) -> Tensor:
        """
        Encode a batch of observations.

        Args:
            images: (N, C, H, W) floats in [0, 1]
            velocities: (N, 2), required for PointMaze

        Returns:
            Latents (N, D) for Two-Rooms, (N, 18, 26, 26) for PointMaze
        """
        self._check_images(images)
        if self.config.env_kind == "pointmaze":
            if velocities is None or velocities.shape != (images.shape[0], 2):
                raise ShapeError(f"encode: PointMaze needs velocities ({images.shape[0]}, 2), got {None if velocities is None else velocities.shape}")
        return self.encoder(images, velocities)

    def predict(self, k: int, z: Tensor, action: Tensor) -> Tensor:
        """One-step prediction of ensemble member ``k``."""
        if not 0 <= k < self.ensemble_size:
            raise ConfigError(f"Ensemble index {k} out of range for K={self.ensemble_size}")
        if tuple(z.shape[1:]) != self.latent_shape or action.shape != (z.shape[0], self.config.action_dim):
            raise ShapeError(f"predict: latent {z.shape} / action {action.shape} do not match {self.latent_shape}")
        return self.predictors[k](z, action)

    def rollout(self, z0: Tensor, actions: Tensor) -> List[Tensor]:
        """
        Open-loop rollout of every ensemble member.

        Args:
            z0: Start latents (N, ...)
            actions: (H, N, A)

        Returns:
            One tensor (H + 1, N, ...) per member, starting with z0
        """
        horizon = actions.shape[0]
        sequences = []
        for k in range(self.ensemble_size):
            z = z0
            steps = [z0]
            for t in range(horizon):
                z = self.predict(k, z, actions[t])
                steps.append(z)
            sequences.append(T.stack(steps, axis=0))
        return sequences

    def flatten(self, latents: Tensor) -> Tensor:
        """Flatten the trailing latent dimensions to D."""
        lead = latents.shape[: latents.ndim - len(self.latent_shape)]
        return latents.reshape(*lead, self.latent_size)

    # Planner interface

    def encode_observation(self, obs: Observation) -> np.ndarray:
        dtype = T.get_default_dtype()
        images = Tensor(obs.image_float()[None].astype(dtype))
        velocities = None
        if obs.velocity is not None:
            velocities = Tensor(np.asarray(obs.velocity, dtype=dtype)[None])
        with T.no_grad():
            z = self.encode(images, velocities)
        return z.data.reshape(-1).astype(np.float64)

    def predict_latents(self, k: int, z0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        dtype = T.get_default_dtype()
        b, horizon = actions.shape[:2]
        z = Tensor(np.asarray(z0, dtype=dtype).reshape(b, *self.latent_shape))
        out = np.empty((b, horizon, self.latent_size), dtype=np.float64)
        with T.no_grad():
            for t in range(horizon):
                z = self.predict(k, z, Tensor(np.asarray(actions[:, t], dtype=dtype)))
                out[:, t] = z.data.reshape(b, -1)
        return out

    # Persistence

    def describe(self) -> Dict[str, Any]:
        return {"model": self.config.to_dict(), "model_seed": self.seed, "num_parameters": self.num_parameters()}

    def save(self, path: str, metadata: Optional[Dict[str, Any]] = None, optimizer_state=None) -> int:
        meta = self.describe()
        meta.update(metadata or {})
        return save_checkpoint(path, self.state_dict(), meta, optimizer_state)

    @classmethod
    def load(cls, path: str) -> Tuple["PLDMModel", Dict[str, Any], Optional[Dict[str, np.ndarray]]]:
        """
        Rebuild a model from a checkpoint.

        Returns:
            Tuple of (model, checkpoint metadata, optimizer state or None)
        """
        params, metadata, optimizer_state = load_checkpoint(path)
        if "model" not in metadata:
            raise ConfigError(f"{path}: checkpoint has no 'model' descriptor")
        dtype = params[next(iter(params))].dtype if params else T.get_default_dtype()
        with T.default_dtype(dtype):
            model = cls(ModelConfig.from_dict(metadata["model"]), seed=metadata.get("model_seed", 0))
        model.load_state_dict(params)
        logger.info(f"Loaded {model.config.env_kind} model from {path}")
        return model, metadata, optimizer_state

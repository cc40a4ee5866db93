"""
Encoder, predictor and inverse-dynamics networks for both environments.
"""

from typing import Optional

import numpy as np

from models.training import ModelConfig
from nn import tensor as T
from nn.layers import (
    Conv2d,
    Expander2D,
    Flatten,
    GroupNorm,
    GRUCell,
    LayerNorm,
    Linear,
    Module,
    ReLU,
    Sequential,
)
from nn.tensor import Tensor

# Spatial latent of the PointMaze encoder.
MAZE_LATENT_CHANNELS = 18
MAZE_LATENT_SIZE = 26
MAZE_FEATURE_CHANNELS = 16


class TwoRoomsEncoder(Module):
    """Strided conv stack, linear projection to ``latent_dim`` and a final LayerNorm."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        layers = []
        channels = config.image_channels
        size = config.image_size
        for out in config.encoder_channels:
            layers += [Conv2d(channels, out, 3, rng, stride=2, padding=1), ReLU()]
            channels = out
            size = (size + 1) // 2
        layers += [Flatten(), Linear(channels * size * size, config.latent_dim, rng)]
        self.backbone = Sequential(*layers)
        self.norm = LayerNorm(config.latent_dim)

    def forward(self, images: Tensor, velocities: Optional[Tensor] = None) -> Tensor:
        return self.norm(self.backbone(images))


class TwoRoomsPredictor(Module):
    """
    Stacked GRU cells whose hidden states all start from the current latent.

    The action is the input of the first cell; each further cell reads the
    output of the one below. The top output goes through a LayerNorm.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.cells = [GRUCell(config.action_dim, config.latent_dim, rng)]
        self.cells += [GRUCell(config.latent_dim, config.latent_dim, rng) for _ in range(config.gru_layers - 1)]
        self.norm = LayerNorm(config.latent_dim)

    def forward(self, z: Tensor, action: Tensor) -> Tensor:
        x = action
        for cell in self.cells:
            x = cell(x, z)
        return self.norm(x)


class PointMazeEncoder(Module):
    """Conv backbone to 16x26x26 features, with velocity planes prepended (18x26x26)."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.backbone = Sequential(
            Conv2d(3, 16, 5, rng),
            GroupNorm(4, 16),
            ReLU(),
            Conv2d(16, 32, 5, rng, stride=2),
            GroupNorm(8, 32),
            ReLU(),
            Conv2d(32, 32, 3, rng),
            GroupNorm(8, 32),
            ReLU(),
            Conv2d(32, 32, 3, rng, padding=1),
            GroupNorm(8, 32),
            ReLU(),
            Conv2d(32, MAZE_FEATURE_CHANNELS, 1, rng),
        )
        self.propio_encoder = Expander2D(MAZE_LATENT_SIZE, MAZE_LATENT_SIZE)

    def forward(self, images: Tensor, velocities: Optional[Tensor] = None) -> Tensor:
        features = self.backbone(images)
        return T.concat([self.propio_encoder(velocities), features], axis=1)


class PointMazePredictor(Module):
    """Conv predictor over the latent concatenated with expanded action planes."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.layers = Sequential(
            Conv2d(MAZE_LATENT_CHANNELS + config.action_dim, 32, 3, rng, padding=1),
            GroupNorm(4, 32),
            ReLU(),
            Conv2d(32, 32, 3, rng, padding=1),
            GroupNorm(4, 32),
            ReLU(),
            Conv2d(32, MAZE_LATENT_CHANNELS, 3, rng, padding=1),
        )
        self.action_encoder = Expander2D(MAZE_LATENT_SIZE, MAZE_LATENT_SIZE)

    def forward(self, z: Tensor, action: Tensor) -> Tensor:
        return self.layers(T.concat([z, self.action_encoder(action)], axis=1))


class InverseDynamics(Module):
    """Two-layer perceptron mapping concat(z_t, z_t+1) to the action between them."""

    def __init__(self, latent_dim: int, hidden: int, action_dim: int, rng: np.random.Generator):
        self.net = Sequential(Linear(2 * latent_dim, hidden, rng), ReLU(), Linear(hidden, action_dim, rng))

    def forward(self, z: Tensor, z_next: Tensor) -> Tensor:
        return self.net(T.concat([z, z_next], axis=-1))


def latent_dim(config: ModelConfig) -> int:
    """Flattened latent dimension."""
    if config.env_kind == "pointmaze":
        return MAZE_LATENT_CHANNELS * MAZE_LATENT_SIZE * MAZE_LATENT_SIZE
    return config.latent_dim


def build_encoder(config: ModelConfig, rng: np.random.Generator) -> Module:
    if config.env_kind == "pointmaze":
        return PointMazeEncoder(config, rng)
    return TwoRoomsEncoder(config, rng)


def build_predictor(config: ModelConfig, rng: np.random.Generator) -> Module:
    if config.env_kind == "pointmaze":
        return PointMazePredictor(config, rng)
    return TwoRoomsPredictor(config, rng)

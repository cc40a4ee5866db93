"""
Model, loss and training configuration models.
"""

from dataclasses import dataclass, field
from typing import List

from models.base_model import DataclassModel
from models.dataset import ENV_KINDS


@dataclass
class ModelConfig(DataclassModel):
    """Architecture descriptor of a PLDM world model.

    Two-Rooms uses a strided convolutional encoder projected to ``latent_dim``
    and a GRU predictor with ``latent_dim`` hidden units. PointMaze uses the
    fixed convolutional listing (18x26x26 latents) and ignores the Two-Rooms
    width fields.
    """

    env_kind: str = "two_rooms"
    ensemble_size: int = 5
    latent_dim: int = 512
    encoder_channels: List[int] = field(default_factory=lambda: [16, 32, 32])
    gru_layers: int = 2
    idm_hidden: int = 128
    action_dim: int = 2
    image_size: int = 64

    @property
    def image_channels(self) -> int:
        return 2 if self.env_kind == "two_rooms" else 3

    def validate(self) -> bool:
        if self.env_kind not in ENV_KINDS:
            return False
        if self.ensemble_size < 1 or self.latent_dim < 1 or self.gru_layers < 1:
            return False
        if len(self.encoder_channels) < 1 or min(self.encoder_channels) < 1:
            return False
        if self.env_kind == "pointmaze" and self.image_size != 64:
            return False
        return self.idm_hidden >= 1 and self.action_dim >= 1


@dataclass
class LossWeights(DataclassModel):
    """Coefficients of the combined objective and the variance hinge constants.

    alpha weights the variance hinge, beta_cov the covariance penalty, delta the
    temporal smoothness term and omega the inverse-dynamics term.
    """

    alpha: float = 4.0
    beta_cov: float = 6.9
    delta: float = 0.75
    omega: float = 0.0
    var_margin: float = 1.0
    var_eps: float = 1e-4

    def validate(self) -> bool:
        weights = (self.alpha, self.beta_cov, self.delta, self.omega, self.var_eps)
        return min(weights) >= 0 and self.var_margin > 0


@dataclass
class TrainConfig(DataclassModel):
    """Optimization settings. ``steps_per_epoch = 0`` means transitions // batch_size."""

    batch_size: int = 64
    epochs: int = 1
    lr: float = 0.0007
    horizon: int = 16
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    steps_per_epoch: int = 0
    log_every: int = 10
    checkpoint_every_epoch: bool = True

    def validate(self) -> bool:
        if self.batch_size < 1 or self.epochs < 1 or self.horizon < 1:
            return False
        if self.lr <= 0 or self.steps_per_epoch < 0 or self.log_every < 1:
            return False
        return 0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_eps > 0

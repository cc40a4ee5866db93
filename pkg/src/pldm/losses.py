"""
PLDM training objective: prediction similarity, VICReg variance and covariance
over the target latents, temporal smoothness and inverse dynamics.

Latent tensors are flattened: targets Z are (H + 1, N, D), stacked ensemble
predictions are (K, H + 1, N, D) and actions are (H, N, A).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from error_handler import ShapeError
from models.training import LossWeights
from nn import tensor as T
from nn.tensor import Tensor

logger = logging.getLogger(__name__)


def _require(op: str, condition: bool, *shapes) -> None:
    if not condition:
        raise ShapeError(f"{op}: incompatible shapes {', '.join(str(s) for s in shapes)}")


def loss_sim(pred: Tensor, target: Tensor) -> Tensor:
    """Sum over members and timesteps of the batch-mean squared prediction error."""
    _require("loss_sim", pred.ndim == 4 and tuple(pred.shape[1:]) == tuple(target.shape), pred.shape, target.shape)
    diff = pred - target
    per_sample = (diff * diff).sum(axis=-1)
    return per_sample.mean(axis=2).sum()


def _batch_variance(Z: Tensor) -> Tensor:
    n = Z.shape[1]
    centered = Z - Z.mean(axis=1, keepdims=True)
    return (centered * centered).sum(axis=1) * (1.0 / (n - 1 if n > 1 else 1))


def loss_var(Z: Tensor, margin: float = 1.0, eps: float = 1e-4) -> Tensor:
    """Mean over timesteps and dimensions of max(0, margin - sqrt(Var_batch + eps))."""
    _require("loss_var", Z.ndim == 3, Z.shape)
    std = T.sqrt(_batch_variance(Z) + eps)
    return T.relu(margin - std).mean()


def loss_cov(Z: Tensor) -> Tensor:
    """Mean over timesteps of the squared off-diagonal batch covariance, scaled by 1/D."""
    _require("loss_cov", Z.ndim == 3, Z.shape)
    n, d = Z.shape[1], Z.shape[2]
    if n < 2:
        raise ShapeError(f"loss_cov: needs a batch of at least 2, got shape {Z.shape}")
    centered = Z - Z.mean(axis=1, keepdims=True)
    cov = (centered.transpose(0, 2, 1) @ centered) * (1.0 / (n - 1))
    off_diagonal = Tensor((1.0 - np.eye(d)).astype(cov.dtype))
    masked = cov * off_diagonal
    return (masked * masked).sum(axis=(1, 2)).mean() * (1.0 / d)


def loss_time_sim(Z: Tensor) -> Tensor:
    """Sum over consecutive timestep pairs of the batch-mean squared latent change."""
    _require("loss_time_sim", Z.ndim == 3 and Z.shape[0] >= 2, Z.shape)
    diff = Z[1:] - Z[:-1]
    return (diff * diff).sum(axis=-1).mean(axis=1).sum()


def loss_idm(idm_pred: Tensor, actions: Tensor) -> Tensor:
    """Sum over transitions of the batch-mean squared action error of the IDM head."""
    _require("loss_idm", tuple(idm_pred.shape) == tuple(actions.shape), idm_pred.shape, actions.shape)
    diff = actions - idm_pred
    return (diff * diff).sum(axis=-1).mean(axis=1).sum()


@dataclass
class Batch:
    """Sub-trajectories: images (H+1, N, C, h, w), actions (H, N, A), optional velocities (H+1, N, 2)."""

    images: np.ndarray
    actions: np.ndarray
    velocities: Optional[np.ndarray] = None

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    @property
    def size(self) -> int:
        return self.actions.shape[1]


def encode_sequence(model, batch: Batch) -> Tensor:
    """Encoder outputs for every frame, flattened to (H + 1, N, D)."""
    steps, n = batch.images.shape[:2]
    dtype = T.get_default_dtype()
    images = Tensor(batch.images.reshape(steps * n, *batch.images.shape[2:]).astype(dtype, copy=False))
    velocities = None
    if batch.velocities is not None:
        velocities = Tensor(batch.velocities.reshape(steps * n, -1).astype(dtype, copy=False))
    z = model.encode(images, velocities)
    return model.flatten(z).reshape(steps, n, model.latent_size)


def total_loss(model, batch: Batch, weights: LossWeights):
    """
    Combined objective L_sim + alpha L_var + beta L_cov + delta L_time + omega L_idm.

    Targets are live encoder outputs. Terms with weight 0 are skipped apart
    from L_sim.

    Args:
        model: PLDMModel
        batch: Sub-trajectory batch
        weights: Loss coefficients

    Returns:
        Tuple of (scalar loss tensor, dict of component values, target latents Z)
    """
    dtype = T.get_default_dtype()
    Z = encode_sequence(model, batch)
    steps, n = Z.shape[0], Z.shape[1]
    if batch.horizon != steps - 1:
        raise ShapeError(f"total_loss: {steps} frames but {batch.horizon} actions")
    actions = Tensor(batch.actions.astype(dtype, copy=False))

    z0 = Z[0].reshape(n, *model.latent_shape)
    preds = [model.flatten(seq) for seq in model.rollout(z0, actions)]
    sim = loss_sim(T.stack(preds, axis=0), Z)
    loss = sim
    parts: Dict[str, float] = {"sim": sim.item()}

    if weights.alpha > 0:
        var = loss_var(Z, weights.var_margin, weights.var_eps)
        loss = loss + var * weights.alpha
        parts["var"] = var.item()
    if weights.beta_cov > 0:
        cov = loss_cov(Z)
        loss = loss + cov * weights.beta_cov
        parts["cov"] = cov.item()
    if weights.delta > 0:
        smooth = loss_time_sim(Z)
        loss = loss + smooth * weights.delta
        parts["time_sim"] = smooth.item()
    if weights.omega > 0:
        idm = loss_idm(model.idm(Z[:-1], Z[1:]), actions)
        loss = loss + idm * weights.omega
        parts["idm"] = idm.item()
    parts["total"] = loss.item()
    return loss, parts, Z


def latent_std(Z: np.ndarray) -> float:
    """Mean per-dimension standard deviation of latents over the batch, averaged over time."""
    Z = np.asarray(Z, dtype=np.float64)
    return float(Z.std(axis=1).mean())

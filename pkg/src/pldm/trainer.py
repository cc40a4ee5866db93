"""
Training loop for PLDM world models.

Sub-trajectories of H + 1 frames are drawn uniformly with replacement over all
valid (episode, offset) pairs. Each step draws its batch from a generator seeded
with (seed, step), so a run resumed from a checkpoint continues bit-identically.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from error_handler import ConfigError, DataError
from models.dataset import Dataset
from models.training import LossWeights, TrainConfig
from nn.optim import ParamStore, adam_step, cosine_lr
from pldm.losses import Batch, latent_std, total_loss
from pldm.model import PLDMModel

logger = logging.getLogger(__name__)

TRAINING_LOG = "training_log.jsonl"
FINAL_CHECKPOINT = "model.ckpt"


class SubTrajectorySampler:
    """Uniform sampler over every (episode, offset) window of ``horizon`` actions."""

    def __init__(self, dataset: Dataset, horizon: int):
        if horizon < 1:
            raise ConfigError(f"train.horizon must be >= 1, got {horizon}")
        if not dataset.episodes:
            raise DataError("Dataset has no episodes")
        lengths = np.array([ep.length for ep in dataset.episodes], dtype=np.int64)
        shortest = int(lengths.min())
        if shortest < horizon:
            raise DataError(
                f"Dataset episodes are shorter than the horizon: shortest episode has "
                f"{shortest} transitions, horizon is {horizon}"
            )
        self.dataset = dataset
        self.horizon = horizon
        self._cumulative = np.cumsum(lengths - horizon + 1)

    @property
    def num_windows(self) -> int:
        return int(self._cumulative[-1])

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Draw ``batch_size`` windows; images are scaled to [0, 1] floats."""
        flat = rng.integers(0, self.num_windows, size=batch_size)
        episode_idx = np.searchsorted(self._cumulative, flat, side="right")
        offsets = flat - np.concatenate([[0], self._cumulative])[episode_idx]

        h = self.horizon
        episodes = self.dataset.episodes
        images = np.stack([episodes[e].observations[o : o + h + 1] for e, o in zip(episode_idx, offsets)], axis=1)
        actions = np.stack([episodes[e].actions[o : o + h] for e, o in zip(episode_idx, offsets)], axis=1)
        velocities = None
        if episodes[0].velocities is not None:
            velocities = np.stack(
                [episodes[e].velocities[o : o + h + 1] for e, o in zip(episode_idx, offsets)], axis=1
            )
        return Batch(images=images.astype(np.float32) / 255.0, actions=actions.astype(np.float32), velocities=velocities)


def sample_batch(dataset: Dataset, horizon: int, batch_size: int, rng: np.random.Generator) -> Batch:
    """One batch of sub-trajectories with H + 1 frames and H actions."""
    return SubTrajectorySampler(dataset, horizon).sample(batch_size, rng)


@dataclass
class TrainingResult:
    """Per-epoch mean losses and the path of the last checkpoint written."""

    epoch_losses: List[Dict[str, float]] = field(default_factory=list)
    checkpoint: Optional[str] = None
    steps: int = 0


class Trainer:
    """Adam with a cosine schedule over ``epochs * steps_per_epoch`` steps."""

    def __init__(
        self,
        model: PLDMModel,
        dataset: Dataset,
        train_config: TrainConfig,
        weights: LossWeights,
        output_dir: Optional[str] = None,
        seed: int = 0,
    ):
        train_config.ensure_valid()
        weights.ensure_valid()
        if model.config.env_kind != dataset.env_kind:
            raise ConfigError(
                f"model.env_kind is {model.config.env_kind!r} but the dataset is {dataset.env_kind!r}"
            )
        self.model = model
        self.dataset = dataset
        self.config = train_config
        self.weights = weights
        self.output_dir = output_dir
        self.seed = seed
        self.sampler = SubTrajectorySampler(dataset, train_config.horizon)
        self.store = ParamStore(model.named_parameters())
        self.step = 0
        self.epoch = 0
        self._fingerprint = dataset.fingerprint()

    @property
    def steps_per_epoch(self) -> int:
        if self.config.steps_per_epoch > 0:
            return self.config.steps_per_epoch
        return max(1, self.dataset.num_transitions // self.config.batch_size)

    @property
    def total_steps(self) -> int:
        return self.config.epochs * self.steps_per_epoch

    def train_step(self) -> Dict[str, float]:
        """Run one optimization step and return the loss components."""
        rng = np.random.default_rng([self.seed, self.step])
        batch = self.sampler.sample(self.config.batch_size, rng)
        lr = cosine_lr(self.step, self.total_steps, self.config.lr)

        self.store.zero_grad()
        loss, parts, Z = total_loss(self.model, batch, self.weights)
        loss.backward()
        adam_step(self.store, lr, self.config.adam_beta1, self.config.adam_beta2, self.config.adam_eps)

        parts["lr"] = lr
        parts["latent_std"] = latent_std(Z.data)
        self.step += 1
        return parts

    def fit(self) -> TrainingResult:
        """Train until ``total_steps``, writing the NDJSON log and per-epoch checkpoints."""
        result = TrainingResult()
        log_file = None
        if self.output_dir:
            os.makedirs(self.output_dir, exist_ok=True)
            log_file = open(os.path.join(self.output_dir, TRAINING_LOG), "a", encoding="utf-8")
        logger.info(
            f"Training {self.model.config.env_kind} model: {self.total_steps} steps, "
            f"{self.sampler.num_windows} windows, {self.model.num_parameters()} parameters"
        )
        try:
            while self.step < self.total_steps:
                self.epoch = self.step // self.steps_per_epoch
                epoch_end = (self.epoch + 1) * self.steps_per_epoch
                totals: Dict[str, float] = {}
                count = 0
                while self.step < epoch_end:
                    parts = self.train_step()
                    count += 1
                    for key, value in parts.items():
                        totals[key] = totals.get(key, 0.0) + value
                    if log_file is not None and (self.step % self.config.log_every == 0 or self.step == epoch_end):
                        record = {"epoch": self.epoch, "step": self.step}
                        record.update(parts)
                        log_file.write(json.dumps(record, sort_keys=True) + "\n")
                        log_file.flush()
                means = {key: value / count for key, value in totals.items()}
                result.epoch_losses.append(means)
                logger.info(
                    f"Epoch {self.epoch + 1}/{self.config.epochs}: "
                    f"sim={means['sim']:.4f} total={means['total']:.4f} latent_std={means['latent_std']:.4f}"
                )
                if self.output_dir and self.config.checkpoint_every_epoch:
                    result.checkpoint = self.save(os.path.join(self.output_dir, f"checkpoint_epoch{self.epoch + 1}.ckpt"))
        finally:
            if log_file is not None:
                log_file.close()

        if self.output_dir:
            result.checkpoint = self.save(os.path.join(self.output_dir, FINAL_CHECKPOINT))
        result.steps = self.step
        return result

    def checkpoint_metadata(self) -> Dict[str, Any]:
        return {
            "loss_weights": self.weights.to_dict(),
            "train": self.config.to_dict(),
            "dataset_fingerprint": self._fingerprint,
            "dataset_layouts": list(self.dataset.metadata.get("layouts", [])),
            "epoch": self.step // self.steps_per_epoch,
            "step": self.step,
            "total_steps": self.total_steps,
            "adam": {
                "beta1": self.config.adam_beta1,
                "beta2": self.config.adam_beta2,
                "eps": self.config.adam_eps,
            },
            "seed": self.seed,
        }

    def save(self, path: str) -> str:
        self.model.save(path, self.checkpoint_metadata(), self.store.state_arrays())
        return path

    @classmethod
    def resume(cls, path: str, dataset: Dataset, output_dir: Optional[str] = None) -> "Trainer":
        """
        Continue a run from its last checkpoint.

        Args:
            path: Checkpoint written by :meth:`save`
            dataset: The dataset the run was started on
            output_dir: Where to keep writing logs and checkpoints

        Returns:
            Trainer positioned at the checkpoint's step
        """
        model, metadata, optimizer_state = PLDMModel.load(path)
        for key in ("train", "loss_weights", "step", "dataset_fingerprint"):
            if key not in metadata:
                raise DataError(f"{path}: checkpoint has no {key!r} entry and cannot be resumed")
        trainer = cls(
            model,
            dataset,
            TrainConfig.from_dict(metadata["train"]),
            LossWeights.from_dict(metadata["loss_weights"]),
            output_dir=output_dir,
            seed=metadata.get("seed", 0),
        )
        if metadata["dataset_fingerprint"] != trainer._fingerprint:
            raise DataError(f"{path}: checkpoint was trained on a different dataset")
        if optimizer_state is not None:
            trainer.store.load_state_arrays(optimizer_state)
        else:
            logger.warning(f"{path}: no optimizer state, Adam moments restart from zero")
        trainer.step = int(metadata["step"])
        logger.info(f"Resuming from {path} at step {trainer.step}/{trainer.total_steps}")
        return trainer


def train(
    dataset: Dataset,
    model_config,
    train_config: TrainConfig,
    weights: LossWeights,
    output_dir: Optional[str] = None,
    seed: int = 0,
):
    """
    Build a model and train it on ``dataset``.

    Returns:
        Tuple of (trained PLDMModel, TrainingResult)
    """
    model = PLDMModel(model_config, seed=seed)
    trainer = Trainer(model, dataset, train_config, weights, output_dir=output_dir, seed=seed)
    return model, trainer.fit()

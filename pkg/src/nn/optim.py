"""
Adam optimizer state and the cosine learning-rate schedule.
"""

import logging
import math
from typing import Dict, List, Tuple

import numpy as np

from error_handler import ConfigError, DataError
from nn.layers import Parameter

logger = logging.getLogger(__name__)


class ParamStore:
    """Named parameters with their Adam first and second moment buffers."""

    def __init__(self, named_parameters: List[Tuple[str, Parameter]]):
        self.params: Dict[str, Parameter] = dict(named_parameters)
        self.m: Dict[str, np.ndarray] = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v: Dict[str, np.ndarray] = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.step_count = 0

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Moment buffers and step count as named arrays for checkpoints."""
        arrays = {f"m/{k}": v for k, v in self.m.items()}
        arrays.update({f"v/{k}": v for k, v in self.v.items()})
        arrays["step_count"] = np.array([self.step_count], dtype=np.int64)
        return arrays

    def load_state_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        try:
            for k in self.params:
                self.m[k] = np.array(arrays[f"m/{k}"], dtype=self.params[k].dtype)
                self.v[k] = np.array(arrays[f"v/{k}"], dtype=self.params[k].dtype)
            self.step_count = int(arrays["step_count"][0])
        except KeyError as e:
            raise DataError(f"Optimizer state is missing {e}") from e


def adam_step(
    store: ParamStore, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
) -> None:
    """
    One bias-corrected Adam update of every parameter with a gradient, then clear gradients.

    Args:
        store: Parameters and moment buffers
        lr: Learning rate
        beta1: First moment decay
        beta2: Second moment decay
        eps: Denominator epsilon
    """
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in store.params.items():
        g = p.grad
        if g is None:
            continue
        m = store.m[name] = beta1 * store.m[name] + (1.0 - beta1) * g
        v = store.v[name] = beta2 * store.v[name] + (1.0 - beta2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        p.data = (p.data - update).astype(p.dtype)
    store.zero_grad()


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    """base_lr * 0.5 * (1 + cos(pi * step / total_steps))."""
    if total_steps <= 0:
        return base_lr
    if not 0 <= step <= total_steps:
        raise ConfigError(f"cosine_lr: step {step} outside [0, {total_steps}]")
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))

"""
Neural network layers built on ``nn.tensor``.

Parameter layouts follow the common PyTorch conventions (Linear weight is
(out, in), Conv2d weight is (out, in, kh, kw), GRU gates are ordered reset,
update, candidate) so parameter counts match published listings.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from error_handler import DataError, ShapeError
from nn import tensor as T
from nn.tensor import Tensor

logger = logging.getLogger(__name__)


class Parameter(Tensor):
    """A trainable leaf tensor."""

    def __init__(self, data: np.ndarray):
        super().__init__(np.array(data, dtype=T.get_default_dtype()), requires_grad=True)


def _uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Base class: parameters are discovered from attributes in definition order."""

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Parameter]]:
        """
        All parameters with dotted names.

        Args:
            prefix: Name prefix for nested modules

        Returns:
            List of (name, parameter) in definition order
        """
        found = []
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                found.append((full, value))
            elif isinstance(value, Module):
                found.extend(value.named_parameters(f"{full}."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        found.extend(item.named_parameters(f"{full}.{i}."))
        return found

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Copy arrays into the parameters of the same name.

        Raises:
            DataError: On missing or unexpected names
            ShapeError: On shape mismatch
        """
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise DataError(f"Parameter names differ: missing {missing}, unexpected {unexpected}")
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ShapeError(f"load_state_dict: {name} has shape {value.shape}, expected {p.shape}")
            p.data = value.astype(p.dtype, copy=True)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.weight = Parameter(_uniform(rng, (out_features, in_features), in_features))
        self.bias = Parameter(_uniform(rng, (out_features,), in_features))

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.weight.T + self.bias


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in))
        self.bias = Parameter(_uniform(rng, (out_channels,), fan_in))
        self.stride = stride
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class GroupNorm(Module):
    def __init__(self, num_groups: int, num_channels: int, eps: float = 1e-5):
        if num_channels % num_groups:
            raise ShapeError(f"GroupNorm: {num_channels} channels not divisible into {num_groups} groups")
        self.num_groups = num_groups
        self.eps = eps
        self.weight = Parameter(np.ones(num_channels))
        self.bias = Parameter(np.zeros(num_channels))

    def forward(self, x: Tensor) -> Tensor:
        n, c, h, w = x.shape
        g = x.reshape(n, self.num_groups, c // self.num_groups, h, w)
        mu = g.mean(axis=(2, 3, 4), keepdims=True)
        centered = g - mu
        var = (centered * centered).mean(axis=(2, 3, 4), keepdims=True)
        normed = (centered / T.sqrt(var + self.eps)).reshape(n, c, h, w)
        return normed * self.weight.reshape(1, c, 1, 1) + self.bias.reshape(1, c, 1, 1)


class LayerNorm(Module):
    """Normalization over the last dimension with an elementwise affine."""

    def __init__(self, dim: int, eps: float = 1e-5):
        self.eps = eps
        self.weight = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        return centered / T.sqrt(var + self.eps) * self.weight + self.bias


class ReLU(Module):
    def forward(self, x: Tensor) -> Tensor:
        return T.relu(x)


class Mish(Module):
    def forward(self, x: Tensor) -> Tensor:
        return T.mish(x)


class Flatten(Module):
    def forward(self, x: Tensor) -> Tensor:
        return x.reshape(x.shape[0], -1)


class Expander2D(Module):
    """Broadcast a (N, C) vector to constant (N, C, H, W) planes."""

    def __init__(self, height: int, width: int):
        self.height = height
        self.width = width

    def forward(self, x: Tensor) -> Tensor:
        n, c = x.shape
        return T.broadcast_to(x.reshape(n, c, 1, 1), (n, c, self.height, self.width))


class Sequential(Module):
    def __init__(self, *layers: Module):
        self.layers = list(layers)

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


class GRUCell(Module):
    """Gated recurrent unit cell, h' = (1 - z) * n + z * h."""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        self.hidden_size = hidden_size
        self.weight_ih = Parameter(_uniform(rng, (3 * hidden_size, input_size), hidden_size))
        self.weight_hh = Parameter(_uniform(rng, (3 * hidden_size, hidden_size), hidden_size))
        self.bias_ih = Parameter(_uniform(rng, (3 * hidden_size,), hidden_size))
        self.bias_hh = Parameter(_uniform(rng, (3 * hidden_size,), hidden_size))

    def forward(self, x: Tensor, h: Tensor) -> Tensor:
        hs = self.hidden_size
        gi = x @ self.weight_ih.T + self.bias_ih
        gh = h @ self.weight_hh.T + self.bias_hh
        r = T.sigmoid(gi[..., :hs] + gh[..., :hs])
        z = T.sigmoid(gi[..., hs : 2 * hs] + gh[..., hs : 2 * hs])
        n = T.tanh(gi[..., 2 * hs :] + r * gh[..., 2 * hs :])
        return (1.0 - z) * n + z * h


def count_parameters(modules: Sequence[Optional[Module]]) -> int:
    return sum(m.num_parameters() for m in modules if m is not None)

"""
Shared fixtures and helpers for the PLDM test suite.
"""

import numpy as np
import pytest

from nn import tensor as T


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run end-to-end tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def float64():
    """Build parameters and constants in float64 inside the test."""
    with T.default_dtype(np.float64):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def numerical_gradient(f, x: np.ndarray, h: float = 1e-3, probes=None):
    """
    Central differences of scalar ``f()`` with respect to entries of ``x`` (modified in place).

    Returns:
        Tuple of (probe flat indices, gradient estimates)
    """
    flat = x.reshape(-1)
    indices = range(flat.size) if probes is None else probes
    grads = []
    for i in indices:
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        grads.append((up - down) / (2 * h))
    return list(indices), np.array(grads)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / scale))


def tiny_config(**overrides):
    """Two-Rooms architecture shrunk to 8x8 images and an 8-dim latent."""
    from models.training import ModelConfig

    fields = dict(
        env_kind="two_rooms",
        ensemble_size=2,
        latent_dim=8,
        encoder_channels=[2],
        gru_layers=1,
        idm_hidden=4,
        image_size=8,
    )
    fields.update(overrides)
    return ModelConfig(**fields)


def tiny_batch(rng, horizon=2, size=4, image_size=8):
    from pldm.losses import Batch

    return Batch(
        images=rng.uniform(size=(horizon + 1, size, 2, image_size, image_size)),
        actions=rng.uniform(-1.0, 1.0, size=(horizon, size, 2)),
    )

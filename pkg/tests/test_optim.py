"""
Adam updates, optimizer state and the cosine schedule.
"""

import math

import numpy as np
import pytest

from error_handler import ConfigError, DataError
from nn.layers import Parameter
from nn.optim import ParamStore, adam_step, cosine_lr


def _store(value):
    p = Parameter(np.array(value, dtype=np.float64))
    return p, ParamStore([("p", p)])


def test_zero_gradient_leaves_parameters(float64):
    p, store = _store([1.0, -2.0])
    p.grad = np.zeros(2)
    adam_step(store, lr=0.1)
    np.testing.assert_array_equal(p.data, [1.0, -2.0])


def test_first_step_moves_by_lr_times_sign(float64):
    p, store = _store([0.0])
    p.grad = np.array([1.0])
    adam_step(store, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8)
    assert p.data[0] == pytest.approx(-0.1, abs=1e-6)
    assert p.grad is None


def test_minimizes_convex_quadratic(float64):
    p, store = _store([3.0, -4.0])
    initial = float((p.data ** 2).sum())
    for _ in range(200):
        p.grad = 2.0 * p.data
        adam_step(store, lr=0.1)
    assert float((p.data ** 2).sum()) < initial / 100


def test_state_round_trip(float64):
    p, store = _store([1.0])
    p.grad = np.array([0.5])
    adam_step(store, lr=0.01)
    arrays = store.state_arrays()
    _, other = _store([1.0])
    other.load_state_arrays(arrays)
    assert other.step_count == 1
    np.testing.assert_array_equal(other.m["p"], store.m["p"])
    np.testing.assert_array_equal(other.v["p"], store.v["p"])


def test_incomplete_state_is_rejected(float64):
    _, store = _store([1.0])
    with pytest.raises(DataError, match="missing"):
        store.load_state_arrays({"step_count": np.array([3])})


def test_cosine_schedule():
    assert cosine_lr(0, 100, 0.5) == 0.5
    assert cosine_lr(100, 100, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert cosine_lr(50, 100, 0.5) == pytest.approx(0.25)
    assert cosine_lr(25, 100, 1.0) == pytest.approx(0.5 * (1 + math.cos(math.pi / 4)))
    with pytest.raises(ConfigError):
        cosine_lr(101, 100, 0.5)

"""
Welch's t-test with a self-contained Student-t tail.

The regularized incomplete beta function is evaluated with the modified Lentz
continued fraction, using the symmetry I_x(a, b) = 1 - I_{1-x}(b, a) where the
fraction converges slowly.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from error_handler import NumericError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 10_000
TOLERANCE = 1e-15
_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < TOLERANCE:
            return h
    raise NumericError(f"Incomplete beta did not converge for a={a}, b={b}, x={x}")


def incomplete_beta(a: float, b: float, x: float) -> float:
    """
    Regularized incomplete beta function I_x(a, b).

    Args:
        a: First shape parameter, > 0
        b: Second shape parameter, > 0
        x: Point in [0, 1]

    Returns:
        I_x(a, b)
    """
    if a <= 0 or b <= 0:
        raise NumericError(f"incomplete_beta: shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise NumericError(f"incomplete_beta: x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_sf(t: float, dof: float) -> float:
    """P(T > t) for a Student-t variable with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise NumericError(f"student_t_sf: degrees of freedom must be positive, got {dof}")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t))
    return tail if t > 0 else 1.0 - tail


@dataclass
class WelchResult:
    """Welch statistic, one-sided p-value for mean_a > mean_b and Welch-Satterthwaite dof."""

    t: float
    p: float
    dof: float


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> WelchResult:
    """
    One-sided Welch's t-test of mean(sample_a) > mean(sample_b).

    Args:
        sample_a: At least two values
        sample_b: At least two values

    Returns:
        WelchResult (t, p, dof)
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise NumericError(f"welch_t_test: each sample needs at least 2 values, got {a.size} and {b.size}")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    if va + vb == 0:
        raise NumericError("welch_t_test: both samples have zero variance")
    t = float((a.mean() - b.mean()) / math.sqrt(va + vb))
    dof = float((va + vb) ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1)))
    return WelchResult(t=t, p=student_t_sf(t, dof), dof=dof)


def format_significance(p: float, alpha: float = 0.05) -> str:
    """Table cell: ``✓(p=1.68e-03)`` when significant at ``alpha``, ``✗`` otherwise."""
    if p < alpha:
        return f"✓(p={p:.2e})"
    return "✗"

"""
Von Mises direction sampling (Best-Fisher rejection sampler).
"""

from typing import Optional, Union

import numpy as np

from error_handler import ConfigError

# Below this concentration the distribution is treated as uniform.
_UNIFORM_KAPPA = 1e-8


def wrap_angle(theta: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Wrap angles into [-pi, pi)."""
    return (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi


def sample_von_mises(
    rng: np.random.Generator,
    mean_angle: float,
    concentration: float,
    size: Optional[int] = None,
) -> Union[float, np.ndarray]:
    """
    Draw angles from VonMises(mean_angle, concentration).

    Args:
        rng: Random source
        mean_angle: Mean direction in radians
        concentration: kappa >= 0; 0 is the uniform distribution on the circle
        size: Number of draws, or None for a scalar

    Returns:
        Angle(s) in [-pi, pi)
    """
    if concentration < 0:
        raise ConfigError(f"von_mises_kappa must be >= 0, got {concentration}")
    n = 1 if size is None else int(size)
    if concentration < _UNIFORM_KAPPA:
        out = rng.uniform(-np.pi, np.pi, size=n)
        return float(out[0]) if size is None else out

    kappa = float(concentration)
    tau = 1.0 + np.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - np.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)

    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        m = n - filled
        u1, u2, u3 = rng.uniform(size=(3, m))
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = (c * (2.0 - c) - u2 > 0.0) | (np.log(c / u2) + 1.0 - c >= 0.0)
        theta = np.sign(u3[accept] - 0.5) * np.arccos(np.clip(f[accept], -1.0, 1.0))
        k = len(theta)
        out[filled : filled + k] = theta
        filled += k
    out = wrap_angle(out + mean_angle)
    return float(out[0]) if size is None else out

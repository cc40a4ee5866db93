"""
MPPI over a world model's latent rollouts.

Costs follow the goal-reaching objective: the ensemble-mean sum over the
horizon of distances from each predicted latent to the goal latent, plus a
discounted ensemble-disagreement penalty. Under ``avoid`` the goal term
changes sign; the disagreement term never does.
"""

import logging
import weakref
from typing import Callable, Optional, Tuple

import numpy as np

from envs.base import Observation
from error_handler import NumericError, ShapeError
from models.planning import PlanConfig, PlanResult
from planning.world_model import WorldModel

logger = logging.getLogger(__name__)

_single_member_warned: "weakref.WeakSet[WorldModel]" = weakref.WeakSet()


def _warn_single_member(model: WorldModel) -> None:
    if model not in _single_member_warned:
        _single_member_warned.add(model)
        logger.warning(
            f"{type(model).__name__} has a single ensemble member; the uncertainty cost is always 0"
        )


def _as_batch(actions: np.ndarray) -> Tuple[np.ndarray, bool]:
    actions = np.asarray(actions, dtype=np.float64)
    if actions.ndim == 2:
        return actions[None], True
    if actions.ndim != 3:
        raise ShapeError(f"planner: actions must be (H, A) or (B, H, A), got {actions.shape}")
    return actions, False


def candidate_costs(
    model: WorldModel,
    z0: np.ndarray,
    z_goal: np.ndarray,
    actions: np.ndarray,
    gamma: float,
    chunk: int = 250,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Goal and uncertainty costs of a batch of action sequences.

    Args:
        model: World model
        z0: Current latent (D,)
        z_goal: Goal latent (D,)
        actions: Candidates (B, H, A)
        gamma: Temporal discount of the disagreement term
        chunk: Candidates evaluated per model call

    Returns:
        Tuple of (goal costs (B,), uncertainty costs (B,))
    """
    actions, _ = _as_batch(actions)
    b, horizon = actions.shape[:2]
    members = model.ensemble_size
    discounts = gamma ** np.arange(horizon, dtype=np.float64)
    goal = np.empty(b, dtype=np.float64)
    uncertainty = np.zeros(b, dtype=np.float64)
    if members == 1:
        _warn_single_member(model)

    z0 = np.asarray(z0, dtype=np.float64).reshape(-1)
    for start in range(0, b, chunk):
        stop = min(b, start + chunk)
        block = actions[start:stop]
        starts = np.broadcast_to(z0, (stop - start, z0.size))
        goal_sum = np.zeros(stop - start, dtype=np.float64)
        mean = m2 = None
        for k in range(members):
            preds = model.predict_latents(k, starts, block)
            goal_sum += model.goal_distance(preds, z_goal).sum(axis=1)
            if members > 1:
                # Welford update of the per-coordinate mean and squared deviations across members.
                if mean is None:
                    mean = preds.copy()
                    m2 = np.zeros_like(preds)
                else:
                    delta = preds - mean
                    mean += delta / (k + 1)
                    m2 += delta * (preds - mean)
        goal[start:stop] = goal_sum / members
        if members > 1:
            variance = (m2 / members).sum(axis=-1)
            uncertainty[start:stop] = variance @ discounts
    return goal, uncertainty


def cost_goal(model: WorldModel, z0: np.ndarray, z_goal: np.ndarray, actions: np.ndarray):
    """Ensemble-mean sum of latent distances to the goal; a float for one sequence (H, A)."""
    batch, single = _as_batch(actions)
    goal, _ = candidate_costs(model, z0, z_goal, batch, gamma=1.0)
    return float(goal[0]) if single else goal


def cost_uncertainty(model: WorldModel, z0: np.ndarray, actions: np.ndarray, gamma: float):
    """Discounted sum over steps and coordinates of the population variance across members."""
    batch, single = _as_batch(actions)
    _, uncertainty = candidate_costs(model, z0, np.zeros_like(np.asarray(z0, dtype=np.float64)).reshape(-1), batch, gamma)
    return float(uncertainty[0]) if single else uncertainty


def importance_weights(costs: np.ndarray, temperature: float) -> np.ndarray:
    """Normalized exp(-cost / temperature), shifted by the minimum cost."""
    costs = np.asarray(costs, dtype=np.float64)
    logits = -(costs - costs.min()) / temperature
    weights = np.exp(logits)
    return weights / weights.sum()


def combine(goal: np.ndarray, uncertainty: np.ndarray, cfg: PlanConfig) -> np.ndarray:
    sign = -1.0 if cfg.objective_sign == "avoid" else 1.0
    return sign * goal + cfg.uncertainty_beta * uncertainty


def _check_finite(total: np.ndarray, iteration: int, num_samples: int) -> None:
    bad = np.flatnonzero(~np.isfinite(total))
    if bad.size:
        index = int(bad[0])
        label = f"sample {index}" if index < num_samples else "the incumbent sequence"
        raise NumericError(f"MPPI iteration {iteration}: non-finite cost for {label} ({total[index]})")


def mppi_plan(
    model: WorldModel,
    obs_current: Observation,
    obs_goal: Observation,
    cfg: PlanConfig,
    rng: np.random.Generator,
    clip: Callable[[np.ndarray], np.ndarray],
    action_dim: int = 2,
    init_mean: Optional[np.ndarray] = None,
    z_goal: Optional[np.ndarray] = None,
) -> PlanResult:
    """
    Plan an H-step action sequence with iterative importance sampling.

    Each iteration samples ``mppi_samples`` Gaussian perturbations of the mean,
    clips them to the action bound, appends the current mean and the best
    sequence found so far, and moves the mean to the weighted average.

    Args:
        model: World model
        obs_current: Current observation
        obs_goal: Goal observation
        cfg: Planner settings
        rng: Noise source
        clip: Projects actions (..., A) onto the action bound
        action_dim: Action dimension
        init_mean: Warm-start mean (H, A); zeros when omitted
        z_goal: Precomputed goal latent, skips encoding ``obs_goal``

    Returns:
        PlanResult holding the final mean and the best-cost trace
    """
    cfg.ensure_valid()
    z0 = model.encode_observation(obs_current)
    if z_goal is None:
        z_goal = model.encode_observation(obs_goal)
    horizon = cfg.horizon
    if init_mean is None:
        mean = np.zeros((horizon, action_dim), dtype=np.float64)
    else:
        mean = np.asarray(init_mean, dtype=np.float64)
        if mean.shape != (horizon, action_dim):
            raise ShapeError(f"mppi_plan: init_mean {mean.shape} does not match ({horizon}, {action_dim})")
    mean = clip(mean)

    best_actions = mean
    best_cost = np.inf
    trace = []
    for iteration in range(cfg.mppi_iters):
        noise = rng.normal(0.0, cfg.mppi_sigma, size=(cfg.mppi_samples, horizon, action_dim))
        candidates = np.concatenate([clip(mean + noise), mean[None], best_actions[None]], axis=0)
        goal, uncertainty = candidate_costs(model, z0, z_goal, candidates, cfg.uncertainty_gamma, cfg.sample_chunk)
        total = combine(goal, uncertainty, cfg)
        _check_finite(total, iteration, cfg.mppi_samples)

        winner = int(np.argmin(total))
        if total[winner] < best_cost:
            best_cost = float(total[winner])
            best_actions = candidates[winner]
        trace.append(best_cost)

        weights = importance_weights(total, cfg.mppi_lambda)
        mean = clip(np.tensordot(weights, candidates, axes=1))

    goal, uncertainty = candidate_costs(model, z0, z_goal, mean[None], cfg.uncertainty_gamma, cfg.sample_chunk)
    total = combine(goal, uncertainty, cfg)
    logger.debug(f"MPPI best-cost trace {trace}, final cost {total[0]:.4f}")
    return PlanResult(
        actions=mean,
        cost_goal=float(goal[0]),
        cost_uncertainty=float(uncertainty[0]),
        total_cost=float(total[0]),
        cost_trace=trace,
    )

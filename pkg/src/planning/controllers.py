"""
Agents that act in an environment given the current and goal observations.
"""

import logging
from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np

from envs.base import Environment, Observation
from error_handler import ConfigError
from models.planning import PlanConfig
from planning.mppi import mppi_plan
from planning.world_model import WorldModel

logger = logging.getLogger(__name__)


class Controller(ABC):
    """Per-episode policy; ``reset`` binds it to an environment and a random source."""

    name = "controller"

    def __init__(self):
        self.env: Optional[Environment] = None
        self.rng: Optional[np.random.Generator] = None

    def reset(self, env: Environment, rng: np.random.Generator) -> None:
        self.env = env
        self.rng = rng

    def _require_env(self) -> Environment:
        if self.env is None:
            raise ConfigError(f"{type(self).__name__}.act called before reset")
        return self.env

    @abstractmethod
    def act(self, obs: Observation, goal_obs: Observation) -> np.ndarray:
        """Action for the current step, within the environment's action bound."""
        pass


class ZeroController(Controller):
    """Takes no action."""

    name = "Zero"

    def act(self, obs: Observation, goal_obs: Observation) -> np.ndarray:
        return np.zeros(self._require_env().action_dim, dtype=np.float64)


class RandomController(Controller):
    """Uniform direction with magnitude uniform in [0, action_bound]."""

    name = "Random"

    def act(self, obs: Observation, goal_obs: Observation) -> np.ndarray:
        env = self._require_env()
        angle = self.rng.uniform(-np.pi, np.pi)
        magnitude = self.rng.uniform(0.0, env.action_bound)
        return magnitude * np.array([np.cos(angle), np.sin(angle)])


class PLDMController(Controller):
    """
    Model-predictive control with MPPI.

    Plans every ``replan_interval`` steps and executes the first actions of the
    plan in between. Each new plan is warm-started from the previous mean
    shifted left by the executed steps and padded with zeros.
    """

    name = "PLDM"

    def __init__(self, model: WorldModel, cfg: PlanConfig, trace=None):
        super().__init__()
        self.model = model
        self.cfg = cfg.ensure_valid()
        self.trace = trace
        self.plan_calls = 0
        self.steps = 0
        self._mean: Optional[np.ndarray] = None
        self._queue: List[np.ndarray] = []

    def reset(self, env: Environment, rng: np.random.Generator) -> None:
        super().reset(env, rng)
        self.plan_calls = 0
        self.steps = 0
        self._mean = None
        self._queue = []

    def _warm_start(self, executed: int) -> Optional[np.ndarray]:
        if self._mean is None:
            return None
        shifted = np.zeros_like(self._mean)
        keep = max(0, len(self._mean) - executed)
        shifted[:keep] = self._mean[executed:]
        return shifted

    def _replan(self, obs: Observation, goal_obs: Observation) -> None:
        env = self._require_env()
        executed = min(self.cfg.replan_interval, self.cfg.horizon)
        result = mppi_plan(
            self.model,
            obs,
            goal_obs,
            self.cfg,
            self.rng,
            env.clip_action,
            action_dim=env.action_dim,
            init_mean=self._warm_start(executed) if self.plan_calls else None,
        )
        self.plan_calls += 1
        self._mean = result.actions
        self._queue = [a for a in result.actions[:executed]]
        if self.trace is not None:
            record = {"plan_call": self.plan_calls, "step": self.steps}
            record.update(result.to_dict())
            self.trace.record(record)

    def act(self, obs: Observation, goal_obs: Observation) -> np.ndarray:
        if not self._queue:
            self._replan(obs, goal_obs)
        self.steps += 1
        return self.env.clip_action(self._queue.pop(0))

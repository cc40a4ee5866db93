"""
Closed-loop episodes: a controller acting until it reaches the goal or runs out of steps.
"""

import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from envs.base import Environment
from error_handler import ConfigError
from models.planning import PlanConfig
from planning.controllers import Controller, PLDMController
from planning.world_model import WorldModel

logger = logging.getLogger(__name__)

PLANNER_TRACE = "planner_trace.jsonl"


class PlannerTrace:
    """Append-only NDJSON stream of per-plan diagnostics."""

    def __init__(self, path: str):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.path = path
        self._file = open(path, "a", encoding="utf-8")
        self.context: Dict[str, Any] = {}

    def record(self, entry: Dict[str, Any]) -> None:
        row = dict(self.context)
        row.update(entry)
        self._file.write(json.dumps(row, sort_keys=True) + "\n")

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> "PlannerTrace":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


@dataclass
class EpisodeResult:
    """Trajectory of one goal-reaching episode."""

    success: bool
    steps: int
    final_distance: float
    states: List[List[float]] = field(default_factory=list)
    distances: List[float] = field(default_factory=list)
    plan_calls: int = 0
    seconds: float = 0.0


def run_episode(
    controller: Controller,
    env: Environment,
    start: np.ndarray,
    goal: np.ndarray,
    max_steps: int,
    rng: np.random.Generator,
    success_radius: Optional[float] = None,
) -> EpisodeResult:
    """
    Act until the agent is within ``success_radius`` of the goal or ``max_steps`` pass.

    Args:
        controller: Agent
        env: Environment
        start: Start state
        goal: Goal state
        max_steps: Step budget
        rng: Random source handed to the controller
        success_radius: Defaults to the environment's radius

    Returns:
        EpisodeResult; ``steps`` counts actions taken
    """
    if max_steps < 1:
        raise ConfigError(f"max_steps must be >= 1, got {max_steps}")
    radius = env.default_success_radius if success_radius is None else success_radius
    began = time.perf_counter()
    controller.reset(env, rng)
    goal = np.asarray(goal, dtype=np.float64)
    state = np.asarray(start, dtype=np.float64).copy()
    goal_obs = env.observe(goal)
    distance = float(env.distance(state, goal))
    states = [state.tolist()]
    distances = [distance]
    success = distance <= radius
    steps = 0
    while not success and steps < max_steps:
        action = controller.act(env.observe(state), goal_obs)
        state = env.step(state, action)
        steps += 1
        distance = float(env.distance(state, goal))
        states.append(state.tolist())
        distances.append(distance)
        success = distance <= radius
    return EpisodeResult(
        success=success,
        steps=steps,
        final_distance=distance,
        states=states,
        distances=distances,
        plan_calls=getattr(controller, "plan_calls", 0),
        seconds=time.perf_counter() - began,
    )


def mpc_episode(
    env: Environment,
    model: WorldModel,
    cfg: PlanConfig,
    start: np.ndarray,
    goal: np.ndarray,
    max_steps: int,
    rng: np.random.Generator,
    success_radius: Optional[float] = None,
    trace: Optional[PlannerTrace] = None,
) -> EpisodeResult:
    """Run one MPPI-controlled episode, replanning every ``cfg.replan_interval`` steps."""
    controller = PLDMController(model, cfg, trace=trace)
    result = run_episode(controller, env, start, goal, max_steps, rng, success_radius)
    logger.debug(
        f"MPC episode: success={result.success} steps={result.steps} plan_calls={result.plan_calls}"
    )
    return result

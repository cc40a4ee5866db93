"""
Chase evaluation: survival rate and distance traces across chaser speeds.
"""

import logging
import time
from typing import Dict, List

import numpy as np

from envs.chase import chase_episode, opposite_room_starts
from models.evaluation import ChaseConfig, EvalReport, TrialRecord
from models.geometry import TwoRoomsGeometry
from planning.controllers import Controller

logger = logging.getLogger(__name__)

_START_STREAM = 5
_AGENT_STREAM = 6


def _steps_survived(distances: List[float], min_distance: float) -> int:
    for i, d in enumerate(distances):
        if d < min_distance:
            return i
    return len(distances)


def eval_chase(
    controllers: Dict[str, Controller],
    geometry: TwoRoomsGeometry,
    config: ChaseConfig,
    seed: int = 0,
    seed_index: int = 0,
) -> List[EvalReport]:
    """
    Run every controller against the chaser at every configured speed.

    Start positions depend only on (seed, episode), so all controllers and
    speeds face the same starts.

    Args:
        controllers: Name to controller, e.g. Zero, Random, PLDM
        geometry: Arena geometry
        config: Speeds, episode count and thresholds
        seed: Seed of starts and controller noise
        seed_index: Index recorded for per-seed aggregation

    Returns:
        One report per (controller, speed), keyed by both
    """
    config.ensure_valid()
    starts = [
        opposite_room_starts(geometry, np.random.default_rng([seed, _START_STREAM, e]), config.start_distance)
        for e in range(config.episodes)
    ]
    reports = []
    for name, controller in controllers.items():
        for speed in config.speeds:
            experiment = f"chase_{name}_speed{speed:g}"
            records = []
            for episode, (agent_start, chaser_start) in enumerate(starts):
                began = time.perf_counter()
                outcome = chase_episode(
                    controller,
                    speed,
                    geometry,
                    np.random.default_rng([seed, _AGENT_STREAM, episode]),
                    steps=config.steps,
                    min_distance=config.min_distance,
                    agent_start=agent_start,
                    chaser_start=chaser_start,
                )
                records.append(
                    TrialRecord(
                        trial_index=episode,
                        seed_index=seed_index,
                        success=outcome.success,
                        steps=_steps_survived(outcome.distances, config.min_distance),
                        final_distance=outcome.distances[-1],
                        seconds=time.perf_counter() - began,
                        group=experiment,
                        distances=outcome.distances,
                    )
                )
            report = EvalReport.from_records(
                experiment,
                records,
                keys={"controller": name, "chaser_speed": speed, "step_order": "agent_then_chaser"},
                success_radius=config.min_distance,
            )
            logger.info(f"{experiment}: survival {report.success_rate:.3f}")
            reports.append(report)
    return reports


def mean_distance_curve(report: EvalReport) -> np.ndarray:
    """Mean agent-chaser distance at each step over the report's episodes."""
    return np.mean([r.distances for r in report.records], axis=0)

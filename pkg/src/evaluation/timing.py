"""
Plan-time benchmark: seconds per episode and success across replan intervals.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from error_handler import ConfigError
from evaluation.goal_reaching import run_trials
from models.evaluation import EvalReport, TrialSpec
from models.planning import PlanConfig
from planning.controllers import PLDMController
from planning.world_model import WorldModel

logger = logging.getLogger(__name__)


@dataclass
class TimingRow:
    replan_interval: int
    seconds_mean: float
    seconds_std: float
    success_rate: float
    normalized_success: float


def timing_benchmark(
    model: WorldModel,
    plan: PlanConfig,
    trials: List[TrialSpec],
    intervals: Sequence[int] = (1, 4, 16, 32),
    seed: int = 0,
) -> List[TimingRow]:
    """
    Wall-clock seconds per episode and success for each replan interval.

    Episodes run in this process, one after another, so timings are
    comparable. Success is normalized by the success of the first interval.

    Args:
        model: World model
        plan: Planner settings; ``replan_interval`` is overridden per row
        trials: Episodes shared by every interval
        intervals: Replan intervals, smallest first
        seed: Seed of the per-trial random streams

    Returns:
        One TimingRow per interval
    """
    if not trials:
        raise ConfigError("timing: no trials to run")
    rows = []
    base_rate = None
    for interval in intervals:
        cfg = dataclasses.replace(plan, replan_interval=int(interval))
        controller = PLDMController(model, cfg)
        records = run_trials(controller, trials, seed, 0, f"timing_interval{interval}")
        seconds = np.array([r.seconds for r in records])
        rate = float(np.mean([r.success for r in records]))
        if base_rate is None:
            base_rate = rate
        normalized = rate / base_rate if base_rate > 0 else float("nan")
        rows.append(
            TimingRow(
                replan_interval=int(interval),
                seconds_mean=float(seconds.mean()),
                seconds_std=float(seconds.std(ddof=1)) if len(seconds) > 1 else 0.0,
                success_rate=rate,
                normalized_success=normalized,
            )
        )
        logger.info(
            f"Replan interval {interval}: {seconds.mean():.3f} ± {rows[-1].seconds_std:.3f} s/episode, "
            f"success {rate:.3f} (normalized {normalized:.2f})"
        )
    return rows


def timing_reports(rows: List[TimingRow]) -> List[EvalReport]:
    """Timing rows as reports, so they share the metrics file format."""
    return [
        EvalReport.from_seed_rates(
            f"timing_interval{row.replan_interval}",
            [row.success_rate],
            keys=dataclasses.asdict(row),
        )
        for row in rows
    ]

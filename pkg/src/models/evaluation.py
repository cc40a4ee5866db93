"""
Evaluation models: trial specifications, per-trial records and reports.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from models.base_model import BaseModel, DataclassModel

EVAL_MODES = ("goal_reaching", "held_out_count", "dmin_buckets", "timing")


@dataclass
class TrialSpec(DataclassModel):
    """One goal-reaching trial.

    ``env`` is the geometry dict (Two-Rooms) or ``{"layout": code}`` (PointMaze);
    ``start`` is a full environment state and ``goal`` a full goal state.
    """

    env_kind: str
    env: Dict[str, Any]
    start: List[float]
    goal: List[float]
    max_steps: int = 200
    success_radius: float = 2.45

    def validate(self) -> bool:
        return self.max_steps >= 0 and self.success_radius > 0 and len(self.start) >= 2


@dataclass
class TrialRecord(DataclassModel):
    """Outcome of a single trial. ``distances`` holds the per-step goal distances."""

    trial_index: int
    seed_index: int
    success: bool
    steps: int
    final_distance: float
    seconds: float
    group: str = ""
    distances: List[float] = field(default_factory=list)


def standard_error(values: List[float]) -> float:
    """Sample standard deviation over sqrt(n); 0 for fewer than two values."""
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


@dataclass
class EvalReport(BaseModel):
    """Success statistics of one experiment group across seeds."""

    experiment: str
    success_rate: float
    std_error: float
    seed_rates: List[float]
    records: List[TrialRecord] = field(default_factory=list)
    keys: Dict[str, Any] = field(default_factory=dict)
    success_radius: Optional[float] = None

    @classmethod
    def from_records(
        cls,
        experiment: str,
        records: List[TrialRecord],
        keys: Optional[Dict[str, Any]] = None,
        success_radius: Optional[float] = None,
    ) -> "EvalReport":
        """Aggregate per-trial records into per-seed success rates."""
        by_seed: Dict[int, List[bool]] = {}
        for record in records:
            by_seed.setdefault(record.seed_index, []).append(record.success)
        seed_rates = [float(np.mean(by_seed[s])) for s in sorted(by_seed)]
        return cls.from_seed_rates(experiment, seed_rates, records, keys, success_radius)

    @classmethod
    def from_seed_rates(
        cls,
        experiment: str,
        seed_rates: List[float],
        records: Optional[List[TrialRecord]] = None,
        keys: Optional[Dict[str, Any]] = None,
        success_radius: Optional[float] = None,
    ) -> "EvalReport":
        rate = float(np.mean(seed_rates)) if seed_rates else float("nan")
        return cls(
            experiment=experiment,
            success_rate=rate,
            std_error=standard_error(seed_rates),
            seed_rates=[float(r) for r in seed_rates],
            records=list(records or []),
            keys=dict(keys or {}),
            success_radius=success_radius,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "success_rate": self.success_rate,
            "std_error": self.std_error,
            "seed_rates": list(self.seed_rates),
            "records": [r.to_dict() for r in self.records],
            "keys": dict(self.keys),
            "success_radius": self.success_radius,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalReport":
        return cls(
            experiment=data["experiment"],
            success_rate=data["success_rate"],
            std_error=data["std_error"],
            seed_rates=list(data["seed_rates"]),
            records=[TrialRecord.from_dict(r) for r in data.get("records", [])],
            keys=dict(data.get("keys", {})),
            success_radius=data.get("success_radius"),
        )


@dataclass
class EvalConfig(DataclassModel):
    """Evaluation protocol settings. ``success_radius = 0`` selects the env default."""

    mode: str = "goal_reaching"
    num_trials: int = 50
    num_seeds: int = 3
    max_steps: int = 200
    success_radius: float = 0.0
    held_out_layouts: int = 40
    dmin_buckets: List[int] = field(default_factory=lambda: [1, 2, 3, 4])
    layouts_per_bucket: int = 5
    trials_per_layout: int = 5
    replan_intervals: List[int] = field(default_factory=lambda: [1, 4, 16, 32])
    timing_episodes: int = 25

    def validate(self) -> bool:
        if self.mode not in EVAL_MODES:
            return False
        if self.num_trials < 1 or self.num_seeds < 1 or self.max_steps < 1:
            return False
        return self.success_radius >= 0 and min(self.replan_intervals, default=1) >= 1


@dataclass
class ChaseConfig(DataclassModel):
    """Chase task settings."""

    speeds: List[float] = field(default_factory=lambda: [0.5, 1.0, 1.5])
    episodes: int = 30
    steps: int = 100
    min_distance: float = 1.4
    start_distance: float = 10.0

    def validate(self) -> bool:
        return self.episodes >= 1 and self.steps >= 1 and min(self.speeds, default=0.0) >= 0

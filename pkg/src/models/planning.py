"""
Planner configuration and result models.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from models.base_model import BaseModel, DataclassModel

OBJECTIVE_SIGNS = ("reach", "avoid")


@dataclass
class PlanConfig(DataclassModel):
    """MPPI settings; defaults are the Two-Rooms table values."""

    horizon: int = 16
    mppi_samples: int = 500
    mppi_sigma: float = 5.0
    mppi_lambda: float = 0.005
    mppi_iters: int = 3
    uncertainty_beta: float = 0.0001
    uncertainty_gamma: float = 0.9
    replan_interval: int = 1
    objective_sign: str = "reach"
    sample_chunk: int = 250

    def validate(self) -> bool:
        if self.mppi_samples < 1 or self.horizon < 1 or self.replan_interval < 1:
            return False
        if self.mppi_iters < 1 or self.sample_chunk < 1:
            return False
        if self.mppi_sigma < 0 or self.mppi_lambda <= 0:
            return False
        if not 0.0 <= self.uncertainty_gamma <= 1.0 or self.uncertainty_beta < 0:
            return False
        return self.objective_sign in OBJECTIVE_SIGNS


@dataclass
class PlanResult(BaseModel):
    """Outcome of one MPPI call: the final mean sequence and its cost terms."""

    actions: np.ndarray
    cost_goal: float
    cost_uncertainty: float
    total_cost: float
    cost_trace: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "actions": self.actions.tolist(),
            "cost_goal": self.cost_goal,
            "cost_uncertainty": self.cost_uncertainty,
            "total_cost": self.total_cost,
            "cost_trace": list(self.cost_trace),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PlanResult":
        return cls(
            actions=np.asarray(data["actions"], dtype=np.float64),
            cost_goal=data["cost_goal"],
            cost_uncertainty=data["cost_uncertainty"],
            total_cost=data["total_cost"],
            cost_trace=list(data.get("cost_trace", [])),
        )

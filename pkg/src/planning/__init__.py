"""
MPPI planning over world models, MPC episodes and controllers.
"""

from planning.controllers import Controller, PLDMController, RandomController, ZeroController
from planning.ground_truth import GroundTruthModel
from planning.mpc import EpisodeResult, PlannerTrace, mpc_episode, run_episode
from planning.mppi import cost_goal, cost_uncertainty, mppi_plan
from planning.world_model import WorldModel

__all__ = [
    "Controller",
    "EpisodeResult",
    "GroundTruthModel",
    "PLDMController",
    "PlannerTrace",
    "RandomController",
    "WorldModel",
    "ZeroController",
    "cost_goal",
    "cost_uncertainty",
    "mpc_episode",
    "mppi_plan",
    "run_episode",
]

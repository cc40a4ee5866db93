"""
Goal-reaching evaluation: trial generation and success-rate reports.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from envs import env_from_descriptor
from envs.base import Environment
from envs.grid_paths import bfs_distance_map
from envs.pointmaze import PointMazeEnv
from error_handler import ConfigError, SimulationError
from models.evaluation import EvalReport, TrialRecord, TrialSpec
from planning.controllers import Controller
from planning.mpc import run_episode

logger = logging.getLogger(__name__)

# PointMaze starts and goals are at least this many maze cells apart.
MIN_MAZE_CELLS = 3
MAX_TRIAL_ATTEMPTS = 10_000
_TRIAL_STREAM = 3


def trial_env(trial: TrialSpec) -> Environment:
    descriptor = {"kind": trial.env_kind}
    if trial.env_kind == "two_rooms":
        descriptor["geometry"] = trial.env
    else:
        descriptor.update(trial.env)
    return env_from_descriptor(descriptor)


def _env_payload(env: Environment) -> dict:
    descriptor = env.describe()
    if env.kind == "two_rooms":
        return descriptor["geometry"]
    return {"layout": descriptor["layout"]}


def maze_cell_distance(env: PointMazeEnv, a: np.ndarray, b: np.ndarray) -> int:
    """Shortest 4-connected path length in maze cells between the cells of two states."""
    dist = bfs_distance_map(~env.layout.grid, env.cell_of(a))
    return int(dist[env.cell_of(b)])


def make_trials(
    env: Environment,
    num_trials: int,
    rng: np.random.Generator,
    max_steps: int = 200,
    success_radius: Optional[float] = None,
) -> List[TrialSpec]:
    """
    Random start/goal pairs.

    Two-Rooms starts and goals are uniform over free space and further apart
    than the success radius. PointMaze ones are at rest and at least three
    maze cells apart.
    """
    radius = env.default_success_radius if success_radius is None else success_radius
    trials = []
    for _ in range(num_trials):
        for _attempt in range(MAX_TRIAL_ATTEMPTS):
            if isinstance(env, PointMazeEnv):
                start, goal = env.reset_at_rest(rng), env.reset_at_rest(rng)
                ok = maze_cell_distance(env, start, goal) >= MIN_MAZE_CELLS
            else:
                start, goal = env.reset(rng), env.reset(rng)
                ok = float(env.distance(start, goal)) > radius
            if ok:
                break
        else:
            raise SimulationError(f"No valid start/goal pair after {MAX_TRIAL_ATTEMPTS} attempts")
        trials.append(
            TrialSpec(
                env_kind=env.kind,
                env=_env_payload(env),
                start=[float(v) for v in start],
                goal=[float(v) for v in goal],
                max_steps=max_steps,
                success_radius=radius,
            )
        )
    return trials


def run_trial(job: Tuple[Controller, TrialSpec, int, int, int, str]) -> TrialRecord:
    """Run one trial; top-level so worker processes can pickle it."""
    agent, trial, trial_index, seed, seed_index, group = job
    env = trial_env(trial)
    rng = np.random.default_rng([seed, _TRIAL_STREAM, trial_index])
    result = run_episode(agent, env, np.asarray(trial.start), np.asarray(trial.goal), trial.max_steps, rng, trial.success_radius)
    return TrialRecord(
        trial_index=trial_index,
        seed_index=seed_index,
        success=result.success,
        steps=result.steps,
        final_distance=result.final_distance,
        seconds=result.seconds,
        group=group,
        distances=result.distances,
    )


def run_trials(
    agent: Controller,
    trials: List[TrialSpec],
    seed: int = 0,
    seed_index: int = 0,
    group: str = "goal_reaching",
    workers: int = 1,
    first_index: int = 0,
) -> List[TrialRecord]:
    """Records of every trial, in trial order regardless of ``workers``."""
    if not trials:
        raise ConfigError("eval: no trials to run")
    jobs = [(agent, trial, first_index + i, seed, seed_index, group) for i, trial in enumerate(trials)]
    if workers > 1 and getattr(agent, "trace", None) is not None:
        logger.warning("Planner trace requested; running trials in a single process")
        workers = 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_trial, jobs))
    return [run_trial(job) for job in jobs]


def eval_goal_reaching(
    agent: Controller,
    trials: List[TrialSpec],
    seed: int = 0,
    seed_index: int = 0,
    experiment: str = "goal_reaching",
    workers: int = 1,
) -> EvalReport:
    """
    Success rate of ``agent`` over ``trials``.

    A trial succeeds when the agent is within the trial's success radius of
    the goal at any step, the start included.

    Args:
        agent: Controller under test
        trials: Nonempty trial list
        seed: Seed of the per-trial random streams
        seed_index: Index recorded for per-seed aggregation
        experiment: Report name
        workers: Worker processes

    Returns:
        EvalReport over the trials
    """
    records = run_trials(agent, trials, seed, seed_index, experiment, workers)
    report = EvalReport.from_records(
        experiment,
        records,
        keys={"num_trials": len(trials)},
        success_radius=trials[0].success_radius,
    )
    logger.info(f"{experiment}: success {report.success_rate:.3f} over {len(trials)} trials")
    return report


def merge_reports(experiment: str, reports: List[EvalReport]) -> EvalReport:
    """Pool per-seed reports into one report with a standard error across seeds."""
    records = [r for report in reports for r in report.records]
    keys = dict(reports[0].keys) if reports else {}
    keys["num_seeds"] = len({r.seed_index for r in records})
    radius = reports[0].success_radius if reports else None
    return EvalReport.from_records(experiment, records, keys, radius)

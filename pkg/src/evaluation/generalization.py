"""
Layout generalization for Diverse PointMaze.

``held_out_count`` evaluates on unseen layouts with one trial each;
``dmin_buckets`` groups test layouts by their minimum edit distance to the
training layouts and runs several trials per layout.
"""

import logging
from typing import Dict, List, Sequence

import numpy as np

from envs.pointmaze import PointMazeEnv, d_min, generate_layout
from error_handler import ConfigError, SimulationError
from evaluation.goal_reaching import make_trials, run_trials
from models.evaluation import EvalConfig, EvalReport
from models.maze_layout import MAZE_SIZE, MazeLayout
from planning.controllers import Controller

logger = logging.getLogger(__name__)

MAX_LAYOUT_DRAWS = 50_000
_GENERALIZATION_STREAM = 4


def held_out_layouts(train: Sequence[MazeLayout], count: int, rng: np.random.Generator) -> List[MazeLayout]:
    """``count`` distinct valid layouts, none of them in ``train``."""
    seen = set(train)
    layouts: List[MazeLayout] = []
    for _ in range(MAX_LAYOUT_DRAWS):
        if len(layouts) == count:
            return layouts
        layout = generate_layout(rng)
        if layout not in seen:
            seen.add(layout)
            layouts.append(layout)
    if len(layouts) == count:
        return layouts
    raise SimulationError(f"Found only {len(layouts)} of {count} held-out layouts")


def _perturbed(layout: MazeLayout, flips: int, rng: np.random.Generator) -> MazeLayout:
    grid = layout.grid.reshape(-1).copy()
    idx = rng.choice(grid.size, size=flips, replace=False)
    grid[idx] = ~grid[idx]
    return MazeLayout.from_grid(grid.reshape(MAZE_SIZE, MAZE_SIZE))


def dmin_bucket_layouts(
    train: Sequence[MazeLayout],
    buckets: Sequence[int],
    per_bucket: int,
    rng: np.random.Generator,
) -> Dict[int, List[MazeLayout]]:
    """
    Distinct valid test layouts grouped by D_min, ``per_bucket`` per requested value.

    Candidates are fresh random layouts or training layouts with a few cells
    flipped, which is how small D_min values are reached.

    Raises:
        SimulationError: Listing the achieved bucket sizes when a bucket cannot be filled
    """
    train = list(train)
    if not train:
        raise ConfigError("eval.dmin_buckets needs training layouts")
    wanted = {int(b): [] for b in buckets}
    seen = set(train)
    largest = max(wanted)
    for _ in range(MAX_LAYOUT_DRAWS):
        if all(len(v) >= per_bucket for v in wanted.values()):
            break
        if rng.uniform() < 0.5:
            base = train[int(rng.integers(len(train)))]
            candidate = _perturbed(base, int(rng.integers(1, largest + 1)), rng)
            if not candidate.validate():
                continue
        else:
            candidate = generate_layout(rng)
        if candidate in seen:
            continue
        bucket = d_min(candidate, train)
        if bucket in wanted and len(wanted[bucket]) < per_bucket:
            seen.add(candidate)
            wanted[bucket].append(candidate)
    achieved = {b: len(v) for b, v in wanted.items()}
    if any(n < per_bucket for n in achieved.values()):
        raise SimulationError(f"Could not fill every D_min bucket with {per_bucket} layouts; achieved {achieved}")
    return wanted


def check_disjoint(test: Sequence[MazeLayout], train: Sequence[MazeLayout]) -> None:
    overlap = set(test) & set(train)
    if overlap:
        raise ConfigError(f"Test layouts overlap the training layouts: {sorted(str(l) for l in overlap)}")


def eval_layout_generalization(
    agent: Controller,
    train_layouts: Sequence[MazeLayout],
    mode: str,
    config: EvalConfig,
    seed: int = 0,
    seed_index: int = 0,
    workers: int = 1,
) -> List[EvalReport]:
    """
    Run a generalization protocol.

    Args:
        agent: Controller under test
        train_layouts: Layouts of the training dataset
        mode: ``held_out_count`` or ``dmin_buckets``
        config: Layout counts, trials per layout and episode limits
        seed: Seed of layout and trial sampling
        seed_index: Index recorded for per-seed aggregation
        workers: Worker processes

    Returns:
        One report for ``held_out_count``, one per D_min value for ``dmin_buckets``
    """
    rng = np.random.default_rng([seed, _GENERALIZATION_STREAM])
    radius = config.success_radius or None
    if mode == "held_out_count":
        groups = {None: held_out_layouts(train_layouts, config.held_out_layouts, rng)}
        trials_per_layout = 1
    elif mode == "dmin_buckets":
        groups = dmin_bucket_layouts(train_layouts, config.dmin_buckets, config.layouts_per_bucket, rng)
        trials_per_layout = config.trials_per_layout
    else:
        raise ConfigError(f"eval.mode must be held_out_count or dmin_buckets for generalization, got {mode!r}")

    reports = []
    for bucket, layouts in groups.items():
        check_disjoint(layouts, train_layouts)
        name = "held_out" if bucket is None else f"dmin_{bucket}"
        trials = []
        for layout in layouts:
            trials += make_trials(PointMazeEnv(layout), trials_per_layout, rng, config.max_steps, radius)
        records = run_trials(agent, trials, seed, seed_index, name, workers)
        keys = {"mode": mode, "num_layouts": len(layouts), "trials_per_layout": trials_per_layout}
        if bucket is not None:
            keys["d_min"] = bucket
        report = EvalReport.from_records(name, records, keys, trials[0].success_radius)
        logger.info(f"{name}: success {report.success_rate:.3f} over {len(trials)} trials")
        reports.append(report)
    return reports

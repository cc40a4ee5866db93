"""
Evaluation protocols: trials, goal reaching, layout generalization, chase,
timing and metric files.
"""

import csv
import dataclasses
import math

import numpy as np
import pytest

from envs.pointmaze import PointMazeEnv, d_min, generate_layout
from envs.two_rooms import TwoRoomsEnv
from error_handler import ConfigError, DataError
from evaluation.chase_eval import eval_chase, mean_distance_curve
from evaluation.generalization import (
    check_disjoint,
    dmin_bucket_layouts,
    eval_layout_generalization,
    held_out_layouts,
)
from evaluation.goal_reaching import eval_goal_reaching, make_trials, maze_cell_distance, merge_reports, run_trials
from evaluation.metrics import CSV_FIELDS, emit_metrics, read_metrics
from evaluation.timing import timing_benchmark, timing_reports
from models.evaluation import ChaseConfig, EvalConfig, EvalReport, TrialRecord, TrialSpec, standard_error
from models.geometry import TwoRoomsGeometry
from models.planning import PlanConfig
from planning.controllers import PLDMController, RandomController, ZeroController
from planning.ground_truth import GroundTruthModel

PLAN = PlanConfig(horizon=4, mppi_samples=60, mppi_sigma=2.0, mppi_iters=2)


def _train_layouts(seed=0, n=3):
    rng = np.random.default_rng(seed)
    layouts = []
    while len(layouts) < n:
        layout = generate_layout(rng)
        if layout not in layouts:
            layouts.append(layout)
    return layouts


def _near_trial(start, goal, max_steps=10):
    return TrialSpec(
        env_kind="two_rooms",
        env=TwoRoomsGeometry().to_dict(),
        start=list(start),
        goal=list(goal),
        max_steps=max_steps,
        success_radius=2.45,
    )


def _record(seed_index, trial_index, success, group="g"):
    return TrialRecord(
        trial_index=trial_index,
        seed_index=seed_index,
        success=success,
        steps=3,
        final_distance=1.25,
        seconds=0.5,
        group=group,
        distances=[4.0, 2.5, 1.25],
    )


# Reports


def test_standard_error():
    assert standard_error([1.0]) == 0.0
    assert standard_error([0.2, 0.4, 0.6]) == pytest.approx(0.2 / math.sqrt(3))


def test_report_from_records_uses_seed_rates():
    records = [_record(0, 0, True), _record(0, 1, False), _record(1, 0, True), _record(1, 1, True)]
    report = EvalReport.from_records("g", records)
    assert report.seed_rates == [0.5, 1.0]
    assert report.success_rate == pytest.approx(0.75)
    assert report.std_error == pytest.approx(standard_error([0.5, 1.0]))


def test_merge_reports_pools_seeds():
    a = EvalReport.from_records("goal_reaching", [_record(0, 0, True), _record(0, 1, True)], keys={"num_trials": 2})
    b = EvalReport.from_records("goal_reaching", [_record(1, 0, False), _record(1, 1, True)], keys={"num_trials": 2})
    merged = merge_reports("goal_reaching", [a, b])
    assert merged.seed_rates == [1.0, 0.5]
    assert merged.keys == {"num_trials": 2, "num_seeds": 2}
    assert len(merged.records) == 4


def test_standard_error_halves_with_four_times_the_seeds():
    outcomes = np.random.default_rng(5).random((4_000, 10)) < 0.6

    def report(num_seeds):
        records = [
            _record(seed, trial, bool(outcomes[seed, trial]))
            for seed in range(num_seeds)
            for trial in range(outcomes.shape[1])
        ]
        return EvalReport.from_records("g", records)

    few, many = report(1_000), report(4_000)
    assert many.success_rate == pytest.approx(0.6, abs=0.02)
    assert many.std_error / few.std_error == pytest.approx(0.5, rel=0.1)


# Trials and goal reaching


def test_two_rooms_trials_are_separated(rng):
    env = TwoRoomsEnv()
    trials = make_trials(env, 30, rng, max_steps=50)
    assert len(trials) == 30
    for trial in trials:
        assert np.linalg.norm(np.subtract(trial.start, trial.goal)) > 2.45
        assert trial.max_steps == 50 and trial.success_radius == 2.45


def test_pointmaze_trials_start_at_rest_three_cells_apart(rng):
    env = PointMazeEnv(_train_layouts()[0])
    for trial in make_trials(env, 10, rng):
        assert trial.start[2:] == [0.0, 0.0] and trial.goal[2:] == [0.0, 0.0]
        assert maze_cell_distance(env, np.array(trial.start), np.array(trial.goal)) >= 3
        assert trial.success_radius == 0.5 and trial.env == {"layout": env.layout.code}


def test_goal_reaching_with_ground_truth_planner():
    env = TwoRoomsEnv()
    trials = [_near_trial([10.0, 10.0], [17.0, 12.0]), _near_trial([50.0, 40.0], [45.0, 45.0])]
    report = eval_goal_reaching(PLDMController(GroundTruthModel(env), PLAN), trials, seed=0)
    assert report.success_rate == 1.0
    assert report.keys["num_trials"] == 2 and report.success_radius == 2.45
    assert [r.trial_index for r in report.records] == [0, 1]


def test_success_is_monotone_in_the_radius(rng):
    env = TwoRoomsEnv()
    trials = make_trials(env, 20, rng, max_steps=8)
    agent = PLDMController(GroundTruthModel(env), PLAN)
    rates = []
    for radius in (0.5, 1.0, 2.45, 8.0, 30.0):
        widened = [dataclasses.replace(trial, success_radius=radius) for trial in trials]
        rates.append(eval_goal_reaching(agent, widened, seed=0).success_rate)
    assert all(a <= b for a, b in zip(rates, rates[1:]))
    assert rates[-1] > rates[0]


def test_goal_reaching_counts_failures(rng):
    trials = make_trials(TwoRoomsEnv(), 4, rng, max_steps=3)
    report = eval_goal_reaching(ZeroController(), trials)
    assert report.success_rate == 0.0
    assert all(r.steps == 3 and len(r.distances) == 4 for r in report.records)


def test_trial_order_does_not_depend_on_workers(rng):
    trials = make_trials(TwoRoomsEnv(), 6, rng, max_steps=4)
    serial = run_trials(RandomController(), trials, seed=3)
    parallel = run_trials(RandomController(), trials, seed=3, workers=2)
    assert [r.trial_index for r in parallel] == list(range(6))
    assert [r.final_distance for r in parallel] == [r.final_distance for r in serial]


def test_run_trials_needs_trials():
    with pytest.raises(ConfigError):
        run_trials(ZeroController(), [])


# Layout generalization


def test_held_out_layouts_avoid_training_layouts(rng):
    train = _train_layouts()
    test = held_out_layouts(train, 6, rng)
    assert len(set(test)) == 6
    assert not set(test) & set(train)
    assert all(layout.validate() for layout in test)


def test_dmin_buckets_hold_their_distance(rng):
    train = _train_layouts()
    buckets = dmin_bucket_layouts(train, [1, 2, 3], 2, rng)
    assert sorted(buckets) == [1, 2, 3]
    for value, layouts in buckets.items():
        assert len(layouts) == 2
        assert all(d_min(layout, train) == value and layout.validate() for layout in layouts)
    with pytest.raises(ConfigError):
        dmin_bucket_layouts([], [1], 1, rng)


def test_check_disjoint(rng):
    train = _train_layouts()
    check_disjoint(held_out_layouts(train, 3, rng), train)
    with pytest.raises(ConfigError, match="overlap"):
        check_disjoint(train[:1], train)


def test_generalization_reports():
    train = _train_layouts()
    config = EvalConfig(mode="held_out_count", held_out_layouts=3, max_steps=5)
    (held_out,) = eval_layout_generalization(ZeroController(), train, "held_out_count", config, seed=1)
    assert held_out.experiment == "held_out" and len(held_out.records) == 3
    assert held_out.keys["num_layouts"] == 3 and held_out.success_radius == 0.5

    config = EvalConfig(mode="dmin_buckets", dmin_buckets=[1, 2], layouts_per_bucket=2, trials_per_layout=2, max_steps=5)
    reports = eval_layout_generalization(ZeroController(), train, "dmin_buckets", config, seed=1)
    assert [r.experiment for r in reports] == ["dmin_1", "dmin_2"]
    assert all(len(r.records) == 4 and r.keys["trials_per_layout"] == 2 for r in reports)

    with pytest.raises(ConfigError):
        eval_layout_generalization(ZeroController(), train, "goal_reaching", config)


# Chase


def test_chase_reports_per_controller_and_speed():
    config = ChaseConfig(speeds=[0.0, 1.5], episodes=3, steps=20)
    controllers = {"Zero": ZeroController(), "Random": RandomController()}
    reports = eval_chase(controllers, TwoRoomsGeometry(), config, seed=2)
    names = [r.experiment for r in reports]
    assert names == ["chase_Zero_speed0", "chase_Zero_speed1.5", "chase_Random_speed0", "chase_Random_speed1.5"]

    still = reports[0]
    assert still.success_rate == 1.0
    assert still.keys == {"controller": "Zero", "chaser_speed": 0.0, "step_order": "agent_then_chaser"}
    curve = mean_distance_curve(still)
    assert curve.shape == (20,) and np.all(curve >= 10.0)
    assert all(len(set(r.distances)) == 1 for r in still.records)
    assert all(r.steps == 20 for r in still.records)


def test_chase_is_reproducible():
    config = ChaseConfig(speeds=[1.0], episodes=2, steps=10)
    a = eval_chase({"Random": RandomController()}, TwoRoomsGeometry(), config, seed=4)
    b = eval_chase({"Random": RandomController()}, TwoRoomsGeometry(), config, seed=4)
    assert [r.distances for r in a[0].records] == [r.distances for r in b[0].records]


# Timing


def test_timing_rows_and_reports():
    env = TwoRoomsEnv()
    trials = [_near_trial([10.0, 10.0], [16.0, 10.0]), _near_trial([40.0, 20.0], [40.0, 26.0])]
    rows = timing_benchmark(GroundTruthModel(env), PLAN, trials, intervals=[1, 4])
    assert [row.replan_interval for row in rows] == [1, 4]
    assert rows[0].normalized_success == 1.0
    assert all(row.seconds_mean > 0 for row in rows)
    reports = timing_reports(rows)
    assert [r.experiment for r in reports] == ["timing_interval1", "timing_interval4"]
    assert reports[1].keys["replan_interval"] == 4
    with pytest.raises(ConfigError):
        timing_benchmark(GroundTruthModel(env), PLAN, [])


def test_timing_seconds_fall_with_the_replan_interval():
    env = TwoRoomsEnv()
    # Goals out of reach, so every episode runs the full step budget.
    trials = [_near_trial([5.0, 5.0], [60.0, 60.0], max_steps=20) for _ in range(3)]
    plan = PlanConfig(horizon=16, mppi_samples=60, mppi_sigma=2.0, mppi_iters=2)
    rows = timing_benchmark(GroundTruthModel(env), plan, trials, intervals=[1, 4, 16])
    seconds = [row.seconds_mean for row in rows]
    assert seconds[0] > seconds[1] > seconds[2]
    assert all(row.success_rate == 0.0 for row in rows)


# Metric files


def test_metrics_round_trip(tmp_path):
    records = [_record(0, 0, True, "a"), _record(1, 0, False, "a")]
    report = EvalReport.from_records("a", records, keys={"num_trials": 1}, success_radius=2.45)
    csv_path, summary_path = emit_metrics([report], str(tmp_path), "goal_reaching")
    assert csv_path.endswith("goal_reaching.csv") and summary_path.endswith("goal_reaching_summary.json")

    with open(csv_path, newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == CSV_FIELDS and len(rows) == 3
    assert rows[1][7] == "4.0;2.5;1.25"

    (loaded,) = read_metrics(summary_path)
    assert loaded.to_dict() == report.to_dict()


def test_read_metrics_errors(tmp_path):
    with pytest.raises(DataError, match="not found"):
        read_metrics(str(tmp_path / "missing_summary.json"))
    bad = tmp_path / "bad_summary.json"
    bad.write_text("{not json")
    with pytest.raises(DataError, match="invalid JSON"):
        read_metrics(str(bad))

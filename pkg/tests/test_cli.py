"""
Command-line surface: subcommands, run files and exit codes.
"""

import json
import os

import pytest

from evaluation.metrics import emit_metrics, read_metrics
from main import DATASET_FILE, main
from models.evaluation import EvalReport

TINY_DATA = ["--set", "dataset.total_transitions=60", "--set", "dataset.episode_len=6"]
TINY_MODEL = [
    "--set", "model.ensemble_size=1",
    "--set", "model.latent_dim=8",
    "--set", "model.encoder_channels=[2]",
    "--set", "model.gru_layers=1",
    "--set", "model.idm_hidden=4",
]
TINY_TRAIN = [
    "--set", "train.batch_size=4",
    "--set", "train.horizon=3",
    "--set", "train.steps_per_epoch=1",
    "--set", "train.log_every=1",
]
TINY_PLAN = [
    "--set", "plan.horizon=2",
    "--set", "plan.mppi_samples=4",
    "--set", "plan.mppi_iters=1",
]


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ("PLDM_SEED", "PLDM_WORKERS", "PLDM_OUTPUT_DIR", "PLDM_DETERMINISTIC", "PLDM_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


def _result(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_gen_data_writes_dataset_and_run_files(tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["gen-data", "--out", str(out), "--seed", "3"] + TINY_DATA) == 0
    result = _result(capsys)
    assert result["status"] == "ok"
    assert result["result"]["dataset"] == os.path.join(str(out), DATASET_FILE)
    assert os.path.exists(out / DATASET_FILE)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "gen-data" and manifest["seed"] == 3
    assert json.loads((out / "config.json").read_text())["dataset"]["episode_len"] == 6


def test_deterministic_forces_one_worker(tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["gen-data", "--out", str(out), "--deterministic", "--workers", "2"] + TINY_DATA) == 0
    config = json.loads((out / "config.json").read_text())
    assert config["deterministic"] is True and config["workers"] == 1


def test_bad_override_is_a_config_error(tmp_path, capsys):
    assert main(["gen-data", "--out", str(tmp_path), "--set", "dataset.episode_length=6"]) == 2
    error = _error(capsys)
    assert error["status"] == "error"
    assert error["error"]["message"] == "Unknown configuration key: dataset.episode_length"
    assert error["error"]["data"] == {"command": "gen-data", "exception_type": "ConfigError"}

    assert main(["gen-data", "--out", str(tmp_path), "--set", "seed"]) == 2


def test_missing_files_are_data_errors(tmp_path, capsys):
    missing = str(tmp_path / "nope.ckpt")
    assert main(["eval", "--out", str(tmp_path), "--checkpoint", missing]) == 3
    assert missing in _error(capsys)["error"]["message"]
    assert main(["train", "--out", str(tmp_path)]) == 2


def test_stats_compares_summaries(tmp_path, capsys):
    better = EvalReport.from_seed_rates("goal_reaching", [0.9, 0.8, 0.85, 0.95])
    worse = EvalReport.from_seed_rates("goal_reaching", [0.5, 0.6, 0.4, 0.55])
    _, ours = emit_metrics([better], str(tmp_path / "ours"), "goal_reaching")
    _, theirs = emit_metrics([worse], str(tmp_path / "theirs"), "goal_reaching")

    out = tmp_path / "stats"
    assert main(["stats", ours, theirs, "--out", str(out)]) == 0
    assert _result(capsys)["result"]["rows"] == 1
    (row,) = json.loads((out / "significance.json").read_text())
    assert row["group"] == "goal_reaching" and row["p"] < 0.05
    assert row["significant"].startswith("✓")

    assert main(["stats", ours, "--out", str(out)]) == 2


@pytest.mark.slow
def test_pipeline(tmp_path, capsys):
    data, run, evaluation, chase = (str(tmp_path / name) for name in ("data", "run", "eval", "chase"))
    assert main(["gen-data", "--out", data] + TINY_DATA) == 0
    dataset = _result(capsys)["result"]["dataset"]

    assert main(["train", "--dataset", dataset, "--out", run] + TINY_MODEL + TINY_TRAIN) == 0
    checkpoint = _result(capsys)["result"]["checkpoint"]
    assert os.path.exists(checkpoint)

    eval_flags = ["--set", "eval.num_trials=2", "--set", "eval.num_seeds=2", "--set", "eval.max_steps=2"]
    assert main(["eval", "--checkpoint", checkpoint, "--out", evaluation, "--verbose-planner"] + TINY_PLAN + eval_flags) == 0
    summary = _result(capsys)["result"]["summary"]
    (report,) = read_metrics(summary)
    assert report.experiment == "goal_reaching" and len(report.seed_rates) == 2
    assert os.path.exists(os.path.join(evaluation, "planner_trace.jsonl"))

    chase_flags = ["--set", "chase.speeds=[0.5]", "--set", "chase.episodes=1", "--set", "chase.steps=2"]
    assert main(["chase", "--checkpoint", checkpoint, "--out", chase] + TINY_PLAN + chase_flags) == 0
    assert os.path.exists(os.path.join(chase, "chase_summary.json"))

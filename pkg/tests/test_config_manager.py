"""
Configuration precedence, validation, presets and run files.
"""

import json

import pytest

from config_manager import CODE_VERSION, PRESETS, ConfigManager, default_config
from envs.pointmaze import PointMazeEnv
from envs.two_rooms import TwoRoomsEnv
from error_handler import ConfigError


def _write(tmp_path, data, name="settings.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_defaults():
    config = ConfigManager(environ={})
    assert config.get("seed") == 0
    assert config.get("train.lr") == pytest.approx(0.0007)
    assert config.get("missing.key", "fallback") == "fallback"
    assert config.to_dict() == default_config()


def test_precedence(tmp_path):
    path = _write(tmp_path, {"seed": 1, "train": {"lr": 0.1, "epochs": 3}, "workers": 2})
    environ = {"PLDM_SEED": "2", "PLDM_WORKERS": "4"}
    config = ConfigManager(path, preset="two_rooms_seq17", overrides={"seed": 3}, environ=environ)
    # Preset value overridden by the file
    assert config.get("train.lr") == pytest.approx(0.1)
    # Preset value untouched by later sources
    assert config.get("dataset.episode_len") == 17
    assert config.get("train.epochs") == 3
    assert config.get("workers") == 4
    assert config.get("seed") == 3
    assert config.get("preset") == "two_rooms_seq17"


def test_preset_named_in_file(tmp_path):
    config = ConfigManager(_write(tmp_path, {"preset": "pointmaze_layouts10"}), environ={})
    assert config.env_kind == "pointmaze"
    assert config.get("dataset.num_layouts") == 10
    assert config.get("model.ensemble_size") == 1


def test_every_preset_resolves():
    for name in PRESETS:
        config = ConfigManager(preset=name, environ={})
        config.dataset_spec()
        config.train_config()
        config.loss_weights()
        config.plan_config()


def test_unknown_keys_cite_the_dotted_key(tmp_path):
    with pytest.raises(ConfigError, match="Unknown configuration key: train.momentum"):
        ConfigManager(overrides={"train.momentum": 0.9}, environ={})
    with pytest.raises(ConfigError, match="Unknown configuration key: x.y"):
        ConfigManager(_write(tmp_path, {"x": {"y": 1}}), environ={})


def test_type_errors():
    with pytest.raises(ConfigError, match="train.epochs: expected an integer"):
        ConfigManager(overrides={"train.epochs": 1.5}, environ={})
    with pytest.raises(ConfigError, match="deterministic: expected a boolean"):
        ConfigManager(overrides={"deterministic": "yes"}, environ={})
    with pytest.raises(ConfigError, match="train: expected a section"):
        ConfigManager(overrides={"train": 3}, environ={})
    # Integers are accepted for float keys
    assert ConfigManager(overrides={"train.lr": 1}, environ={}).get("train.lr") == 1.0


def test_environment_variables():
    config = ConfigManager(environ={"PLDM_DETERMINISTIC": "true", "PLDM_OUTPUT_DIR": "/tmp/x", "PLDM_LOG_LEVEL": "DEBUG"})
    assert config.get("deterministic") is True
    assert config.get("output_dir") == "/tmp/x"
    assert config.get("log_level") == "DEBUG"
    with pytest.raises(ConfigError, match="PLDM_SEED"):
        ConfigManager(environ={"PLDM_SEED": "one"})
    with pytest.raises(ConfigError, match="PLDM_DETERMINISTIC"):
        ConfigManager(environ={"PLDM_DETERMINISTIC": "maybe"})


def test_bad_files_and_presets(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        ConfigManager(str(tmp_path / "nope.json"), environ={})
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        ConfigManager(str(bad), environ={})
    with pytest.raises(ConfigError, match="top level"):
        ConfigManager(_write(tmp_path, [1, 2]), environ={})
    with pytest.raises(ConfigError, match="unknown preset"):
        ConfigManager(preset="two_rooms_seq1", environ={})


def test_typed_views():
    config = ConfigManager(overrides={"seed": 5, "dataset.episode_len": 17, "model.latent_dim": 16}, environ={})
    spec = config.dataset_spec()
    assert spec.seed == 5 and spec.episode_len == 17 and spec.env_kind == "two_rooms"
    model = config.model_config()
    assert model.env_kind == "two_rooms" and model.latent_dim == 16
    assert config.eval_config().mode == "goal_reaching"
    assert config.chase_config().speeds == [0.5, 1.0, 1.5]
    assert isinstance(config.environment(), TwoRoomsEnv)

    with pytest.raises(ConfigError, match="Invalid PlanConfig"):
        ConfigManager(overrides={"plan.mppi_lambda": 0.0}, environ={}).plan_config()
    with pytest.raises(ConfigError, match="Invalid TrainConfig"):
        ConfigManager(overrides={"train.batch_size": 0}, environ={}).train_config()


def test_pointmaze_environment_needs_a_layout():
    config = ConfigManager(overrides={"env.kind": "pointmaze"}, environ={})
    with pytest.raises(ConfigError, match="env.layout"):
        config.environment()
    config.set("env.layout", "0000000000001111")
    assert isinstance(config.environment(), PointMazeEnv)


def test_set_validates():
    config = ConfigManager(environ={})
    config.set("plan.horizon", 8)
    assert config.plan_config().horizon == 8
    with pytest.raises(ConfigError):
        config.set("plan.horizn", 8)


def test_run_files(tmp_path):
    config = ConfigManager(overrides={"seed": 9}, environ={})
    manifest = config.write_run_files(str(tmp_path / "run"), "train")
    assert manifest["command"] == "train" and manifest["seed"] == 9
    assert manifest["code_version"] == CODE_VERSION
    assert manifest["config_hash"] == config.config_hash()
    saved = json.loads((tmp_path / "run" / "config.json").read_text())
    assert saved == config.to_dict()
    assert json.loads((tmp_path / "run" / "manifest.json").read_text()) == manifest

    # Saved configs load back to the same hash
    reloaded = ConfigManager(str(tmp_path / "run" / "config.json"), environ={})
    assert reloaded.config_hash() == config.config_hash()


def test_config_hash_tracks_values():
    a = ConfigManager(environ={})
    b = ConfigManager(overrides={"seed": 1}, environ={})
    assert a.config_hash() == ConfigManager(environ={}).config_hash()
    assert a.config_hash() != b.config_hash()


def test_save_needs_a_destination():
    with pytest.raises(ConfigError, match="no destination"):
        ConfigManager(environ={}).save()

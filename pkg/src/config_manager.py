"""
Configuration Manager for the PLDM toolchain
Handles loading, validating and recording run configuration.

Sources, in increasing precedence: built-in defaults, a named preset, a JSON
file, ``PLDM_*`` environment variables, then explicit overrides (CLI flags).
"""

import copy
import hashlib
import json
import logging
import os
from typing import Any, Dict, Mapping, Optional

from envs.base import Environment
from envs.pointmaze import PointMazeEnv
from envs.two_rooms import TwoRoomsEnv
from error_handler import ConfigError
from models.dataset import DatasetSpec
from models.evaluation import ChaseConfig, EvalConfig
from models.geometry import TwoRoomsGeometry
from models.maze_layout import MazeLayout
from models.planning import PlanConfig
from models.training import LossWeights, ModelConfig, TrainConfig

logger = logging.getLogger(__name__)

CODE_VERSION = "0.1.0"

_DATASET_FIELDS_FROM_ENV = ("env_kind", "geometry", "seed")


def _without(data: Dict[str, Any], keys) -> Dict[str, Any]:
    return {k: v for k, v in data.items() if k not in keys}


def default_config() -> Dict[str, Any]:
    """The full configuration schema with default values."""
    return {
        "seed": 0,
        "deterministic": False,
        "workers": 1,
        "output_dir": "runs/default",
        "log_level": "INFO",
        "preset": "",
        "env": {"kind": "two_rooms", "geometry": TwoRoomsGeometry().to_dict(), "layout": ""},
        "dataset": _without(DatasetSpec().to_dict(), _DATASET_FIELDS_FROM_ENV),
        "model": _without(ModelConfig().to_dict(), ("env_kind",)),
        "loss": LossWeights().to_dict(),
        "train": TrainConfig().to_dict(),
        "plan": PlanConfig().to_dict(),
        "eval": EvalConfig().to_dict(),
        "chase": ChaseConfig().to_dict(),
        "paths": {"dataset": "", "checkpoint": "", "metrics": []},
    }


def _two_rooms_row(lr: float, alpha: float, beta: float, delta: float, **dataset) -> Dict[str, Any]:
    return {
        "env": {"kind": "two_rooms"},
        "dataset": dict(dataset),
        "loss": {"alpha": alpha, "beta_cov": beta, "delta": delta, "omega": 0.0},
        "train": {"lr": lr, "batch_size": 64, "horizon": 16},
        "model": {"ensemble_size": 5},
        "plan": {"mppi_lambda": 0.005, "uncertainty_beta": 0.0001, "uncertainty_gamma": 0.9},
    }


def _pointmaze_row(layouts: int, per_layout: int, lr: float, alpha: float, beta: float, delta: float, omega: float):
    return {
        "env": {"kind": "pointmaze"},
        "dataset": {
            "num_layouts": layouts,
            "episode_len": 100,
            "total_transitions": layouts * per_layout * 100,
            "non_random_fraction": 0.0,
        },
        "loss": {"alpha": alpha, "beta_cov": beta, "delta": delta, "omega": omega},
        "train": {"lr": lr, "batch_size": 128, "epochs": 5, "horizon": 16},
        "model": {"ensemble_size": 1},
        "plan": {"mppi_lambda": 0.0025, "uncertainty_beta": 0.0, "replan_interval": 4, "sample_chunk": 50},
        "eval": {"mode": "held_out_count"},
    }


PRESETS: Dict[str, Dict[str, Any]] = {
    "two_rooms_seq91": _two_rooms_row(0.0007, 4.0, 6.9, 0.75, episode_len=91),
    "two_rooms_seq65": _two_rooms_row(0.0003, 5.0, 6.9, 0.75, episode_len=65),
    "two_rooms_seq33": _two_rooms_row(0.0014, 3.5, 6.9, 0.75, episode_len=33),
    "two_rooms_seq17": _two_rooms_row(0.0028, 3.0, 6.9, 0.75, episode_len=17),
    "two_rooms_size634": _two_rooms_row(0.0030, 2.2, 13.0, 0.50, total_transitions=634),
    "two_rooms_size1269": _two_rooms_row(0.0010, 2.2, 13.0, 0.50, total_transitions=1269),
    "two_rooms_size5078": _two_rooms_row(0.0005, 2.2, 13.0, 0.90, total_transitions=5078),
    "two_rooms_size20312": _two_rooms_row(0.0030, 2.2, 13.0, 0.50, total_transitions=20312),
    "two_rooms_size81250": _two_rooms_row(0.0010, 2.2, 13.0, 0.50, total_transitions=81250),
    "two_rooms_size325k": _two_rooms_row(0.0010, 4.0, 6.9, 0.75, total_transitions=325_000),
    "two_rooms_size1500k": _two_rooms_row(0.0010, 4.0, 6.9, 0.75, total_transitions=1_500_000),
    "two_rooms_nonrandom0.001": _two_rooms_row(0.0007, 3.9, 6.9, 0.74, non_random_fraction=0.001),
    "two_rooms_nonrandom0.01": _two_rooms_row(0.0007, 3.9, 6.5, 0.19, non_random_fraction=0.01),
    "two_rooms_nonrandom0.02": _two_rooms_row(0.0007, 3.9, 6.5, 0.72, non_random_fraction=0.02),
    "two_rooms_nonrandom0.04": _two_rooms_row(0.0007, 3.9, 6.5, 0.65, non_random_fraction=0.04),
    "two_rooms_nonrandom0.08": _two_rooms_row(0.0007, 3.9, 6.5, 0.24, non_random_fraction=0.08),
    "two_rooms_no_door_crossing": _two_rooms_row(0.0007, 4.0, 6.9, 0.75, forbid_door_crossing=True),
    "pointmaze_layouts5": _pointmaze_row(5, 2000, 0.04, 35.0, 12.0, 0.1, 5.4),
    "pointmaze_layouts10": _pointmaze_row(10, 1000, 0.04, 35.0, 12.0, 0.1, 5.4),
    "pointmaze_layouts20": _pointmaze_row(20, 500, 0.05, 54.5, 15.5, 0.1, 5.2),
    "pointmaze_layouts40": _pointmaze_row(40, 250, 0.05, 54.5, 15.5, 0.1, 5.2),
}


def _check_type(key: str, default: Any, value: Any) -> Any:
    if default is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return list(value)
    return value


def merge_config(base: Dict[str, Any], update: Mapping[str, Any], schema: Dict[str, Any], prefix: str = "") -> None:
    """
    Merge ``update`` into ``base`` in place, validating keys and types against ``schema``.

    Raises:
        ConfigError: Citing the dotted key of the first unknown key or bad value
    """
    for key, value in update.items():
        dotted = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"Unknown configuration key: {dotted}")
        if isinstance(schema[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"{dotted}: expected a section, got {value!r}")
            merge_config(base[key], value, schema[key], dotted + ".")
        else:
            base[key] = _check_type(dotted, schema[key], value)


def _env_bool(name: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"{name}: expected a boolean, got {raw!r}")


def _env_int(name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name}: expected an integer, got {raw!r}") from None


class ConfigManager:
    """Manages run configuration from defaults, presets, files, environment and flags."""

    def __init__(
        self,
        config_file: Optional[str] = None,
        preset: Optional[str] = None,
        overrides: Optional[Mapping[str, Any]] = None,
        environ: Optional[Mapping[str, str]] = None,
    ):
        """
        Initialize the configuration manager.

        Args:
            config_file: Optional JSON configuration file
            preset: Optional preset name; a ``preset`` key in the file is used otherwise
            overrides: Dotted keys to values, applied last
            environ: Environment mapping, ``os.environ`` by default
        """
        self.config_file = config_file
        self._schema = default_config()
        self.config = self._load_config(preset, overrides or {}, os.environ if environ is None else environ)

    def _load_config(self, preset: Optional[str], overrides: Mapping[str, Any], environ: Mapping[str, str]) -> Dict[str, Any]:
        """
        Resolve the configuration from every source.

        Returns:
            Dictionary containing all configuration values
        """
        config = copy.deepcopy(self._schema)

        file_config: Dict[str, Any] = {}
        if self.config_file:
            try:
                with open(self.config_file, "r", encoding="utf-8") as f:
                    file_config = json.load(f)
            except FileNotFoundError:
                raise ConfigError(f"{self.config_file}: configuration file not found") from None
            except json.JSONDecodeError as e:
                raise ConfigError(f"{self.config_file}: invalid JSON ({e})") from None
            if not isinstance(file_config, dict):
                raise ConfigError(f"{self.config_file}: top level must be an object")
            logger.info(f"Loaded configuration from {self.config_file}")

        preset = preset or file_config.get("preset") or ""
        if preset:
            if preset not in PRESETS:
                raise ConfigError(f"preset: unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
            merge_config(config, PRESETS[preset], self._schema)
            config["preset"] = preset

        merge_config(config, file_config, self._schema)
        merge_config(config, self._load_from_env(environ), self._schema)
        for dotted, value in overrides.items():
            self._set(config, dotted, value)
        if preset:
            config["preset"] = preset
        return config

    def _load_from_env(self, environ: Mapping[str, str]) -> Dict[str, Any]:
        """
        Load configuration from ``PLDM_*`` environment variables.

        Returns:
            Dictionary with environment variable configurations
        """
        config: Dict[str, Any] = {}
        if "PLDM_SEED" in environ:
            config["seed"] = _env_int("PLDM_SEED", environ["PLDM_SEED"])
        if "PLDM_WORKERS" in environ:
            config["workers"] = _env_int("PLDM_WORKERS", environ["PLDM_WORKERS"])
        if "PLDM_LOG_LEVEL" in environ:
            config["log_level"] = environ["PLDM_LOG_LEVEL"]
        if "PLDM_OUTPUT_DIR" in environ:
            config["output_dir"] = environ["PLDM_OUTPUT_DIR"]
        if "PLDM_DETERMINISTIC" in environ:
            config["deterministic"] = _env_bool("PLDM_DETERMINISTIC", environ["PLDM_DETERMINISTIC"])
        return config

    def _set(self, config: Dict[str, Any], key: str, value: Any) -> None:
        parts = key.split(".")
        update: Dict[str, Any] = {parts[-1]: value}
        for part in reversed(parts[:-1]):
            update = {part: update}
        merge_config(config, update, self._schema)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value.

        Args:
            key: Dotted configuration key, e.g. ``train.lr``
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        node: Any = self.config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any) -> None:
        """
        Set a configuration value.

        Args:
            key: Dotted configuration key
            value: Configuration value
        """
        self._set(self.config, key, value)

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self.config)

    def config_hash(self) -> str:
        payload = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def save(self, path: Optional[str] = None) -> str:
        """
        Save the resolved configuration as JSON.

        Args:
            path: Destination, the loaded config file by default
        """
        path = path or self.config_file
        if not path:
            raise ConfigError("save: no destination path")
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.config, f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Saved configuration to {path}")
        return path

    def write_run_files(self, output_dir: str, command: str) -> Dict[str, Any]:
        """Write ``config.json`` and ``manifest.json`` into ``output_dir``."""
        os.makedirs(output_dir, exist_ok=True)
        self.save(os.path.join(output_dir, "config.json"))
        manifest = {
            "command": command,
            "config_hash": self.config_hash(),
            "code_version": CODE_VERSION,
            "seed": self.config["seed"],
            "deterministic": self.config["deterministic"],
            "preset": self.config["preset"],
        }
        with open(os.path.join(output_dir, "manifest.json"), "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return manifest

    # Typed views

    @property
    def env_kind(self) -> str:
        return self.config["env"]["kind"]

    def geometry(self) -> TwoRoomsGeometry:
        return TwoRoomsGeometry.from_dict(self.config["env"]["geometry"]).ensure_valid()

    def environment(self, layout: Optional[MazeLayout] = None) -> Environment:
        if self.env_kind == "two_rooms":
            return TwoRoomsEnv(self.geometry())
        code = layout.code if layout is not None else self.config["env"]["layout"]
        if not code:
            raise ConfigError("env.layout: a PointMaze environment needs a layout")
        return PointMazeEnv(MazeLayout(code))

    def dataset_spec(self) -> DatasetSpec:
        data = dict(self.config["dataset"])
        data.update(env_kind=self.env_kind, geometry=self.config["env"]["geometry"], seed=self.config["seed"])
        return DatasetSpec.from_dict(data).ensure_valid()

    def model_config(self) -> ModelConfig:
        data = dict(self.config["model"])
        data["env_kind"] = self.env_kind
        return ModelConfig.from_dict(data).ensure_valid()

    def loss_weights(self) -> LossWeights:
        return LossWeights.from_dict(self.config["loss"]).ensure_valid()

    def train_config(self) -> TrainConfig:
        return TrainConfig.from_dict(self.config["train"]).ensure_valid()

    def plan_config(self) -> PlanConfig:
        return PlanConfig.from_dict(self.config["plan"]).ensure_valid()

    def eval_config(self) -> EvalConfig:
        return EvalConfig.from_dict(self.config["eval"]).ensure_valid()

    def chase_config(self) -> ChaseConfig:
        return ChaseConfig.from_dict(self.config["chase"]).ensure_valid()

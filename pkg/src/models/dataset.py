"""
Dataset models for offline reward-free data
Episode, DatasetSpec and Dataset.
"""

import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from models.base_model import BaseModel, _reject_unknown
from models.geometry import TwoRoomsGeometry
from models.maze_layout import MazeLayout

ENV_KINDS = ("two_rooms", "pointmaze")
TWO_ROOMS_ACTION_BOUND = 2.45
POLICIES = ("von_mises_walk", "uniform_random")
HEADING_MODES = ("episode_heading", "previous_step")


@dataclass
class DatasetSpec(BaseModel):
    """Everything needed to regenerate a dataset bit-exactly."""

    env_kind: str = "two_rooms"
    total_transitions: int = 3_000_000
    episode_len: int = 91
    non_random_fraction: float = 1.0
    forbid_door_crossing: bool = False
    layouts: Optional[List[str]] = None
    num_layouts: int = 5
    seed: int = 0
    heading_mode: str = "episode_heading"
    von_mises_kappa: float = 5.0
    door_aim_fraction: float = 0.35
    door_aim_radius: float = 12.0
    random_step_bound: float = 1.45
    geometry: TwoRoomsGeometry = field(default_factory=TwoRoomsGeometry)

    @property
    def num_episodes(self) -> int:
        return math.ceil(self.total_transitions / self.episode_len)

    @property
    def num_non_random(self) -> int:
        return int(round(self.non_random_fraction * self.num_episodes))

    def maze_layouts(self) -> Optional[List[MazeLayout]]:
        if self.layouts is None:
            return None
        return [MazeLayout(code) for code in self.layouts]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "env_kind": self.env_kind,
            "total_transitions": self.total_transitions,
            "episode_len": self.episode_len,
            "non_random_fraction": self.non_random_fraction,
            "forbid_door_crossing": self.forbid_door_crossing,
            "layouts": None if self.layouts is None else list(self.layouts),
            "num_layouts": self.num_layouts,
            "seed": self.seed,
            "heading_mode": self.heading_mode,
            "von_mises_kappa": self.von_mises_kappa,
            "door_aim_fraction": self.door_aim_fraction,
            "door_aim_radius": self.door_aim_radius,
            "random_step_bound": self.random_step_bound,
            "geometry": self.geometry.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetSpec":
        data = dict(data)
        _reject_unknown(cls.__name__, data, cls().to_dict().keys())
        if "geometry" in data:
            data["geometry"] = TwoRoomsGeometry.from_dict(data["geometry"])
        return cls(**data)

    def validate(self) -> bool:
        if self.env_kind not in ENV_KINDS or self.heading_mode not in HEADING_MODES:
            return False
        if self.total_transitions < 1 or self.episode_len < 1:
            return False
        if not 0.0 <= self.non_random_fraction <= 1.0 or self.von_mises_kappa < 0:
            return False
        if not 0.0 <= self.door_aim_fraction <= 1.0 or self.door_aim_radius <= 0:
            return False
        if not 0.0 < self.random_step_bound <= TWO_ROOMS_ACTION_BOUND:
            return False
        if self.forbid_door_crossing and self.env_kind != "two_rooms":
            return False
        if self.env_kind == "pointmaze":
            if self.layouts is not None:
                return len(self.layouts) > 0 and all(l.validate() for l in self.maze_layouts())
            return self.num_layouts > 0
        return self.geometry.validate()


@dataclass
class Episode:
    """One reward-free trajectory.

    ``observations`` are quantized images (T+1, C, 64, 64) in u8; PointMaze
    episodes also carry ``velocities`` (T+1, 2). ``raw_states`` are the
    ground-truth states, kept for diagnostics and never used for training.
    """

    observations: np.ndarray
    actions: np.ndarray
    raw_states: np.ndarray
    velocities: Optional[np.ndarray] = None
    policy: str = "von_mises_walk"
    layout_index: int = -1

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def positions(self) -> np.ndarray:
        return self.raw_states[:, :2]

    def validate(self) -> bool:
        if len(self.observations) != len(self.actions) + 1:
            return False
        if len(self.raw_states) != len(self.observations):
            return False
        if self.velocities is not None and len(self.velocities) != len(self.observations):
            return False
        return self.policy in POLICIES

    def to_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {
            "observations": self.observations.astype(np.uint8, copy=False),
            "actions": self.actions.astype(np.float32, copy=False),
            "raw_states": self.raw_states.astype(np.float32, copy=False),
            "meta": np.array([POLICIES.index(self.policy), self.layout_index], dtype=np.int64),
        }
        if self.velocities is not None:
            arrays["velocities"] = self.velocities.astype(np.float32, copy=False)
        return arrays

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "Episode":
        meta = arrays["meta"]
        return cls(
            observations=arrays["observations"],
            actions=arrays["actions"],
            raw_states=arrays["raw_states"],
            velocities=arrays.get("velocities"),
            policy=POLICIES[int(meta[0])],
            layout_index=int(meta[1]),
        )

    def equals(self, other: "Episode") -> bool:
        mine, theirs = self.to_arrays(), other.to_arrays()
        return mine.keys() == theirs.keys() and all(
            np.array_equal(mine[k], theirs[k]) for k in mine
        )


@dataclass
class Dataset:
    """A generated dataset: its spec, episodes in generation order and metadata."""

    spec: DatasetSpec
    episodes: List[Episode]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def num_transitions(self) -> int:
        return sum(ep.length for ep in self.episodes)

    @property
    def env_kind(self) -> str:
        return self.spec.env_kind

    def layouts(self) -> List[MazeLayout]:
        return [MazeLayout(code) for code in self.metadata.get("layouts", [])]

    def fingerprint(self) -> str:
        """Content hash over the spec and every episode array, in order."""
        h = hashlib.sha256(self.spec.to_json().encode("utf-8"))
        for ep in self.episodes:
            for name, array in ep.to_arrays().items():
                h.update(name.encode("utf-8"))
                h.update(np.ascontiguousarray(array).tobytes())
        return h.hexdigest()

    def equals(self, other: "Dataset") -> bool:
        return (
            self.spec.to_dict() == other.spec.to_dict()
            and self.metadata == other.metadata
            and len(self.episodes) == len(other.episodes)
            and all(a.equals(b) for a, b in zip(self.episodes, other.episodes))
        )

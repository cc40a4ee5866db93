"""
Navigation environments: Two-Rooms, Diverse PointMaze and the chase task.
"""

from typing import Any, Dict

from envs.base import Environment, Observation
from envs.pointmaze import PointMazeEnv
from envs.two_rooms import TwoRoomsEnv
from error_handler import ConfigError
from models.geometry import TwoRoomsGeometry
from models.maze_layout import MazeLayout


def env_from_descriptor(descriptor: Dict[str, Any]) -> Environment:
    """
    Build an environment from ``Environment.describe()`` output.

    Args:
        descriptor: ``{"kind": "two_rooms", "geometry": {...}}`` or
            ``{"kind": "pointmaze", "layout": "0110..."}``

    Returns:
        Environment instance
    """
    kind = descriptor.get("kind")
    if kind == TwoRoomsEnv.kind:
        return TwoRoomsEnv(TwoRoomsGeometry.from_dict(descriptor.get("geometry", {})))
    if kind == PointMazeEnv.kind:
        if "layout" not in descriptor:
            raise ConfigError("PointMaze descriptor needs a 'layout'")
        return PointMazeEnv(MazeLayout(descriptor["layout"]))
    raise ConfigError(f"Unknown env kind: {kind!r}")


__all__ = ["Environment", "Observation", "PointMazeEnv", "TwoRoomsEnv", "env_from_descriptor"]

"""
Maze layout model for Diverse PointMaze
A 4x4 interior occupancy grid; the outer wall is implicit.
"""

from collections import deque
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from error_handler import ConfigError
from models.base_model import BaseModel

MAZE_SIZE = 4
MIN_FREE_FRACTION = 0.50
MAX_FREE_FRACTION = 0.75


def free_cells_connected(grid: np.ndarray) -> bool:
    """
    Check that all free cells form one 4-connected component.

    Args:
        grid: Boolean occupancy grid, True = wall

    Returns:
        True if the free cells are connected (vacuously False when none are free)
    """
    free = np.argwhere(~grid)
    if len(free) == 0:
        return False
    seen = np.zeros_like(grid, dtype=bool)
    queue = deque([tuple(free[0])])
    seen[tuple(free[0])] = True
    reached = 1
    rows, cols = grid.shape
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < rows and 0 <= nc < cols and not grid[nr, nc] and not seen[nr, nc]:
                seen[nr, nc] = True
                reached += 1
                queue.append((nr, nc))
    return reached == len(free)


@dataclass(frozen=True)
class MazeLayout(BaseModel):
    """Interior occupancy of a 4x4 maze.

    ``code`` is the 16-character row-major string of ``0`` (free) and ``1``
    (wall) used in dataset metadata and on the command line.
    """

    code: str

    def __post_init__(self):
        if len(self.code) != MAZE_SIZE * MAZE_SIZE or set(self.code) - {"0", "1"}:
            raise ConfigError(f"Maze layout must be 16 characters of 0/1, got {self.code!r}")

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "MazeLayout":
        grid = np.asarray(grid, dtype=bool)
        if grid.shape != (MAZE_SIZE, MAZE_SIZE):
            raise ConfigError(f"Maze grid must be {MAZE_SIZE}x{MAZE_SIZE}, got {grid.shape}")
        return cls("".join("1" if v else "0" for v in grid.ravel()))

    @property
    def grid(self) -> np.ndarray:
        """Boolean occupancy grid, True = wall, indexed [row, col]."""
        return np.array([c == "1" for c in self.code], dtype=bool).reshape(MAZE_SIZE, MAZE_SIZE)

    @property
    def free_fraction(self) -> float:
        return self.code.count("0") / len(self.code)

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MazeLayout":
        return cls(data["code"])

    def validate(self) -> bool:
        if not MIN_FREE_FRACTION <= self.free_fraction <= MAX_FREE_FRACTION:
            return False
        return free_cells_connected(self.grid)

    def __str__(self) -> str:
        return self.code

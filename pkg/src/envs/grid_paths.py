"""
Shortest paths on pixel occupancy grids.

Grids are boolean arrays indexed ``[row, col]`` with True = free. A pixel
``(row, col)`` covers ``[col, col + 1) x [row, row + 1)`` in pixel units.
"""

from collections import deque
from typing import List, Tuple

import numpy as np

from error_handler import SimulationError

Cell = Tuple[int, int]

# up, down, left, right
NEIGHBORS = ((-1, 0), (1, 0), (0, -1), (0, 1))


def bfs_distance_map(free: np.ndarray, source: Cell) -> np.ndarray:
    """
    Breadth-first hop counts from ``source`` over 4-connected free pixels.

    Args:
        free: Boolean grid, True = free
        source: Start pixel (row, col), must be free

    Returns:
        Integer grid of distances, -1 where unreachable
    """
    rows, cols = free.shape
    dist = np.full(free.shape, -1, dtype=np.int64)
    if not free[source]:
        raise SimulationError(f"BFS source {source} is not a free cell")
    dist[source] = 0
    queue = deque([source])
    while queue:
        r, c = queue.popleft()
        d = dist[r, c] + 1
        for dr, dc in NEIGHBORS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < rows and 0 <= nc < cols and free[nr, nc] and dist[nr, nc] < 0:
                dist[nr, nc] = d
                queue.append((nr, nc))
    return dist


def nearest_free(free: np.ndarray, point: np.ndarray) -> Cell:
    """
    Free pixel whose centre is closest to a continuous point (pixel units).

    Ties go to the lowest row-major index.
    """
    x, y = float(point[0]), float(point[1])
    r, c = int(np.floor(y)), int(np.floor(x))
    rows, cols = free.shape
    if 0 <= r < rows and 0 <= c < cols and free[r, c]:
        return r, c
    cells = np.argwhere(free)
    if len(cells) == 0:
        raise SimulationError("Occupancy grid has no free cells")
    d2 = (cells[:, 0] + 0.5 - y) ** 2 + (cells[:, 1] + 0.5 - x) ** 2
    best = cells[int(np.argmin(d2))]
    return int(best[0]), int(best[1])


def descend(dist: np.ndarray, start: Cell) -> List[Cell]:
    """
    Follow a distance map downhill from ``start`` to its source.

    Ties are broken by the fixed neighbour order (up, down, left, right).

    Returns:
        Path from start to source, both included
    """
    if dist[start] < 0:
        raise SimulationError(f"Cell {start} cannot reach the path target")
    rows, cols = dist.shape
    path = [start]
    r, c = start
    while dist[r, c] > 0:
        for dr, dc in NEIGHBORS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < rows and 0 <= nc < cols and dist[nr, nc] == dist[r, c] - 1:
                r, c = nr, nc
                break
        path.append((r, c))
    return path


def cell_center(cell: Cell) -> np.ndarray:
    """Continuous (x, y) centre of a pixel."""
    return np.array([cell[1] + 0.5, cell[0] + 0.5], dtype=np.float64)

"""
Segment and rectangle geometry shared by the environments.

Rectangles are ``(x0, y0, x1, y1)`` tuples. All routines are vectorized over a
leading batch dimension and work in float64.
"""

from typing import Sequence, Tuple

import numpy as np

Rect = Tuple[float, float, float, float]

EPSILON = 1e-4
# Half-planes outside the arena are modelled as very large rectangles.
_FAR = 1e6


def clip_norm(actions: np.ndarray, bound: float) -> np.ndarray:
    """
    Scale each action down to Euclidean norm ``bound``, keeping its direction.

    Args:
        actions: Array (..., 2)
        bound: Maximum norm

    Returns:
        Clipped copy in float64
    """
    actions = np.asarray(actions, dtype=np.float64)
    norms = np.linalg.norm(actions, axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        scale = np.where(norms > bound, bound / norms, 1.0)
    return actions * scale


def arena_exterior(width: float, height: float) -> list:
    """Four rectangles covering everything outside ``[0, width] x [0, height]``."""
    return [
        (-_FAR, -_FAR, 0.0, height + _FAR),
        (width, -_FAR, width + _FAR, height + _FAR),
        (-_FAR, -_FAR, width + _FAR, 0.0),
        (-_FAR, height, width + _FAR, height + _FAR),
    ]


def _as_rect_array(rects: Sequence[Rect]) -> np.ndarray:
    return np.asarray(rects, dtype=np.float64).reshape(-1, 4)


def points_inside(points: np.ndarray, rects: Sequence[Rect], closed: bool = False) -> np.ndarray:
    """
    Test which points lie inside any rectangle.

    Args:
        points: Array (N, 2)
        rects: Rectangles
        closed: Count points on a face as inside

    Returns:
        Boolean array (N,)
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    r = _as_rect_array(rects)
    if len(r) == 0:
        return np.zeros(len(points), dtype=bool)
    x, y = points[:, :1], points[:, 1:2]
    if closed:
        inside = (x >= r[:, 0]) & (x <= r[:, 2]) & (y >= r[:, 1]) & (y <= r[:, 3])
    else:
        inside = (x > r[:, 0]) & (x < r[:, 2]) & (y > r[:, 1]) & (y < r[:, 3])
    return inside.any(axis=1)


def _slab(p: np.ndarray, d: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - p) / d
        t2 = (hi - p) / d
    near = np.minimum(t1, t2)
    far = np.maximum(t1, t2)
    still = d == 0
    inside = (p > lo) & (p < hi)
    near = np.where(still, np.where(inside, -np.inf, np.inf), near)
    far = np.where(still, np.where(inside, np.inf, -np.inf), far)
    return near, far


def first_hits(starts: np.ndarray, deltas: np.ndarray, rects: Sequence[Rect]):
    """
    First entry of each segment ``start + t * delta`` (t in [0, 1]) into a rectangle.

    Grazing contact along a face does not count as entry.

    Args:
        starts: Array (N, 2)
        deltas: Array (N, 2)
        rects: Rectangles

    Returns:
        Tuple (t, rect_index, axis); t is inf where nothing is hit, axis is 0
        when the entered face is vertical (x = const) and 1 otherwise
    """
    starts = np.asarray(starts, dtype=np.float64).reshape(-1, 2)
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1, 2)
    r = _as_rect_array(rects)
    n = len(starts)
    if len(r) == 0:
        return np.full(n, np.inf), np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)
    near_x, far_x = _slab(starts[:, :1], deltas[:, :1], r[:, 0], r[:, 2])
    near_y, far_y = _slab(starts[:, 1:2], deltas[:, 1:2], r[:, 1], r[:, 3])
    enter = np.maximum(near_x, near_y)
    leave = np.minimum(far_x, far_y)
    hit = (enter < leave) & (enter >= 0.0) & (enter <= 1.0)
    t = np.where(hit, enter, np.inf)
    index = np.argmin(t, axis=1)
    rows = np.arange(n)
    axis = np.where(near_x[rows, index] >= near_y[rows, index], 0, 1)
    return t[rows, index], index, axis


def segment_blocked(starts: np.ndarray, ends: np.ndarray, rects: Sequence[Rect]) -> np.ndarray:
    """True where the straight segment from start to end enters a rectangle."""
    starts = np.asarray(starts, dtype=np.float64).reshape(-1, 2)
    ends = np.asarray(ends, dtype=np.float64).reshape(-1, 2)
    t, _, _ = first_hits(starts, ends - starts, rects)
    return np.isfinite(t)


def move_with_collision(
    starts: np.ndarray, deltas: np.ndarray, rects: Sequence[Rect], eps: float = EPSILON
) -> np.ndarray:
    """
    Move points along their deltas, stopping at the first rectangle face.

    A blocked point is placed ``eps`` off the entered face on the side it came
    from. A result that still lands inside a rectangle reverts to the start.

    Args:
        starts: Array (N, 2), outside every rectangle
        deltas: Array (N, 2)
        rects: Obstacles
        eps: Offset off the face

    Returns:
        End positions (N, 2)
    """
    starts = np.asarray(starts, dtype=np.float64).reshape(-1, 2)
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1, 2)
    ends = starts + deltas
    t, index, axis = first_hits(starts, deltas, rects)
    blocked = np.isfinite(t)
    if not blocked.any():
        return ends
    r = _as_rect_array(rects)
    rows = np.nonzero(blocked)[0]
    ends[rows] = starts[rows] + deltas[rows] * t[rows, None]
    ax = axis[rows]
    d = deltas[rows, ax]
    lo = r[index[rows], ax]
    hi = r[index[rows], ax + 2]
    ends[rows, ax] = np.where(d > 0, lo - eps, hi + eps)
    bad = points_inside(ends, rects)
    ends[bad] = starts[bad]
    return ends

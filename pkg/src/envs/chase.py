"""
Chase task on Two-Rooms
A chaser follows the shortest free-space path to the agent; the agent has to
keep its distance. Within a step the agent acts first, then the chaser moves.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from envs import two_rooms
from envs.collision import segment_blocked
from envs.grid_paths import Cell, bfs_distance_map, cell_center, descend, nearest_free
from envs.two_rooms import TwoRoomsEnv
from error_handler import SimulationError
from models.geometry import TwoRoomsGeometry

logger = logging.getLogger(__name__)

EPISODE_STEPS = 100
MIN_DISTANCE = 1.4
START_DISTANCE = 10.0
STEP_ORDER = "agent_then_chaser"
MAX_START_ATTEMPTS = 10_000
_MAX_LEGS = 8


@dataclass
class ChaseState:
    agent: np.ndarray
    chaser: np.ndarray
    chaser_speed: float


@dataclass
class ChaseOutcome:
    """Result of one chase episode; ``distances`` has one entry per step."""

    success: bool
    distances: List[float] = field(default_factory=list)
    agent_start: Optional[List[float]] = None
    chaser_start: Optional[List[float]] = None


@lru_cache(maxsize=256)
def _distance_map(geometry: TwoRoomsGeometry, source: Cell) -> np.ndarray:
    dist = bfs_distance_map(~two_rooms.wall_mask(geometry), source)
    dist.setflags(write=False)
    return dist


def shortest_path(geometry: TwoRoomsGeometry, start: np.ndarray, goal: np.ndarray) -> List[Cell]:
    """
    Pixel path from the cell of ``start`` to the cell of ``goal``.

    Raises:
        SimulationError: If the goal cannot be reached
    """
    free = ~two_rooms.wall_mask(geometry)
    dist = _distance_map(geometry, nearest_free(free, goal))
    origin = nearest_free(free, start)
    if dist[origin] < 0:
        raise SimulationError(f"Agent at {np.round(goal, 3).tolist()} unreachable from {np.round(start, 3).tolist()}")
    return descend(dist, origin)


def _waypoint(chaser: np.ndarray, agent: np.ndarray, geometry: TwoRoomsGeometry) -> Tuple[np.ndarray, bool]:
    rects = geometry.wall_rects()
    if not segment_blocked(chaser, agent, rects)[0]:
        return agent, True
    path = shortest_path(geometry, chaser, agent)
    centers = np.array([cell_center(c) for c in path])
    visible = ~segment_blocked(np.repeat(chaser[None], len(centers), axis=0), centers, rects)
    ahead = np.nonzero(visible)[0]
    # The path is ordered from the chaser to the agent; head for the farthest visible cell.
    target = centers[ahead[-1]] if len(ahead) else centers[min(1, len(centers) - 1)]
    return target, False


def chaser_step(state: ChaseState, geometry: TwoRoomsGeometry) -> np.ndarray:
    """
    Advance the chaser ``chaser_speed`` along the shortest path to the agent.

    The BFS path is smoothed by heading straight for the farthest path cell in
    line of sight; the chaser never overshoots the agent.

    Args:
        state: Current chase state
        geometry: Arena geometry

    Returns:
        New chaser position (2,)
    """
    pos = np.asarray(state.chaser, dtype=np.float64).copy()
    agent = np.asarray(state.agent, dtype=np.float64)
    budget = float(state.chaser_speed)
    for _ in range(_MAX_LEGS):
        if budget <= 0.0:
            break
        target, is_agent = _waypoint(pos, agent, geometry)
        gap = float(np.linalg.norm(target - pos))
        if gap <= budget:
            pos = target.copy()
            budget -= gap
            if is_agent:
                break
        else:
            pos = pos + (target - pos) * (budget / gap)
            break
    return pos


def opposite_room_starts(
    geometry: TwoRoomsGeometry, rng: np.random.Generator, min_start_distance: float = START_DISTANCE
) -> Tuple[np.ndarray, np.ndarray]:
    """Rejection-sample agent and chaser starts in opposite rooms, far enough apart."""
    for _ in range(MAX_START_ATTEMPTS):
        agent = two_rooms.reset(rng, geometry)
        chaser = two_rooms.reset(rng, geometry)
        if geometry.room_of(agent[0]) == geometry.room_of(chaser[0]):
            continue
        if np.linalg.norm(agent - chaser) >= min_start_distance:
            return agent, chaser
    raise SimulationError(f"No chase start at distance >= {min_start_distance} after {MAX_START_ATTEMPTS} attempts")


def chase_episode(
    agent_policy,
    chaser_speed: float,
    geometry: TwoRoomsGeometry,
    rng: np.random.Generator,
    steps: int = EPISODE_STEPS,
    min_distance: float = MIN_DISTANCE,
    start_distance: float = START_DISTANCE,
    agent_start: Optional[np.ndarray] = None,
    chaser_start: Optional[np.ndarray] = None,
) -> ChaseOutcome:
    """
    Run one chase episode.

    Each step the agent acts on its observation with the chaser's position
    rendered as the goal, then the chaser moves.

    Args:
        agent_policy: Controller with ``reset(env, rng)`` and ``act(obs, goal_obs)``
        chaser_speed: Chaser displacement per step
        geometry: Arena geometry
        rng: Random source for starts and the controller
        steps: Episode length
        min_distance: Distance the agent must keep at every step
        start_distance: Minimum start separation for sampled starts
        agent_start: Optional fixed agent start
        chaser_start: Optional fixed chaser start

    Returns:
        ChaseOutcome with success flag and per-step distances
    """
    env = TwoRoomsEnv(geometry)
    if agent_start is None or chaser_start is None:
        sampled_agent, sampled_chaser = opposite_room_starts(geometry, rng, start_distance)
        agent_start = sampled_agent if agent_start is None else agent_start
        chaser_start = sampled_chaser if chaser_start is None else chaser_start
    agent = np.asarray(agent_start, dtype=np.float64).copy()
    chaser = np.asarray(chaser_start, dtype=np.float64).copy()
    agent_policy.reset(env, rng)
    distances = []
    for _ in range(steps):
        action = agent_policy.act(env.observe(agent), env.observe(chaser))
        agent = env.step(agent, action)
        chaser = chaser_step(ChaseState(agent, chaser, chaser_speed), geometry)
        distances.append(float(np.linalg.norm(agent - chaser)))
    success = all(d >= min_distance for d in distances)
    return ChaseOutcome(
        success=success,
        distances=distances,
        agent_start=np.asarray(agent_start, dtype=np.float64).tolist(),
        chaser_start=np.asarray(chaser_start, dtype=np.float64).tolist(),
    )

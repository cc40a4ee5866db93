"""
Offline reward-free dataset generation.

Every episode draws from its own random stream derived from ``(seed, index)``,
so the output is identical for any number of workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from datagen.von_mises import sample_von_mises
from envs import two_rooms
from envs.base import Environment
from envs.pointmaze import PointMazeEnv, generate_layout
from envs.two_rooms import TwoRoomsEnv
from error_handler import DataError
from models.dataset import Dataset, DatasetSpec, Episode
from models.maze_layout import MazeLayout

logger = logging.getLogger(__name__)

MAX_CONSECUTIVE_REJECTS = 100_000
# Step magnitudes stay a hair under the bound so float32 storage never exceeds it.
_MAGNITUDE_SHRINK = 1.0 - 1e-6

# Stream tags mixed into the seed sequence.
_TYPES_STREAM = 0
_EPISODE_STREAM = 1
_LAYOUT_STREAM = 2


def _action(rng: np.random.Generator, angle: float, bound: float) -> np.ndarray:
    magnitude = rng.uniform(0.0, bound * _MAGNITUDE_SHRINK)
    action = np.array([np.cos(angle), np.sin(angle)]) * magnitude
    return action.astype(np.float32).astype(np.float64)


def generate_episode(
    env: Environment,
    rng: np.random.Generator,
    policy: str,
    T: int,
    kappa: float = 5.0,
    heading_mode: str = "episode_heading",
    layout_index: int = -1,
    door_aim_fraction: float = 0.0,
    door_aim_radius: float = 12.0,
    random_step_bound: Optional[float] = None,
) -> Episode:
    """
    Roll out one reward-free episode.

    Args:
        env: Environment to act in
        rng: Episode random stream
        policy: "von_mises_walk" or "uniform_random"
        T: Number of actions
        kappa: Von Mises concentration
        heading_mode: Mean direction of the walk; the initial heading or the previous step
        layout_index: Index of the maze layout, -1 for Two-Rooms
        door_aim_fraction: Two-Rooms only; chance that a walk starts within
            ``door_aim_radius`` of the door with its heading aimed through it
        door_aim_radius: Start radius around the door centre for aimed walks
        random_step_bound: Largest step of uniform-random episodes; the action bound if None

    Returns:
        Episode with T actions and T + 1 observations
    """
    if T < 1:
        raise DataError(f"Episode length must be >= 1, got {T}")
    aimed = (
        policy == "von_mises_walk"
        and door_aim_fraction > 0.0
        and isinstance(env, TwoRoomsEnv)
        and rng.uniform() < door_aim_fraction
    )
    if aimed:
        state = env.reset(rng, near_door=door_aim_radius)
        heading = env.door_heading(rng, state)
    else:
        state = env.reset(rng)
        heading = rng.uniform(-np.pi, np.pi)
    step_bound = env.action_bound if random_step_bound is None else random_step_bound
    states = [state]
    actions = []
    for _ in range(T):
        if policy == "von_mises_walk":
            angle = sample_von_mises(rng, heading, kappa)
            if heading_mode == "previous_step":
                heading = angle
            action = _action(rng, angle, env.action_bound)
        else:
            action = _action(rng, rng.uniform(-np.pi, np.pi), step_bound)
        state = env.step(state, action)
        actions.append(action)
        states.append(state)

    observations = [env.observe(s) for s in states]
    raw = np.stack(states)
    velocities = None
    if observations[0].velocity is not None:
        velocities = np.stack([o.velocity for o in observations]).astype(np.float32)
    return Episode(
        observations=np.stack([o.image for o in observations]),
        actions=np.stack(actions).astype(np.float32),
        raw_states=raw.astype(np.float32),
        velocities=velocities,
        policy=policy,
        layout_index=layout_index,
    )


def max_pairwise_distance(positions: np.ndarray) -> float:
    """Largest distance between any two points of a trajectory."""
    p = np.asarray(positions, dtype=np.float64)
    diff = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


def resolve_layouts(spec: DatasetSpec) -> List[MazeLayout]:
    """Layouts of a PointMaze dataset: given ones, or ``num_layouts`` distinct seeded ones."""
    if spec.layouts is not None:
        return spec.maze_layouts()
    rng = np.random.default_rng([spec.seed, _LAYOUT_STREAM])
    layouts: List[MazeLayout] = []
    while len(layouts) < spec.num_layouts:
        layout = generate_layout(rng)
        if layout not in layouts:
            layouts.append(layout)
    return layouts


def episode_policies(spec: DatasetSpec) -> List[str]:
    """Policy of every episode; exactly ``num_non_random`` use the Von Mises walk."""
    n = spec.num_episodes
    order = np.random.default_rng([spec.seed, _TYPES_STREAM]).permutation(n)
    policies = ["uniform_random"] * n
    for idx in order[: spec.num_non_random]:
        policies[int(idx)] = "von_mises_walk"
    return policies


def _episode_job(job: Tuple[Dict[str, Any], int, str, Optional[str], int]) -> Tuple[Episode, int]:
    spec_dict, index, policy, layout_code, layout_index = job
    spec = DatasetSpec.from_dict(spec_dict)
    if spec.env_kind == "pointmaze":
        env: Environment = PointMazeEnv(MazeLayout(layout_code))
    else:
        env = TwoRoomsEnv(spec.geometry)
    rng = np.random.default_rng([spec.seed, _EPISODE_STREAM, index])
    is_two_rooms = spec.env_kind == "two_rooms"
    # No aimed walks when door crossings are rejected.
    aim = spec.door_aim_fraction if is_two_rooms and not spec.forbid_door_crossing else 0.0
    random_bound = spec.random_step_bound if is_two_rooms else None
    rejects = 0
    while True:
        episode = generate_episode(
            env,
            rng,
            policy,
            spec.episode_len,
            spec.von_mises_kappa,
            spec.heading_mode,
            layout_index,
            door_aim_fraction=aim,
            door_aim_radius=spec.door_aim_radius,
            random_step_bound=random_bound,
        )
        if not spec.forbid_door_crossing or not two_rooms.crossed_door(episode.raw_states, spec.geometry):
            return episode, rejects
        rejects += 1
        if rejects > MAX_CONSECUTIVE_REJECTS:
            raise DataError(
                f"forbid_door_crossing: episode {index} rejected {rejects} times in a row"
            )


def dataset_statistics(dataset: Dataset) -> Dict[str, Any]:
    """Door-crossing fraction, mean max pairwise distance and episode-type counts."""
    episodes = dataset.episodes
    counts = {"von_mises_walk": 0, "uniform_random": 0}
    for ep in episodes:
        counts[ep.policy] += 1
    stats: Dict[str, Any] = {
        "num_episodes": len(episodes),
        "num_transitions": dataset.num_transitions,
        "episode_type_counts": counts,
        "mean_max_pairwise_distance": float(
            np.mean([max_pairwise_distance(ep.positions) for ep in episodes])
        ) if episodes else 0.0,
    }
    if dataset.env_kind == "two_rooms":
        crossings = [two_rooms.crossed_door(ep.raw_states, dataset.spec.geometry) for ep in episodes]
        stats["door_crossing_fraction"] = float(np.mean(crossings)) if crossings else 0.0
    else:
        per_layout: Dict[str, int] = {}
        for ep in episodes:
            per_layout[str(ep.layout_index)] = per_layout.get(str(ep.layout_index), 0) + 1
        stats["episodes_per_layout"] = per_layout
    return stats


def generate_dataset(spec: DatasetSpec, workers: int = 1) -> Dataset:
    """
    Generate a dataset from its spec.

    Args:
        spec: Dataset spec, including the seed
        workers: Worker processes; the result does not depend on this

    Returns:
        Dataset with episodes in index order and statistics in its metadata
    """
    spec.ensure_valid()
    policies = episode_policies(spec)
    layouts = resolve_layouts(spec) if spec.env_kind == "pointmaze" else []
    spec_dict = spec.to_dict()
    jobs = []
    for index, policy in enumerate(policies):
        if layouts:
            layout_index = index % len(layouts)
            jobs.append((spec_dict, index, policy, layouts[layout_index].code, layout_index))
        else:
            jobs.append((spec_dict, index, policy, None, -1))

    logger.info(
        f"Generating {len(jobs)} {spec.env_kind} episodes of length {spec.episode_len} "
        f"with {workers} worker(s)"
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_episode_job, jobs, chunksize=max(1, len(jobs) // (workers * 8))))
    else:
        results = [_episode_job(job) for job in jobs]

    episodes = [episode for episode, _ in results]
    rejected = sum(rejects for _, rejects in results)
    dataset = Dataset(spec=spec, episodes=episodes)
    metadata: Dict[str, Any] = {
        "spec": spec_dict,
        "seed": spec.seed,
        "heading_mode": spec.heading_mode,
        "rejected_episodes": rejected,
    }
    if spec.env_kind == "two_rooms":
        metadata["env"] = TwoRoomsEnv(spec.geometry).describe()
    else:
        metadata["env"] = {"kind": "pointmaze"}
        metadata["layouts"] = [layout.code for layout in layouts]
    metadata["stats"] = dataset_statistics(dataset)
    dataset.metadata = metadata
    logger.info(f"Generated {len(episodes)} episodes; stats {metadata['stats']}")
    return dataset

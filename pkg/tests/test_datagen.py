"""
Offline data: Von Mises sampling, episode generation, dataset files.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from datagen.generator import (
    episode_policies,
    generate_dataset,
    generate_episode,
    max_pairwise_distance,
    resolve_layouts,
)
from datagen.storage import load_dataset, save_dataset
from datagen.von_mises import sample_von_mises, wrap_angle
from envs import two_rooms
from envs.two_rooms import TwoRoomsEnv
from error_handler import (
    ChecksumError,
    ConfigError,
    DataError,
    DatasetFormatError,
    DatasetTruncatedError,
    DatasetVersionError,
)
from models.dataset import DatasetSpec


def small_spec(**overrides):
    fields = dict(env_kind="two_rooms", total_transitions=60, episode_len=6, non_random_fraction=0.5, seed=11)
    fields.update(overrides)
    return DatasetSpec(**fields)


@given(st.floats(min_value=-1e4, max_value=1e4, allow_nan=False))
def test_wrap_angle_range_and_direction(theta):
    wrapped = float(wrap_angle(theta))
    assert -np.pi <= wrapped <= np.pi
    assert np.cos(wrapped) == pytest.approx(np.cos(theta), abs=1e-6)
    assert np.sin(wrapped) == pytest.approx(np.sin(theta), abs=1e-6)


def test_von_mises_mean_resultant_length():
    rng = np.random.default_rng(0)
    draws = sample_von_mises(rng, 1.0, 5.0, size=20_000)
    expected = special.i1(5.0) / special.i0(5.0)
    assert expected == pytest.approx(0.8934, abs=1e-4)
    assert np.mean(np.cos(draws - 1.0)) == pytest.approx(expected, abs=0.01)
    assert np.all((draws >= -np.pi) & (draws < np.pi))


def test_von_mises_matches_reference_distribution():
    draws = sample_von_mises(np.random.default_rng(1), -2.0, 2.0, size=5_000)
    assert stats.kstest(draws, stats.vonmises(kappa=2.0, loc=-2.0).cdf).pvalue > 1e-3


def test_von_mises_zero_concentration_is_uniform():
    draws = sample_von_mises(np.random.default_rng(2), 0.5, 0.0, size=5_000)
    assert stats.kstest(draws, stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf).pvalue > 1e-3
    assert isinstance(sample_von_mises(np.random.default_rng(2), 0.0, 3.0), float)
    with pytest.raises(ConfigError):
        sample_von_mises(np.random.default_rng(2), 0.0, -1.0)


def test_generate_episode_shapes_and_bounds():
    env = TwoRoomsEnv()
    episode = generate_episode(env, np.random.default_rng(3), "von_mises_walk", 12)
    assert episode.observations.shape == (13, 2, 64, 64) and episode.observations.dtype == np.uint8
    assert episode.actions.shape == (12, 2) and episode.raw_states.shape == (13, 2)
    assert np.all(np.linalg.norm(episode.actions, axis=1) <= two_rooms.ACTION_BOUND)
    assert episode.validate() and episode.velocities is None
    with pytest.raises(DataError):
        generate_episode(env, np.random.default_rng(3), "von_mises_walk", 0)


def test_max_pairwise_distance():
    assert max_pairwise_distance(np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])) == pytest.approx(5.0)


def test_episode_policies_have_exact_counts():
    policies = episode_policies(small_spec(total_transitions=61, non_random_fraction=0.25))
    assert len(policies) == 11
    assert policies.count("von_mises_walk") == 3


def test_dataset_is_deterministic_and_counts_types():
    a = generate_dataset(small_spec())
    b = generate_dataset(small_spec())
    assert a.equals(b) and a.fingerprint() == b.fingerprint()
    stats_ = a.metadata["stats"]
    assert stats_["num_episodes"] == 10 and stats_["num_transitions"] == 60
    assert stats_["episode_type_counts"] == {"von_mises_walk": 5, "uniform_random": 5}
    assert a.metadata["env"]["kind"] == "two_rooms"
    assert not a.equals(generate_dataset(small_spec(seed=12)))


def test_dataset_does_not_depend_on_worker_count():
    assert generate_dataset(small_spec(), workers=2).equals(generate_dataset(small_spec(), workers=1))


def test_forbid_door_crossing():
    dataset = generate_dataset(small_spec(episode_len=20, total_transitions=200, forbid_door_crossing=True))
    assert dataset.metadata["stats"]["door_crossing_fraction"] == 0.0
    assert not any(two_rooms.crossed_door(ep.raw_states, dataset.spec.geometry) for ep in dataset.episodes)


def test_pointmaze_dataset_cycles_layouts():
    spec = DatasetSpec(env_kind="pointmaze", total_transitions=16, episode_len=4, num_layouts=2, seed=3)
    dataset = generate_dataset(spec)
    assert len(dataset.metadata["layouts"]) == 2
    assert [ep.layout_index for ep in dataset.episodes] == [0, 1, 0, 1]
    assert dataset.metadata["stats"]["episodes_per_layout"] == {"0": 2, "1": 2}
    assert dataset.episodes[0].observations.shape == (5, 3, 64, 64)
    assert dataset.episodes[0].velocities.shape == (5, 2)
    assert [l.code for l in resolve_layouts(spec)] == dataset.metadata["layouts"]


def test_invalid_spec_is_rejected():
    with pytest.raises(ConfigError):
        generate_dataset(small_spec(non_random_fraction=1.5))
    with pytest.raises(ConfigError):
        generate_dataset(DatasetSpec(env_kind="pointmaze", forbid_door_crossing=True, total_transitions=4))


def test_aimed_walk_starts_near_the_door():
    env = TwoRoomsEnv()
    door = np.array([env.geometry.wall_x, env.geometry.door_center_y])
    for seed in range(10):
        episode = generate_episode(
            env, np.random.default_rng(seed), "von_mises_walk", 5, door_aim_fraction=1.0, door_aim_radius=12.0
        )
        assert np.linalg.norm(episode.raw_states[0] - door) <= 12.0 + 1e-4


def test_uniform_random_steps_respect_their_bound():
    episode = generate_episode(TwoRoomsEnv(), np.random.default_rng(4), "uniform_random", 200, random_step_bound=1.45)
    norms = np.linalg.norm(episode.actions, axis=1)
    assert norms.max() <= 1.45
    assert norms.max() > 1.2


def test_step_bound_and_aim_settings_are_validated():
    with pytest.raises(ConfigError):
        generate_dataset(small_spec(random_step_bound=3.0))
    with pytest.raises(ConfigError):
        generate_dataset(small_spec(door_aim_fraction=-0.1))
    with pytest.raises(ConfigError):
        generate_dataset(small_spec(door_aim_radius=0.0))


@pytest.mark.slow
@pytest.mark.parametrize("non_random_fraction", [1.0, 0.0])
def test_two_rooms_statistics_on_2000_episodes(non_random_fraction):
    spec = DatasetSpec(total_transitions=2_000 * 91, episode_len=91, non_random_fraction=non_random_fraction)
    started = time.perf_counter()
    dataset = generate_dataset(spec)
    elapsed = time.perf_counter() - started
    stats_ = dataset.metadata["stats"]
    assert stats_["num_episodes"] == 2_000
    if non_random_fraction == 1.0:
        assert 0.28 <= stats_["door_crossing_fraction"] <= 0.42
        assert 22.4 <= stats_["mean_max_pairwise_distance"] <= 33.6
    else:
        assert 8.0 <= stats_["mean_max_pairwise_distance"] <= 12.0
    assert elapsed < 300.0


@pytest.fixture
def saved(tmp_path):
    dataset = generate_dataset(small_spec())
    path = tmp_path / "dataset.pldm"
    save_dataset(dataset, str(path))
    return dataset, path


def test_dataset_file_round_trip(saved):
    dataset, path = saved
    loaded = load_dataset(str(path))
    assert loaded.equals(dataset)
    assert loaded.fingerprint() == dataset.fingerprint()


def test_corrupted_byte_is_detected(saved):
    _, path = saved
    raw = bytearray(path.read_bytes())
    raw[100] ^= 0x01
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError):
        load_dataset(str(path))


def test_future_version_is_rejected(saved):
    _, path = saved
    raw = bytearray(path.read_bytes())
    raw[6:8] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(DatasetVersionError, match="99"):
        load_dataset(str(path))


def test_truncated_file_is_detected(saved):
    _, path = saved
    raw = path.read_bytes()
    path.write_bytes(raw[:-20])
    with pytest.raises(DatasetTruncatedError):
        load_dataset(str(path))
    path.write_bytes(raw[:10])
    with pytest.raises(DatasetTruncatedError):
        load_dataset(str(path))


def test_wrong_signature_is_rejected(saved):
    _, path = saved
    raw = path.read_bytes()
    path.write_bytes(b"PLDMCK" + raw[6:])
    with pytest.raises(DatasetFormatError):
        load_dataset(str(path))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=2, max_size=8))
def test_max_pairwise_distance_bounds_every_pair(points):
    p = np.array(points)
    best = max_pairwise_distance(p)
    assert all(np.linalg.norm(a - b) <= best + 1e-9 for a in p for b in p)

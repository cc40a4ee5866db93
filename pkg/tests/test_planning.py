"""
MPPI costs and optimization, controllers and closed-loop MPC episodes.
"""

import json
import logging

import numpy as np
import pytest

from envs.base import Observation
from envs.two_rooms import TwoRoomsEnv
from error_handler import ConfigError, NumericError, ShapeError
from models.planning import PlanConfig, PlanResult
from planning.controllers import PLDMController, RandomController, ZeroController
from planning.ground_truth import GroundTruthModel
from planning.mpc import PLANNER_TRACE, PlannerTrace, mpc_episode, run_episode
from planning.mppi import candidate_costs, combine, cost_goal, cost_uncertainty, importance_weights, mppi_plan
from planning.world_model import WorldModel


class Additive(WorldModel):
    """Member k moves the latent by ``scales[k]`` times the cumulative action."""

    def __init__(self, scales, nan=False):
        self.scales = list(scales)
        self.nan = nan

    @property
    def ensemble_size(self):
        return len(self.scales)

    def encode_observation(self, obs):
        return np.asarray(obs.state, dtype=np.float64)

    def predict_latents(self, k, z0, actions):
        out = z0[:, None, :] + self.scales[k] * np.cumsum(actions, axis=1)
        if self.nan:
            out[0] = np.nan
        return out


def obs(*state):
    return Observation(image=np.zeros((1, 1, 1), dtype=np.uint8), state=np.array(state, dtype=np.float64))


def identity(actions):
    return np.asarray(actions, dtype=np.float64)


def test_goal_cost_hand_value():
    model = Additive([1.0])
    assert cost_goal(model, np.zeros(2), np.array([3.0, 4.0]), np.zeros((1, 2))) == pytest.approx(5.0)
    assert cost_goal(model, np.zeros(2), np.array([3.0, 4.0]), np.array([[3.0, 4.0], [0.0, 0.0]])) == 0.0


def test_goal_cost_is_ensemble_mean():
    model = Additive([1.0, 3.0])
    assert cost_goal(model, np.zeros(1), np.zeros(1), np.array([[1.0]])) == pytest.approx(2.0)


def test_uncertainty_cost_hand_value():
    model = Additive([0.0, 1.0])
    value = cost_uncertainty(model, np.zeros(1), np.array([[2.0], [2.0]]), gamma=0.5)
    assert value == pytest.approx(3.0)


def test_uncertainty_is_zero_for_a_single_member(caplog):
    model = Additive([1.0])
    with caplog.at_level(logging.WARNING):
        assert cost_uncertainty(model, np.zeros(2), np.ones((3, 2)), gamma=0.9) == 0.0
    assert "single ensemble member" in caplog.text


def test_costs_do_not_depend_on_chunking(rng):
    model = Additive([0.5, 1.0, 2.0])
    actions = rng.normal(size=(37, 4, 2))
    z0, goal = rng.normal(size=2), rng.normal(size=2)
    whole = candidate_costs(model, z0, goal, actions, 0.9, chunk=250)
    pieces = candidate_costs(model, z0, goal, actions, 0.9, chunk=5)
    np.testing.assert_allclose(whole[0], pieces[0])
    np.testing.assert_allclose(whole[1], pieces[1])


def test_cost_rejects_bad_action_rank():
    with pytest.raises(ShapeError):
        cost_goal(Additive([1.0]), np.zeros(2), np.zeros(2), np.zeros(2))


def test_importance_weights(rng):
    costs = rng.uniform(0, 10, size=50)
    weights = importance_weights(costs, 2.0)
    assert weights.sum() == pytest.approx(1.0)
    assert np.argmax(weights) == np.argmin(costs)
    np.testing.assert_allclose(importance_weights(costs + 1e4, 2.0), weights)
    # Tiny temperatures concentrate on the best sample without overflow.
    sharp = importance_weights(costs, 1e-9)
    assert sharp[np.argmin(costs)] == pytest.approx(1.0)


def test_avoid_flips_only_the_goal_term():
    goal, uncertainty = np.array([2.0]), np.array([10.0])
    reach = PlanConfig(uncertainty_beta=0.5)
    avoid = PlanConfig(uncertainty_beta=0.5, objective_sign="avoid")
    assert combine(goal, uncertainty, reach)[0] == pytest.approx(7.0)
    assert combine(goal, uncertainty, avoid)[0] == pytest.approx(3.0)


def test_zero_noise_keeps_the_initial_mean(rng):
    cfg = PlanConfig(horizon=3, mppi_samples=8, mppi_sigma=0.0, mppi_iters=2)
    init = np.array([[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0]])
    result = mppi_plan(Additive([1.0]), obs(0.0, 0.0), obs(5.0, 5.0), cfg, rng, identity, init_mean=init)
    np.testing.assert_allclose(result.actions, init)


@pytest.mark.parametrize("seed", range(100))
def test_best_cost_trace_never_increases(seed):
    rng = np.random.default_rng(seed)
    cfg = PlanConfig(horizon=5, mppi_samples=30, mppi_sigma=2.0, mppi_iters=6, mppi_lambda=1.0)
    model = Additive([0.8, 1.0, 1.2])
    result = mppi_plan(model, obs(0.0, 0.0), obs(4.0, -3.0), cfg, rng, lambda a: np.clip(a, -1, 1))
    assert len(result.cost_trace) == 6
    assert all(b <= a for a, b in zip(result.cost_trace, result.cost_trace[1:]))
    assert np.all(np.abs(result.actions) <= 1.0)
    assert PlanResult.from_dict(json.loads(json.dumps(result.to_dict()))).total_cost == result.total_cost


def test_plan_is_reproducible():
    cfg = PlanConfig(horizon=4, mppi_samples=20, mppi_iters=2)
    a = mppi_plan(Additive([1.0]), obs(0.0, 0.0), obs(3.0, 1.0), cfg, np.random.default_rng(9), identity)
    b = mppi_plan(Additive([1.0]), obs(0.0, 0.0), obs(3.0, 1.0), cfg, np.random.default_rng(9), identity)
    np.testing.assert_array_equal(a.actions, b.actions)


def test_non_finite_costs_raise(rng):
    cfg = PlanConfig(horizon=2, mppi_samples=4, mppi_iters=1)
    with pytest.raises(NumericError, match="sample 0"):
        mppi_plan(Additive([1.0], nan=True), obs(0.0), obs(1.0), cfg, rng, identity, action_dim=1)


def test_init_mean_shape_is_checked(rng):
    with pytest.raises(ShapeError, match="init_mean"):
        mppi_plan(Additive([1.0]), obs(0.0, 0.0), obs(1.0, 1.0), PlanConfig(horizon=3), rng, identity, init_mean=np.zeros((2, 2)))


def test_invalid_plan_config():
    with pytest.raises(ConfigError):
        PlanConfig(objective_sign="flee").ensure_valid()
    with pytest.raises(ConfigError):
        PlanConfig(mppi_lambda=0.0).ensure_valid()


SMALL_PLAN = dict(horizon=4, mppi_samples=100, mppi_sigma=2.0, mppi_iters=2)


def test_ground_truth_planning_reaches_and_avoids(rng):
    env = TwoRoomsEnv()
    model = GroundTruthModel(env)
    start, goal = env.observe(np.array([10.0, 10.0])), env.observe(np.array([15.0, 10.0]))
    still = 4 * 5.0
    reach = mppi_plan(model, start, goal, PlanConfig(**SMALL_PLAN), rng, env.clip_action)
    avoid = mppi_plan(model, start, goal, PlanConfig(objective_sign="avoid", **SMALL_PLAN), rng, env.clip_action)
    assert reach.cost_goal < still < avoid.cost_goal
    assert reach.actions[0, 0] > 0 > avoid.actions[0, 0]


def test_geodesic_distance_goes_around_the_wall():
    env = TwoRoomsEnv()
    model = GroundTruthModel(env, geodesic=True)
    left, right = np.array([[28.0, 10.0]]), np.array([36.0, 10.0])
    assert model.goal_distance(left, right)[0] > 30.0
    same_room = np.array([[40.0, 10.0]])
    assert model.goal_distance(same_room, right)[0] == pytest.approx(4.0)


def test_mpc_reaches_a_nearby_goal(rng):
    env = TwoRoomsEnv()
    result = mpc_episode(env, GroundTruthModel(env), PlanConfig(**SMALL_PLAN), np.array([10.0, 10.0]), np.array([20.0, 12.0]), 20, rng)
    assert result.success
    assert result.final_distance <= env.default_success_radius
    assert len(result.states) == result.steps + 1 == len(result.distances)
    assert result.plan_calls == result.steps


def test_replan_interval_controls_plan_calls(rng):
    env = TwoRoomsEnv()
    model = GroundTruthModel(env)
    start, far = np.array([5.0, 5.0]), np.array([60.0, 60.0])
    once = PlanConfig(**dict(SMALL_PLAN, horizon=5, replan_interval=5))
    assert mpc_episode(env, model, once, start, far, 5, rng).plan_calls == 1
    # Intervals beyond the horizon execute the whole plan and then replan.
    capped = PlanConfig(**dict(SMALL_PLAN, horizon=5, replan_interval=10))
    assert mpc_episode(env, model, capped, start, far, 10, rng).plan_calls == 2


def test_warm_start_shifts_the_previous_plan():
    controller = PLDMController(Additive([1.0]), PlanConfig(horizon=4))
    controller._mean = np.arange(8, dtype=np.float64).reshape(4, 2)
    shifted = controller._warm_start(3)
    np.testing.assert_array_equal(shifted, [[6, 7], [0, 0], [0, 0], [0, 0]])


def test_baseline_controllers(rng):
    env = TwoRoomsEnv()
    start, goal = np.array([10.0, 10.0]), np.array([50.0, 50.0])
    zero = run_episode(ZeroController(), env, start, goal, 7, rng)
    assert not zero.success and zero.steps == 7 and zero.plan_calls == 0
    assert all(d == zero.distances[0] for d in zero.distances)

    controller = RandomController()
    controller.reset(env, rng)
    moves = np.array([controller.act(None, None) for _ in range(200)])
    assert np.all(np.linalg.norm(moves, axis=1) <= env.action_bound + 1e-12)
    with pytest.raises(ConfigError):
        ZeroController().act(None, None)


def test_episode_starting_at_the_goal(rng):
    env = TwoRoomsEnv()
    result = run_episode(ZeroController(), env, np.array([10.0, 10.0]), np.array([11.0, 10.0]), 5, rng)
    assert result.success and result.steps == 0
    with pytest.raises(ConfigError):
        run_episode(ZeroController(), env, np.array([10.0, 10.0]), np.array([11.0, 10.0]), 0, rng)


def test_planner_trace_records_every_plan(tmp_path, rng):
    env = TwoRoomsEnv()
    path = tmp_path / PLANNER_TRACE
    with PlannerTrace(str(path)) as trace:
        trace.context = {"trial": 3}
        result = mpc_episode(env, GroundTruthModel(env), PlanConfig(**SMALL_PLAN), np.array([5.0, 5.0]), np.array([60.0, 60.0]), 3, rng, trace=trace)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(rows) == result.plan_calls == 3
    assert [r["plan_call"] for r in rows] == [1, 2, 3]
    assert all(r["trial"] == 3 and len(r["cost_trace"]) == 2 for r in rows)


OPEN_SPACE_PLAN = dict(horizon=8, mppi_samples=200, mppi_sigma=2.0, mppi_iters=3)


@pytest.mark.slow
def test_open_space_goals_are_all_reached():
    env = TwoRoomsEnv()
    model = GroundTruthModel(env)
    pairs = np.random.default_rng(0).uniform([4.0, 4.0], [26.0, 60.0], size=(20, 2, 2))
    reached = 0
    for trial, (start, goal) in enumerate(pairs):
        result = mpc_episode(
            env, model, PlanConfig(**OPEN_SPACE_PLAN), start, goal, 60, np.random.default_rng(trial), success_radius=1.0
        )
        reached += result.success
    assert reached == 20


@pytest.mark.slow
def test_goals_behind_the_door_are_reached_with_geodesic_costs():
    env = TwoRoomsEnv()
    model = GroundTruthModel(env, geodesic=True)
    sampler = np.random.default_rng(1)
    starts = sampler.uniform([4.0, 4.0], [26.0, 60.0], size=(20, 2))
    goals = sampler.uniform([38.0, 4.0], [60.0, 60.0], size=(20, 2))
    cfg = PlanConfig(**dict(OPEN_SPACE_PLAN, horizon=12, mppi_samples=300))
    reached = 0
    for trial in range(20):
        result = mpc_episode(env, model, cfg, starts[trial], goals[trial], 120, np.random.default_rng(trial))
        assert env.room_of(starts[trial]) != env.room_of(goals[trial])
        reached += result.success
    assert reached >= 18

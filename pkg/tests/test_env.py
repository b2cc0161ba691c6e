import math

import numpy as np
import pytest

from softsnake.config import DEFAULT_CONFIG, build_env
from softsnake.env import (EnvConfig, RewardBreakdown, Target,
                           TargetReachEnv, compute_reward, is_success,
                           observation_size)


def make_env(controller="spikingsoft", m=3, n=3, mode="train", seed=0):
    return build_env(DEFAULT_CONFIG, controller, m, n, mode, seed=seed)


# -- reward ------------------------------------------------------------------

def brute_force_reward(l, destroyed):
    """Independent oracle: tier table evaluated by explicit range scan."""
    tiers = [(0.0, 0.25, 10.0), (0.25, 0.5, 5.0), (0.5, 1.0, 1.0)]
    r1 = 0.0
    for lo, hi, val in tiers:
        if lo <= l < hi:
            r1 = val
    r2 = 250.0 if 0.0 <= l < 0.1 else 0.0
    return r1 + r2 - l * l + (-5000.0 if destroyed else 0.0)


def test_reward_matches_brute_force_table():
    grid = [0.0, 0.05, 0.09, 0.1, 0.24, 0.25, 0.3, 0.49, 0.5, 0.9, 1.0, 2.0]
    for l in grid:
        for destroyed in (False, True):
            got = compute_reward(l, destroyed)
            assert got.total == brute_force_reward(l, destroyed)
    bd = compute_reward(0.05, False)
    assert (bd.r1, bd.r2) == (10.0, 250.0)
    assert bd.r3 == pytest.approx(-0.0025)
    assert bd.total == pytest.approx(259.9975)
    assert compute_reward(2.0, False).total == -4.0
    assert compute_reward(0.3, False).total == pytest.approx(4.91)
    assert compute_reward(1.0, False).total == -1.0
    assert compute_reward(0.0, False).total == 260.0
    assert compute_reward(0.2, True).r4 == -5000.0
    with pytest.raises(ValueError):
        compute_reward(-0.1, False)


def test_breakdown_sums():
    rng = np.random.default_rng(0)
    for _ in range(200):
        bd = compute_reward(float(rng.uniform(0, 15)), bool(rng.random() < 0.2))
        assert bd.total == bd.r1 + bd.r2 + bd.r3 + bd.r4


def test_is_success_strict():
    assert is_success(0.2, 0.25)
    assert not is_success(0.25, 0.25)
    assert is_success(0.09, 0.1)


# -- dimensions and spaces ----------------------------------------------------

def test_observation_dimensions():
    assert observation_size(3, 3, True) == 23
    assert observation_size(1, 3, True) == 9
    assert observation_size(3, 6, True) == 41
    assert observation_size(3, 3, False) == 20
    assert make_env("spikingsoft", 3, 3).observation_size == 23
    assert make_env("vanilla", 3, 3).observation_size == 20
    assert make_env("cpg", 3, 3).observation_size == 20


def test_action_spaces():
    env = make_env("spikingsoft", 3, 3)
    assert env.action_size == 6
    assert np.all(env.action_low == -3.25) and np.all(env.action_high == 3.25)
    env = make_env("vanilla", 3, 3)
    assert env.action_size == 3
    assert np.all(env.action_low == -50.0)
    env = make_env("cpg", 3, 3)
    assert env.action_size == 3


def test_action_shape_mismatch_rejected():
    env = make_env("spikingsoft", 3, 3)
    env.reset(seed=0)
    with pytest.raises(ValueError):
        env.step(np.zeros(3))


# -- reset / sampling ---------------------------------------------------------

def test_reset_determinism_and_target_bound():
    env = make_env(seed=5)
    obs1, info1 = env.reset(seed=42)
    obs2, info2 = env.reset(seed=42)
    assert np.array_equal(obs1, obs2)
    assert (info1["target"].x, info1["target"].y) \
        == (info2["target"].x, info2["target"].y)

    env2 = make_env(seed=9)
    for k in range(2000):
        _, info = env2.reset(seed=k)
        t = info["target"]
        assert math.hypot(t.x - 4.0, t.y - 0.0) <= 8.0 + 1e-12


def test_initial_observation_offsets():
    env = make_env(seed=1)
    obs, info = env.reset(seed=7)
    t = info["target"]
    pos = env.snake.rod.node_positions
    nn = pos.shape[0]
    assert obs[0] == t.x - pos[0, 0]        # head x offset
    assert obs[nn] == t.y - pos[0, 1]       # head y offset
    # head sits at the origin in the plane
    assert pos[0, 0] == 0.0 and pos[0, 1] == 0.0
    # membrane block is zeros after reset
    assert np.all(obs[2 * nn:] == 0.0)


def test_membrane_observation_tracks_controller():
    env = make_env("spikingsoft", 3, 3, seed=2)
    obs, _ = env.reset(seed=3)
    rng = np.random.default_rng(4)
    for _ in range(3):
        obs, _, done, _ = env.step(rng.uniform(-0.5, 0.5, size=6))
        nn = env.snake.rod.n_nodes
        assert np.array_equal(obs[2 * nn:],
                              env.controller.membrane_potentials())
        if done:
            break


def test_episode_termination_and_game_time():
    env = make_env(seed=3)
    env.reset(seed=11)
    steps = 0
    while True:
        obs, r, done, info = env.step(np.zeros(6))
        steps += 1
        if done:
            break
    assert steps <= env.config.max_agent_steps == 100
    assert info["game_time"] <= 50.0 + 1e-9
    assert env.game_time == pytest.approx(steps * 0.5)
    with pytest.raises(RuntimeError):
        env.step(np.zeros(6))


def test_success_inside_interval_subsecond_game_time():
    # plant the target just ahead of the head so a forward gait touches it
    env = make_env("spikingsoft", 1, 3, mode="eval", seed=8)
    env.reset(seed=21)
    env.target = Target(x=0.05, y=0.0, radius=0.25)
    obs, r, done, info = env.step(np.array([0.0, 3.0]))
    assert done and info["success"]
    assert 0.0 < info["game_time"] < 0.5  # ended mid-interval
    bd = info["breakdown"]
    assert bd.r2 == 250.0 and bd.r1 == 10.0


def test_episode_determinism_full_trace():
    traces = []
    for _ in range(2):
        env = make_env(seed=6)
        obs, _ = env.reset(seed=33)
        rng = np.random.default_rng(7)
        rows = [obs.copy()]
        for _ in range(5):
            obs, r, done, info = env.step(rng.uniform(-1, 1, size=6))
            rows.append(np.concatenate([obs, [r, float(done)]]))
        traces.append(np.concatenate(rows))
    assert np.array_equal(traces[0], traces[1])


def test_destruction_terminates_with_penalty():
    # a full-range torque over-strains the rod within one interval
    env = make_env("vanilla", 3, 3, seed=13)
    env.reset(seed=2)
    obs, reward, done, info = env.step(np.array([50.0, -50.0, 50.0]))
    assert done and info["destroyed"]
    assert info["breakdown"].r4 == -5000.0
    assert reward <= -5000.0 + 260.0
    assert info["game_time"] < 0.5  # ended mid-interval


def test_eval_mode_uses_touch_radius():
    tr = make_env(mode="train").success_radius
    ev = make_env(mode="eval").success_radius
    assert (tr, ev) == (0.1, 0.25)


def test_env_config_validation():
    with pytest.raises(ValueError):
        TargetReachEnv(mode="test")
    with pytest.raises(ValueError):
        Target(0.0, 0.0, radius=0.0)
    cfg = EnvConfig()
    assert cfg.inner_steps == 500
    assert cfg.max_agent_steps == 100

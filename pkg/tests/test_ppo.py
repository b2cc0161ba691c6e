import math

import numpy as np
import pytest

from softsnake.config import DEFAULT_CONFIG, build_env
from softsnake.ppo import (Adam, GaussianPolicy, PpoConfig, RolloutBuffer,
                           collect_rollout, compute_gae, load_policy,
                           normalize_advantages, ppo_loss_and_grads,
                           ppo_update, save_policy, train)


def toy_policy(obs=3, act=2, hidden=(4, 4), seed=1):
    cfg = PpoConfig(hidden=hidden, seed=seed, obs_scale=1.0)
    return GaussianPolicy(obs, act, cfg), cfg


def toy_batch(policy, rng, batch=16, logp_noise=0.05):
    obs = rng.standard_normal((batch, policy.obs_size))
    mean, _ = policy.pi.forward(obs)
    act = mean + np.exp(policy.log_std) * rng.standard_normal(
        (batch, policy.act_size)) * 0.7
    logp_old = policy.log_prob(mean, act) \
        + logp_noise * rng.standard_normal(batch)
    adv = rng.standard_normal(batch)
    ret = rng.standard_normal(batch)
    return obs, act, logp_old, adv, ret


# -- GAE -----------------------------------------------------------------------

def gae_brute_force(rews, vals, terms, gamma, lam):
    t_len = len(rews)
    adv = np.zeros(t_len)
    for t in range(t_len):
        acc = 0.0
        coef = 1.0
        for l in range(t, t_len):
            delta = rews[l] + gamma * (1 - terms[l]) * vals[l + 1] - vals[l]
            acc += coef * delta
            if terms[l]:
                break
            coef *= gamma * lam
        adv[t] = acc
    return adv


def test_gae_hand_case():
    adv, ret = compute_gae([1.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0],
                           0.99, 0.95)
    assert adv == pytest.approx([1.9405, 1.0], abs=1e-12)
    assert ret == pytest.approx([1.9405, 1.0], abs=1e-12)


def test_gae_lambda_zero_is_td0():
    rng = np.random.default_rng(0)
    rews = rng.standard_normal(8)
    vals = rng.standard_normal(9)
    terms = np.zeros(8)
    adv, _ = compute_gae(rews, vals, terms, 0.9, 0.0)
    delta = rews + 0.9 * vals[1:] - vals[:-1]
    assert adv == pytest.approx(delta, abs=1e-14)


def test_gae_matches_brute_force_100_draws():
    rng = np.random.default_rng(1)
    for _ in range(100):
        t_len = int(rng.integers(1, 11))
        rews = rng.standard_normal(t_len)
        vals = rng.standard_normal(t_len + 1)
        terms = (rng.random(t_len) < 0.3).astype(float)
        gamma = float(rng.uniform(0.1, 1.0))
        lam = float(rng.uniform(0.0, 1.0))
        adv, ret = compute_gae(rews, vals, terms, gamma, lam)
        brute = gae_brute_force(rews, vals, terms, gamma, lam)
        assert np.abs(adv - brute).max() < 1e-12
        assert np.abs(ret - (brute + vals[:-1])).max() < 1e-12


def test_gae_zero_inputs():
    adv, ret = compute_gae(np.zeros(5), np.zeros(6), np.zeros(5), 0.99, 0.95)
    assert np.all(adv == 0.0) and np.all(ret == 0.0)
    with pytest.raises(ValueError):
        compute_gae(np.zeros(5), np.zeros(5), np.zeros(5), 0.99, 0.95)


# -- gradients ------------------------------------------------------------------

def fd_check(policy, loss_fn, tol=1e-5, h=1e-5, samples=80, seed=2):
    rng = np.random.default_rng(seed)
    x0 = policy.flat_params()
    _, grads = loss_fn()
    flat_g = np.concatenate([g.ravel() for g in grads])
    idx = rng.choice(len(x0), size=min(samples, len(x0)), replace=False)
    worst = 0.0
    for i in idx:
        xp = x0.copy()
        xp[i] += h
        policy.set_flat_params(xp)
        lp, _ = loss_fn()
        xm = x0.copy()
        xm[i] -= h
        policy.set_flat_params(xm)
        lm, _ = loss_fn()
        policy.set_flat_params(x0)
        fd = (lp["loss"] - lm["loss"]) / (2 * h)
        denom = max(abs(fd), abs(flat_g[i]), 1e-6)
        worst = max(worst, abs(fd - flat_g[i]) / denom)
    assert worst < tol, f"finite-difference mismatch {worst}"


def test_loss_gradients_match_finite_differences():
    policy, _ = toy_policy()
    rng = np.random.default_rng(3)
    obs, act, logp_old, adv, ret = toy_batch(policy, rng)
    cfg = PpoConfig(hidden=(4, 4), seed=1, obs_scale=1.0, entropy_coef=0.01)

    def loss_fn():
        return ppo_loss_and_grads(policy, obs, act, logp_old, adv, ret, cfg)

    fd_check(policy, loss_fn)


def test_gradients_with_active_clipping():
    policy, _ = toy_policy(seed=4)
    rng = np.random.default_rng(5)
    obs, act, logp_old, adv, ret = toy_batch(policy, rng, logp_noise=0.5)
    cfg = PpoConfig(hidden=(4, 4), seed=1, obs_scale=1.0)
    stats, _ = ppo_loss_and_grads(policy, obs, act, logp_old, adv, ret, cfg)
    assert stats["clip_fraction"] > 0.0

    def loss_fn():
        return ppo_loss_and_grads(policy, obs, act, logp_old, adv, ret, cfg)

    fd_check(policy, loss_fn, samples=60, seed=6)


def test_clip_arithmetic():
    # ratio 1.5, eps 0.2, positive advantage: the clipped branch 1.2*A wins
    s1 = 1.5 * 2.0
    s2 = np.clip(1.5, 0.8, 1.2) * 2.0
    assert min(s1, s2) == pytest.approx(1.2 * 2.0)


def test_identity_ratio_equals_vanilla_pg():
    policy, _ = toy_policy(seed=7)
    rng = np.random.default_rng(8)
    obs, act, _, adv, ret = toy_batch(policy, rng)
    mean, _ = policy.pi.forward(obs * policy.obs_scale)
    logp_exact = policy.log_prob(mean, act)
    cfg = PpoConfig(hidden=(4, 4), seed=1, obs_scale=1.0)
    stats, _ = ppo_loss_and_grads(policy, obs, act, logp_exact, adv, ret,
                                  cfg)
    assert stats["policy_loss"] == pytest.approx(-adv.mean(), abs=1e-12)
    assert stats["clip_fraction"] == 0.0


def test_non_finite_loss_aborts():
    policy, _ = toy_policy(seed=9)
    rng = np.random.default_rng(9)
    obs, act, logp_old, adv, ret = toy_batch(policy, rng)
    cfg = PpoConfig(hidden=(4, 4), seed=1, obs_scale=1.0)
    bad_adv = adv.copy()
    bad_adv[0] = float("nan")
    with pytest.raises(FloatingPointError):
        ppo_loss_and_grads(policy, obs, act, logp_old, bad_adv, ret, cfg)


def test_advantage_normalization():
    rng = np.random.default_rng(10)
    adv = rng.standard_normal(512) * 37.0 + 5.0
    norm = normalize_advantages(adv)
    assert abs(norm.mean()) < 1e-9
    assert abs(norm.std() - 1.0) < 1e-6


def test_adam_matches_reference_equations():
    adam = Adam([(2,)], lr=0.1)
    p = [np.array([1.0, -2.0])]
    g = [np.array([0.5, -0.25])]
    out = adam.step(p, g)
    m = 0.1 * np.array([0.5, -0.25])
    v = 0.001 * np.array([0.25, 0.0625])
    mh = m / (1 - 0.9)
    vh = v / (1 - 0.999)
    want = p[0] - 0.1 * mh / (np.sqrt(vh) + 1e-8)
    assert out[0] == pytest.approx(want, abs=1e-15)


# -- rollouts and training -----------------------------------------------------

def env_factory(seed):
    return build_env(DEFAULT_CONFIG, "spikingsoft", 1, 3, "train", seed=seed)


def test_collect_rollout_shapes_and_rewards():
    env = env_factory(0)
    policy, _ = toy_policy(obs=env.observation_size, act=env.action_size,
                           hidden=(8, 8))
    rng = np.random.default_rng(11)
    buf, carry, ep_rets, infos = collect_rollout(env, policy, 12, rng)
    assert len(buf) == 12
    assert buf.values.shape == (13,)
    assert np.all(np.isfinite(buf.obs))
    # rewards recorded equal the env's reward breakdown totals by contract
    assert np.all(buf.rewards <= 260.0)


def test_rollout_horizon_one():
    env = env_factory(1)
    policy, _ = toy_policy(obs=env.observation_size, act=env.action_size,
                           hidden=(8, 8))
    rng = np.random.default_rng(12)
    buf, _, _, _ = collect_rollout(env, policy, 1, rng)
    assert len(buf) == 1 and buf.values.shape == (2,)


def test_action_clamping_in_env():
    env = env_factory(2)
    env.reset(seed=0)
    obs, r, done, info = env.step(np.array([100.0, -100.0]))
    # the controller received clamped thresholds
    assert env.controller.thr_n[0] == 3.25 - 3.25
    assert env.controller.thr_p[0] == 3.25 + 3.25


def test_train_smoke_deterministic():
    cfg = PpoConfig(total_steps=256, horizon=128, epochs=2, minibatch=32,
                    seed=3, init_action_std=0.5)
    curves = []
    for _ in range(2):
        policy, curve, eps = train(env_factory, cfg)
        curves.append([row.astuple() for row in curve])
    assert curves[0] == curves[1]
    assert len(curves[0]) == 2  # total_steps / horizon


def test_single_update_when_total_equals_horizon():
    cfg = PpoConfig(total_steps=128, horizon=128, epochs=1, minibatch=64,
                    seed=4)
    policy, curve, _ = train(env_factory, cfg)
    assert len(curve) == 1
    assert curve[0].env_steps == 128


def test_checkpoint_roundtrip(tmp_path):
    cfg = PpoConfig(hidden=(8, 8), seed=5, obs_scale=0.1)
    env = env_factory(3)
    policy = GaussianPolicy(env.observation_size, env.action_size, cfg,
                            env.action_low, env.action_high)
    policy.value_scale = 321.5
    path = tmp_path / "ck.json"
    save_policy(path, policy, {"controller": "spikingsoft", "m": 1, "n": 3,
                               "seed": 5, "hidden": [8, 8]})
    loaded, meta = load_policy(path)
    assert meta["controller"] == "spikingsoft"
    assert loaded.value_scale == 321.5
    obs = np.linspace(-1, 1, env.observation_size)
    assert np.array_equal(loaded.act_deterministic(obs),
                          policy.act_deterministic(obs))
    assert loaded.value(obs) == policy.value(obs)

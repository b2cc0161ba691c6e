import math

import numpy as np
import pytest

from softsnake.config import DEFAULT_CONFIG, build_env
from softsnake.controllers import RandomPolicy
from softsnake.metrics import (AggregateReport, EpisodeResult, aggregate,
                               evaluate, run_episode, silence_rate)


def eval_factory(controller="spikingsoft", m=1, n=3, seed=0):
    def factory():
        return build_env(DEFAULT_CONFIG, controller, m, n, "eval", seed=seed)
    return factory


def test_silence_rate_examples():
    assert silence_rate(np.zeros(100)) == 1.0
    trace = np.zeros(1000)
    trace[:280] = 1.0
    assert silence_rate(trace) == 0.72
    rng = np.random.default_rng(0)
    excerpt = rng.choice([-1.0, 0.0, 1.0], size=100)
    hand = sum(1 for v in excerpt if v == 0.0) / 100
    assert silence_rate(excerpt) == hand
    with pytest.raises(ValueError):
        silence_rate(np.zeros(0))


def test_aggregate_all_success_and_bounds():
    results = [EpisodeResult(True, 12.5, 100.0, 0.5, i, (1.0, 2.0))
               for i in range(5)]
    rep = aggregate(results)
    assert rep.means["success_rate"] == 1.0
    assert rep.stds["success_rate"] == 0.0
    assert rep.n_episodes == 5
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        EpisodeResult(True, 1.0, 0.0, 1.5, 0, (0, 0))


def test_aggregation_permutation_invariant():
    rng = np.random.default_rng(1)
    results = [EpisodeResult(bool(rng.random() < 0.5),
                             float(rng.uniform(1, 50)),
                             float(rng.uniform(-5000, 200)),
                             float(rng.uniform(0, 1)), i, (0.0, 0.0))
               for i in range(20)]
    a = aggregate(results)
    b = aggregate(list(reversed(results)))
    assert a.means == b.means and a.stds == b.stds


def test_never_moving_policy_matches_target_spawn_geometry():
    """Success happens exactly when the target spawns within the touch
    radius of the head; the rate estimates the area ratio (0.25/8)^2."""
    factory = eval_factory()
    still = lambda obs: np.array([0.0, 3.25])  # widest silent band
    rep, results = evaluate(still, factory, 150, seed=100)
    # cross-check against the sampled targets themselves
    for r in results:
        spawned_inside = math.hypot(*r.target_xy) < 0.25
        assert r.success == spawned_inside
    # Monte-Carlo oracle on the target sampler alone (one seeded stream)
    env = factory()
    env.reset(seed=77)
    n_mc = 400_000
    hits = sum(1 for _ in range(n_mc)
               if math.hypot(env._sample_target().x,
                             env._sample_target().y) < 0.25)
    p_mc = hits / n_mc
    p_exact = (0.25 / 8.0) ** 2
    # 400k draws: 3 sigma is about 15% relative
    assert p_mc == pytest.approx(p_exact, rel=0.2)


def test_failed_episodes_report_full_game_time():
    factory = eval_factory()
    still = lambda obs: np.array([0.0, 3.25])
    rep, results = evaluate(still, factory, 5, seed=3)
    for r in results:
        if not r.success:
            assert r.game_time == 50.0


def test_parallel_eval_matches_serial_for_deterministic_policy():
    import functools

    from softsnake.config import DEFAULT_CONFIG
    from softsnake.ppo import GaussianPolicy, PpoConfig

    factory = functools.partial(build_env, DEFAULT_CONFIG, "spikingsoft",
                                1, 3, "eval", seed=5)
    env = factory()
    cfg = PpoConfig(hidden=(8, 8), seed=1)
    pol = GaussianPolicy(env.observation_size, env.action_size, cfg,
                         env.action_low, env.action_high)
    rep1, res1 = evaluate(pol.act_deterministic, factory, 4, seed=40,
                          workers=1)
    rep2, res2 = evaluate(pol.act_deterministic, factory, 4, seed=40,
                          workers=2)
    assert rep1.as_dict() == rep2.as_dict()
    assert res1 == res2


def test_evaluate_reproducible():
    factory = eval_factory()
    pol = RandomPolicy(np.full(2, -3.25), np.full(2, 3.25), seed=5)
    rep1, res1 = evaluate(pol, factory, 6, seed=40)
    pol2 = RandomPolicy(np.full(2, -3.25), np.full(2, 3.25), seed=5)
    rep2, res2 = evaluate(pol2, factory, 6, seed=40)
    assert rep1.as_dict() == rep2.as_dict()
    assert res1 == res2


def test_episode_result_metric_bounds():
    factory = eval_factory()
    pol = RandomPolicy(np.full(2, -3.25), np.full(2, 3.25), seed=6)
    rep, results = evaluate(pol, factory, 4, seed=9)
    for r in results:
        assert 0.0 <= r.silence_rate <= 1.0
        assert 0.0 < r.game_time <= 50.0
    assert 0.0 <= rep.means["success_rate"] <= 1.0


def test_random_play_success_rate_observation():
    """Weak consistency observation (printed, not asserted): random spiking
    play at the 3x3 size lands within an order of magnitude of the ~10%
    reference scale."""
    factory = eval_factory("spikingsoft", m=3, n=3, seed=17)
    pol = RandomPolicy(np.full(6, -3.25), np.full(6, 3.25), seed=17)
    rep, _ = evaluate(pol, factory, 60, seed=700)
    rate = rep.means["success_rate"]
    print(f"[OBSERVATION] random spiking 3x3 success rate over 60 episodes: "
          f"{rate:.1%} (reference scale ~10%)")
    assert 0.0 <= rate <= 1.0


def test_report_table_format():
    rep = aggregate([EpisodeResult(True, 10.0, -100.0, 0.25, 0, (0, 0)),
                     EpisodeResult(False, 50.0, -900.0, 0.75, 1, (0, 0))])
    table = rep.table()
    assert "Success Rate" in table and "Silence Rate" in table
    assert "50.00%" in table

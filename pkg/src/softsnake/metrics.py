"""Evaluation harness: success rate, game time, total reward, silence rate.

Episodes run under the evaluation protocol (touch radius 0.25, 50 s cap);
failed episodes contribute the full 50 s.  Aggregates report mean and
population standard deviation over episodes.
"""

import multiprocessing
from dataclasses import dataclass

import numpy as np

__all__ = ["EpisodeResult", "AggregateReport", "run_episode", "evaluate",
           "silence_rate", "METRIC_ORDER"]

# mirrors the result-table column order: success first, then time, reward,
# silence
METRIC_ORDER = ["success_rate", "game_time", "total_reward", "silence_rate"]


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    game_time: float
    total_reward: float
    silence_rate: float
    seed: int
    target_xy: tuple

    def __post_init__(self):
        if not 0.0 <= self.silence_rate <= 1.0:
            raise ValueError("silence rate must lie in [0, 1]")


@dataclass(frozen=True)
class AggregateReport:
    """Mean and population std per metric, over n_episodes."""

    n_episodes: int
    means: dict
    stds: dict

    def as_dict(self):
        return {
            "n_episodes": self.n_episodes,
            "means": dict(self.means),
            "stds": dict(self.stds),
        }

    def table(self) -> str:
        header = (f"{'Metric':<10}{'Success Rate':>17}{'Game Time (s)':>17}"
                  f"{'Total Reward':>22}{'Silence Rate':>17}")
        cells = [
            f"{self.means['success_rate'] * 100.0:.2f}% ± "
            f"{self.stds['success_rate'] * 100.0:.2f}%",
            f"{self.means['game_time']:.2f} ± {self.stds['game_time']:.2f}",
            f"{self.means['total_reward']:.2f} ± "
            f"{self.stds['total_reward']:.2f}",
            f"{self.means['silence_rate'] * 100.0:.2f}% ± "
            f"{self.stds['silence_rate'] * 100.0:.2f}%",
        ]
        row = (f"{'value':<10}{cells[0]:>17}{cells[1]:>17}{cells[2]:>22}"
               f"{cells[3]:>17}")
        return header + "\n" + row


def silence_rate(spike_trace) -> float:
    """Fraction of exactly-zero outputs in a recorded trace (pooled)."""
    trace = np.asarray(spike_trace)
    if trace.size == 0:
        raise ValueError("empty spike trace")
    return float((trace == 0.0).sum() / trace.size)


def run_episode(env, policy_fn, seed: int) -> EpisodeResult:
    """Roll one episode to termination and summarize it."""
    obs, info = env.reset(seed=seed)
    target = info["target"]
    total = 0.0
    success = False
    while True:
        action = policy_fn(obs)
        obs, reward, done, step_info = env.step(action)
        total += reward
        if done:
            success = bool(step_info["success"])
            break
    game_time = env.config.time_limit_s if not success else env.game_time
    return EpisodeResult(success=success, game_time=float(game_time),
                         total_reward=float(total),
                         silence_rate=float(env.silence.rate),
                         seed=seed, target_xy=(target.x, target.y))


def aggregate(results) -> AggregateReport:
    """Mean ± population-std fold over episodes.

    Values are sorted before reduction, so the report is exactly invariant
    under episode permutation (float summation order is canonicalized).
    """
    if not results:
        raise ValueError("need at least one episode")
    columns = {
        "success_rate": np.array([1.0 if r.success else 0.0
                                  for r in results]),
        "game_time": np.array([r.game_time for r in results]),
        "total_reward": np.array([r.total_reward for r in results]),
        "silence_rate": np.array([r.silence_rate for r in results]),
    }
    columns = {k: np.sort(v) for k, v in columns.items()}
    means = {k: float(v.mean()) for k, v in columns.items()}
    stds = {k: float(v.std()) for k, v in columns.items()}
    return AggregateReport(n_episodes=len(results), means=means, stds=stds)


class _EpisodeJob:
    """Picklable per-episode task for worker pools."""

    def __init__(self, policy_fn, env_factory):
        self.policy_fn = policy_fn
        self.env_factory = env_factory

    def __call__(self, seed: int) -> EpisodeResult:
        return run_episode(self.env_factory(), self.policy_fn, seed)


def evaluate(policy_fn, env_factory, n_episodes: int, seed: int = 0,
             workers: int = 1):
    """Run ``n_episodes`` with per-episode seeds ``seed + i``.

    ``workers > 1`` evaluates episodes in a process pool (policy and factory
    must be picklable); byte-reproducibility of stochastic policies is only
    guaranteed single-worker.  Returns (AggregateReport, list of
    EpisodeResult) in seed order.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    seeds = [seed + i for i in range(n_episodes)]
    if workers <= 1:
        env = env_factory()
        results = [run_episode(env, policy_fn, s) for s in seeds]
    else:
        job = _EpisodeJob(policy_fn, env_factory)
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            results = pool.map(job, seeds)
    return aggregate(results), results

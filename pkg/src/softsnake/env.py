"""Episodic target-reaching environment.

The agent acts at 2 Hz; each action configures the active controller, which
then drives 500 physics substeps.  Observations are per-node offsets to the
target in x and y (plus per-segment membrane potentials for the spiking
controller); the reward combines a proximity tier, a goal bonus, a squared
distance penalty and a destruction penalty.  Episodes end on success,
destruction, or the 50 s game-time cap.
"""

import math
from dataclasses import dataclass

import numpy as np

from softsnake.controllers import (INNER_STEPS_PER_ACTION, SilenceCounter,
                                   make_controller)
from softsnake.neuron import DtsParams
from softsnake.rod import EnvPhysics, RodMaterial
from softsnake.snake import DestructionBounds, Snake, SnakeConfig

__all__ = ["Target", "RewardBreakdown", "TargetReachEnv", "compute_reward",
           "is_success", "observation_size", "EnvConfig"]


@dataclass(frozen=True)
class Target:
    x: float
    y: float
    radius: float = 0.25

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("target radius must be positive")


@dataclass(frozen=True)
class RewardBreakdown:
    """Additive reward terms and the head distance they came from."""

    r1: float
    r2: float
    r3: float
    r4: float
    l: float

    @property
    def total(self) -> float:
        return self.r1 + self.r2 + self.r3 + self.r4


def compute_reward(l: float, destroyed: bool) -> RewardBreakdown:
    """Tiered proximity reward, evaluated tightest radius first.

    r1: 10 inside 0.25, 5 inside 0.5, 1 inside 1 (strict bounds);
    r2: 250 inside 0.1; r3: -l^2; r4: -5000 on destruction.
    """
    if l < 0.0:
        raise ValueError("distance must be non-negative")
    if l < 0.25:
        r1 = 10.0
    elif l < 0.5:
        r1 = 5.0
    elif l < 1.0:
        r1 = 1.0
    else:
        r1 = 0.0
    r2 = 250.0 if l < 0.1 else 0.0
    r3 = -l * l
    r4 = -5000.0 if destroyed else 0.0
    return RewardBreakdown(r1=r1, r2=r2, r3=r3, r4=r4, l=l)


def is_success(l: float, target_radius: float) -> bool:
    """Strict touch test."""
    return l < target_radius


def observation_size(m: int, n: int, with_membrane: bool) -> int:
    base = 2 * (m * n + 1)
    return base + m if with_membrane else base


@dataclass(frozen=True)
class EnvConfig:
    """Task constants (sampling disc, radii, timing)."""

    target_center: tuple = (4.0, 0.0)
    target_sample_radius: float = 8.0
    touch_radius: float = 0.25          # evaluation success radius
    goal_radius: float = 0.1            # training termination / r2 radius
    agent_hz: float = 2.0
    time_limit_s: float = 50.0
    sample_on_circle: bool = False      # True: circumference-only sampling

    @property
    def inner_steps(self) -> int:
        return INNER_STEPS_PER_ACTION

    @property
    def max_agent_steps(self) -> int:
        return int(round(self.time_limit_s * self.agent_hz))


class TargetReachEnv:
    """Gym-style reset/step environment around one snake + controller."""

    def __init__(self, controller: str = "spikingsoft", m: int = 3,
                 n: int = 3, mode: str = "train",
                 config: EnvConfig | None = None,
                 snake_config: SnakeConfig | None = None,
                 material: RodMaterial | None = None,
                 env_physics: EnvPhysics | None = None,
                 dts: DtsParams | None = None,
                 cpg=None,
                 bounds: DestructionBounds | None = None,
                 seed: int = 0):
        if mode not in ("train", "eval"):
            raise ValueError("mode must be 'train' or 'eval'")
        self.mode = mode
        self.config = config if config is not None else EnvConfig()
        sc = snake_config if snake_config is not None else SnakeConfig(
            m=m, n=n)
        if (sc.m, sc.n) != (m, n):
            raise ValueError("snake_config disagrees with (m, n)")
        self.snake = Snake(sc, material=material, env=env_physics,
                           bounds=bounds if bounds is not None
                           else DestructionBounds())
        self.controller = make_controller(controller, m, dts=dts, cpg=cpg)
        self.physics_dt = dts.dt if dts is not None else 0.001
        self.m = m
        self.n = n
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.target: Target | None = None
        self.agent_steps = 0
        self.game_time = 0.0
        self.silence = SilenceCounter()
        self._done = True

    # -- spaces ----------------------------------------------------------
    @property
    def observation_size(self) -> int:
        return observation_size(self.m, self.n,
                                self.controller.has_membrane_obs)

    @property
    def action_size(self) -> int:
        return self.controller.action_size

    @property
    def action_low(self):
        return self.controller.action_low

    @property
    def action_high(self):
        return self.controller.action_high

    @property
    def success_radius(self) -> float:
        return (self.config.goal_radius if self.mode == "train"
                else self.config.touch_radius)

    # -- episode flow -----------------------------------------------------
    def _sample_target(self) -> Target:
        cx, cy = self.config.target_center
        rad = self.config.target_sample_radius
        ang = self.rng.uniform(0.0, 2.0 * math.pi)
        if self.config.sample_on_circle:
            r = rad
        else:
            r = rad * math.sqrt(self.rng.uniform(0.0, 1.0))
        return Target(x=cx + r * math.cos(ang), y=cy + r * math.sin(ang),
                      radius=self.config.touch_radius)

    def _observe(self):
        pos = self.snake.rod.node_positions
        obs = np.empty(self.observation_size)
        nn = pos.shape[0]
        obs[:nn] = self.target.x - pos[:, 0]
        obs[nn:2 * nn] = self.target.y - pos[:, 1]
        if self.controller.has_membrane_obs:
            obs[2 * nn:] = self.controller.membrane_potentials()
        if not np.all(np.isfinite(obs)):
            # terminal observation of a numerically destroyed state
            obs = np.nan_to_num(obs, nan=0.0, posinf=0.0, neginf=0.0)
        return obs

    def head_distance(self) -> float:
        hx, hy = self.snake.head_xy()
        return math.hypot(self.target.x - hx, self.target.y - hy)

    def reset(self, seed: int | None = None):
        """New episode; returns (observation, info with the target)."""
        if seed is not None:
            self.rng = np.random.Generator(np.random.PCG64(seed))
        self.snake.rebuild()
        self.controller.reset()
        self.target = self._sample_target()
        self.agent_steps = 0
        self.game_time = 0.0
        self.silence = SilenceCounter()
        self._done = False
        return self._observe(), {"target": self.target}

    def step(self, action):
        """One agent step: run the controller interval, score the outcome.

        Returns (observation, reward, terminated, info); info carries the
        reward breakdown, the silence counter delta, game time and flags.
        """
        if self._done:
            raise RuntimeError("step() called on a finished episode; "
                               "call reset() first")
        action = np.asarray(action, float)
        if action.shape != (self.action_size,):
            raise ValueError(f"action shape {action.shape} does not match "
                             f"the {self.controller.name} controller's "
                             f"({self.action_size},)")
        clamped = np.clip(action, self.action_low, self.action_high)
        self.controller.set_action(clamped)
        l_pre = self.head_distance()
        result, _ = self.controller.run_interval(
            self.snake, self.config.inner_steps,
            target=(self.target.x, self.target.y),
            success_radius=self.success_radius,
            pos_limit=self.snake.bounds.position_limit,
            strain_factor=self.snake.bounds.strain_factor)

        self.agent_steps += 1
        self.game_time += result.steps_done * self.physics_dt
        self.silence.add(result.silent_steps, result.command_steps)

        destroyed = result.destroyed
        l = self._safe_distance(fallback=l_pre)
        breakdown = compute_reward(l, destroyed)
        success = result.success
        timeout = self.agent_steps >= self.config.max_agent_steps
        terminated = success or destroyed or timeout
        self._done = terminated
        info = {
            "breakdown": breakdown,
            "silence": SilenceCounter(result.silent_steps,
                                      result.command_steps),
            "silence_rate": self.silence.rate,
            "game_time": self.game_time,
            "success": success,
            "destroyed": destroyed,
            "timeout": timeout and not success and not destroyed,
            "distance": l,
        }
        return self._observe(), breakdown.total, terminated, info

    def _safe_distance(self, fallback: float) -> float:
        """Head-target distance; a numerically dead head keeps the last
        finite pre-interval distance so r3 stays on its physical scale."""
        hx, hy = self.snake.head_xy()
        if not (math.isfinite(hx) and math.isfinite(hy)):
            return fallback
        return math.hypot(self.target.x - hx, self.target.y - hy)

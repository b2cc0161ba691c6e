"""Flat key=value configuration files.

One file can carry physics, task and trainer settings; unknown keys are
rejected so typos fail loudly.  CLI flags override file values.  Defaults
reproduce the experiment constants: neuron gains (c_q=5, c_t=0.1, tau=0.1),
rod material (density 1, Young 50, Poisson 0.5, damping 2e-3, radius 0.25),
gravity -9.80665, Froude 0.1 with mu = length / (froude * |gravity|) and the
(backward, forward, lateral) friction multipliers (1, 1e-4, 1), dt = 1e-3,
target disc centered (4, 0) with radius 8.
"""

from dataclasses import dataclass, field, fields, replace

from softsnake.controllers import CpgParams
from softsnake.env import EnvConfig
from softsnake.neuron import DtsParams
from softsnake.rod import EnvPhysics, RodMaterial
from softsnake.snake import DestructionBounds, SnakeConfig

__all__ = ["PhysicsConfig", "parse_kv_text", "load_config", "save_config",
           "DEFAULT_CONFIG"]


@dataclass(frozen=True)
class PhysicsConfig:
    """Everything needed to build a snake, its environment and controllers."""

    # neuron
    c_q: float = 5.0
    c_t: float = 0.1
    tau: float = 0.1
    dt: float = 0.001
    # rod material
    density: float = 1.0
    rayleigh_damping: float = 2e-3
    poisson_ratio: float = 0.5
    youngs_modulus: float = 50.0
    radius: float = 0.25
    # environment
    gravity: float = -9.80665
    froude: float = 0.1
    friction_backward: float = 1.0
    friction_forward: float = 0.0001
    friction_lateral: float = 1.0
    # snake geometry
    segments: int = 3
    nodes_per_segment: int = 3
    segment_length: float = 1.0
    # task
    target_center_x: float = 4.0
    target_center_y: float = 0.0
    target_sample_radius: float = 8.0
    touch_radius: float = 0.25
    goal_radius: float = 0.1
    agent_hz: float = 2.0
    time_limit_s: float = 50.0
    sample_on_circle: bool = False
    # destruction
    position_limit: float = 1e3
    strain_factor: float = 3.0
    # CPG constants
    cpg_amplitude_ratio: float = 2.30
    cpg_self_inhibit: float = 10.05
    cpg_mutual_inhibit: float = 2.18
    cpg_discharge_rate: float = 0.56
    cpg_adaption_rate: float = 1.76
    cpg_coupling_down: float = 9.13
    cpg_coupling_up: float = 0.73
    cpg_torque_gain: float = 0.1
    cpg_drive_bias: float = 0.2

    # -- builders ----------------------------------------------------------
    def dts_params(self) -> DtsParams:
        return DtsParams(c_q=self.c_q, c_t=self.c_t, tau=self.tau,
                         dt=self.dt)

    def material(self) -> RodMaterial:
        return RodMaterial(density=self.density,
                           youngs_modulus=self.youngs_modulus,
                           poisson_ratio=self.poisson_ratio,
                           rayleigh_damping=self.rayleigh_damping,
                           base_radius=self.radius)

    def snake_config(self, m: int | None = None,
                     n: int | None = None) -> SnakeConfig:
        return SnakeConfig(m=m if m is not None else self.segments,
                           n=n if n is not None else self.nodes_per_segment,
                           node_radius=self.radius,
                           segment_length=self.segment_length)

    def env_physics(self, snake_config: SnakeConfig) -> EnvPhysics:
        return EnvPhysics.for_rod(
            self.material(), snake_config.total_length, snake_config.n_nodes,
            gravity=self.gravity, froude=self.froude,
            friction_coeffs=(self.friction_backward, self.friction_forward,
                             self.friction_lateral))

    def env_config(self) -> EnvConfig:
        return EnvConfig(target_center=(self.target_center_x,
                                        self.target_center_y),
                         target_sample_radius=self.target_sample_radius,
                         touch_radius=self.touch_radius,
                         goal_radius=self.goal_radius,
                         agent_hz=self.agent_hz,
                         time_limit_s=self.time_limit_s,
                         sample_on_circle=self.sample_on_circle)

    def bounds(self) -> DestructionBounds:
        return DestructionBounds(position_limit=self.position_limit,
                                 strain_factor=self.strain_factor)

    def cpg_params(self) -> CpgParams:
        return CpgParams(amplitude_ratio=self.cpg_amplitude_ratio,
                         self_inhibit_weight=self.cpg_self_inhibit,
                         mutual_inhibit_weight=self.cpg_mutual_inhibit,
                         discharge_rate=self.cpg_discharge_rate,
                         adaption_rate=self.cpg_adaption_rate,
                         coupling_weights=(self.cpg_coupling_down,
                                           self.cpg_coupling_up),
                         torque_gain=self.cpg_torque_gain,
                         drive_bias=self.cpg_drive_bias)


DEFAULT_CONFIG = PhysicsConfig()


def parse_kv_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got "
                             f"{raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(name: str, kind, raw: str):
    if kind is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if kind is int:
        return int(raw)
    return float(raw)


def load_config(path=None, overrides: dict | None = None) -> PhysicsConfig:
    """Config from an optional file plus optional override mapping."""
    values = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_kv_text(fh.read()))
    if overrides:
        values.update({k: str(v) for k, v in overrides.items()})
    valid = {f.name: f.type for f in fields(PhysicsConfig)}
    kinds = {f.name: type(getattr(DEFAULT_CONFIG, f.name))
             for f in fields(PhysicsConfig)}
    kwargs = {}
    for key, raw in values.items():
        if key not in valid:
            raise ValueError(f"unknown config key {key!r}")
        kwargs[key] = _coerce(key, kinds[key], raw)
    return replace(DEFAULT_CONFIG, **kwargs)


def save_config(path, config: PhysicsConfig) -> None:
    from softsnake.outputs import atomic_write_text, format_value
    lines = [f"{f.name} = {format_value(getattr(config, f.name))}"
             for f in fields(PhysicsConfig)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def build_env(config: PhysicsConfig, controller: str, m: int, n: int,
              mode: str, seed: int = 0):
    """Assemble a target-reaching environment from one config."""
    from softsnake.env import TargetReachEnv
    sc = config.snake_config(m, n)
    return TargetReachEnv(controller=controller, m=sc.m, n=sc.n, mode=mode,
                          config=config.env_config(), snake_config=sc,
                          material=config.material(),
                          env_physics=config.env_physics(sc),
                          dts=config.dts_params(),
                          cpg=config.cpg_params(),
                          bounds=config.bounds(), seed=seed)

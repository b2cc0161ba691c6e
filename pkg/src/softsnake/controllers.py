"""Segment controllers behind one interval interface.

All controllers issue per-segment torque couples through the identical
mechanism (+gamma at the segment's first node, -gamma at its last) and drive
the rod for a fixed number of physics substeps per agent action.  The
spiking controller holds its thresholds fixed for the whole interval and
lets the neurons react to the measured deformation every substep; the
vanilla controller holds raw torques; the CPG controller integrates a
Matsuoka oscillator pair per segment.
"""

from dataclasses import dataclass

import numpy as np

from softsnake import _ref
from softsnake.backend import kernels
from softsnake.neuron import DtsParams, thresholds_from_action
from softsnake.rod import _phys_block
from softsnake.snake import COUPLE_SIGN, Snake

__all__ = [
    "SilenceCounter", "IntervalResult", "CpgParams",
    "SpikingSoftController", "VanillaController", "CpgController",
    "RandomPolicy", "random_controller", "make_controller",
    "spikingsoft_control_interval", "vanilla_control_interval",
    "cpg_control_interval",
    "STATUS_OK", "STATUS_SUCCESS", "STATUS_DESTROYED",
    "INNER_STEPS_PER_ACTION",
]

STATUS_OK = _ref.STATUS_OK
STATUS_SUCCESS = _ref.STATUS_SUCCESS
STATUS_DESTROYED = _ref.STATUS_DESTROYED

# agent at 2 Hz over dt = 1 ms physics
INNER_STEPS_PER_ACTION = 500


@dataclass
class SilenceCounter:
    """Exact count of zero-output controller substeps (pooled segments)."""

    zero_output_steps: int = 0
    total_steps: int = 0

    def add(self, zeros: int, total: int) -> None:
        if zeros > total:
            raise ValueError("more silent steps than steps")
        self.zero_output_steps += zeros
        self.total_steps += total

    @property
    def rate(self) -> float:
        if self.total_steps == 0:
            return 0.0
        return self.zero_output_steps / self.total_steps


@dataclass(frozen=True)
class IntervalResult:
    """Outcome of one control interval."""

    steps_done: int
    status: int
    silent_steps: int
    command_steps: int

    @property
    def success(self) -> bool:
        return self.status == STATUS_SUCCESS

    @property
    def destroyed(self) -> bool:
        return self.status == STATUS_DESTROYED


@dataclass(frozen=True)
class CpgParams:
    """Matsuoka oscillator constants (shared across segments).

    ``discharge_rate``/``adaption_rate`` set the membrane and adaptation time
    constants in seconds; their reciprocals enter the state equations.  This
    is the mapping under which the documented constant set actually
    oscillates.  ``self_inhibit_weight`` scales the adaptation feedback,
    ``mutual_inhibit_weight`` the antagonist inhibition.
    ``coupling_weights`` = (descending, ascending) inhibitory neighbour
    weights on the rectified outputs.  The tonic magnitude drives both
    neurons of a pair; the tonic sign adds a ``drive_bias`` differential
    toward flexor or extensor (steering), so flipping the drive sign flips
    the output.  Output is ``amplitude_ratio * (flexor - extensor)``, turned
    into a couple strength by ``torque_gain``.
    """

    amplitude_ratio: float = 2.30
    self_inhibit_weight: float = 10.05
    mutual_inhibit_weight: float = 2.18
    discharge_rate: float = 0.56
    adaption_rate: float = 1.76
    coupling_weights: tuple = (9.13, 0.73)
    torque_gain: float = 0.1
    drive_bias: float = 0.2

    def __post_init__(self):
        if self.discharge_rate <= 0.0 or self.adaption_rate <= 0.0:
            raise ValueError("rates must be positive")

    def block(self):
        arr = np.zeros(_ref.CPG_SIZE)
        arr[_ref.C_INV_TAU_R] = 1.0 / self.discharge_rate
        arr[_ref.C_INV_TAU_A] = 1.0 / self.adaption_rate
        arr[_ref.C_MUTUAL] = self.mutual_inhibit_weight
        arr[_ref.C_SELF] = self.self_inhibit_weight
        arr[_ref.C_W_DOWN] = self.coupling_weights[0]
        arr[_ref.C_W_UP] = self.coupling_weights[1]
        arr[_ref.C_AMPLITUDE] = self.amplitude_ratio
        arr[_ref.C_GAIN] = self.torque_gain
        arr[_ref.C_DRIVE_BIAS] = self.drive_bias
        return arr


def _interval_args(snake: Snake, dt, pos_limit, strain_factor,
                   target, success_radius):
    rod = snake.rod
    phys = _phys_block(snake.material, snake.env, dt,
                       pos_limit=pos_limit, strain_factor=strain_factor)
    if target is None:
        tx, ty, sr = 0.0, 0.0, -1.0
    else:
        tx, ty = float(target[0]), float(target[1])
        sr = float(success_radius)
    rod_args = (rod.node_positions, rod.node_velocities, rod.element_frames,
                rod.element_angular_velocities, rod.external_forces,
                rod.external_torques, rod.element_rest_lengths,
                rod.voronoi_rest_lengths, rod.node_masses,
                rod.element_inertia, phys)
    return rod_args, tx, ty, sr


_EMPTY = np.zeros((0, 0))


def spikingsoft_control_interval(snake: Snake, neuron_u, neuron_o,
                                 thr_n, thr_p, params: DtsParams,
                                 inner_steps: int, *,
                                 target=None, success_radius: float = -1.0,
                                 pos_limit: float = 1e3,
                                 strain_factor: float = 3.0,
                                 record: bool = False):
    """Run the spiking loop for one interval with fixed thresholds.

    Neuron state arrays are updated in place and persist across intervals.
    Returns (IntervalResult, traces) with traces = (spikes, deformations,
    torques) arrays of shape (steps_done, m) when ``record`` else None.
    """
    m = len(neuron_u)
    rod_args, tx, ty, sr = _interval_args(snake, params.dt, pos_limit,
                                          strain_factor, target,
                                          success_radius)
    if record:
        t_spk = np.zeros((inner_steps, m))
        t_def = np.zeros((inner_steps, m))
        t_gam = np.zeros((inner_steps, m))
    else:
        t_spk = t_def = t_gam = _EMPTY
    steps_done, status, silent = kernels.spiking_interval(
        *rod_args, neuron_u, neuron_o, thr_n, thr_p,
        params.c_q, params.c_t, params.tau,
        snake.seg_a, snake.seg_b, snake.seg_c,
        snake.first_el, snake.last_el, COUPLE_SIGN,
        inner_steps, tx, ty, sr, 0,
        1 if record else 0, t_spk, t_def, t_gam)
    snake.rod.step_count += int(steps_done)
    result = IntervalResult(int(steps_done), int(status), int(silent),
                            int(steps_done) * m)
    traces = None
    if record:
        traces = (t_spk[:result.steps_done], t_def[:result.steps_done],
                  t_gam[:result.steps_done])
    return result, traces


def vanilla_control_interval(snake: Snake, torques, inner_steps: int, *,
                             dt: float = 0.001,
                             target=None, success_radius: float = -1.0,
                             pos_limit: float = 1e3,
                             strain_factor: float = 3.0,
                             record: bool = False):
    """Hold clamped per-segment torques for the whole interval."""
    gammas = np.clip(np.asarray(torques, float), -50.0, 50.0)
    m = len(gammas)
    rod_args, tx, ty, sr = _interval_args(snake, dt, pos_limit,
                                          strain_factor, target,
                                          success_radius)
    if record:
        t_def = np.zeros((inner_steps, m))
        t_gam = np.zeros((inner_steps, m))
    else:
        t_def = t_gam = _EMPTY
    steps_done, status, zeros = kernels.vanilla_interval(
        *rod_args, gammas, snake.seg_a, snake.seg_b, snake.seg_c,
        snake.first_el, snake.last_el, COUPLE_SIGN,
        inner_steps, tx, ty, sr, 0,
        1 if record else 0, t_def, t_gam)
    snake.rod.step_count += int(steps_done)
    result = IntervalResult(int(steps_done), int(status), int(zeros),
                            int(steps_done) * m)
    traces = None
    if record:
        traces = (t_def[:result.steps_done], t_gam[:result.steps_done])
    return result, traces


def cpg_control_interval(snake: Snake, cpg_state, tonic_inputs,
                         params: CpgParams, inner_steps: int, *,
                         dt: float = 0.001,
                         target=None, success_radius: float = -1.0,
                         pos_limit: float = 1e3, strain_factor: float = 3.0,
                         record: bool = False):
    """Integrate the oscillator network and drive the couples each substep.

    ``cpg_state`` is the (xf, xe, ff, fe) array quadruple, updated in place.
    """
    xf, xe, ff, fe = cpg_state
    tonic = np.asarray(tonic_inputs, float)
    if not np.all(np.isfinite(tonic)):
        raise ValueError("non-finite tonic inputs")
    m = len(xf)
    rod_args, tx, ty, sr = _interval_args(snake, dt, pos_limit,
                                          strain_factor, target,
                                          success_radius)
    if record:
        t_def = np.zeros((inner_steps, m))
        t_gam = np.zeros((inner_steps, m))
    else:
        t_def = t_gam = _EMPTY
    steps_done, status, zeros = kernels.cpg_interval(
        *rod_args, xf, xe, ff, fe, tonic, params.block(),
        snake.seg_a, snake.seg_b, snake.seg_c,
        snake.first_el, snake.last_el, COUPLE_SIGN,
        inner_steps, tx, ty, sr, 0,
        1 if record else 0, t_def, t_gam)
    if not (np.all(np.isfinite(xf)) and np.all(np.isfinite(xe))):
        status = STATUS_DESTROYED
    snake.rod.step_count += int(steps_done)
    result = IntervalResult(int(steps_done), int(status), int(zeros),
                            int(steps_done) * m)
    traces = None
    if record:
        traces = (t_def[:result.steps_done], t_gam[:result.steps_done])
    return result, traces


# ---------------------------------------------------------------------------
# controller objects consumed by the environment
# ---------------------------------------------------------------------------

class SpikingSoftController:
    """One double-threshold neuron per segment; actions set the thresholds."""

    name = "spikingsoft"
    has_membrane_obs = True

    def __init__(self, m: int, params: DtsParams | None = None):
        self.m = m
        self.params = params if params is not None else DtsParams()
        self.neuron_u = np.zeros(m)
        self.neuron_o = np.zeros(m)
        self.thr_n = np.zeros(m)
        self.thr_p = np.zeros(m)

    @property
    def action_size(self) -> int:
        return 2 * self.m

    @property
    def action_low(self):
        return np.full(self.action_size, -3.25)

    @property
    def action_high(self):
        return np.full(self.action_size, 3.25)

    def reset(self) -> None:
        self.neuron_u[:] = 0.0
        self.neuron_o[:] = 0.0
        self.thr_n[:] = 0.0
        self.thr_p[:] = 0.0

    def set_action(self, action) -> None:
        a = np.asarray(action, float)
        for i in range(self.m):
            thr = thresholds_from_action(a[2 * i], a[2 * i + 1])
            self.thr_n[i] = thr.u_n
            self.thr_p[i] = thr.u_p

    def membrane_potentials(self):
        return self.neuron_u.copy()

    def run_interval(self, snake: Snake, inner_steps: int, **kw):
        return spikingsoft_control_interval(
            snake, self.neuron_u, self.neuron_o, self.thr_n, self.thr_p,
            self.params, inner_steps, **kw)


class VanillaController:
    """Per-segment torques applied directly, clamped to [-50, 50]."""

    name = "vanilla"
    has_membrane_obs = False

    def __init__(self, m: int, dt: float = 0.001):
        self.m = m
        self.dt = dt
        self.torques = np.zeros(m)

    @property
    def action_size(self) -> int:
        return self.m

    @property
    def action_low(self):
        return np.full(self.m, -50.0)

    @property
    def action_high(self):
        return np.full(self.m, 50.0)

    def reset(self) -> None:
        self.torques[:] = 0.0

    def set_action(self, action) -> None:
        self.torques = np.clip(np.asarray(action, float), -50.0, 50.0)

    def run_interval(self, snake: Snake, inner_steps: int, **kw):
        return vanilla_control_interval(snake, self.torques, inner_steps,
                                        dt=self.dt, **kw)


class CpgController:
    """Matsuoka oscillator network; actions are the tonic inputs."""

    name = "cpg"
    has_membrane_obs = False

    def __init__(self, m: int, params: CpgParams | None = None,
                 dt: float = 0.001):
        self.m = m
        self.dt = dt
        self.params = params if params is not None else CpgParams()
        self.xf = np.zeros(m)
        self.xe = np.zeros(m)
        self.ff = np.zeros(m)
        self.fe = np.zeros(m)
        self.tonic = np.zeros(m)

    @property
    def action_size(self) -> int:
        return self.m

    @property
    def action_low(self):
        return np.full(self.m, -3.25)

    @property
    def action_high(self):
        return np.full(self.m, 3.25)

    def reset(self) -> None:
        for arr in (self.xf, self.xe, self.ff, self.fe, self.tonic):
            arr[:] = 0.0

    def set_action(self, action) -> None:
        self.tonic = np.clip(np.asarray(action, float),
                             self.action_low, self.action_high)

    def run_interval(self, snake: Snake, inner_steps: int, **kw):
        return cpg_control_interval(snake, (self.xf, self.xe, self.ff,
                                            self.fe),
                                    self.tonic, self.params, inner_steps,
                                    dt=self.dt, **kw)


def random_controller(rng, action_low, action_high):
    """One uniform action over the active action box."""
    return rng.uniform(np.asarray(action_low, float),
                       np.asarray(action_high, float))


class RandomPolicy:
    """Uniform actions over a controller's action box."""

    def __init__(self, low, high, seed: int = 0):
        self.low = np.asarray(low, float)
        self.high = np.asarray(high, float)
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def __call__(self, obs):
        return random_controller(self.rng, self.low, self.high)


def make_controller(name: str, m: int, dts: DtsParams | None = None,
                    cpg: CpgParams | None = None, dt: float = 0.001):
    if name == "spikingsoft":
        p = dts if dts is not None else DtsParams(dt=dt)
        return SpikingSoftController(m, p)
    if name == "vanilla":
        return VanillaController(m, dt=dt)
    if name == "cpg":
        return CpgController(m, cpg, dt=dt)
    raise ValueError(f"unknown controller {name!r} "
                     "(choose spikingsoft, vanilla or cpg)")

"""Closed-loop mass-spring-damper driven by a double-threshold neuron.

The cart position feeds the neuron; the neuron's spike train pushes the cart.
For a wide symmetric dead band the origin is a fixed point, while narrow or
same-sign threshold bands excite self-sustained oscillations: trajectories
from different initial conditions collapse onto one closed orbit in phase
space.  ``limit_cycle_distance`` quantifies that collapse.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from softsnake.backend import kernels
from softsnake.neuron import DtsParams, Thresholds

__all__ = ["OscillatorParams", "PhasePoint", "simulate",
           "limit_cycle_distance", "OSCILLATOR_TRACE_COLUMNS"]

OSCILLATOR_TRACE_COLUMNS = ["t", "q", "q_dot", "u", "o"]


@dataclass(frozen=True)
class OscillatorParams:
    """Cart constants plus the neuron driving it.

    Defaults are the calibration used throughout: unit mass and stiffness,
    light damping, and a neuron with strong input gain so each documented
    threshold regime produces a visible closed orbit.
    """

    mass: float = 1.0
    stiffness: float = 1.0
    damping: float = 0.1
    dts: DtsParams = field(
        default_factory=lambda: DtsParams(c_q=10.0, c_t=1.0, tau=0.1,
                                          dt=0.001))
    thr: Thresholds = field(
        default_factory=lambda: Thresholds(-0.1, -0.025))

    def __post_init__(self):
        if not (self.mass > 0.0 and self.stiffness > 0.0):
            raise ValueError("mass and stiffness must be positive")
        if self.damping < 0.0:
            raise ValueError("damping must be non-negative")


@dataclass(frozen=True)
class PhasePoint:
    q: float
    q_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.q_dot)):
            raise ValueError("phase point must be finite")


class OscillatorDiverged(RuntimeError):
    def __init__(self, step_index: int):
        super().__init__(f"oscillator state became non-finite at step "
                         f"{step_index}")
        self.step_index = step_index


def simulate(params: OscillatorParams, initial: PhasePoint, steps: int):
    """Semi-implicit Euler at the neuron's dt; one neuron step per physics
    step, fed by the cart position.

    Returns a (steps, 4) array with columns (q, q_dot, u, o); row k is the
    phase point *before* step k together with the neuron outputs computed
    from it.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    out = np.empty((steps, 4))
    bad = kernels.oscillator_run(params.mass, params.stiffness,
                                 params.damping,
                                 params.dts.c_q, params.dts.c_t,
                                 params.dts.tau, params.dts.dt,
                                 params.thr.u_n, params.thr.u_p,
                                 initial.q, initial.q_dot, steps, out)
    if bad >= 0:
        raise OscillatorDiverged(int(bad))
    return out


def _directed_hausdorff(a, b):
    """max over points of a of the distance to the nearest point of b."""
    bb = (b * b).sum(axis=1)
    worst_d2 = -1.0
    worst_row = 0
    # chunk the outer set so the pairwise matrix stays small; the quadratic
    # expansion is approximate, so the winning row is re-evaluated exactly
    for lo in range(0, a.shape[0], 2048):
        chunk = a[lo:lo + 2048]
        d2 = ((chunk * chunk).sum(axis=1)[:, None] + bb[None, :]
              - 2.0 * (chunk @ b.T))
        np.maximum(d2, 0.0, out=d2)
        mins = d2.min(axis=1)
        row = int(mins.argmax())
        if mins[row] > worst_d2:
            worst_d2 = float(mins[row])
            worst_row = lo + row
    exact = ((b - a[worst_row]) ** 2).sum(axis=1).min()
    return math.sqrt(float(exact))


def limit_cycle_distance(traj_a, traj_b, transient_fraction: float = 0.5,
                         max_points: int = 2048) -> float:
    """Symmetric Hausdorff distance between post-transient phase portraits.

    The first ``transient_fraction`` of each trajectory is discarded; the
    remainders are compared as point sets (parameterization-invariant), after
    deterministic stride subsampling down to at most ``max_points`` points.
    """
    if not 0.0 <= transient_fraction < 1.0:
        raise ValueError("transient_fraction must lie in [0, 1)")
    sets = []
    for traj in (traj_a, traj_b):
        pts = np.asarray(traj, dtype=float)[:, :2]
        start = int(len(pts) * transient_fraction)
        tail = pts[start:]
        if len(tail) == 0:
            raise ValueError("post-transient window is empty")
        stride = max(1, -(-len(tail) // max_points))
        sets.append(np.ascontiguousarray(tail[::stride]))
    a, b = sets
    return max(_directed_hausdorff(a, b), _directed_hausdorff(b, a))

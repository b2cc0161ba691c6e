"""Double-threshold spiking neuron.

A leaky integrator with two thresholds ``u_n <= u_p`` and reset-to-zero.
Crossing the *positive* threshold emits a negative spike and vice versa, so
the torque it drives is restorative.  When both thresholds share a sign the
zero reset lies outside the dead band and the neuron fires continuously,
which is what lets one scalar action pair select qualitatively different
output patterns.

Discrete update (step ``k`` -> ``k+1``)::

    u' = (1 - |o|) * (1 - dt/tau) * u + (dt/tau) * C_q * q
    o' = -1 if u' > u_p,  +1 if u' < u_n,  else 0
    torque = C_t * o'

The spike decision uses the freshly updated potential; a nonzero spike wipes
the leak term on the following step, so after any spike the potential equals
the weighted input exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from softsnake.backend import kernels

__all__ = [
    "DtsParams",
    "Thresholds",
    "NeuronState",
    "step",
    "thresholds_from_action",
    "reset",
    "run_sequence",
    "fig_demo_protocol",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ["k", "t", "q", "weighted_input", "u", "o", "torque"]


@dataclass(frozen=True)
class DtsParams:
    """Neuron constants: input gain, torque gain, time constant, step size."""

    c_q: float = 5.0
    c_t: float = 0.1
    tau: float = 0.1
    dt: float = 0.001

    def __post_init__(self):
        if not (self.tau > 0.0 and self.dt > 0.0):
            raise ValueError("tau and dt must be positive")
        if not self.dt < self.tau:
            raise ValueError("dt must be smaller than tau "
                             "(leak factor must lie in (0, 1))")


@dataclass(frozen=True)
class Thresholds:
    """Firing thresholds; u_n == u_p is tolerated as a degenerate band."""

    u_n: float
    u_p: float

    def __post_init__(self):
        if not (math.isfinite(self.u_n) and math.isfinite(self.u_p)):
            raise ValueError("thresholds must be finite")
        if self.u_n > self.u_p:
            raise ValueError(f"u_n={self.u_n} must not exceed u_p={self.u_p}")


@dataclass(frozen=True)
class NeuronState:
    """Membrane potential and the spike emitted on the previous step."""

    u: float = 0.0
    o_prev: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.u):
            raise ValueError("membrane potential must be finite")
        if self.o_prev not in (-1.0, 0.0, 1.0):
            raise ValueError("previous spike must be -1, 0 or +1")


def step(state: NeuronState, params: DtsParams, thr: Thresholds,
         q: float) -> tuple[NeuronState, float, float]:
    """Advance one step; returns (new state, spike, torque)."""
    if not math.isfinite(q):
        raise ValueError(f"non-finite neuron input q={q!r} "
                         "(upstream simulation diverged?)")
    win = params.dt / params.tau
    u = (1.0 - abs(state.o_prev)) * (1.0 - win) * state.u \
        + win * params.c_q * q
    if u > thr.u_p:
        o = -1.0
    elif u < thr.u_n:
        o = 1.0
    else:
        o = 0.0
    return NeuronState(u=u, o_prev=o), o, params.c_t * o


def thresholds_from_action(mu: float, sigma: float) -> Thresholds:
    """Map an action pair (mean, interval) to thresholds.

    ``u_n = mu - |sigma|`` and ``u_p = mu + |sigma|``, so the ordering
    invariant holds for any finite inputs.
    """
    if not (math.isfinite(mu) and math.isfinite(sigma)):
        raise ValueError("action components must be finite")
    return Thresholds(u_n=mu - abs(sigma), u_p=mu + abs(sigma))


def reset(state: NeuronState | None = None) -> NeuronState:
    """Fresh state for an episode boundary: zero potential, no spike."""
    return NeuronState(u=0.0, o_prev=0.0)


def run_sequence(q, thresholds, params: DtsParams,
                 state: NeuronState | None = None):
    """Run the neuron over an input array.

    ``thresholds`` is either a single :class:`Thresholds` or a sequence of
    per-step (u_n, u_p) pairs.  Returns ``(u_trace, o_trace, final_state)``.
    """
    q = np.ascontiguousarray(q, dtype=np.float64)
    n = q.shape[0]
    if isinstance(thresholds, Thresholds):
        un = np.full(n, thresholds.u_n)
        up = np.full(n, thresholds.u_p)
    else:
        arr = np.asarray(thresholds, dtype=np.float64)
        un = np.ascontiguousarray(arr[:, 0])
        up = np.ascontiguousarray(arr[:, 1])
        if np.any(un > up):
            raise ValueError("per-step thresholds must satisfy u_n <= u_p")
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite neuron input sequence")
    if state is None:
        state = NeuronState()
    out_u = np.empty(n)
    out_o = np.empty(n)
    u_end, o_end = kernels.dts_sequence(q, un, up, params.c_q, params.c_t,
                                        params.tau, params.dt,
                                        state.u, state.o_prev, out_u, out_o)
    return out_u, out_o, NeuronState(u=u_end, o_prev=o_end)


def fig_demo_protocol(params: DtsParams | None = None, duration: float = 2.0,
                      freq_hz: float = 1.0):
    """Sine-input replay with three threshold phases.

    Phase 1 (first half): symmetric thresholds (-0.1, 0.1), discrete
    alternating spikes.  Phase 2 (next quarter): both thresholds positive
    (0.025, 0.125), sustained positive firing.  Phase 3 (last quarter): the
    sign mirror of phase 2.  Returns the rows of the trace CSV.
    """
    if params is None:
        params = DtsParams(c_q=10.0, c_t=0.1, tau=0.1, dt=0.001)
    n = int(round(duration / params.dt))
    t = np.arange(n) * params.dt
    q = np.sin(2.0 * math.pi * freq_hz * t)
    un = np.empty(n)
    up = np.empty(n)
    p1 = t < 0.5 * duration
    p2 = (t >= 0.5 * duration) & (t < 0.75 * duration)
    p3 = t >= 0.75 * duration
    un[p1] = -0.1
    up[p1] = 0.1
    un[p2] = 0.025
    up[p2] = 0.125
    un[p3] = -0.125
    up[p3] = -0.025
    out_u = np.empty(n)
    out_o = np.empty(n)
    kernels.dts_sequence(q, un, up, params.c_q, params.c_t, params.tau,
                         params.dt, 0.0, 0.0, out_u, out_o)
    win = params.dt / params.tau
    rows = []
    for k in range(n):
        rows.append((k, t[k], q[k], win * params.c_q * q[k],
                     out_u[k], out_o[k], params.c_t * out_o[k]))
    return rows

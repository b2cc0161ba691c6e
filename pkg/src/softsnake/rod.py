"""Discrete Cosserat rod on a rigid ground plane.

Nodes carry positions/velocities, elements carry orientation frames and
body-frame angular velocities.  Stretch/shear forces follow the strain
``sigma = R^T (dr/ds) - e3`` with diagonal stiffness (GA, GA, EA); bend/twist
torques follow the inter-element curvature with stiffness (EI1, EI2, GJ).
Rayleigh damping is mass/inertia-proportional.  Ground contact is a
penalty-plus-damping normal force with direction-dependent Coulomb friction
(head-ward slip, tail-ward slip, and lateral slip each get their own
coefficient).  Time stepping is position-Verlet at a fixed dt with a single
load evaluation per step.
"""

import math
from dataclasses import dataclass

import numpy as np

from softsnake.backend import kernels
from softsnake import _ref

__all__ = [
    "RodMaterial", "EnvPhysics", "RodState", "DivergenceError",
    "build_rod", "compute_internal_loads", "apply_ground_contact",
    "step", "run", "apply_node_torque", "mechanical_energy",
    "linear_momentum", "frame_orthonormality_error", "PHYS_DT_DEFAULT",
]

PHYS_DT_DEFAULT = 0.001


class DivergenceError(RuntimeError):
    """Simulation state became non-finite (or degenerate) at a known step."""

    def __init__(self, step_index: int, detail: str = "non-finite state"):
        super().__init__(f"rod integration diverged at step {step_index}: "
                         f"{detail}")
        self.step_index = step_index


@dataclass(frozen=True)
class RodMaterial:
    """Table of material constants; shear modulus is E / (2 (1 + nu))."""

    density: float = 1.0
    youngs_modulus: float = 50.0
    poisson_ratio: float = 0.5
    rayleigh_damping: float = 2e-3
    base_radius: float = 0.25

    def __post_init__(self):
        if not (self.density > 0.0 and self.youngs_modulus > 0.0
                and self.base_radius > 0.0):
            raise ValueError("density, Young's modulus and radius must be "
                             "positive")
        if not 0.0 <= self.poisson_ratio <= 0.5:
            raise ValueError("Poisson ratio must lie in [0, 0.5]")
        if self.rayleigh_damping < 0.0:
            raise ValueError("damping must be non-negative")

    @property
    def shear_modulus(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def area(self) -> float:
        return math.pi * self.base_radius ** 2

    @property
    def second_moment(self) -> float:
        """Area moment about a transverse axis (I1 = I2 for a circle)."""
        return math.pi * self.base_radius ** 4 / 4.0

    @property
    def polar_moment(self) -> float:
        return 2.0 * self.second_moment

    def shear_diag(self):
        ga = self.shear_modulus * self.area
        return (ga, ga, self.youngs_modulus * self.area)

    def bend_diag(self):
        ei = self.youngs_modulus * self.second_moment
        return (ei, ei, self.shear_modulus * self.polar_moment)


@dataclass(frozen=True)
class EnvPhysics:
    """Gravity, ground plane, and anisotropic friction.

    ``friction_coeffs`` are the (backward, forward, lateral) multipliers on
    ``mu_base``; forward means head-ward slip along the body tangent.  The
    base coefficient follows mu = length / (froude * |gravity|).  Contact
    stiffness/damping default so a resting node penetrates well under 1% of
    its radius.
    """

    gravity: float = -9.80665
    froude: float = 0.1
    mu_base: float = 1.0
    friction_coeffs: tuple = (1.0, 0.0001, 1.0)
    ground_height: float = 0.0
    ground_enabled: bool = True
    contact_stiffness: float = 500.0
    contact_damping: float = 5.0
    slip_eps: float = 1e-6

    def __post_init__(self):
        if self.froude <= 0.0:
            raise ValueError("froude number must be positive")
        if any(c < 0.0 for c in self.friction_coeffs):
            raise ValueError("friction multipliers must be non-negative")

    @classmethod
    def for_rod(cls, material: RodMaterial, total_length: float,
                n_nodes: int, gravity: float = -9.80665, froude: float = 0.1,
                friction_coeffs: tuple = (1.0, 0.0001, 1.0),
                ground_height: float = 0.0, slip_eps: float = 1e-6):
        """Derive mu_base and contact constants from the rod being built."""
        mu = total_length / (froude * abs(gravity))
        seg = total_length / (n_nodes - 1)
        node_mass = material.density * material.area * seg
        # rest penetration = weight / k  ->  0.5% of the radius
        k_c = node_mass * abs(gravity) / (0.005 * material.base_radius)
        c_c = math.sqrt(k_c * node_mass)
        return cls(gravity=gravity, froude=froude, mu_base=mu,
                   friction_coeffs=friction_coeffs,
                   ground_height=ground_height, ground_enabled=True,
                   contact_stiffness=k_c, contact_damping=c_c,
                   slip_eps=slip_eps)

    @classmethod
    def free_space(cls):
        """No gravity, no ground: for conservation and symmetry checks."""
        return cls(gravity=0.0, ground_enabled=False)


class RodState:
    """Mutable simulation state of one rod.

    Arrays: ``node_positions``/``node_velocities`` (N, 3),
    ``element_frames`` (E, 3, 3) with director columns,
    ``element_angular_velocities`` (E, 3) in body frame,
    ``element_rest_lengths`` (E,), ``external_forces`` (N, 3) and
    ``external_torques`` (E, 3) lab-frame accumulators cleared by each step.
    """

    def __init__(self, node_positions, node_velocities, element_frames,
                 element_angular_velocities, element_rest_lengths,
                 node_masses, element_inertia):
        self.node_positions = np.ascontiguousarray(node_positions, float)
        self.node_velocities = np.ascontiguousarray(node_velocities, float)
        self.element_frames = np.ascontiguousarray(element_frames, float)
        self.element_angular_velocities = np.ascontiguousarray(
            element_angular_velocities, float)
        self.element_rest_lengths = np.ascontiguousarray(
            element_rest_lengths, float)
        self.node_masses = np.ascontiguousarray(node_masses, float)
        self.element_inertia = np.ascontiguousarray(element_inertia, float)
        n = self.node_positions.shape[0]
        if n < 2:
            raise ValueError("a rod needs at least two nodes")
        if np.any(self.element_rest_lengths <= 0.0):
            raise ValueError("rest lengths must be positive")
        e = n - 1
        self.voronoi_rest_lengths = 0.5 * (self.element_rest_lengths[:-1]
                                           + self.element_rest_lengths[1:]) \
            if e > 1 else np.zeros(0)
        self.external_forces = np.zeros((n, 3))
        self.external_torques = np.zeros((e, 3))
        self.step_count = 0

    @property
    def n_nodes(self) -> int:
        return self.node_positions.shape[0]

    @property
    def n_elements(self) -> int:
        return self.n_nodes - 1

    def copy(self) -> "RodState":
        dup = RodState(self.node_positions.copy(),
                       self.node_velocities.copy(),
                       self.element_frames.copy(),
                       self.element_angular_velocities.copy(),
                       self.element_rest_lengths.copy(),
                       self.node_masses.copy(),
                       self.element_inertia.copy())
        dup.external_forces[:] = self.external_forces
        dup.external_torques[:] = self.external_torques
        dup.step_count = self.step_count
        return dup


def _phys_block(material: RodMaterial, env: EnvPhysics, dt: float,
                pos_limit: float = np.inf, strain_factor: float = np.inf):
    phys = np.zeros(_ref.PHYS_SIZE)
    sd = material.shear_diag()
    bd = material.bend_diag()
    phys[_ref.P_DT] = dt
    phys[_ref.P_DAMPING] = material.rayleigh_damping
    phys[_ref.P_GRAVITY] = env.gravity
    phys[_ref.P_CONTACT_ON] = 1.0 if env.ground_enabled else 0.0
    phys[_ref.P_GROUND_H] = env.ground_height
    phys[_ref.P_RADIUS] = material.base_radius
    phys[_ref.P_K_CONTACT] = env.contact_stiffness
    phys[_ref.P_C_CONTACT] = env.contact_damping
    phys[_ref.P_MU_BACK] = env.friction_coeffs[0] * env.mu_base
    phys[_ref.P_MU_FWD] = env.friction_coeffs[1] * env.mu_base
    phys[_ref.P_MU_LAT] = env.friction_coeffs[2] * env.mu_base
    phys[_ref.P_SLIP_EPS] = env.slip_eps
    phys[_ref.P_SHEAR_1] = sd[0]
    phys[_ref.P_SHEAR_2] = sd[1]
    phys[_ref.P_STRETCH] = sd[2]
    phys[_ref.P_BEND_1] = bd[0]
    phys[_ref.P_BEND_2] = bd[1]
    phys[_ref.P_TWIST] = bd[2]
    phys[_ref.P_POS_LIMIT] = pos_limit
    phys[_ref.P_STRAIN_FACTOR] = strain_factor
    return phys


def _exact_frame(direction):
    """Orthonormal frame with the tangent as third column; exact for the
    axis-aligned directions used by the snake builds."""
    d3 = np.asarray(direction, float)
    if abs(d3[2]) < 0.9:
        ref = np.array([0.0, 0.0, 1.0])
    else:
        ref = np.array([1.0, 0.0, 0.0])
    d1 = np.array([ref[1] * d3[2] - ref[2] * d3[1],
                   ref[2] * d3[0] - ref[0] * d3[2],
                   ref[0] * d3[1] - ref[1] * d3[0]])
    d1 = d1 / math.sqrt(float(d1 @ d1))
    d2 = np.array([d3[1] * d1[2] - d3[2] * d1[1],
                   d3[2] * d1[0] - d3[0] * d1[2],
                   d3[0] * d1[1] - d3[1] * d1[0]])
    return np.stack([d1, d2, d3], axis=1)


def build_rod(n_nodes: int, total_length: float, material: RodMaterial,
              start_position=(0.0, 0.0, 0.0),
              direction=(-1.0, 0.0, 0.0)) -> RodState:
    """Straight rod with equally spaced nodes, resting on its radius.

    ``start_position`` is the ground-plane position of the first node; the
    build lifts all nodes by the base radius so the rod just touches a ground
    plane at z = start z.  Rest lengths are taken from the as-built geometry
    so a freshly built rod is exactly load-free.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be >= 2")
    if total_length <= 0.0:
        raise ValueError("total_length must be positive")
    d = np.asarray(direction, float)
    norm = math.sqrt(float(d @ d))
    if norm < 1e-12:
        raise ValueError("degenerate direction vector")
    d = d / norm
    start = np.asarray(start_position, float) \
        + np.array([0.0, 0.0, material.base_radius])
    spacing = total_length / (n_nodes - 1)
    pos = start[None, :] + np.arange(n_nodes)[:, None] * (spacing * d)[None, :]
    rest = np.sqrt(((pos[1:] - pos[:-1]) ** 2).sum(axis=1))
    frame = _exact_frame(d)
    frames = np.repeat(frame[None, :, :], n_nodes - 1, axis=0)

    # lumped masses: element mass split between its end nodes
    elem_mass = material.density * material.area * rest
    masses = np.zeros(n_nodes)
    masses[:-1] += 0.5 * elem_mass
    masses[1:] += 0.5 * elem_mass
    # rotational inertia density rho * I per unit length, per element
    j_t = material.density * material.second_moment * rest
    j_a = material.density * material.polar_moment * rest
    inertia = np.stack([j_t, j_t, j_a], axis=1)

    return RodState(pos, np.zeros_like(pos), frames,
                    np.zeros((n_nodes - 1, 3)), rest, masses, inertia)


def compute_internal_loads(state: RodState, material: RodMaterial):
    """Elastic plus damping loads only (no gravity/contact/external).

    Returns (node forces (N, 3) lab frame, element torques (E, 3) body
    frame).  Raises :class:`DivergenceError` on a collapsed element.
    """
    phys = _phys_block(material, EnvPhysics.free_space(), PHYS_DT_DEFAULT)
    forces = np.zeros((state.n_nodes, 3))
    torques = np.zeros((state.n_elements, 3))
    err = kernels.internal_loads(
        state.node_positions, state.node_velocities, state.element_frames,
        state.element_angular_velocities, state.element_rest_lengths,
        state.voronoi_rest_lengths, state.node_masses, state.element_inertia,
        phys, forces, torques)
    if err != 0:
        raise DivergenceError(state.step_count,
                              f"element {err - 1} collapsed to zero length")
    return forces, torques


def apply_ground_contact(state: RodState, env: EnvPhysics,
                         material: RodMaterial,
                         dt: float = PHYS_DT_DEFAULT) -> None:
    """Accumulate the current contact loads into the external forces."""
    phys = _phys_block(material, env, dt)
    kernels.contact_loads(state.node_positions, state.node_velocities,
                          state.node_masses, phys, state.external_forces)


def apply_node_torque(state: RodState, node_index: int,
                      torque_vector) -> None:
    """Accumulate a lab-frame torque at a node.

    The torque lands on the element starting at that node (the last node maps
    to the final element); nothing moves until the next step consumes the
    accumulator.
    """
    n = state.n_nodes
    if not -n <= node_index < n:
        raise IndexError(f"node index {node_index} out of range for "
                         f"{n} nodes")
    if node_index < 0:
        node_index += n
    e = min(node_index, state.n_elements - 1)
    state.external_torques[e] += np.asarray(torque_vector, float)


def step(state: RodState, material: RodMaterial, env: EnvPhysics,
         dt: float = PHYS_DT_DEFAULT) -> RodState:
    """One position-Verlet step in place (returns the same object)."""
    return run(state, material, env, dt, 1)


def run(state: RodState, material: RodMaterial, env: EnvPhysics,
        dt: float = PHYS_DT_DEFAULT, n_steps: int = 1) -> RodState:
    """Advance ``n_steps``; raises :class:`DivergenceError` on failure.

    External accumulators act on the first step only (each step clears them).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    phys = _phys_block(material, env, dt)
    bad = kernels.rod_step_n(
        state.node_positions, state.node_velocities, state.element_frames,
        state.element_angular_velocities, state.external_forces,
        state.external_torques, state.element_rest_lengths,
        state.voronoi_rest_lengths, state.node_masses, state.element_inertia,
        phys, n_steps)
    if bad >= 0:
        state.step_count += int(bad)
        raise DivergenceError(state.step_count)
    state.step_count += n_steps
    return state


# ---------------------------------------------------------------------------
# diagnostics (not on the hot path; used by tests and exports)
# ---------------------------------------------------------------------------

def linear_momentum(state: RodState):
    return (state.node_masses[:, None] * state.node_velocities).sum(axis=0)


def mechanical_energy(state: RodState, material: RodMaterial,
                      env: EnvPhysics | None = None) -> float:
    """Kinetic + elastic (+ gravitational when env given) energy."""
    v = state.node_velocities
    kin = 0.5 * float((state.node_masses * (v * v).sum(axis=1)).sum())
    w = state.element_angular_velocities
    kin += 0.5 * float((state.element_inertia * w * w).sum())

    pos = state.node_positions
    d = pos[1:] - pos[:-1]
    rl = state.element_rest_lengths
    frames = state.element_frames
    tang = d / rl[:, None]
    sig = np.einsum("eij,ej->ei", frames.transpose(0, 2, 1), tang)
    sig[:, 2] -= 1.0
    sd = np.array(material.shear_diag())
    elastic = 0.5 * float((rl[:, None] * sd[None, :] * sig * sig).sum())

    if state.n_elements > 1:
        bd = np.array(material.bend_diag())
        vor = state.voronoi_rest_lengths
        for k in range(state.n_elements - 1):
            rel = frames[k].T @ frames[k + 1]
            cs = max(-1.0, min(1.0, 0.5 * (np.trace(rel) - 1.0)))
            w3 = 0.5 * np.array([rel[2, 1] - rel[1, 2],
                                 rel[0, 2] - rel[2, 0],
                                 rel[1, 0] - rel[0, 1]])
            sn = float(np.sqrt((w3 * w3).sum()))
            th = math.atan2(sn, cs)
            phi = w3 * (th / sn) if sn > 1e-9 else w3
            kappa = phi / vor[k]
            elastic += 0.5 * float(vor[k] * (bd * kappa * kappa).sum())

    total = kin + elastic
    if env is not None and env.gravity != 0.0:
        total += float((state.node_masses * (-env.gravity)
                        * pos[:, 2]).sum())
    return total


def frame_orthonormality_error(state: RodState) -> float:
    frames = state.element_frames
    eye = np.eye(3)
    errs = [np.abs(f.T @ f - eye).max() for f in frames]
    return float(max(errs)) if errs else 0.0

import math

import numpy as np
import pytest

from softsnake.rod import (DivergenceError, EnvPhysics, RodMaterial,
                           apply_ground_contact, apply_node_torque,
                           build_rod, compute_internal_loads,
                           frame_orthonormality_error, linear_momentum,
                           mechanical_energy, run, step)

MAT = RodMaterial()
FREE = EnvPhysics.free_space()


def bent_rod(seed=0, n=6, length=5.0, material=MAT):
    rng = np.random.default_rng(seed)
    rod = build_rod(n, length, material, (0, 0, 0), (-1, 0, 0))
    rod.node_positions += 0.05 * rng.standard_normal(rod.node_positions.shape)
    rod.node_velocities += 0.2 * rng.standard_normal(rod.node_velocities.shape)
    return rod


def rotz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def mirror_state(rod):
    m = rod.copy()
    m.node_positions[:, 1] *= -1
    m.node_velocities[:, 1] *= -1
    refl = np.diag([1.0, -1.0, 1.0])
    for e in range(m.n_elements):
        m.element_frames[e] = refl @ rod.element_frames[e] @ refl
        m.element_angular_velocities[e][0] *= -1
        m.element_angular_velocities[e][2] *= -1
    return m


# -- construction -----------------------------------------------------------

def test_build_geometry():
    rod = build_rod(10, 9.0, MAT, (0, 0, 0), (-1, 0, 0))
    for i in range(10):
        assert np.array_equal(rod.node_positions[i],
                              [-float(i), 0.0, MAT.base_radius])
    assert rod.n_elements == 9
    assert np.allclose(rod.element_rest_lengths, 1.0)

    two = build_rod(2, 3.5, MAT)
    assert two.n_elements == 1
    assert two.element_rest_lengths[0] == pytest.approx(3.5)


def test_build_determinism():
    a = build_rod(7, 4.0, MAT, (1, 2, 0), (-1, 0, 0))
    b = build_rod(7, 4.0, MAT, (1, 2, 0), (-1, 0, 0))
    assert np.array_equal(a.node_positions, b.node_positions)
    assert np.array_equal(a.element_frames, b.element_frames)
    assert np.array_equal(a.node_masses, b.node_masses)


def test_build_validation():
    with pytest.raises(ValueError):
        build_rod(1, 1.0, MAT)
    with pytest.raises(ValueError):
        build_rod(3, 0.0, MAT)
    with pytest.raises(ValueError):
        build_rod(3, 1.0, MAT, direction=(0, 0, 0))


def test_material_validation():
    with pytest.raises(ValueError):
        RodMaterial(density=0.0)
    with pytest.raises(ValueError):
        RodMaterial(poisson_ratio=0.7)
    assert MAT.shear_modulus == pytest.approx(50.0 / 3.0)


# -- internal loads ----------------------------------------------------------

def test_rest_configuration_has_zero_loads():
    rod = build_rod(10, 9.0, MAT, (0, 0, 0), (-1, 0, 0))
    f, tq = compute_internal_loads(rod, MAT)
    assert np.all(f == 0.0)
    assert np.all(tq == 0.0)


def test_axial_stretch_restoring_force():
    rod = build_rod(2, 1.0, MAT, (0, 0, 0), (-1, 0, 0))
    rod.node_positions[1, 0] -= 0.1  # 10% stretch along the axis
    f, _ = compute_internal_loads(rod, MAT)
    ea = MAT.youngs_modulus * MAT.area
    # node 0 pulled toward node 1 (toward -x), node 1 pulled back
    assert f[0, 0] == pytest.approx(-0.1 * ea, rel=1e-12)
    assert f[1, 0] == pytest.approx(+0.1 * ea, rel=1e-12)
    assert np.abs(f[:, 1:]).max() < 1e-12


def test_pure_bend_torques_equal_and_opposite():
    # three nodes with frames aligned to each element: bending strain only
    alpha = 0.3
    rod = build_rod(3, 2.0, MAT, (0, 0, 0), (1, 0, 0))
    rod.node_positions[2] = rod.node_positions[1] + np.array(
        [math.cos(alpha), math.sin(alpha), 0.0])
    rod.element_frames[1] = rotz(alpha) @ rod.element_frames[1]
    f, tq = compute_internal_loads(rod, MAT)
    assert np.abs(f).max() < 1e-12
    kappa = alpha / rod.voronoi_rest_lengths[0]
    expect = MAT.youngs_modulus * MAT.second_moment * kappa
    # in-plane bend about the local d2 axis; correction terms vanish
    lab0 = rod.element_frames[0] @ tq[0]
    lab1 = rod.element_frames[1] @ tq[1]
    assert lab0[2] == pytest.approx(expect, rel=1e-9)
    assert lab1[2] == pytest.approx(-expect, rel=1e-9)
    assert np.abs(lab0 + lab1).max() < 1e-12


def test_internal_loads_match_energy_gradient():
    """Forces/torques are exactly the negative elastic-energy gradient."""
    rng = np.random.default_rng(1)
    rod = build_rod(5, 4.0, MAT, (0, 0, 0), (-1, 0, 0))
    rod.node_positions += 0.05 * rng.standard_normal(rod.node_positions.shape)
    for e in range(rod.n_elements):
        v = 0.2 * rng.standard_normal(3)
        th = np.linalg.norm(v)
        K = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
        R = (np.eye(3) + math.sin(th) / th * K
             + (1 - math.cos(th)) / th ** 2 * (K @ K))
        rod.element_frames[e] = rod.element_frames[e] @ R

    f, tq = compute_internal_loads(rod, MAT)
    h = 1e-6
    for i in range(rod.n_nodes):
        for c in range(3):
            p = rod.copy()
            p.node_positions[i, c] += h
            m = rod.copy()
            m.node_positions[i, c] -= h
            fd = -(mechanical_energy(p, MAT) - mechanical_energy(m, MAT)) \
                / (2 * h)
            assert f[i, c] == pytest.approx(fd, rel=1e-6, abs=1e-6)
    for e in range(rod.n_elements):
        for c in range(3):
            dv = np.zeros(3)
            dv[c] = h
            K = np.array([[0, -dv[2], dv[1]], [dv[2], 0, -dv[0]],
                          [-dv[1], dv[0], 0]])
            p = rod.copy()
            p.element_frames[e] = rod.element_frames[e] @ (
                np.eye(3) + K + 0.5 * K @ K)
            m = rod.copy()
            m.element_frames[e] = rod.element_frames[e] @ (
                np.eye(3) - K + 0.5 * K @ K)
            fd = -(mechanical_energy(p, MAT) - mechanical_energy(m, MAT)) \
                / (2 * h)
            assert tq[e, c] == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_collapsed_element_raises():
    rod = build_rod(3, 2.0, MAT)
    rod.node_positions[1] = rod.node_positions[0]
    with pytest.raises(DivergenceError):
        compute_internal_loads(rod, MAT)


# -- ground contact ----------------------------------------------------------

def contact_env(length=1.0, n_nodes=2):
    return EnvPhysics.for_rod(MAT, length, n_nodes)


def test_no_contact_above_ground():
    rod = build_rod(2, 1.0, MAT)
    rod.node_positions[:, 2] += 0.3
    env = contact_env()
    apply_ground_contact(rod, env, MAT)
    assert np.all(rod.external_forces == 0.0)


def test_lateral_friction_magnitude():
    env = contact_env()
    rod = build_rod(2, 1.0, MAT, (0, 0, 0), (-1, 0, 0))
    pen = 0.001
    rod.node_positions[:, 2] -= pen
    rod.node_velocities[:, 1] = 0.1  # lateral slide (body along x)
    apply_ground_contact(rod, env, MAT)
    fn = env.contact_stiffness * pen
    mu_lat = env.friction_coeffs[2] * env.mu_base
    for i in range(2):
        assert rod.external_forces[i, 2] == pytest.approx(fn, rel=1e-12)
        assert rod.external_forces[i, 1] == pytest.approx(-mu_lat * fn,
                                                          rel=1e-6)


def test_forward_vs_backward_friction_ratio():
    env = contact_env()
    fn_forces = {}
    for sign in (+1.0, -1.0):
        rod = build_rod(2, 1.0, MAT, (0, 0, 0), (-1, 0, 0))
        pen = 0.001
        rod.node_positions[:, 2] -= pen
        # body lies along -x with the head at node 0: +x slip is head-ward
        rod.node_velocities[:, 0] = sign * 0.1
        apply_ground_contact(rod, env, MAT)
        fn_forces[sign] = abs(rod.external_forces[0, 0])
    ratio = fn_forces[+1.0] / fn_forces[-1.0]
    assert ratio == pytest.approx(1e-4, rel=1e-3)


def test_friction_stop_clamp_never_reverses_slip():
    env = contact_env()
    rod = build_rod(2, 1.0, MAT, (0, 0, 0), (-1, 0, 0))
    rod.node_positions[:, 2] -= 0.002
    rod.node_velocities[:, 1] = 1e-4  # tiny slip: clamp active
    apply_ground_contact(rod, env, MAT)
    dv = rod.external_forces[0, 1] * 0.001 / rod.node_masses[0]
    assert abs(dv) <= 1e-4 + 1e-18


# -- stepping properties -----------------------------------------------------

def test_free_rest_rod_is_exact_equilibrium():
    rod = build_rod(8, 7.0, MAT, (0, 0, 0), (-1, 0, 0))
    before = rod.node_positions.copy()
    run(rod, MAT, FREE, 0.001, 50)
    assert np.array_equal(rod.node_positions, before)
    assert np.all(rod.node_velocities == 0.0)


def test_momentum_conservation_free_rod():
    mat = RodMaterial(rayleigh_damping=0.0)
    rod = bent_rod(seed=2, material=mat, n=10, length=9.0)
    p0 = linear_momentum(rod)
    run(rod, mat, FREE, 0.001, 10_000)
    p1 = linear_momentum(rod)
    assert np.abs(p1 - p0).max() / np.abs(p0).max() < 1e-8


def test_energy_non_increasing_with_damping():
    mat = RodMaterial(rayleigh_damping=0.5)
    rod = build_rod(6, 5.0, mat, (0, 0, 0), (-1, 0, 0))
    rod.node_positions[:, 1] += 0.3 * np.sin(np.linspace(0, 3, 6))
    e_prev = mechanical_energy(rod, mat)
    for _ in range(5000):
        run(rod, mat, FREE, 0.001, 1)
        e_now = mechanical_energy(rod, mat)
        assert e_now - e_prev <= 1e-6 * max(e_prev, 1e-12)
        e_prev = e_now


def test_mirror_symmetry_exact():
    env = EnvPhysics.for_rod(MAT, 9.0, 10)
    rod_a = bent_rod(seed=3, n=10, length=9.0)
    rod_b = mirror_state(rod_a)
    for k in range(300):
        z = 0.2 * math.sin(0.02 * k)
        apply_node_torque(rod_a, 0, (0.0, 0.0, z))
        apply_node_torque(rod_b, 0, (0.0, 0.0, -z))
        run(rod_a, MAT, env, 0.001, 1)
        run(rod_b, MAT, env, 0.001, 1)
    back = mirror_state(rod_b)
    assert np.abs(back.node_positions - rod_a.node_positions).max() < 1e-9
    assert np.abs(back.node_velocities - rod_a.node_velocities).max() < 1e-9


def test_frame_orthonormality_maintained():
    env = EnvPhysics.for_rod(MAT, 5.0, 6)
    rod = bent_rod(seed=4)
    run(rod, MAT, env, 0.001, 5000)
    assert frame_orthonormality_error(rod) < 1e-8


def test_step_determinism():
    results = []
    for _ in range(2):
        rod = bent_rod(seed=5)
        env = EnvPhysics.for_rod(MAT, 5.0, 6)
        run(rod, MAT, env, 0.001, 2000)
        results.append((rod.node_positions.copy(),
                        rod.node_velocities.copy(),
                        rod.element_frames.copy()))
    for a, b in zip(*results):
        assert np.array_equal(a, b)


def test_divergence_error_carries_step_index():
    mat = RodMaterial(youngs_modulus=1e12, rayleigh_damping=0.0)
    rod = bent_rod(seed=6, material=mat)
    with pytest.raises(DivergenceError) as exc:
        run(rod, mat, FREE, 0.05, 10_000)
    assert exc.value.step_index < 10_000


# -- torque accumulators ------------------------------------------------------

def test_apply_node_torque_accumulator_semantics():
    rod = build_rod(4, 3.0, MAT)
    before = rod.node_positions.copy()
    apply_node_torque(rod, 0, (0.0, 0.0, 0.0))
    assert np.all(rod.external_torques == 0.0)
    apply_node_torque(rod, 1, (0.0, 0.0, 0.5))
    apply_node_torque(rod, 2, (0.0, 0.0, -0.5))
    # equal and opposite lab torques cancel in the accumulator sum
    assert np.abs(rod.external_torques.sum(axis=0)).max() == 0.0
    assert np.array_equal(rod.node_positions, before)
    # the last node maps onto the final element
    apply_node_torque(rod, 3, (0.0, 1.0, 0.0))
    assert rod.external_torques[2, 1] == 1.0
    with pytest.raises(IndexError):
        apply_node_torque(rod, 4, (0, 0, 1))


def test_couple_on_free_rod_conserves_momentum_while_bending():
    mat = RodMaterial(rayleigh_damping=0.0)
    rod = build_rod(6, 5.0, mat, (0, 0, 0), (-1, 0, 0))
    for _ in range(2000):
        apply_node_torque(rod, 0, (0.0, 0.0, 0.4))
        apply_node_torque(rod, 5, (0.0, 0.0, -0.4))
        run(rod, mat, FREE, 0.001, 1)
    # the rod visibly bends...
    assert np.abs(rod.node_positions[:, 1]).max() > 0.05
    # ...but pure couples add no linear momentum
    p = linear_momentum(rod)
    assert np.abs(p).max() < 1e-10


def test_grounded_couples_produce_lateral_undulation():
    env = EnvPhysics.for_rod(MAT, 5.0, 6)
    rod = build_rod(6, 5.0, MAT, (0, 0, 0), (-1, 0, 0))
    for k in range(1500):
        apply_node_torque(rod, 0, (0.0, 0.0, -0.3))
        apply_node_torque(rod, 5, (0.0, 0.0, 0.3))
        run(rod, MAT, env, 0.001, 1)
    assert np.abs(rod.node_positions[:, 1]).max() > 2e-3

"""Pure-Python reference kernels for the simulation hot loops.

Every function here has a compiled twin in ``_core.pyx`` with identical
floating-point semantics (same expression trees, same evaluation order, FMA
contraction disabled on the compiled side), so the two backends produce
bit-identical trajectories.  This module is the readable ground truth; the
extension is the fast path selected by :mod:`softsnake.backend`.

Conventions
-----------
* Rod state arrays: ``pos``/``vel`` are (N, 3) node quantities; ``frames`` is
  (E, 3, 3) with element rotation matrices whose *columns* are the local
  directors (lab = R @ body); ``omega`` is (E, 3) body-frame angular velocity.
* ``phys`` is a flat float64 parameter block, laid out per the ``P_*``
  constants below, shared verbatim with the compiled kernel.
* External force accumulators are lab-frame per node, external torque
  accumulators lab-frame per element; both are consumed and cleared by the
  next step.
* Stepping is position-Verlet (half drift, one load evaluation, full kick,
  half drift); velocity-dependent loads see the pre-kick velocities.
* Status codes returned by the interval loops: 0 = ran to completion,
  1 = success (head entered the target radius), 2 = destruction (non-finite
  state, position bound exceeded, or element strain factor exceeded).
"""

import math

import numpy as np

BACKEND_NAME = "python"

STATUS_OK = 0
STATUS_SUCCESS = 1
STATUS_DESTROYED = 2

# layout of the flat physics parameter block
P_DT = 0
P_DAMPING = 1
P_GRAVITY = 2
P_CONTACT_ON = 3
P_GROUND_H = 4
P_RADIUS = 5
P_K_CONTACT = 6
P_C_CONTACT = 7
P_MU_BACK = 8
P_MU_FWD = 9
P_MU_LAT = 10
P_SLIP_EPS = 11
P_SHEAR_1 = 12
P_SHEAR_2 = 13
P_STRETCH = 14
P_BEND_1 = 15
P_BEND_2 = 16
P_TWIST = 17
P_POS_LIMIT = 18
P_STRAIN_FACTOR = 19
PHYS_SIZE = 20


# ---------------------------------------------------------------------------
# frame helpers (3x3 rotations, columns = directors)
# ---------------------------------------------------------------------------

def _rotate_frame(frames, e, wx, wy, wz, h):
    """R <- R @ exp([w*h]x) for body-frame angular velocity w over time h."""
    vx = wx * h
    vy = wy * h
    vz = wz * h
    th2 = vx * vx + vy * vy + vz * vz
    if th2 < 1e-60:
        return
    th = math.sqrt(th2)
    a = math.sin(th) / th
    b = (1.0 - math.cos(th)) / th2
    m00 = 1.0 + b * (-vy * vy - vz * vz)
    m01 = a * (-vz) + b * (vx * vy)
    m02 = a * vy + b * (vx * vz)
    m10 = a * vz + b * (vx * vy)
    m11 = 1.0 + b * (-vx * vx - vz * vz)
    m12 = a * (-vx) + b * (vy * vz)
    m20 = a * (-vy) + b * (vx * vz)
    m21 = a * vx + b * (vy * vz)
    m22 = 1.0 + b * (-vx * vx - vy * vy)
    R = frames[e]
    for r in range(3):
        r0 = R[r, 0]
        r1 = R[r, 1]
        r2 = R[r, 2]
        R[r, 0] = r0 * m00 + r1 * m10 + r2 * m20
        R[r, 1] = r0 * m01 + r1 * m11 + r2 * m21
        R[r, 2] = r0 * m02 + r1 * m12 + r2 * m22


def _renormalize_frame(frames, e):
    """Gram-Schmidt with the tangent director (column 3) as the anchor."""
    R = frames[e]
    d3x = R[0, 2]
    d3y = R[1, 2]
    d3z = R[2, 2]
    n3 = math.sqrt(d3x * d3x + d3y * d3y + d3z * d3z)
    d3x /= n3
    d3y /= n3
    d3z /= n3
    d1x = R[0, 0]
    d1y = R[1, 0]
    d1z = R[2, 0]
    dot = d1x * d3x + d1y * d3y + d1z * d3z
    d1x -= dot * d3x
    d1y -= dot * d3y
    d1z -= dot * d3z
    n1 = math.sqrt(d1x * d1x + d1y * d1y + d1z * d1z)
    d1x /= n1
    d1y /= n1
    d1z /= n1
    d2x = d3y * d1z - d3z * d1y
    d2y = d3z * d1x - d3x * d1z
    d2z = d3x * d1y - d3y * d1x
    R[0, 0] = d1x
    R[1, 0] = d1y
    R[2, 0] = d1z
    R[0, 1] = d2x
    R[1, 1] = d2y
    R[2, 1] = d2z
    R[0, 2] = d3x
    R[1, 2] = d3y
    R[2, 2] = d3z


# ---------------------------------------------------------------------------
# load evaluation
# ---------------------------------------------------------------------------

def internal_loads(pos, vel, frames, omega, rest_len, voronoi, mass, inertia,
                   phys, out_force, out_torque):
    """Elastic (stretch/shear + bend/twist) plus Rayleigh damping loads.

    Forces are written to ``out_force`` (lab frame, per node), torques to
    ``out_torque`` (body frame, per element); both are overwritten.  Returns
    0 on success or ``e + 1`` if element ``e`` has collapsed to zero length.

    The bending torque is the exact variational gradient of the quadratic
    curvature energy (inverse-Jacobian transpose of the SO(3) log included),
    so elastic loads and elastic energy are mutually consistent.
    """
    n_nodes = pos.shape[0]
    n_elems = n_nodes - 1
    for i in range(n_nodes):
        out_force[i, 0] = 0.0
        out_force[i, 1] = 0.0
        out_force[i, 2] = 0.0
    for e in range(n_elems):
        out_torque[e, 0] = 0.0
        out_torque[e, 1] = 0.0
        out_torque[e, 2] = 0.0
    sa = phys[P_SHEAR_1]
    sb = phys[P_SHEAR_2]
    sc = phys[P_STRETCH]
    b1 = phys[P_BEND_1]
    b2 = phys[P_BEND_2]
    b3 = phys[P_TWIST]
    damping = phys[P_DAMPING]

    for e in range(n_elems):
        dx = pos[e + 1, 0] - pos[e, 0]
        dy = pos[e + 1, 1] - pos[e, 1]
        dz = pos[e + 1, 2] - pos[e, 2]
        rl = rest_len[e]
        len2 = dx * dx + dy * dy + dz * dz
        if len2 < 1e-24 * rl * rl:
            return e + 1
        inv_rl = 1.0 / rl
        tx = dx * inv_rl
        ty = dy * inv_rl
        tz = dz * inv_rl
        R = frames[e]
        # body-frame tangent a = R^T t; strain sigma = a - e3
        ax = R[0, 0] * tx + R[1, 0] * ty + R[2, 0] * tz
        ay = R[0, 1] * tx + R[1, 1] * ty + R[2, 1] * tz
        az = R[0, 2] * tx + R[1, 2] * ty + R[2, 2] * tz
        sx = ax
        sy = ay
        sz = az - 1.0
        nbx = sa * sx
        nby = sb * sy
        nbz = sc * sz
        nx = R[0, 0] * nbx + R[0, 1] * nby + R[0, 2] * nbz
        ny = R[1, 0] * nbx + R[1, 1] * nby + R[1, 2] * nbz
        nz = R[2, 0] * nbx + R[2, 1] * nby + R[2, 2] * nbz
        out_force[e, 0] += nx
        out_force[e, 1] += ny
        out_force[e, 2] += nz
        out_force[e + 1, 0] -= nx
        out_force[e + 1, 1] -= ny
        out_force[e + 1, 2] -= nz
        # moment of the shear force about the element frame: rl * (a x n_body)
        out_torque[e, 0] += rl * (ay * nbz - az * nby)
        out_torque[e, 1] += rl * (az * nbx - ax * nbz)
        out_torque[e, 2] += rl * (ax * nby - ay * nbx)

    for k in range(n_elems - 1):
        A = frames[k]
        B = frames[k + 1]
        # rel = A^T B, the rotation from frame k to frame k+1
        r00 = A[0, 0] * B[0, 0] + A[1, 0] * B[1, 0] + A[2, 0] * B[2, 0]
        r01 = A[0, 0] * B[0, 1] + A[1, 0] * B[1, 1] + A[2, 0] * B[2, 1]
        r02 = A[0, 0] * B[0, 2] + A[1, 0] * B[1, 2] + A[2, 0] * B[2, 2]
        r10 = A[0, 1] * B[0, 0] + A[1, 1] * B[1, 0] + A[2, 1] * B[2, 0]
        r11 = A[0, 1] * B[0, 1] + A[1, 1] * B[1, 1] + A[2, 1] * B[2, 1]
        r12 = A[0, 1] * B[0, 2] + A[1, 1] * B[1, 2] + A[2, 1] * B[2, 2]
        r20 = A[0, 2] * B[0, 0] + A[1, 2] * B[1, 0] + A[2, 2] * B[2, 0]
        r21 = A[0, 2] * B[0, 1] + A[1, 2] * B[1, 1] + A[2, 2] * B[2, 1]
        r22 = A[0, 2] * B[0, 2] + A[1, 2] * B[1, 2] + A[2, 2] * B[2, 2]
        wx = 0.5 * (r21 - r12)
        wy = 0.5 * (r02 - r20)
        wz = 0.5 * (r10 - r01)
        sn = math.sqrt(wx * wx + wy * wy + wz * wz)
        cs = 0.5 * (r00 + r11 + r22 - 1.0)
        if cs > 1.0:
            cs = 1.0
        elif cs < -1.0:
            cs = -1.0
        th = math.atan2(sn, cs)
        if sn > 1e-9:
            scale = th / sn
            px = wx * scale
            py = wy * scale
            pz = wz * scale
        elif cs > 0.0:
            px = wx
            py = wy
            pz = wz
        else:
            # near pi: axis from the dominant diagonal of (rel + I)/2
            qx = 0.5 * (r00 + 1.0)
            qy = 0.5 * (r11 + 1.0)
            qz = 0.5 * (r22 + 1.0)
            if qx >= qy and qx >= qz:
                axn = math.sqrt(qx if qx > 0.0 else 0.0)
                if axn < 1e-12:
                    axn = 1.0
                px = th * axn
                py = th * (0.25 * (r10 + r01) / axn)
                pz = th * (0.25 * (r20 + r02) / axn)
            elif qy >= qz:
                ayn = math.sqrt(qy if qy > 0.0 else 0.0)
                if ayn < 1e-12:
                    ayn = 1.0
                px = th * (0.25 * (r10 + r01) / ayn)
                py = th * ayn
                pz = th * (0.25 * (r21 + r12) / ayn)
            else:
                azn = math.sqrt(qz if qz > 0.0 else 0.0)
                if azn < 1e-12:
                    azn = 1.0
                px = th * (0.25 * (r20 + r02) / azn)
                py = th * (0.25 * (r21 + r12) / azn)
                pz = th * azn
        inv_d = 1.0 / voronoi[k]
        mx = b1 * px * inv_d
        my = b2 * py * inv_d
        mz = b3 * pz * inv_d
        th2 = px * px + py * py + pz * pz
        if th2 < 1e-8:
            c2 = 1.0 / 12.0 + th2 / 720.0
        else:
            tt = math.sqrt(th2)
            c2 = 1.0 / th2 - math.cos(0.5 * tt) / (2.0 * tt * math.sin(0.5 * tt))
        hx = 0.5 * (py * mz - pz * my)
        hy = 0.5 * (pz * mx - px * mz)
        hz = 0.5 * (px * my - py * mx)
        cxx = py * mz - pz * my
        cxy = pz * mx - px * mz
        cxz = px * my - py * mx
        ux = py * cxz - pz * cxy
        uy = pz * cxx - px * cxz
        uz = px * cxy - py * cxx
        out_torque[k, 0] += mx + hx + c2 * ux
        out_torque[k, 1] += my + hy + c2 * uy
        out_torque[k, 2] += mz + hz + c2 * uz
        out_torque[k + 1, 0] += -mx + hx - c2 * ux
        out_torque[k + 1, 1] += -my + hy - c2 * uy
        out_torque[k + 1, 2] += -mz + hz - c2 * uz

    if damping != 0.0:
        for i in range(n_nodes):
            cm = damping * mass[i]
            out_force[i, 0] -= cm * vel[i, 0]
            out_force[i, 1] -= cm * vel[i, 1]
            out_force[i, 2] -= cm * vel[i, 2]
        for e in range(n_elems):
            out_torque[e, 0] -= damping * (inertia[e, 0] * omega[e, 0])
            out_torque[e, 1] -= damping * (inertia[e, 1] * omega[e, 1])
            out_torque[e, 2] -= damping * (inertia[e, 2] * omega[e, 2])
    return 0


def contact_loads(pos, vel, mass, phys, out_force):
    """Ground plane penalty contact with anisotropic Coulomb friction.

    Adds into ``out_force``.  The slip velocity at each contacting node is
    split into a head-ward axial component and a lateral component; each is
    opposed by regularized kinetic friction with its own coefficient, clamped
    so one step of friction alone can never reverse the slip direction.
    """
    n_nodes = pos.shape[0]
    ground_h = phys[P_GROUND_H]
    radius = phys[P_RADIUS]
    kc = phys[P_K_CONTACT]
    cc = phys[P_C_CONTACT]
    mu_back = phys[P_MU_BACK]
    mu_fwd = phys[P_MU_FWD]
    mu_lat = phys[P_MU_LAT]
    eps = phys[P_SLIP_EPS]
    dt = phys[P_DT]
    for i in range(n_nodes):
        pen = (ground_h + radius) - pos[i, 2]
        if pen <= 0.0:
            continue
        fn = kc * pen - cc * vel[i, 2]
        if fn <= 0.0:
            continue
        out_force[i, 2] += fn
        ip = i - 1 if i > 0 else i
        iq = i + 1 if i < n_nodes - 1 else i
        hx = pos[ip, 0] - pos[iq, 0]
        hy = pos[ip, 1] - pos[iq, 1]
        hn = math.sqrt(hx * hx + hy * hy)
        if hn < 1e-12:
            ax = 1.0
            ay = 0.0
        else:
            ax = hx / hn
            ay = hy / hn
        vx = vel[i, 0]
        vy = vel[i, 1]
        v_ax = vx * ax + vy * ay
        v_lat = -vx * ay + vy * ax
        mu_ax = mu_fwd if v_ax > 0.0 else mu_back
        clim = mass[i] / dt
        c_a = mu_ax * fn / math.sqrt(v_ax * v_ax + eps * eps)
        if c_a > clim:
            c_a = clim
        f_ax = -v_ax * c_a
        c_l = mu_lat * fn / math.sqrt(v_lat * v_lat + eps * eps)
        if c_l > clim:
            c_l = clim
        f_lat = -v_lat * c_l
        out_force[i, 0] += f_ax * ax - f_lat * ay
        out_force[i, 1] += f_ax * ay + f_lat * ax


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def _step_once(pos, vel, frames, omega, ext_f, ext_t, rest_len, voronoi,
               mass, inertia, phys, fbuf, tbuf):
    """One position-Verlet step.  Returns 0, or a nonzero failure code
    (1 = non-finite positions, 1 + e = element e collapsed)."""
    n_nodes = pos.shape[0]
    n_elems = n_nodes - 1
    dt = phys[P_DT]
    half = 0.5 * dt

    for i in range(n_nodes):
        pos[i, 0] += half * vel[i, 0]
        pos[i, 1] += half * vel[i, 1]
        pos[i, 2] += half * vel[i, 2]
    for e in range(n_elems):
        _rotate_frame(frames, e, omega[e, 0], omega[e, 1], omega[e, 2], half)

    err = internal_loads(pos, vel, frames, omega, rest_len, voronoi, mass,
                         inertia, phys, fbuf, tbuf)
    if err != 0:
        return err

    gravity = phys[P_GRAVITY]
    if gravity != 0.0:
        for i in range(n_nodes):
            fbuf[i, 2] += mass[i] * gravity
    if phys[P_CONTACT_ON] != 0.0:
        contact_loads(pos, vel, mass, phys, fbuf)

    for i in range(n_nodes):
        fbuf[i, 0] += ext_f[i, 0]
        fbuf[i, 1] += ext_f[i, 1]
        fbuf[i, 2] += ext_f[i, 2]
    for e in range(n_elems):
        R = frames[e]
        tx = ext_t[e, 0]
        ty = ext_t[e, 1]
        tz = ext_t[e, 2]
        tbuf[e, 0] += R[0, 0] * tx + R[1, 0] * ty + R[2, 0] * tz
        tbuf[e, 1] += R[0, 1] * tx + R[1, 1] * ty + R[2, 1] * tz
        tbuf[e, 2] += R[0, 2] * tx + R[1, 2] * ty + R[2, 2] * tz

    for i in range(n_nodes):
        inv_m = dt / mass[i]
        vel[i, 0] += inv_m * fbuf[i, 0]
        vel[i, 1] += inv_m * fbuf[i, 1]
        vel[i, 2] += inv_m * fbuf[i, 2]
    for e in range(n_elems):
        j1 = inertia[e, 0]
        j2 = inertia[e, 1]
        j3 = inertia[e, 2]
        w1 = omega[e, 0]
        w2 = omega[e, 1]
        w3 = omega[e, 2]
        # Euler equations with the gyroscopic term
        g1 = tbuf[e, 0] - (w2 * (j3 * w3) - w3 * (j2 * w2))
        g2 = tbuf[e, 1] - (w3 * (j1 * w1) - w1 * (j3 * w3))
        g3 = tbuf[e, 2] - (w1 * (j2 * w2) - w2 * (j1 * w1))
        omega[e, 0] = w1 + dt * g1 / j1
        omega[e, 1] = w2 + dt * g2 / j2
        omega[e, 2] = w3 + dt * g3 / j3

    for i in range(n_nodes):
        pos[i, 0] += half * vel[i, 0]
        pos[i, 1] += half * vel[i, 1]
        pos[i, 2] += half * vel[i, 2]
    for e in range(n_elems):
        _rotate_frame(frames, e, omega[e, 0], omega[e, 1], omega[e, 2], half)
        _renormalize_frame(frames, e)

    for i in range(n_nodes):
        ext_f[i, 0] = 0.0
        ext_f[i, 1] = 0.0
        ext_f[i, 2] = 0.0
    for e in range(n_elems):
        ext_t[e, 0] = 0.0
        ext_t[e, 1] = 0.0
        ext_t[e, 2] = 0.0

    for i in range(n_nodes):
        if not (math.isfinite(pos[i, 0]) and math.isfinite(pos[i, 1])
                and math.isfinite(pos[i, 2])):
            return 1
    return 0


def rod_step_n(pos, vel, frames, omega, ext_f, ext_t, rest_len, voronoi,
               mass, inertia, phys, n_steps):
    """Advance the rod ``n_steps`` times.  External accumulators act on the
    first step only (they are cleared by each step).  Returns -1, or the
    0-based index of the step at which the state became invalid."""
    fbuf = np.zeros_like(pos)
    tbuf = np.zeros_like(omega)
    for k in range(n_steps):
        err = _step_once(pos, vel, frames, omega, ext_f, ext_t, rest_len,
                         voronoi, mass, inertia, phys, fbuf, tbuf)
        if err != 0:
            return k
    return -1


def _destroyed(pos, rest_len, phys):
    n_nodes = pos.shape[0]
    limit = phys[P_POS_LIMIT]
    factor = phys[P_STRAIN_FACTOR]
    for i in range(n_nodes):
        x = pos[i, 0]
        y = pos[i, 1]
        z = pos[i, 2]
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            return True
        if x > limit or x < -limit or y > limit or y < -limit \
                or z > limit or z < -limit:
            return True
    f2 = factor * factor
    for e in range(n_nodes - 1):
        dx = pos[e + 1, 0] - pos[e, 0]
        dy = pos[e + 1, 1] - pos[e, 1]
        dz = pos[e + 1, 2] - pos[e, 2]
        len2 = dx * dx + dy * dy + dz * dz
        rl2 = rest_len[e] * rest_len[e]
        if len2 > f2 * rl2 or len2 * f2 < rl2:
            return True
    return False


def _deformation(pos, a, b, c):
    """Signed in-plane turning angle at the (a, b, c) node triple."""
    ux = pos[b, 0] - pos[a, 0]
    uy = pos[b, 1] - pos[a, 1]
    vx = pos[c, 0] - pos[b, 0]
    vy = pos[c, 1] - pos[b, 1]
    return math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)


# ---------------------------------------------------------------------------
# neuron and oscillator
# ---------------------------------------------------------------------------

def dts_sequence(q, un, up, c_q, c_t, tau, dt, u0, o0, out_u, out_o):
    """Run the double-threshold neuron over an input sequence.

    ``un``/``up`` are per-step threshold arrays (constant thresholds are just
    filled arrays).  Returns the final (u, o).
    """
    win = dt / tau
    leak = 1.0 - win
    u = u0
    o = o0
    for k in range(q.shape[0]):
        u = (1.0 - math.fabs(o)) * leak * u + win * c_q * q[k]
        if u > up[k]:
            o = -1.0
        elif u < un[k]:
            o = 1.0
        else:
            o = 0.0
        out_u[k] = u
        out_o[k] = o
    return u, o


def oscillator_run(mass, stiffness, damp, c_q, c_t, tau, dt, un, up,
                   q0, qd0, steps, out):
    """Closed-loop mass-spring-damper driven by one neuron.

    ``out`` is (steps, 4); row k holds the pre-step phase point (q, q_dot)
    and the neuron outputs (u, o) computed from it.  Returns -1, or the step
    index at which the state became non-finite.
    """
    win = dt / tau
    leak = 1.0 - win
    q = q0
    qd = qd0
    u = 0.0
    o = 0.0
    for k in range(steps):
        out[k, 0] = q
        out[k, 1] = qd
        u = (1.0 - math.fabs(o)) * leak * u + win * c_q * q
        if u > up:
            o = -1.0
        elif u < un:
            o = 1.0
        else:
            o = 0.0
        out[k, 2] = u
        out[k, 3] = o
        force = -stiffness * q - damp * qd + c_t * o
        qd += dt * force / mass
        q += dt * qd
        if not (math.isfinite(q) and math.isfinite(qd)):
            return k
    return -1


# ---------------------------------------------------------------------------
# controller intervals (the fused hot loops)
# ---------------------------------------------------------------------------

def spiking_interval(pos, vel, frames, omega, ext_f, ext_t, rest_len, voronoi,
                     mass, inertia, phys,
                     neuron_u, neuron_o, thr_n, thr_p, c_q, c_t, tau,
                     seg_a, seg_b, seg_c, first_el, last_el, couple_sign,
                     n_steps, target_x, target_y, success_r, head,
                     record, trace_spk, trace_def, trace_gam):
    """Per-segment spiking control loop (read deformation, update neuron,
    apply the torque couple, step the rod), with per-step destruction and
    success checks.  Returns (steps_done, status, silent_steps)."""
    m = neuron_u.shape[0]
    dt = phys[P_DT]
    win = dt / tau
    leak = 1.0 - win
    fbuf = np.zeros_like(pos)
    tbuf = np.zeros_like(omega)
    silent = 0
    status = STATUS_OK
    steps_done = 0
    r2 = success_r * success_r
    for k in range(n_steps):
        for s in range(m):
            d = _deformation(pos, seg_a[s], seg_b[s], seg_c[s])
            u = neuron_u[s]
            o = neuron_o[s]
            u = (1.0 - math.fabs(o)) * leak * u + win * c_q * d
            if u > thr_p[s]:
                o = -1.0
            elif u < thr_n[s]:
                o = 1.0
            else:
                o = 0.0
                silent += 1
            neuron_u[s] = u
            neuron_o[s] = o
            gamma = c_t * o
            zt = couple_sign * gamma
            ext_t[first_el[s], 2] += zt
            ext_t[last_el[s], 2] -= zt
            if record != 0:
                trace_spk[k, s] = o
                trace_def[k, s] = d
                trace_gam[k, s] = gamma
        err = _step_once(pos, vel, frames, omega, ext_f, ext_t, rest_len,
                         voronoi, mass, inertia, phys, fbuf, tbuf)
        steps_done = k + 1
        if err != 0 or _destroyed(pos, rest_len, phys):
            status = STATUS_DESTROYED
            break
        if success_r > 0.0:
            ddx = target_x - pos[head, 0]
            ddy = target_y - pos[head, 1]
            if ddx * ddx + ddy * ddy < r2:
                status = STATUS_SUCCESS
                break
    return steps_done, status, silent


def vanilla_interval(pos, vel, frames, omega, ext_f, ext_t, rest_len, voronoi,
                     mass, inertia, phys,
                     gammas, seg_a, seg_b, seg_c, first_el, last_el,
                     couple_sign, n_steps, target_x, target_y, success_r, head,
                     record, trace_def, trace_gam):
    """Constant per-segment torque couples held for the whole interval."""
    m = gammas.shape[0]
    fbuf = np.zeros_like(pos)
    tbuf = np.zeros_like(omega)
    zero_steps = 0
    status = STATUS_OK
    steps_done = 0
    r2 = success_r * success_r
    for k in range(n_steps):
        for s in range(m):
            gamma = gammas[s]
            if gamma == 0.0:
                zero_steps += 1
            zt = couple_sign * gamma
            ext_t[first_el[s], 2] += zt
            ext_t[last_el[s], 2] -= zt
            if record != 0:
                trace_def[k, s] = _deformation(pos, seg_a[s], seg_b[s],
                                               seg_c[s])
                trace_gam[k, s] = gamma
        err = _step_once(pos, vel, frames, omega, ext_f, ext_t, rest_len,
                         voronoi, mass, inertia, phys, fbuf, tbuf)
        steps_done = k + 1
        if err != 0 or _destroyed(pos, rest_len, phys):
            status = STATUS_DESTROYED
            break
        if success_r > 0.0:
            ddx = target_x - pos[head, 0]
            ddy = target_y - pos[head, 1]
            if ddx * ddx + ddy * ddy < r2:
                status = STATUS_SUCCESS
                break
    return steps_done, status, zero_steps


# layout of the CPG parameter block (rates are 1/tau, precomputed)
C_INV_TAU_R = 0
C_INV_TAU_A = 1
C_MUTUAL = 2
C_SELF = 3
C_W_DOWN = 4
C_W_UP = 5
C_AMPLITUDE = 6
C_GAIN = 7
C_DRIVE_BIAS = 8
CPG_SIZE = 9


def cpg_interval(pos, vel, frames, omega, ext_f, ext_t, rest_len, voronoi,
                 mass, inertia, phys,
                 xf, xe, ff, fe, tonic, cpg,
                 seg_a, seg_b, seg_c, first_el, last_el, couple_sign,
                 n_steps, target_x, target_y, success_r, head,
                 record, trace_def, trace_gam):
    """Matsuoka oscillator pair per segment driving the torque couples.

    Flexor/extensor membranes ``xf``/``xe`` with adaptation states ``ff``/
    ``fe``.  The tonic magnitude drives both neurons (that is what sustains
    the alternating rhythm); its sign adds a differential bias toward the
    flexor or extensor, so sign-flipped drive yields sign-flipped output and
    zero drive is quiescent.  Neighbor coupling is inhibitory on the
    rectified outputs: weight ``w_down`` head-to-tail, ``w_up`` tail-to-head.
    """
    m = xf.shape[0]
    dt = phys[P_DT]
    r_d = cpg[C_INV_TAU_R]
    r_a = cpg[C_INV_TAU_A]
    a_mut = cpg[C_MUTUAL]
    b_self = cpg[C_SELF]
    w_down = cpg[C_W_DOWN]
    w_up = cpg[C_W_UP]
    amp = cpg[C_AMPLITUDE]
    gain = cpg[C_GAIN]
    bias = cpg[C_DRIVE_BIAS]
    fbuf = np.zeros_like(pos)
    tbuf = np.zeros_like(omega)
    yf = np.zeros(m)
    ye = np.zeros(m)
    zero_steps = 0
    status = STATUS_OK
    steps_done = 0
    r2 = success_r * success_r
    for k in range(n_steps):
        for s in range(m):
            yf[s] = xf[s] if xf[s] > 0.0 else 0.0
            ye[s] = xe[s] if xe[s] > 0.0 else 0.0
        for s in range(m):
            gamma = gain * (amp * (yf[s] - ye[s]))
            if gamma == 0.0:
                zero_steps += 1
            zt = couple_sign * gamma
            ext_t[first_el[s], 2] += zt
            ext_t[last_el[s], 2] -= zt
            if record != 0:
                trace_def[k, s] = _deformation(pos, seg_a[s], seg_b[s],
                                               seg_c[s])
                trace_gam[k, s] = gamma
        for s in range(m):
            drive = tonic[s]
            mag = math.fabs(drive)
            in_f = mag + bias * drive
            in_e = mag - bias * drive
            cpl_f = 0.0
            cpl_e = 0.0
            if s > 0:
                cpl_f -= w_down * yf[s - 1]
                cpl_e -= w_down * ye[s - 1]
            if s < m - 1:
                cpl_f -= w_up * yf[s + 1]
                cpl_e -= w_up * ye[s + 1]
            dxf = r_d * (-xf[s] - a_mut * ye[s] - b_self * ff[s]
                         + in_f + cpl_f)
            dxe = r_d * (-xe[s] - a_mut * yf[s] - b_self * fe[s]
                         + in_e + cpl_e)
            dff = r_a * (yf[s] - ff[s])
            dfe = r_a * (ye[s] - fe[s])
            xf[s] += dt * dxf
            xe[s] += dt * dxe
            ff[s] += dt * dff
            fe[s] += dt * dfe
        err = _step_once(pos, vel, frames, omega, ext_f, ext_t, rest_len,
                         voronoi, mass, inertia, phys, fbuf, tbuf)
        steps_done = k + 1
        if err != 0 or _destroyed(pos, rest_len, phys):
            status = STATUS_DESTROYED
            break
        if success_r > 0.0:
            ddx = target_x - pos[head, 0]
            ddy = target_y - pos[head, 1]
            if ddx * ddx + ddy * ddy < r2:
                status = STATUS_SUCCESS
                break
    return steps_done, status, zero_steps

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the simulation hot loops.

This module is the fast twin of ``softsnake._ref``; the two are kept in
lockstep expression-by-expression so they produce bit-identical results
(the build disables FMA contraction for that reason).  See ``_ref`` for the
documented reference semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, fabs, isfinite, sin, sqrt

BACKEND_NAME = "compiled"

STATUS_OK = 0
STATUS_SUCCESS = 1
STATUS_DESTROYED = 2

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

DEF _P_DT = 0
DEF _P_DAMPING = 1
DEF _P_GRAVITY = 2
DEF _P_CONTACT_ON = 3
DEF _P_GROUND_H = 4
DEF _P_RADIUS = 5
DEF _P_K_CONTACT = 6
DEF _P_C_CONTACT = 7
DEF _P_MU_BACK = 8
DEF _P_MU_FWD = 9
DEF _P_MU_LAT = 10
DEF _P_SLIP_EPS = 11
DEF _P_SHEAR_1 = 12
DEF _P_SHEAR_2 = 13
DEF _P_STRETCH = 14
DEF _P_BEND_1 = 15
DEF _P_BEND_2 = 16
DEF _P_TWIST = 17
DEF _P_POS_LIMIT = 18
DEF _P_STRAIN_FACTOR = 19


cdef inline void _rotate_frame(double[:, :, ::1] frames, Py_ssize_t e,
                               double wx, double wy, double wz,
                               double h) noexcept:
    cdef double vx = wx * h
    cdef double vy = wy * h
    cdef double vz = wz * h
    cdef double th2 = vx * vx + vy * vy + vz * vz
    cdef double th, a, b
    cdef double m00, m01, m02, m10, m11, m12, m20, m21, m22
    cdef double r0, r1, r2
    cdef Py_ssize_t r
    if th2 < 1e-60:
        return
    th = sqrt(th2)
    a = sin(th) / th
    b = (1.0 - cos(th)) / th2
    m00 = 1.0 + b * (-vy * vy - vz * vz)
    m01 = a * (-vz) + b * (vx * vy)
    m02 = a * vy + b * (vx * vz)
    m10 = a * vz + b * (vx * vy)
    m11 = 1.0 + b * (-vx * vx - vz * vz)
    m12 = a * (-vx) + b * (vy * vz)
    m20 = a * (-vy) + b * (vx * vz)
    m21 = a * vx + b * (vy * vz)
    m22 = 1.0 + b * (-vx * vx - vy * vy)
    for r in range(3):
        r0 = frames[e, r, 0]
        r1 = frames[e, r, 1]
        r2 = frames[e, r, 2]
        frames[e, r, 0] = r0 * m00 + r1 * m10 + r2 * m20
        frames[e, r, 1] = r0 * m01 + r1 * m11 + r2 * m21
        frames[e, r, 2] = r0 * m02 + r1 * m12 + r2 * m22


cdef inline void _renormalize_frame(double[:, :, ::1] frames,
                                    Py_ssize_t e) noexcept:
    cdef double d3x = frames[e, 0, 2]
    cdef double d3y = frames[e, 1, 2]
    cdef double d3z = frames[e, 2, 2]
    cdef double n3 = sqrt(d3x * d3x + d3y * d3y + d3z * d3z)
    cdef double d1x, d1y, d1z, dot, n1, d2x, d2y, d2z
    d3x /= n3
    d3y /= n3
    d3z /= n3
    d1x = frames[e, 0, 0]
    d1y = frames[e, 1, 0]
    d1z = frames[e, 2, 0]
    dot = d1x * d3x + d1y * d3y + d1z * d3z
    d1x -= dot * d3x
    d1y -= dot * d3y
    d1z -= dot * d3z
    n1 = sqrt(d1x * d1x + d1y * d1y + d1z * d1z)
    d1x /= n1
    d1y /= n1
    d1z /= n1
    d2x = d3y * d1z - d3z * d1y
    d2y = d3z * d1x - d3x * d1z
    d2z = d3x * d1y - d3y * d1x
    frames[e, 0, 0] = d1x
    frames[e, 1, 0] = d1y
    frames[e, 2, 0] = d1z
    frames[e, 0, 1] = d2x
    frames[e, 1, 1] = d2y
    frames[e, 2, 1] = d2z
    frames[e, 0, 2] = d3x
    frames[e, 1, 2] = d3y
    frames[e, 2, 2] = d3z


cdef int _internal_loads(double[:, ::1] pos, double[:, ::1] vel,
                         double[:, :, ::1] frames, double[:, ::1] omega,
                         double[::1] rest_len, double[::1] voronoi,
                         double[::1] mass, double[:, ::1] inertia,
                         double[::1] phys,
                         double[:, ::1] out_force,
                         double[:, ::1] out_torque) noexcept:
    cdef Py_ssize_t n_nodes = pos.shape[0]
    cdef Py_ssize_t n_elems = n_nodes - 1
    cdef Py_ssize_t i, e, k
    cdef double sa = phys[_P_SHEAR_1]
    cdef double sb = phys[_P_SHEAR_2]
    cdef double sc = phys[_P_STRETCH]
    cdef double b1 = phys[_P_BEND_1]
    cdef double b2 = phys[_P_BEND_2]
    cdef double b3 = phys[_P_TWIST]
    cdef double damping = phys[_P_DAMPING]
    cdef double dx, dy, dz, rl, len2, inv_rl, tx, ty, tz
    cdef double ax, ay, az, sx, sy, sz, nbx, nby, nbz, nx, ny, nz
    cdef double r00, r01, r02, r10, r11, r12, r20, r21, r22
    cdef double wx, wy, wz, sn, cs, th, scale, px, py, pz
    cdef double qx, qy, qz, axn, ayn, azn
    cdef double inv_d, mx, my, mz, th2, c2, tt
    cdef double hx, hy, hz, cxx, cxy, cxz, ux, uy, uz, cm

    for i in range(n_nodes):
        out_force[i, 0] = 0.0
        out_force[i, 1] = 0.0
        out_force[i, 2] = 0.0
    for e in range(n_elems):
        out_torque[e, 0] = 0.0
        out_torque[e, 1] = 0.0
        out_torque[e, 2] = 0.0

    for e in range(n_elems):
        dx = pos[e + 1, 0] - pos[e, 0]
        dy = pos[e + 1, 1] - pos[e, 1]
        dz = pos[e + 1, 2] - pos[e, 2]
        rl = rest_len[e]
        len2 = dx * dx + dy * dy + dz * dz
        if len2 < 1e-24 * rl * rl:
            return <int> (e + 1)
        inv_rl = 1.0 / rl
        tx = dx * inv_rl
        ty = dy * inv_rl
        tz = dz * inv_rl
        ax = frames[e, 0, 0] * tx + frames[e, 1, 0] * ty + frames[e, 2, 0] * tz
        ay = frames[e, 0, 1] * tx + frames[e, 1, 1] * ty + frames[e, 2, 1] * tz
        az = frames[e, 0, 2] * tx + frames[e, 1, 2] * ty + frames[e, 2, 2] * tz
        sx = ax
        sy = ay
        sz = az - 1.0
        nbx = sa * sx
        nby = sb * sy
        nbz = sc * sz
        nx = frames[e, 0, 0] * nbx + frames[e, 0, 1] * nby + frames[e, 0, 2] * nbz
        ny = frames[e, 1, 0] * nbx + frames[e, 1, 1] * nby + frames[e, 1, 2] * nbz
        nz = frames[e, 2, 0] * nbx + frames[e, 2, 1] * nby + frames[e, 2, 2] * nbz
        out_force[e, 0] += nx
        out_force[e, 1] += ny
        out_force[e, 2] += nz
        out_force[e + 1, 0] -= nx
        out_force[e + 1, 1] -= ny
        out_force[e + 1, 2] -= nz
        out_torque[e, 0] += rl * (ay * nbz - az * nby)
        out_torque[e, 1] += rl * (az * nbx - ax * nbz)
        out_torque[e, 2] += rl * (ax * nby - ay * nbx)

    for k in range(n_elems - 1):
        r00 = frames[k, 0, 0] * frames[k + 1, 0, 0] + frames[k, 1, 0] * frames[k + 1, 1, 0] + frames[k, 2, 0] * frames[k + 1, 2, 0]
        r01 = frames[k, 0, 0] * frames[k + 1, 0, 1] + frames[k, 1, 0] * frames[k + 1, 1, 1] + frames[k, 2, 0] * frames[k + 1, 2, 1]
        r02 = frames[k, 0, 0] * frames[k + 1, 0, 2] + frames[k, 1, 0] * frames[k + 1, 1, 2] + frames[k, 2, 0] * frames[k + 1, 2, 2]
        r10 = frames[k, 0, 1] * frames[k + 1, 0, 0] + frames[k, 1, 1] * frames[k + 1, 1, 0] + frames[k, 2, 1] * frames[k + 1, 2, 0]
        r11 = frames[k, 0, 1] * frames[k + 1, 0, 1] + frames[k, 1, 1] * frames[k + 1, 1, 1] + frames[k, 2, 1] * frames[k + 1, 2, 1]
        r12 = frames[k, 0, 1] * frames[k + 1, 0, 2] + frames[k, 1, 1] * frames[k + 1, 1, 2] + frames[k, 2, 1] * frames[k + 1, 2, 2]
        r20 = frames[k, 0, 2] * frames[k + 1, 0, 0] + frames[k, 1, 2] * frames[k + 1, 1, 0] + frames[k, 2, 2] * frames[k + 1, 2, 0]
        r21 = frames[k, 0, 2] * frames[k + 1, 0, 1] + frames[k, 1, 2] * frames[k + 1, 1, 1] + frames[k, 2, 2] * frames[k + 1, 2, 1]
        r22 = frames[k, 0, 2] * frames[k + 1, 0, 2] + frames[k, 1, 2] * frames[k + 1, 1, 2] + frames[k, 2, 2] * frames[k + 1, 2, 2]
        wx = 0.5 * (r21 - r12)
        wy = 0.5 * (r02 - r20)
        wz = 0.5 * (r10 - r01)
        sn = sqrt(wx * wx + wy * wy + wz * wz)
        cs = 0.5 * (r00 + r11 + r22 - 1.0)
        if cs > 1.0:
            cs = 1.0
        elif cs < -1.0:
            cs = -1.0
        th = atan2(sn, cs)
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
            qx = 0.5 * (r00 + 1.0)
            qy = 0.5 * (r11 + 1.0)
            qz = 0.5 * (r22 + 1.0)
            if qx >= qy and qx >= qz:
                axn = sqrt(qx if qx > 0.0 else 0.0)
                if axn < 1e-12:
                    axn = 1.0
                px = th * axn
                py = th * (0.25 * (r10 + r01) / axn)
                pz = th * (0.25 * (r20 + r02) / axn)
            elif qy >= qz:
                ayn = sqrt(qy if qy > 0.0 else 0.0)
                if ayn < 1e-12:
                    ayn = 1.0
                px = th * (0.25 * (r10 + r01) / ayn)
                py = th * ayn
                pz = th * (0.25 * (r21 + r12) / ayn)
            else:
                azn = sqrt(qz if qz > 0.0 else 0.0)
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
            tt = sqrt(th2)
            c2 = 1.0 / th2 - cos(0.5 * tt) / (2.0 * tt * sin(0.5 * tt))
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


cdef void _contact_loads(double[:, ::1] pos, double[:, ::1] vel,
                         double[::1] mass, double[::1] phys,
                         double[:, ::1] out_force) noexcept:
    cdef Py_ssize_t n_nodes = pos.shape[0]
    cdef double ground_h = phys[_P_GROUND_H]
    cdef double radius = phys[_P_RADIUS]
    cdef double kc = phys[_P_K_CONTACT]
    cdef double cc = phys[_P_C_CONTACT]
    cdef double mu_back = phys[_P_MU_BACK]
    cdef double mu_fwd = phys[_P_MU_FWD]
    cdef double mu_lat = phys[_P_MU_LAT]
    cdef double eps = phys[_P_SLIP_EPS]
    cdef double dt = phys[_P_DT]
    cdef Py_ssize_t i, ip, iq
    cdef double pen, fn, hx, hy, hn, ax, ay, vx, vy
    cdef double v_ax, v_lat, mu_ax, clim, c_a, c_l, f_ax, f_lat
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
        hn = sqrt(hx * hx + hy * hy)
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
        c_a = mu_ax * fn / sqrt(v_ax * v_ax + eps * eps)
        if c_a > clim:
            c_a = clim
        f_ax = -v_ax * c_a
        c_l = mu_lat * fn / sqrt(v_lat * v_lat + eps * eps)
        if c_l > clim:
            c_l = clim
        f_lat = -v_lat * c_l
        out_force[i, 0] += f_ax * ax - f_lat * ay
        out_force[i, 1] += f_ax * ay + f_lat * ax


cdef int _step_once(double[:, ::1] pos, double[:, ::1] vel,
                    double[:, :, ::1] frames, double[:, ::1] omega,
                    double[:, ::1] ext_f, double[:, ::1] ext_t,
                    double[::1] rest_len, double[::1] voronoi,
                    double[::1] mass, double[:, ::1] inertia,
                    double[::1] phys,
                    double[:, ::1] fbuf, double[:, ::1] tbuf) noexcept:
    cdef Py_ssize_t n_nodes = pos.shape[0]
    cdef Py_ssize_t n_elems = n_nodes - 1
    cdef double dt = phys[_P_DT]
    cdef double half = 0.5 * dt
    cdef double gravity = phys[_P_GRAVITY]
    cdef Py_ssize_t i, e
    cdef int err
    cdef double tx, ty, tz, inv_m
    cdef double j1, j2, j3, w1, w2, w3, g1, g2, g3

    for i in range(n_nodes):
        pos[i, 0] += half * vel[i, 0]
        pos[i, 1] += half * vel[i, 1]
        pos[i, 2] += half * vel[i, 2]
    for e in range(n_elems):
        _rotate_frame(frames, e, omega[e, 0], omega[e, 1], omega[e, 2], half)

    err = _internal_loads(pos, vel, frames, omega, rest_len, voronoi, mass,
                          inertia, phys, fbuf, tbuf)
    if err != 0:
        return err

    if gravity != 0.0:
        for i in range(n_nodes):
            fbuf[i, 2] += mass[i] * gravity
    if phys[_P_CONTACT_ON] != 0.0:
        _contact_loads(pos, vel, mass, phys, fbuf)

    for i in range(n_nodes):
        fbuf[i, 0] += ext_f[i, 0]
        fbuf[i, 1] += ext_f[i, 1]
        fbuf[i, 2] += ext_f[i, 2]
    for e in range(n_elems):
        tx = ext_t[e, 0]
        ty = ext_t[e, 1]
        tz = ext_t[e, 2]
        tbuf[e, 0] += frames[e, 0, 0] * tx + frames[e, 1, 0] * ty + frames[e, 2, 0] * tz
        tbuf[e, 1] += frames[e, 0, 1] * tx + frames[e, 1, 1] * ty + frames[e, 2, 1] * tz
        tbuf[e, 2] += frames[e, 0, 2] * tx + frames[e, 1, 2] * ty + frames[e, 2, 2] * tz

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
        if not (isfinite(pos[i, 0]) and isfinite(pos[i, 1])
                and isfinite(pos[i, 2])):
            return 1
    return 0


cdef bint _destroyed_c(double[:, ::1] pos, double[::1] rest_len,
                       double[::1] phys) noexcept:
    cdef Py_ssize_t n_nodes = pos.shape[0]
    cdef double limit = phys[_P_POS_LIMIT]
    cdef double factor = phys[_P_STRAIN_FACTOR]
    cdef Py_ssize_t i, e
    cdef double x, y, z, f2, dx, dy, dz, len2, rl2
    for i in range(n_nodes):
        x = pos[i, 0]
        y = pos[i, 1]
        z = pos[i, 2]
        if not (isfinite(x) and isfinite(y) and isfinite(z)):
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


cdef inline double _deformation_c(double[:, ::1] pos, Py_ssize_t a,
                                  Py_ssize_t b, Py_ssize_t c) noexcept:
    cdef double ux = pos[b, 0] - pos[a, 0]
    cdef double uy = pos[b, 1] - pos[a, 1]
    cdef double vx = pos[c, 0] - pos[b, 0]
    cdef double vy = pos[c, 1] - pos[b, 1]
    return atan2(ux * vy - uy * vx, ux * vx + uy * vy)


# ---------------------------------------------------------------------------
# Python-visible entry points
# ---------------------------------------------------------------------------

def internal_loads(double[:, ::1] pos, double[:, ::1] vel,
                   double[:, :, ::1] frames, double[:, ::1] omega,
                   double[::1] rest_len, double[::1] voronoi,
                   double[::1] mass, double[:, ::1] inertia,
                   double[::1] phys,
                   double[:, ::1] out_force, double[:, ::1] out_torque):
    return _internal_loads(pos, vel, frames, omega, rest_len, voronoi, mass,
                           inertia, phys, out_force, out_torque)


def contact_loads(double[:, ::1] pos, double[:, ::1] vel, double[::1] mass,
                  double[::1] phys, double[:, ::1] out_force):
    _contact_loads(pos, vel, mass, phys, out_force)


def rod_step_n(double[:, ::1] pos, double[:, ::1] vel,
               double[:, :, ::1] frames, double[:, ::1] omega,
               double[:, ::1] ext_f, double[:, ::1] ext_t,
               double[::1] rest_len, double[::1] voronoi,
               double[::1] mass, double[:, ::1] inertia,
               double[::1] phys, long long n_steps):
    cdef cnp.ndarray fb = np.zeros((pos.shape[0], 3))
    cdef cnp.ndarray tb = np.zeros((omega.shape[0], 3))
    cdef double[:, ::1] fbuf = fb
    cdef double[:, ::1] tbuf = tb
    cdef long long k
    cdef int err
    for k in range(n_steps):
        err = _step_once(pos, vel, frames, omega, ext_f, ext_t, rest_len,
                         voronoi, mass, inertia, phys, fbuf, tbuf)
        if err != 0:
            return k
    return -1


def dts_sequence(double[::1] q, double[::1] un, double[::1] up,
                 double c_q, double c_t, double tau, double dt,
                 double u0, double o0,
                 double[::1] out_u, double[::1] out_o):
    cdef double win = dt / tau
    cdef double leak = 1.0 - win
    cdef double u = u0
    cdef double o = o0
    cdef Py_ssize_t k
    for k in range(q.shape[0]):
        u = (1.0 - fabs(o)) * leak * u + win * c_q * q[k]
        if u > up[k]:
            o = -1.0
        elif u < un[k]:
            o = 1.0
        else:
            o = 0.0
        out_u[k] = u
        out_o[k] = o
    return u, o


def oscillator_run(double mass, double stiffness, double damp,
                   double c_q, double c_t, double tau, double dt,
                   double un, double up, double q0, double qd0,
                   long long steps, double[:, ::1] out):
    cdef double win = dt / tau
    cdef double leak = 1.0 - win
    cdef double q = q0
    cdef double qd = qd0
    cdef double u = 0.0
    cdef double o = 0.0
    cdef double force
    cdef long long k
    for k in range(steps):
        out[k, 0] = q
        out[k, 1] = qd
        u = (1.0 - fabs(o)) * leak * u + win * c_q * q
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
        if not (isfinite(q) and isfinite(qd)):
            return k
    return -1


def spiking_interval(double[:, ::1] pos, double[:, ::1] vel,
                     double[:, :, ::1] frames, double[:, ::1] omega,
                     double[:, ::1] ext_f, double[:, ::1] ext_t,
                     double[::1] rest_len, double[::1] voronoi,
                     double[::1] mass, double[:, ::1] inertia,
                     double[::1] phys,
                     double[::1] neuron_u, double[::1] neuron_o,
                     double[::1] thr_n, double[::1] thr_p,
                     double c_q, double c_t, double tau,
                     long long[::1] seg_a, long long[::1] seg_b,
                     long long[::1] seg_c,
                     long long[::1] first_el, long long[::1] last_el,
                     double couple_sign, long long n_steps,
                     double target_x, double target_y, double success_r,
                     long long head, int record,
                     double[:, ::1] trace_spk, double[:, ::1] trace_def,
                     double[:, ::1] trace_gam):
    cdef Py_ssize_t m = neuron_u.shape[0]
    cdef double dt = phys[_P_DT]
    cdef double win = dt / tau
    cdef double leak = 1.0 - win
    cdef cnp.ndarray fb = np.zeros((pos.shape[0], 3))
    cdef cnp.ndarray tb = np.zeros((omega.shape[0], 3))
    cdef double[:, ::1] fbuf = fb
    cdef double[:, ::1] tbuf = tb
    cdef long long silent = 0
    cdef int status = STATUS_OK
    cdef long long steps_done = 0
    cdef double r2 = success_r * success_r
    cdef long long k
    cdef Py_ssize_t s
    cdef double d, u, o, gamma, zt, ddx, ddy
    cdef int err
    for k in range(n_steps):
        for s in range(m):
            d = _deformation_c(pos, seg_a[s], seg_b[s], seg_c[s])
            u = neuron_u[s]
            o = neuron_o[s]
            u = (1.0 - fabs(o)) * leak * u + win * c_q * d
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
        if err != 0 or _destroyed_c(pos, rest_len, phys):
            status = STATUS_DESTROYED
            break
        if success_r > 0.0:
            ddx = target_x - pos[head, 0]
            ddy = target_y - pos[head, 1]
            if ddx * ddx + ddy * ddy < r2:
                status = STATUS_SUCCESS
                break
    return steps_done, status, silent


def vanilla_interval(double[:, ::1] pos, double[:, ::1] vel,
                     double[:, :, ::1] frames, double[:, ::1] omega,
                     double[:, ::1] ext_f, double[:, ::1] ext_t,
                     double[::1] rest_len, double[::1] voronoi,
                     double[::1] mass, double[:, ::1] inertia,
                     double[::1] phys,
                     double[::1] gammas,
                     long long[::1] seg_a, long long[::1] seg_b,
                     long long[::1] seg_c,
                     long long[::1] first_el, long long[::1] last_el,
                     double couple_sign, long long n_steps,
                     double target_x, double target_y, double success_r,
                     long long head, int record,
                     double[:, ::1] trace_def, double[:, ::1] trace_gam):
    cdef Py_ssize_t m = gammas.shape[0]
    cdef cnp.ndarray fb = np.zeros((pos.shape[0], 3))
    cdef cnp.ndarray tb = np.zeros((omega.shape[0], 3))
    cdef double[:, ::1] fbuf = fb
    cdef double[:, ::1] tbuf = tb
    cdef long long zero_steps = 0
    cdef int status = STATUS_OK
    cdef long long steps_done = 0
    cdef double r2 = success_r * success_r
    cdef long long k
    cdef Py_ssize_t s
    cdef double gamma, zt, ddx, ddy
    cdef int err
    for k in range(n_steps):
        for s in range(m):
            gamma = gammas[s]
            if gamma == 0.0:
                zero_steps += 1
            zt = couple_sign * gamma
            ext_t[first_el[s], 2] += zt
            ext_t[last_el[s], 2] -= zt
            if record != 0:
                trace_def[k, s] = _deformation_c(pos, seg_a[s], seg_b[s],
                                                 seg_c[s])
                trace_gam[k, s] = gamma
        err = _step_once(pos, vel, frames, omega, ext_f, ext_t, rest_len,
                         voronoi, mass, inertia, phys, fbuf, tbuf)
        steps_done = k + 1
        if err != 0 or _destroyed_c(pos, rest_len, phys):
            status = STATUS_DESTROYED
            break
        if success_r > 0.0:
            ddx = target_x - pos[head, 0]
            ddy = target_y - pos[head, 1]
            if ddx * ddx + ddy * ddy < r2:
                status = STATUS_SUCCESS
                break
    return steps_done, status, zero_steps


def cpg_interval(double[:, ::1] pos, double[:, ::1] vel,
                 double[:, :, ::1] frames, double[:, ::1] omega,
                 double[:, ::1] ext_f, double[:, ::1] ext_t,
                 double[::1] rest_len, double[::1] voronoi,
                 double[::1] mass, double[:, ::1] inertia,
                 double[::1] phys,
                 double[::1] xf, double[::1] xe,
                 double[::1] ff, double[::1] fe,
                 double[::1] tonic, double[::1] cpg,
                 long long[::1] seg_a, long long[::1] seg_b,
                 long long[::1] seg_c,
                 long long[::1] first_el, long long[::1] last_el,
                 double couple_sign, long long n_steps,
                 double target_x, double target_y, double success_r,
                 long long head, int record,
                 double[:, ::1] trace_def, double[:, ::1] trace_gam):
    cdef Py_ssize_t m = xf.shape[0]
    cdef double dt = phys[_P_DT]
    cdef double r_d = cpg[0]
    cdef double r_a = cpg[1]
    cdef double a_mut = cpg[2]
    cdef double b_self = cpg[3]
    cdef double w_down = cpg[4]
    cdef double w_up = cpg[5]
    cdef double amp = cpg[6]
    cdef double gain = cpg[7]
    cdef double bias = cpg[8]
    cdef cnp.ndarray fb = np.zeros((pos.shape[0], 3))
    cdef cnp.ndarray tb = np.zeros((omega.shape[0], 3))
    cdef cnp.ndarray yfa = np.zeros(m)
    cdef cnp.ndarray yea = np.zeros(m)
    cdef double[:, ::1] fbuf = fb
    cdef double[:, ::1] tbuf = tb
    cdef double[::1] yf = yfa
    cdef double[::1] ye = yea
    cdef long long zero_steps = 0
    cdef int status = STATUS_OK
    cdef long long steps_done = 0
    cdef double r2 = success_r * success_r
    cdef long long k
    cdef Py_ssize_t s
    cdef double gamma, zt, ddx, ddy, drive, mag, in_f, in_e
    cdef double cpl_f, cpl_e, dxf, dxe, dff, dfe
    cdef int err
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
                trace_def[k, s] = _deformation_c(pos, seg_a[s], seg_b[s],
                                                 seg_c[s])
                trace_gam[k, s] = gamma
        for s in range(m):
            drive = tonic[s]
            mag = fabs(drive)
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
        if err != 0 or _destroyed_c(pos, rest_len, phys):
            status = STATUS_DESTROYED
            break
        if success_r > 0.0:
            ddx = target_x - pos[head, 0]
            ddy = target_y - pos[head, 1]
            if ddx * ddx + ddy * ddy < r2:
                status = STATUS_SUCCESS
                break
    return steps_done, status, zero_steps

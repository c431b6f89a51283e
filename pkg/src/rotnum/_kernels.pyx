# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the loops in ``_kernels_py``. Same signatures, same results."""

import numpy as np

from libc.math cimport atan2, ceil, cos, fmod, sin, sqrt, floor

cdef double TWO_PI = 6.283185307179586
cdef double INV_TWO_PI = 0.15915494309189535


cdef inline double _wrap(double r) nogil:
    return r - ceil(r - 0.5)


cdef inline double _mod1(double x) nogil:
    cdef double r = x - floor(x)
    if r >= 1.0:
        r = 0.0
    return r


def matrix_sequence_orbit(mats, double x0, bint record=False):
    cdef double[:, :, ::1] g = np.ascontiguousarray(mats, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0], k
    positions = np.empty(n) if record else None
    cdef double[::1] pos
    if record:
        pos = positions
    cdef double frac = _mod1(x0)
    cdef double ux = cos(TWO_PI * x0), uy = sin(TWO_PI * x0)
    cdef double total = 0.0, d0, r, d, vx, vy, nn
    with nogil:
        for k in range(n):
            d0 = _wrap(atan2(g[k, 1, 0], g[k, 0, 0]) * INV_TWO_PI)
            vx = g[k, 0, 0] * ux + g[k, 0, 1] * uy
            vy = g[k, 1, 0] * ux + g[k, 1, 1] * uy
            r = atan2(ux * vy - uy * vx, ux * vx + uy * vy) * INV_TWO_PI - d0
            d = d0 + r - ceil(r - 0.5)
            if record:
                pos[k] = frac
            total += d
            frac = _mod1(frac + d)
            nn = 1.0 / sqrt(vx * vx + vy * vy)
            ux = vx * nn
            uy = vy * nn
    return total, positions


def matrix_power_orbits(mats, long n, double x0):
    cdef double[:, :, ::1] g = np.ascontiguousarray(mats, dtype=np.float64)
    cdef Py_ssize_t K = g.shape[0], j
    cdef long k
    out = np.zeros(K)
    cdef double[::1] total = out
    cdef double g11, g12, g21, g22, d0, ux, uy, vx, vy, r, nn, acc
    with nogil:
        for j in range(K):
            g11 = g[j, 0, 0]
            g12 = g[j, 0, 1]
            g21 = g[j, 1, 0]
            g22 = g[j, 1, 1]
            d0 = _wrap(atan2(g21, g11) * INV_TWO_PI)
            ux = cos(TWO_PI * x0)
            uy = sin(TWO_PI * x0)
            acc = 0.0
            for k in range(n):
                vx = g11 * ux + g12 * uy
                vy = g21 * ux + g22 * uy
                r = atan2(ux * vy - uy * vx, ux * vx + uy * vy) * INV_TWO_PI - d0
                acc += d0 + r - ceil(r - 0.5)
                nn = 1.0 / sqrt(vx * vx + vy * vy)
                ux = vx * nn
                uy = vy * nn
            total[j] = acc
    return out


def sine_orbit(double omega, double coupling, double x0, long n):
    cdef double frac = _mod1(x0), total = 0.0, d
    cdef long k
    with nogil:
        for k in range(n):
            d = omega + coupling * sin(TWO_PI * frac)
            total += d
            frac = _mod1(frac + d)
    return total


cdef inline double _tang(double m11, double m12, double m21, double m22,
                         double c, double s) nogil:
    return m21 * c * c - m12 * s * s + (m22 - m11) * c * s


def angle_heun(A, B, dW, double h, alpha0):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, :, ::1] b = np.ascontiguousarray(
        np.asarray(B, dtype=np.float64).reshape(-1, 2, 2))
    cdef double[:, :, ::1] w = np.ascontiguousarray(dW, dtype=np.float64)
    cdef Py_ssize_t paths = w.shape[0], steps = w.shape[1], m = w.shape[2]
    cdef Py_ssize_t p, k, i
    cdef double[::1] start = np.array(
        np.broadcast_to(np.asarray(alpha0, dtype=np.float64), (paths,)))
    delta_arr = np.empty(paths)
    up_arr = np.zeros(paths, dtype=np.int64)
    down_arr = np.zeros(paths, dtype=np.int64)
    cdef double[::1] delta = delta_arr
    cdef long long[::1] up = up_arr
    cdef long long[::1] down = down_arr
    b0_arr = np.empty(max(m, 1))
    cdef double[::1] b0 = b0_arr
    cdef double alpha, ang, c, s, a0, pred, inc, bi, max_inc = 0.0
    cdef long long level, new_level, jump
    with nogil:
        for p in range(paths):
            alpha = start[p]
            level = 0
            for k in range(steps):
                ang = TWO_PI * alpha
                c = cos(ang)
                s = sin(ang)
                a0 = _tang(a[0, 0], a[0, 1], a[1, 0], a[1, 1], c, s) * INV_TWO_PI
                pred = alpha + a0 * h
                for i in range(m):
                    bi = _tang(b[i, 0, 0], b[i, 0, 1], b[i, 1, 0], b[i, 1, 1], c, s) * INV_TWO_PI
                    b0[i] = bi
                    pred = pred + bi * w[p, k, i]
                ang = TWO_PI * pred
                c = cos(ang)
                s = sin(ang)
                inc = 0.5 * (a0 + _tang(a[0, 0], a[0, 1], a[1, 0], a[1, 1], c, s) * INV_TWO_PI) * h
                for i in range(m):
                    inc = inc + 0.5 * (b0[i] + _tang(b[i, 0, 0], b[i, 0, 1], b[i, 1, 0],
                                                     b[i, 1, 1], c, s) * INV_TWO_PI) * w[p, k, i]
                alpha = alpha + inc
                if inc > max_inc:
                    max_inc = inc
                elif -inc > max_inc:
                    max_inc = -inc
                new_level = <long long>ceil(alpha - start[p] - 0.5)
                jump = new_level - level
                if jump > 0:
                    up[p] += jump
                elif jump < 0:
                    down[p] -= jump
                level = new_level
            delta[p] = alpha - start[p]
    return delta_arr, up_arr, down_arr, max_inc


def heun_windows(A, B, dW, double h, spw, double alpha0=0.0):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, :, ::1] b = np.ascontiguousarray(
        np.asarray(B, dtype=np.float64).reshape(-1, 2, 2))
    cdef double[:, ::1] w = np.ascontiguousarray(dW, dtype=np.float64)
    cdef Py_ssize_t steps = w.shape[0], m = w.shape[1]
    cdef long[::1] sizes = np.ascontiguousarray(spw, dtype=np.int64).astype(np.int_)
    cdef Py_ssize_t J = sizes.shape[0], j, k, i
    outs = [np.empty((steps // sizes[j], 2, 2)) for j in range(J)]
    # accumulators: J x 4
    acc_arr = np.zeros((J, 4))
    cdef double[:, ::1] acc = acc_arr
    cdef double m11, m12, m21, m22, s11, s12, s21, s22, q11, q12, q21, q22
    cdef double[:, :, ::1] o
    # the angle of the tracked vector is counted in whole turns through
    # crossings of the negative x-axis, plus atan2 at both ends
    cdef double ux = cos(TWO_PI * alpha0), uy = sin(TWO_PI * alpha0), vx, vy, nv
    cdef double start = atan2(uy, ux)
    cdef long long turns = 0
    for j in range(J):
        acc[j, 0] = 1.0
        acc[j, 3] = 1.0
    for k in range(steps):
        m11 = a[0, 0] * h
        m12 = a[0, 1] * h
        m21 = a[1, 0] * h
        m22 = a[1, 1] * h
        for i in range(m):
            m11 += b[i, 0, 0] * w[k, i]
            m12 += b[i, 0, 1] * w[k, i]
            m21 += b[i, 1, 0] * w[k, i]
            m22 += b[i, 1, 1] * w[k, i]
        s11 = 1.0 + m11 + 0.5 * (m11 * m11 + m12 * m21)
        s12 = m12 + 0.5 * (m11 * m12 + m12 * m22)
        s21 = m21 + 0.5 * (m21 * m11 + m22 * m21)
        s22 = 1.0 + m22 + 0.5 * (m21 * m12 + m22 * m22)
        vx = s11 * ux + s12 * uy
        vy = s21 * ux + s22 * uy
        if (uy >= 0.0) != (vy >= 0.0) and (ux * vy - uy * vx) / (vy - uy) < 0.0:
            if uy >= 0.0:
                turns += 1
            else:
                turns -= 1
        if (k & 31) == 31:
            nv = 1.0 / sqrt(vx * vx + vy * vy)
            vx *= nv
            vy *= nv
        ux = vx
        uy = vy
        for j in range(J):
            q11 = s11 * acc[j, 0] + s12 * acc[j, 2]
            q12 = s11 * acc[j, 1] + s12 * acc[j, 3]
            q21 = s21 * acc[j, 0] + s22 * acc[j, 2]
            q22 = s21 * acc[j, 1] + s22 * acc[j, 3]
            acc[j, 0] = q11
            acc[j, 1] = q12
            acc[j, 2] = q21
            acc[j, 3] = q22
            if (k + 1) % sizes[j] == 0:
                o = outs[j]
                i = (k + 1) // sizes[j] - 1
                o[i, 0, 0] = q11
                o[i, 0, 1] = q12
                o[i, 1, 0] = q21
                o[i, 1, 1] = q22
                acc[j, 0] = 1.0
                acc[j, 1] = 0.0
                acc[j, 2] = 0.0
                acc[j, 3] = 1.0
    return outs, turns + (atan2(uy, ux) - start) * INV_TWO_PI

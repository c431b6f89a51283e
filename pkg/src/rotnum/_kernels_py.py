"""Pure-Python / numpy versions of the hot loops.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Angles are in turns throughout.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi
INV_TWO_PI = 1.0 / TWO_PI


def _wrap(r):
    return r - math.ceil(r - 0.5)


def _mod1(x):
    r = x - math.floor(x)
    return 0.0 if r >= 1.0 else r


def matrix_sequence_orbit(mats, x0, record=False):
    """Telescoped lift sum along a sequence of matrices.

    Returns ``(total, positions)`` where ``total = Psi_n o ... o Psi_1(x0) - x0``
    and ``positions[k]`` is the circle point (in [0, 1)) visited before step k.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    n = mats.shape[0]
    positions = np.empty(n) if record else None
    frac = _mod1(x0)
    ux = math.cos(TWO_PI * x0)
    uy = math.sin(TWO_PI * x0)
    total = 0.0
    atan2 = math.atan2
    ceil = math.ceil
    sqrt = math.sqrt
    for k in range(n):
        g = mats[k]
        g11, g12, g21, g22 = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
        d0 = _wrap(atan2(g21, g11) * INV_TWO_PI)
        vx = g11 * ux + g12 * uy
        vy = g21 * ux + g22 * uy
        r = atan2(ux * vy - uy * vx, ux * vx + uy * vy) * INV_TWO_PI - d0
        d = d0 + r - ceil(r - 0.5)
        if record:
            positions[k] = frac
        total += d
        frac = _mod1(frac + d)
        nn = 1.0 / sqrt(vx * vx + vy * vy)
        ux = vx * nn
        uy = vy * nn
    return total, positions


def matrix_power_orbits(mats, n, x0):
    """For each matrix g in ``mats``: ``Psi_g^(n)(x0) - x0`` (vectorised over g)."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    g11, g12, g21, g22 = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    r0 = np.arctan2(g21, g11) * INV_TWO_PI
    d0 = r0 - np.ceil(r0 - 0.5)
    k = mats.shape[0]
    ux = np.full(k, math.cos(TWO_PI * x0))
    uy = np.full(k, math.sin(TWO_PI * x0))
    total = np.zeros(k)
    for _ in range(int(n)):
        vx = g11 * ux + g12 * uy
        vy = g21 * ux + g22 * uy
        r = np.arctan2(ux * vy - uy * vx, ux * vx + uy * vy) * INV_TWO_PI - d0
        total += d0 + r - np.ceil(r - 0.5)
        nn = 1.0 / np.hypot(vx, vy)
        ux = vx * nn
        uy = vy * nn
    return total


def sine_orbit(omega, coupling, x0, n):
    """``F^(n)(x0) - x0`` for ``F(x) = x + omega + coupling * sin(2 pi x)``."""
    frac = _mod1(x0)
    total = 0.0
    sin = math.sin
    for _ in range(int(n)):
        d = omega + coupling * sin(TWO_PI * frac)
        total += d
        frac = _mod1(frac + d)
    return total


def _tangential(m, c, s):
    # <M s, v> with s = (c, s), v = (-s, c)
    return m[1, 0] * c * c - m[0, 1] * s * s + (m[1, 1] - m[0, 0]) * c * s


def angle_heun(A, B, dW, h, alpha0):
    """Stratonovich-Heun for the angular SDE of ``dx = Ax dt + sum B_i x o dW_i``.

    ``dW`` has shape (paths, steps, m); ``alpha0`` is a scalar or one start
    angle per path. Returns ``(delta, up, down, max_inc)``:
    the unwrapped increment alpha(T) - alpha(0), the anti-clockwise and
    clockwise crossing counts of the half-integer levels relative to alpha(0),
    and the largest absolute per-step increment.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2, 2)
    dW = np.asarray(dW, dtype=np.float64)
    paths, steps, m = dW.shape
    alpha0 = np.broadcast_to(np.asarray(alpha0, dtype=np.float64), (paths,)).copy()
    alpha = alpha0.copy()
    up = np.zeros(paths, dtype=np.int64)
    down = np.zeros(paths, dtype=np.int64)
    level = np.zeros(paths, dtype=np.int64)
    max_inc = 0.0
    for k in range(steps):
        ang = TWO_PI * alpha
        c, s = np.cos(ang), np.sin(ang)
        a0 = _tangential(A, c, s) * INV_TWO_PI
        pred = alpha + a0 * h
        b0 = []
        for i in range(m):
            bi = _tangential(B[i], c, s) * INV_TWO_PI
            b0.append(bi)
            pred = pred + bi * dW[:, k, i]
        ang = TWO_PI * pred
        c, s = np.cos(ang), np.sin(ang)
        inc = 0.5 * (a0 + _tangential(A, c, s) * INV_TWO_PI) * h
        for i in range(m):
            inc = inc + 0.5 * (b0[i] + _tangential(B[i], c, s) * INV_TWO_PI) * dW[:, k, i]
        alpha = alpha + inc
        if paths:
            max_inc = max(max_inc, float(np.max(np.abs(inc))))
        new_level = np.ceil(alpha - alpha0 - 0.5).astype(np.int64)
        jump = new_level - level
        up += np.maximum(jump, 0)
        down += np.maximum(-jump, 0)
        level = new_level
    return alpha - alpha0, up, down, max_inc


def _step_angle(S, alpha0, block=64):
    """Unwrapped turn of ``S[k-1] ... S[0] u`` over all steps, ``u`` at angle alpha0.

    Prefix products are formed inside blocks (vectorised across blocks) and
    chained across blocks sequentially.
    """
    steps = S.shape[0]
    nblk = -(-steps // block)
    pad = np.broadcast_to(np.eye(2), (nblk * block, 2, 2)).copy()
    pad[:steps] = S
    P = pad.reshape(nblk, block, 2, 2)
    prefix = np.empty_like(P)
    acc = np.broadcast_to(np.eye(2), (nblk, 2, 2)).copy()
    for j in range(block):
        acc = P[:, j] @ acc
        prefix[:, j] = acc
    starts = np.empty((nblk, 2))
    u = np.array([math.cos(TWO_PI * alpha0), math.sin(TWO_PI * alpha0)])
    for b in range(nblk):
        starts[b] = u
        u = prefix[b, -1] @ u
        u = u / math.hypot(u[0], u[1])
    vecs = np.einsum("bjxy,by->bjx", prefix, starts).reshape(-1, 2)[:steps]
    ang = np.arctan2(vecs[:, 1], vecs[:, 0]) * INV_TWO_PI
    d = np.diff(np.concatenate([[alpha0 - math.floor(alpha0 + 0.5)], ang]))
    d -= np.ceil(d - 0.5)
    return float(d.sum())


def heun_windows(A, B, dW, h, spw, alpha0=0.0):
    """Window products of Heun step matrices ``I + M + M^2/2``.

    ``dW`` has shape (steps, m); for each entry of ``spw`` returns an array of
    shape (steps // spw, 2, 2) holding the ordered products of consecutive
    blocks of ``spw`` step matrices. Also returns the unwrapped angle change
    (turns) of the vector at angle ``alpha0`` along the full step sequence.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2, 2)
    dW = np.asarray(dW, dtype=np.float64)
    steps, m = dW.shape
    M = A * h + np.einsum("ki,iab->kab", dW, B)
    S = np.eye(2) + M + 0.5 * (M @ M)
    out = []
    for w in spw:
        w = int(w)
        nwin = steps // w
        blocks = S[: nwin * w].reshape(nwin, w, 2, 2)
        acc = np.broadcast_to(np.eye(2), (nwin, 2, 2)).copy()
        for j in range(w):
            acc = blocks[:, j] @ acc
        out.append(acc)
    turn = _step_angle(S, alpha0) if steps else 0.0
    return out, turn

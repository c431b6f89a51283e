"""GL+(2, R): the projective action on the circle, its lift, the eigenvalue
formula for the rotation number, and products of random matrices.

Orientation is anti-clockwise throughout: a matrix whose action turns
vectors anti-clockwise has positive rotation number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .circle import Lift, NotHomeomorphismError, RotationEstimate
from .composition import (
    DEFAULT_BINS,
    EmpiricalMeasure,
    HomeoSampler,
    compose_rotation_number,
    histogram_counts,
)

TWO_PI = 2.0 * math.pi
DISC_CUTOFF = 1e-12
_BLOCK = 4096


@dataclass(frozen=True)
class Mat2:
    """Real 2x2 matrix with strictly positive determinant."""

    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        if not self.det > 0:
            raise NotHomeomorphismError(f"det = {self.det} is not positive")

    @classmethod
    def from_array(cls, g) -> "Mat2":
        g = np.asarray(g, dtype=np.float64)
        return cls(float(g[0, 0]), float(g[0, 1]), float(g[1, 0]), float(g[1, 1]))

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    @property
    def array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2.from_array(self.array @ other.array)


def as_matrix(g) -> np.ndarray:
    """2x2 float array from a :class:`Mat2` or anything array-like."""
    if isinstance(g, Mat2):
        return g.array
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {g.shape}")
    return g


def _checked(g) -> np.ndarray:
    g = as_matrix(g)
    if not g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0] > 0:
        raise NotHomeomorphismError("matrix must have positive determinant")
    return g


def rotation_matrix(turns: float) -> np.ndarray:
    c, s = math.cos(TWO_PI * turns), math.sin(TWO_PI * turns)
    return np.array([[c, -s], [s, c]])


def projective_action(g, s) -> np.ndarray:
    """``g s / |g s|`` for a unit vector ``s``."""
    v = _checked(g) @ np.asarray(s, dtype=np.float64)
    return v / np.hypot(v[0], v[1])


def _base_displacement(g: np.ndarray) -> float:
    r = math.atan2(g[1, 0], g[0, 0]) / TWO_PI
    return r - math.ceil(r - 0.5)


class MatrixLift(Lift):
    """Normalised lift ``Psi_g`` of the projective action of ``g``.

    ``Psi_g(0)`` is the angle of ``g e1`` in (-1/2, 1/2]. Since the span of
    ``Psi_g - Id`` is below 1/2, the displacement at any ``x`` is the angle
    from ``u(x)`` to ``g u(x)`` taken within 1/2 turn of ``Psi_g(0)``.
    """

    def __init__(self, g):
        self.g = _checked(g)
        self.d0 = _base_displacement(self.g)

    def displacement(self, x):
        x = np.asarray(x, dtype=np.float64)
        ux, uy = np.cos(TWO_PI * x), np.sin(TWO_PI * x)
        g = self.g
        vx = g[0, 0] * ux + g[0, 1] * uy
        vy = g[1, 0] * ux + g[1, 1] * uy
        r = np.arctan2(ux * vy - uy * vx, ux * vx + uy * vy) / TWO_PI - self.d0
        out = self.d0 + r - np.ceil(r - 0.5)
        return float(out) if out.ndim == 0 else out

    def orbit_total(self, n, x0):
        return float(kernels.matrix_power_orbits(self.g[None], int(n), float(x0))[0])

    def __repr__(self):
        return f"MatrixLift({self.g.tolist()})"


def matrix_lift(g) -> MatrixLift:
    return MatrixLift(g)


def unwrapped_matrix_lift(g, x, steps: int = 4096) -> float:
    """``Psi_g(x)`` by continuous angle tracking along ``[0, x]``; a slow reference."""
    g = _checked(g)
    ts = np.linspace(0.0, float(x), steps + 1)
    v = g @ np.vstack([np.cos(TWO_PI * ts), np.sin(TWO_PI * ts)])
    ang = np.unwrap(np.arctan2(v[1], v[0])) / TWO_PI
    return float(_base_displacement(g) + ang[-1] - ang[0])


def displacement_table(mats, s) -> np.ndarray:
    """``beta_g(s)`` for every matrix (rows) and every circle point (columns)."""
    mats = np.asarray(mats, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    ux, uy = np.cos(TWO_PI * s)[None, :], np.sin(TWO_PI * s)[None, :]
    g11, g12 = mats[:, 0, 0, None], mats[:, 0, 1, None]
    g21, g22 = mats[:, 1, 0, None], mats[:, 1, 1, None]
    r0 = np.arctan2(g21, g11) / TWO_PI
    d0 = r0 - np.ceil(r0 - 0.5)
    vx = g11 * ux + g12 * uy
    vy = g21 * ux + g22 * uy
    r = np.arctan2(ux * vy - uy * vx, ux * vx + uy * vy) / TWO_PI - d0
    return d0 + r - np.ceil(r - 0.5)


def eigen_rotation_number(g) -> float:
    """Rotation number from the eigenvalues of ``g``, in (-1/2, 1/2].

    Complex pair ``a +/- ib``: ``arg(a + ib) / 2 pi`` with the sign of the
    turning direction (sign of ``g21``). Real positive eigenvalues give 0, real
    negative ones 1/2. ``|disc| / det < 1e-12`` counts as a repeated real root.
    """
    g = _checked(g)
    tr = g[0, 0] + g[1, 1]
    # (g11 - g22)^2 + 4 g12 g21 equals tr^2 - 4 det without the cancellation
    disc = (g[0, 0] - g[1, 1]) ** 2 + 4.0 * g[0, 1] * g[1, 0]
    # the cutoff applies to det-normalised g, so it is invariant under scaling
    if disc < -DISC_CUTOFF * (g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]):
        b = 0.5 * math.sqrt(-disc)
        turn = math.atan2(b, 0.5 * tr) / TWO_PI
        return turn if g[1, 0] > 0 else -turn
    return 0.0 if tr > 0 else 0.5


# -- samplers ---------------------------------------------------------------


class MatrixSampler(HomeoSampler):
    """Stationary sequence of random matrices ``Y_n = Y o theta^(n-1)``.

    Subclasses provide :meth:`blocks`, a generator of ``(k, 2, 2)`` arrays
    whose concatenation is the sequence; ``emit`` hands out projective lifts.
    """

    def blocks(self):
        raise NotImplementedError

    def matrices(self, n: int) -> np.ndarray:
        """The first ``n`` matrices as an ``(n, 2, 2)`` array."""
        n = int(n)
        parts, have = [], 0
        for block in self.blocks():
            if have >= n:
                break
            parts.append(block)
            have += len(block)
        if have < n:
            raise ValueError(f"sampler exhausted after {have} matrices, {n} requested")
        out = np.concatenate(parts)[:n] if parts else np.empty((0, 2, 2))
        det = out[:, 0, 0] * out[:, 1, 1] - out[:, 0, 1] * out[:, 1, 0]
        if np.any(det <= 0):
            raise NotHomeomorphismError("sampler produced a matrix with det <= 0")
        return out

    def initial_state(self):
        it = (g for block in self.blocks() for g in block)
        return [it, next(it)]

    def shift(self, state):
        state[1] = next(state[0])
        return state

    def emit(self, state) -> Lift:
        return MatrixLift(state[1])


class IIDMatrixSampler(MatrixSampler):
    """I.i.d. matrices from ``draw(rng, size) -> (size, 2, 2)``.

    Matrices are drawn in fixed blocks from ``default_rng(seed)`` so any
    prefix of the sequence is reproducible.
    """

    def __init__(self, draw: Callable[[np.random.Generator, int], np.ndarray], seed: int = 0):
        super().__init__(seed)
        self.draw = draw

    def blocks(self):
        rng = np.random.default_rng(self.seed)
        while True:
            yield np.asarray(self.draw(rng, _BLOCK), dtype=np.float64)


class SequenceMatrixSampler(MatrixSampler):
    """A fixed, finite sequence of matrices (e.g. sampled cocycle windows)."""

    def __init__(self, mats, seed: int = 0):
        super().__init__(seed)
        mats = np.asarray(mats, dtype=np.float64).reshape(-1, 2, 2)
        det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
        if np.any(det <= 0):
            raise NotHomeomorphismError("all matrices need positive determinant")
        self.mats = mats

    def blocks(self):
        yield self.mats

    def matrices(self, n: int) -> np.ndarray:
        if n > len(self.mats):
            raise ValueError(f"only {len(self.mats)} matrices available, {n} requested")
        return self.mats[: int(n)]

    def reseed(self, seed):
        return self


class ConstantMatrixSampler(MatrixSampler):
    """The constant sequence ``g, g, g, ...``."""

    def __init__(self, g):
        super().__init__(0)
        self.g = _checked(g)

    def blocks(self):
        block = np.broadcast_to(self.g, (_BLOCK, 2, 2))
        while True:
            yield block

    def matrices(self, n: int) -> np.ndarray:
        return np.broadcast_to(self.g, (int(n), 2, 2))

    def reseed(self, seed):
        return self


def rotation_sampler(draw_turns: Callable[[np.random.Generator, int], np.ndarray],
                     seed: int = 0) -> IIDMatrixSampler:
    """I.i.d. rotations by ``2 pi lambda`` with ``lambda = draw_turns(rng, size)``."""

    def draw(rng, size):
        lam = np.asarray(draw_turns(rng, size), dtype=np.float64)
        c, s = np.cos(TWO_PI * lam), np.sin(TWO_PI * lam)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)

    return IIDMatrixSampler(draw, seed)


def uniform_rotation_sampler(lo: float, hi: float, seed: int = 0) -> IIDMatrixSampler:
    return rotation_sampler(lambda rng, size: rng.uniform(lo, hi, size), seed)


def discrete_rotation_sampler(values, probs=None, seed: int = 0) -> IIDMatrixSampler:
    values = np.asarray(values, dtype=np.float64)
    return rotation_sampler(lambda rng, size: rng.choice(values, size=size, p=probs), seed)


def upper_triangular_sampler(p_negative: float, seed: int = 0) -> IIDMatrixSampler:
    """I.i.d. upper-triangular matrices with ``P[a11 < 0] = p_negative``.

    Diagonal magnitudes are uniform on [0.5, 2] and share the sign of ``a11``
    (so det > 0); the corner entry is standard normal.
    """
    if not 0 <= p_negative <= 1:
        raise ValueError("p_negative must lie in [0, 1]")

    def draw(rng, size):
        sign = np.where(rng.random(size) < p_negative, -1.0, 1.0)
        out = np.zeros((size, 2, 2))
        out[:, 0, 0] = sign * rng.uniform(0.5, 2.0, size)
        out[:, 1, 1] = sign * rng.uniform(0.5, 2.0, size)
        out[:, 0, 1] = rng.standard_normal(size)
        return out

    return IIDMatrixSampler(draw, seed)


def random_gl2_plus(rng: np.random.Generator, size: int, complex_only: bool = False) -> np.ndarray:
    """Gaussian matrices conditioned on det > 0 (and complex eigenvalues if asked)."""
    out = np.empty((0, 2, 2))
    while len(out) < size:
        g = rng.standard_normal((2 * size + 8, 2, 2))
        det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
        keep = det > 0
        if complex_only:
            disc = (g[:, 0, 0] - g[:, 1, 1]) ** 2 + 4 * g[:, 0, 1] * g[:, 1, 0]
            keep &= disc < -1e-6
        out = np.concatenate([out, g[keep]])
    return out[:size]


# -- products ---------------------------------------------------------------


def product_rotation_number(sampler: MatrixSampler, n: int, replicas: int = 1,
                            x0: float = 0.0, workers: int = 1) -> RotationEstimate:
    """Rotation number of ``Y_n ... Y_1`` through the lifts of the projective actions."""
    return compose_rotation_number(sampler, n, x0=x0, replicas=replicas, workers=workers)


def stationary_measure_estimate(sampler: MatrixSampler, n: int, bins: int = DEFAULT_BINS,
                                x0: float = 0.0) -> EmpiricalMeasure:
    """Occupation measure of the projective chain ``s_(k+1) = psi_(Y_(k+1))(s_k)``.

    Returned on the circle; ``.quotient()`` gives the projective-line view.
    """
    _, positions = kernels.matrix_sequence_orbit(sampler.matrices(n), float(x0), True)
    return EmpiricalMeasure.from_counts(histogram_counts(positions, bins))

"""Circle arithmetic, lifts of orientation-preserving circle homeomorphisms and
rotation numbers of a single homeomorphism.

The circle is parametrised by turns: ``pi(x) = exp(2 pi i x)``. A lift ``F``
is stored through its periodic displacement ``delta = F - Id``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels


class RotnumError(Exception):
    """Base class for errors raised by this package."""


class NotHomeomorphismError(RotnumError, ValueError):
    """Input is not (a lift of) an orientation-preserving homeomorphism."""


def wrap_turn(x: float) -> float:
    """Representative of ``x mod 1`` in the half-open interval (-1/2, 1/2]."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"wrap_turn needs a finite value, got {x!r}")
    r = x - math.floor(x)
    if r > 0.5:
        r -= 1.0
    return r


def wrap_turns(x):
    """Vectorised :func:`wrap_turn`."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("wrap_turns needs finite values")
    r = x - np.floor(x)
    return np.where(r > 0.5, r - 1.0, r)


def circular_distance(a: float, b: float) -> float:
    """Distance between two points of R/Z."""
    return abs(wrap_turn(a - b))


@dataclass(frozen=True)
class RotationEstimate:
    """A rotation number in turns with its uncertainty.

    ``value`` is wrapped to (-1/2, 1/2] (per step for discrete systems; turns
    per unit time for continuous ones, where no wrapping is applied).
    ``raw`` keeps the unwrapped average so replicas can be pooled.
    ``bound`` is the a-priori truncation bound (1/n for n iterations) and
    ``stderr`` the Monte Carlo standard error across replicas.
    """

    value: float
    n: int
    stderr: float = 0.0
    bound: float = 0.0
    raw: float | None = None
    replicas: int = 1

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")

    def __float__(self) -> float:
        return float(self.value)


class Lift:
    """A lift ``F(x) = x + delta(x)`` with ``delta`` of period 1.

    Subclasses implement :meth:`displacement`; everything accepts floats or
    numpy arrays.
    """

    def displacement(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return x + self.displacement(x)

    def act(self, p: float) -> float:
        """Image of the circle point ``p`` as a representative in (-1/2, 1/2]."""
        return wrap_turn(self(float(p)))

    def inverse(self, y, tol: float = 1e-12):
        """``F^{-1}(y)`` by bisection (monotonicity makes it always converge)."""
        return invert_monotone(self, y, increasing=True, tol=tol)

    def orbit_total(self, n: int, x0: float) -> float:
        """``F^(n)(x0) - x0`` via the telescoped displacement sum."""
        frac = x0 - math.floor(x0)
        total = 0.0
        for _ in range(int(n)):
            d = float(self.displacement(frac))
            total += d
            frac = (frac + d) % 1.0
        return total

    def check(self, grid: int = 1024, atol: float = 1e-9) -> None:
        """Validate periodicity, strict monotonicity and ``|delta| < 3/2`` on a grid."""
        check_lift(self, grid=grid, atol=atol)


class FunctionLift(Lift):
    """Lift given by a closed-form callable ``F`` (numpy-vectorised)."""

    def __init__(self, fn: Callable, name: str | None = None):
        self.fn = fn
        self.name = name or getattr(fn, "__name__", "lift")

    def displacement(self, x):
        return self.fn(x) - x

    def __call__(self, x):
        return self.fn(x)

    def __repr__(self):
        return f"FunctionLift({self.name})"


class RotationLift(Lift):
    """Rigid rotation ``x -> x + a``."""

    def __init__(self, a: float):
        self.a = float(a)

    def displacement(self, x):
        return np.zeros_like(x, dtype=np.float64) + self.a if np.ndim(x) else self.a

    def inverse(self, y, tol: float = 1e-12):
        return y - self.a

    def orbit_total(self, n, x0):
        return n * self.a

    def __repr__(self):
        return f"RotationLift({self.a!r})"


class SineLift(Lift):
    """Arnold family ``F(x) = x + omega + coupling * sin(2 pi x)``.

    A homeomorphism as long as ``|coupling| < 1 / (2 pi)``.
    """

    def __init__(self, omega: float, coupling: float):
        if abs(coupling) >= 1.0 / (2.0 * math.pi):
            raise NotHomeomorphismError("sine lift is not monotone for |coupling| >= 1/(2 pi)")
        self.omega = float(omega)
        self.coupling = float(coupling)

    def displacement(self, x):
        return self.omega + self.coupling * np.sin(2.0 * np.pi * np.asarray(x, dtype=np.float64))

    def orbit_total(self, n, x0):
        return kernels.sine_orbit(self.omega, self.coupling, float(x0), int(n))

    def __repr__(self):
        return f"SineLift(omega={self.omega!r}, coupling={self.coupling!r})"


class PiecewiseLinearLift(Lift):
    """Monotone piecewise-linear lift through knots ``(xs[j], ys[j])``.

    ``xs`` must be strictly increasing inside [0, 1) and ``ys`` strictly
    increasing with ``ys[-1] < ys[0] + 1``; the lift is extended periodically.
    """

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
            raise ValueError("knots must be two 1-d sequences of equal, non-zero length")
        if xs[0] < 0 or xs[-1] >= 1 or np.any(np.diff(xs) <= 0):
            raise ValueError("knot abscissae must be strictly increasing in [0, 1)")
        if np.any(np.diff(ys) <= 0) or ys[-1] >= ys[0] + 1:
            raise NotHomeomorphismError("knot values are not strictly increasing modulo 1")
        # one period of padding on each side makes np.interp cover [0, 1]
        self._xs = np.concatenate([[xs[-1] - 1], xs, [xs[0] + 1]])
        self._ys = np.concatenate([[ys[-1] - 1], ys, [ys[0] + 1]])
        self.xs = xs
        self.ys = ys

    @classmethod
    def from_table(cls, values: Sequence[float]) -> "PiecewiseLinearLift":
        """Lift tabulated on the uniform grid ``j / len(values)``; at least 256 values."""
        values = np.asarray(values, dtype=np.float64)
        if values.size < 256:
            raise ValueError("a tabulated lift needs at least 256 grid values")
        return cls(np.arange(values.size) / values.size, values)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        k = np.floor(x)
        out = k + np.interp(x - k, self._xs, self._ys)
        return float(out) if out.ndim == 0 else out

    def displacement(self, x):
        return self(x) - x

    def __repr__(self):
        return f"PiecewiseLinearLift({len(self.xs)} knots)"


class ShiftedLift(Lift):
    """``F - k`` for an integer ``k``; the other lift of the same homeomorphism."""

    def __init__(self, base: Lift, k: int):
        self.base = base
        self.k = int(k)

    def displacement(self, x):
        return self.base.displacement(x) - self.k

    def __call__(self, x):
        return self.base(x) - self.k

    def inverse(self, y, tol: float = 1e-12):
        return self.base.inverse(y + self.k, tol=tol)

    def __repr__(self):
        return f"ShiftedLift({self.base!r}, {self.k})"


class ComposedLift(Lift):
    """``outer o inner``, evaluated pointwise and never re-normalised."""

    def __init__(self, outer: Lift, inner: Lift):
        self.outer = outer
        self.inner = inner

    def __call__(self, x):
        return self.outer(self.inner(x))

    def displacement(self, x):
        return self(x) - x

    def inverse(self, y, tol: float = 1e-12):
        return self.inner.inverse(self.outer.inverse(y, tol=tol), tol=tol)

    def __repr__(self):
        return f"ComposedLift({self.outer!r}, {self.inner!r})"


def invert_monotone(fn: Callable, y, increasing: bool = True, tol: float = 1e-12,
                    max_iter: int = 200):
    """Solve ``fn(x) = y`` for a lift-like ``fn`` (``fn(x+1) = fn(x) +/- 1``).

    Brackets come from the span bound on ``fn -/+ Id``; bisection stops once
    the bracket is narrower than ``tol`` (or stops shrinking at machine
    precision). Raises :class:`NotHomeomorphismError` if the bracket is
    invalid, which happens only when ``fn`` is not monotone.
    """
    sign = 1.0 if increasing else -1.0
    if np.ndim(y) == 0:
        return _invert_scalar(fn, float(y), sign, tol, max_iter)
    y_arr = np.asarray(y, dtype=np.float64)
    ref = y_arr if increasing else -y_arr
    d_ref = np.asarray(fn(ref), dtype=np.float64) - sign * ref
    centre = sign * (y_arr - d_ref)
    lo = centre - 1.5
    hi = centre + 1.5

    def g(x):
        return sign * (np.asarray(fn(x), dtype=np.float64) - y_arr)

    if np.any(g(lo) > 0) or np.any(g(hi) < 0):
        raise NotHomeomorphismError("bisection bracket invalid: map is not a monotone lift")
    for _ in range(max_iter):
        width = hi - lo
        if np.all(width <= tol):
            break
        mid = 0.5 * (lo + hi)
        stuck = (mid == lo) | (mid == hi)
        if np.all(stuck | (width <= tol)):
            break
        below = g(mid) < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    else:
        raise NotHomeomorphismError("bisection did not converge")
    root = 0.5 * (lo + hi)
    return float(root) if root.ndim == 0 else root


def _invert_scalar(fn, y, sign, tol, max_iter):
    ref = y if sign > 0 else -y
    centre = sign * (y - (float(fn(ref)) - sign * ref))
    lo, hi = centre - 1.5, centre + 1.5
    if sign * (float(fn(lo)) - y) > 0 or sign * (float(fn(hi)) - y) < 0:
        raise NotHomeomorphismError("bisection bracket invalid: map is not a monotone lift")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid == lo or mid == hi:
            return 0.5 * (lo + hi)
        if sign * (float(fn(mid)) - y) < 0:
            lo = mid
        else:
            hi = mid
    raise NotHomeomorphismError("bisection did not converge")


def check_lift(F: Callable, grid: int = 1024, atol: float = 1e-9) -> None:
    xs = np.arange(grid) / grid
    v = np.asarray(F(xs), dtype=np.float64)
    v1 = np.asarray(F(xs + 1.0), dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NotHomeomorphismError("lift evaluates to non-finite values")
    if np.max(np.abs(v1 - v - 1.0)) > atol:
        raise NotHomeomorphismError("lift is not periodic: F(x+1) != F(x) + 1")
    closed = np.append(v, v1[0])
    if np.any(np.diff(closed) <= 0):
        raise NotHomeomorphismError("lift is not strictly increasing on the grid")
    if np.max(np.abs(v - xs)) >= 1.5:
        raise NotHomeomorphismError("|F - Id| must stay below 3/2 for a normalised lift")


def normalize_lift(F_raw, grid: int = 1024) -> Lift:
    """Shift a lift by the unique integer putting ``F(0)`` in (-1/2, 1/2].

    ``F_raw`` is a :class:`Lift` or a vectorised callable. Periodicity and
    monotonicity are validated on a grid of ``grid`` points.
    """
    lift = F_raw if isinstance(F_raw, Lift) else FunctionLift(F_raw)
    f0 = float(lift(0.0))
    k = round(f0 - wrap_turn(f0))
    out = lift if k == 0 else ShiftedLift(lift, k)
    check_lift(out, grid=grid)
    return out


def lift_compose(g: Lift, f: Lift) -> Lift:
    """``g o f`` as a lift; the accumulated integer winding is kept."""
    return ComposedLift(g, f)


def classical_rotation_number(f: Lift, n_iter: int, x0: float = 0.0) -> RotationEstimate:
    """``wrap((F^(n)(x0) - x0) / n)`` with truncation bound ``1/n``."""
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    total = f.orbit_total(int(n_iter), float(x0))
    raw = total / n_iter
    return RotationEstimate(wrap_turn(raw), int(n_iter), 0.0, 1.0 / n_iter, raw)


@dataclass(frozen=True)
class OrbitSequence:
    """An ordered lifted orbit: non-decreasing, consecutive gaps in [0, 1)."""

    thetas: np.ndarray = field(repr=False)

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=np.float64)
        gaps = np.diff(th)
        if th.ndim != 1 or th.size == 0:
            raise ValueError("an orbit needs at least its initial point")
        if np.any(gaps < 0) or np.any(gaps >= 1):
            raise ValueError("ordered lifted orbit gaps must lie in [0, 1)")
        object.__setattr__(self, "thetas", th)

    def __len__(self):
        return self.thetas.size


def ordered_lifted_orbit(images: Sequence[float], p: float) -> OrbitSequence:
    """Ordered lifted orbit of ``p`` given its successive images on the circle.

    ``theta_0`` is the representative of ``p`` in (-1/2, 1/2]; each next
    ``theta_n`` is the smallest real ``>= theta_{n-1}`` projecting to the n-th
    image.
    """
    images = np.asarray(images, dtype=np.float64).ravel()
    thetas = np.empty(images.size + 1)
    thetas[0] = theta = wrap_turn(p)
    for j, img in enumerate(images, start=1):
        gap = (img - theta) % 1.0
        if gap >= 1.0:
            gap = 0.0
        theta = theta + gap
        thetas[j] = theta
    return OrbitSequence(thetas)


def orbit_rotation_number(orbit: OrbitSequence) -> RotationEstimate:
    """Average rate of increase ``(theta_n - theta_0) / n`` of a lifted orbit."""
    n = len(orbit) - 1
    if n < 1:
        raise ValueError("orbit must contain at least two points")
    raw = (orbit.thetas[-1] - orbit.thetas[0]) / n
    return RotationEstimate(wrap_turn(raw), n, 0.0, 1.0 / n, raw)


def orbit_images(f: Lift, p: float, n: int) -> np.ndarray:
    """Circle points ``f(p), f^2(p), ..., f^n(p)`` (representatives in [0, 1))."""
    out = np.empty(n)
    x = float(p)
    for j in range(n):
        x = float(f(x)) % 1.0
        out[j] = x
    return out


class _Conjugate(Lift):
    def __init__(self, h, f: Lift, reverse: bool, tol: float):
        self.h = h
        self.f = f
        self.reverse = reverse
        self.tol = tol

    def _h_inv(self, y):
        if not self.reverse and isinstance(self.h, Lift):
            return self.h.inverse(y, tol=self.tol)
        return invert_monotone(self.h, y, increasing=not self.reverse, tol=self.tol)

    def __call__(self, x):
        return self.h(self.f(self._h_inv(x)))

    def displacement(self, x):
        return self(x) - x


def conjugate(h, f: Lift, reverse: bool = False, tol: float = 1e-12) -> Lift:
    """The homeomorphism ``h o f o h^{-1}`` as a normalised lift.

    With ``reverse=True``, ``h`` is an orientation-reversing lift (strictly
    decreasing, ``H(x+1) = H(x) - 1``) and the rotation number changes sign.
    """
    sign = -1.0 if reverse else 1.0
    xs = np.arange(1025) / 1024
    v = sign * np.asarray(h(xs), dtype=np.float64)
    if np.any(np.diff(v) <= 0) or abs(v[-1] - v[0] - 1.0) > 1e-9:
        raise NotHomeomorphismError("conjugating map is not a monotone lift of the expected orientation")
    return normalize_lift(_Conjugate(h, f, reverse, tol))


def reflection(x):
    """Lift ``x -> -x`` of the complex-conjugation reflection of the circle."""
    return -np.asarray(x, dtype=np.float64) if np.ndim(x) else -x

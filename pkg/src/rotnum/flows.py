"""Continuous linear cocycles on R^2 and their unwrapped angle.

Three kinds are supported: autonomous flows ``x' = A x``, real-noise systems
``x' = A(theta_t omega) x`` driven by a piecewise or continuous driver, and
Stratonovich SDEs ``dx = A x dt + sum_i B_i x o dW_i``. Angles are stored in
turns: ``alpha`` is the continuous angle of ``x_t`` divided by 2 pi.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .circle import RotationEstimate, RotnumError
from .rng import philox, refine_increments

TWO_PI = 2.0 * math.pi
J = np.array([[0.0, -1.0], [1.0, 0.0]])

# Largest admissible per-step angle increment, in turns.
MAX_STEP_TURNS = 0.25


class DtFloorError(RotnumError):
    """Step halving reached the floor without meeting the 1/4-turn step contract."""


# -- coefficients and drivers ------------------------------------------------


def _mat(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


@dataclass(frozen=True)
class DeterministicCocycle:
    """Autonomous flow ``x' = A x``."""

    A: np.ndarray
    kind: str = field(default="deterministic", init=False)

    def __post_init__(self):
        object.__setattr__(self, "A", _mat(self.A))


class DriverPath:
    """One realisation ``t -> theta_t(omega)`` of a driver.

    ``state(t, left=True)`` gives the left limit, which matters only at the
    switching times returned by ``breakpoints``.
    """

    def state(self, t: float, left: bool = False):
        raise NotImplementedError

    def breakpoints(self, t0: float, t1: float) -> list[float]:
        return []

    def shifted(self, s: float) -> "DriverPath":
        return _ShiftedPath(self, s)


class _ShiftedPath(DriverPath):
    def __init__(self, base: DriverPath, s: float):
        self.base, self.s = base, float(s)

    def state(self, t, left=False):
        return self.base.state(t + self.s, left)

    def breakpoints(self, t0, t1):
        return [b - self.s for b in self.base.breakpoints(t0 + self.s, t1 + self.s)]


class FunctionPath(DriverPath):
    """Continuous driver given by a function of time."""

    def __init__(self, fn: Callable[[float], object]):
        self.fn = fn

    def state(self, t, left=False):
        return self.fn(t)


class _SwitchPath(DriverPath):
    """Piecewise-constant path: ``states[k]`` on ``[times[k], times[k+1])``."""

    def __init__(self, times, states, extend: Callable[[], None] | None = None):
        self.times = list(times)
        self.states = list(states)
        self._extend = extend

    def _cover(self, t):
        while self._extend is not None and self.times[-1] <= t:
            self._extend(self)

    def state(self, t, left=False):
        self._cover(t)
        k = (bisect.bisect_left if left else bisect.bisect_right)(self.times, t) - 1
        return self.states[max(k, 0)]

    def breakpoints(self, t0, t1):
        self._cover(t1)
        lo = bisect.bisect_right(self.times, t0)
        hi = bisect.bisect_left(self.times, t1)
        return self.times[lo:hi]


@dataclass(frozen=True)
class PeriodicDriver:
    """Cycle through states ``0, 1, ..., k-1`` spending ``durations[j]`` in state j."""

    durations: tuple
    phase: float = 0.0

    def __post_init__(self):
        d = tuple(float(x) for x in self.durations)
        if not d or min(d) <= 0:
            raise ValueError("durations must be positive")
        object.__setattr__(self, "durations", d)

    @property
    def period(self) -> float:
        return sum(self.durations)

    def realize(self, seed: int | None = None) -> DriverPath:
        d = self.durations
        start = -(self.phase % self.period)
        bounds = np.concatenate([[0.0], np.cumsum(d)])[:-1]

        def extend(path):
            k = len(path.states) // len(d)
            base = start + k * self.period
            path.times.extend(base + bounds)
            path.states.extend(range(len(d)))

        path = _SwitchPath([start], [0], extend)
        path.times, path.states = [], []
        extend(path)
        return path

    def fraction(self) -> np.ndarray:
        """Long-run fraction of time spent in each state."""
        return np.asarray(self.durations) / self.period


@dataclass(frozen=True)
class TelegraphDriver:
    """Two-state Markov switching with exponential holding times of rate ``rate``.

    The initial state is drawn from the stationary law (1/2, 1/2).
    """

    rate: float = 1.0

    def realize(self, seed: int = 0) -> DriverPath:
        gen = philox(seed, 0x7E1E)
        s0 = int(gen.integers(2))

        def extend(path):
            t = path.times[-1]
            for _ in range(64):
                t += gen.exponential(1.0 / self.rate)
                path.times.append(t)
                path.states.append(1 - path.states[-1])

        return _SwitchPath([0.0], [s0], extend)


@dataclass(frozen=True)
class RealNoiseCocycle:
    """``x' = A(theta_t omega) x``; ``coefficient`` maps a driver state to a 2x2 matrix.

    A sequence of matrices is accepted as ``coefficient`` and indexed by state.
    """

    coefficient: object
    driver: object
    kind: str = field(default="real_noise", init=False)

    def matrix(self, state) -> np.ndarray:
        c = self.coefficient
        if callable(c):
            return _mat(c(state))
        return _mat(np.asarray(c, dtype=np.float64)[int(state)])


@dataclass(frozen=True)
class SdeCocycle:
    """Stratonovich system ``dx = A x dt + sum_i B_i x o dW_i``."""

    A: np.ndarray
    B: tuple = ()
    kind: str = field(default="sde", init=False)

    def __post_init__(self):
        object.__setattr__(self, "A", _mat(self.A))
        Bs = tuple(_mat(b) for b in self.B)
        object.__setattr__(self, "B", Bs)

    @property
    def m(self) -> int:
        return len(self.B)

    @property
    def B_array(self) -> np.ndarray:
        return np.array(self.B).reshape(-1, 2, 2)


def example4_cocycle() -> SdeCocycle:
    """Random rotation ``dx = 2 pi J x dt + 2 pi J x o dW``: ``alpha_t = t + W_t`` turns."""
    return SdeCocycle(TWO_PI * J, (TWO_PI * J,))


# -- trajectories ------------------------------------------------------------


@dataclass(frozen=True)
class SdeConfig:
    dt: float = 1e-3
    seed: int = 0
    scheme: str = "heun"
    dt_floor: float = 1e-7

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme != "heun":
            raise ValueError(f"unsupported scheme {self.scheme!r}; only 'heun' is implemented")
        if not 0 < self.dt_floor <= self.dt:
            raise ValueError("dt_floor must lie in (0, dt]")


@dataclass(frozen=True)
class Trajectory:
    """Cocycle matrices and unwrapped angle (turns) on a time grid.

    ``alpha`` comes from the angular equation; ``alpha_matrix`` is the angle
    of ``phi(t) s0`` tracked along the matrix path, kept as a cross-check.
    """

    times: np.ndarray
    matrices: np.ndarray
    alpha: np.ndarray
    alpha_matrix: np.ndarray

    @property
    def s(self) -> np.ndarray:
        ang = TWO_PI * self.alpha
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)

    @property
    def T(self) -> float:
        return float(self.times[-1] - self.times[0])

    def increments(self) -> np.ndarray:
        return np.diff(self.alpha)


def _start_angle(s0) -> float:
    s0 = np.asarray(s0, dtype=np.float64)
    if s0.ndim == 0:
        return float(s0)
    return math.atan2(s0[1], s0[0]) / TWO_PI


def _matrix_angles(mats: np.ndarray, alpha0: float) -> np.ndarray:
    """Unwrapped angle of ``mats[k] @ s0`` (turns), step by step."""
    u = np.array([math.cos(TWO_PI * alpha0), math.sin(TWO_PI * alpha0)])
    x = mats @ u
    raw = np.arctan2(x[:, 1], x[:, 0]) / TWO_PI
    d = np.diff(raw)
    d -= np.ceil(d - 0.5)
    return alpha0 + np.concatenate([[0.0], np.cumsum(d)])


def _tangential(M, c, s):
    return M[1, 0] * c * c - M[0, 1] * s * s + (M[1, 1] - M[0, 0]) * c * s


def angular_drift(A, B: Sequence = (), s=(1.0, 0.0)) -> float:
    """Drift ``f(s)`` of the angle in radians per unit time.

    ``f(s) = <As, v> + sum_i (1/2 <B_i^2 s, v> - <B_i s, s><B_i s, v>)`` with
    ``v`` the anti-clockwise perpendicular of ``s``. This is the drift of the
    angle written as an Ito equation with diffusion ``<B_i s, v>``.
    """
    A = _mat(A)
    s = np.asarray(s, dtype=np.float64)
    s = s / np.linalg.norm(s)
    v = np.array([-s[1], s[0]])
    out = float(v @ A @ s)
    for b in B:
        b = _mat(b)
        bs = b @ s
        out += 0.5 * float(v @ (b @ bs)) - float(s @ bs) * float(v @ bs)
    return out


def flow_deterministic(A, t: float) -> np.ndarray:
    """``exp(tA)`` by the closed 2x2 formula.

    With ``mu = tr(tA)/2`` and ``N = tA - mu I`` one has ``N^2 = q I``,
    ``q = -det N``, so ``exp(tA) = e^mu (C(q) I + S(q) N)`` where ``C, S`` are
    cosh / sinh(sqrt q)/sqrt q, their trigonometric versions, or series.
    """
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    M = _mat(A) * float(t)
    mu = 0.5 * (M[0, 0] + M[1, 1])
    N = M - mu * np.eye(2)
    q = N[0, 0] * N[0, 0] + N[0, 1] * N[1, 0]
    if abs(q) < 1e-8:
        c = 1.0 + q / 2 + q * q / 24
        s = 1.0 + q / 6 + q * q / 120
    elif q > 0:
        r = math.sqrt(q)
        c, s = math.cosh(r), math.sinh(r) / r
    else:
        r = math.sqrt(-q)
        c, s = math.cos(r), math.sin(r) / r
    return math.exp(mu) * (c * np.eye(2) + s * N)


def _deterministic_trajectory(spec: DeterministicCocycle, T, dt, alpha0):
    steps = max(1, math.ceil(T / dt - 1e-9))
    times = np.linspace(0.0, T, steps + 1)
    mats = np.array([flow_deterministic(spec.A, t) for t in times])
    alpha = [alpha0]
    h = T / steps
    a = alpha0
    for _ in range(steps):
        a = a + _rk4_angle(lambda t, x: _tangential(spec.A, math.cos(TWO_PI * x),
                                                     math.sin(TWO_PI * x)) / TWO_PI,
                           0.0, a, h)
        alpha.append(a)
    alpha = np.array(alpha)
    return Trajectory(times, mats, alpha, _matrix_angles(mats, alpha0))


def _rk4_angle(rate, t, a, h):
    k1 = rate(t, a)
    k2 = rate(t + h / 2, a + h / 2 * k1)
    k3 = rate(t + h / 2, a + h / 2 * k2)
    k4 = rate(t + h, a + h * k3)
    return h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_real_noise(spec: RealNoiseCocycle, T: float, dt: float = 1e-3, s0=(1.0, 0.0),
                         seed: int = 0, path: DriverPath | None = None,
                         dt_floor: float = 1e-9, marks: Sequence[float] = ()) -> Trajectory:
    """RK4 for ``x' = A(theta_t omega) x`` and for the angle on the same grid.

    The grid is refined at the driver's switching times so RK4 never steps
    across a discontinuity; ``marks`` adds further grid times. A step whose angle increment reaches 1/4 turn is
    retried with half the step, down to ``dt_floor``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if path is None:
        path = spec.driver.realize(seed)
    alpha0 = _start_angle(s0)
    inner = list(path.breakpoints(0.0, T)) + [float(x) for x in marks]
    cuts = sorted(set([0.0, float(T)] + [b for b in inner if 0 < b < T]))

    times, mats, alpha = [0.0], [np.eye(2)], [alpha0]
    X, a = np.eye(2), alpha0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        t = lo
        while t < hi - 1e-15:
            h = min(dt, hi - t)
            while True:
                A0 = spec.matrix(path.state(t))
                Am = spec.matrix(path.state(t + h / 2))
                A1 = spec.matrix(path.state(t + h, left=True))

                def rate(tau, x, _A={0: A0, 1: Am, 2: A1}, _t=t, _h=h):
                    key = 0 if tau == _t else (2 if tau == _t + _h else 1)
                    return _tangential(_A[key], math.cos(TWO_PI * x), math.sin(TWO_PI * x)) / TWO_PI

                inc = _rk4_angle(rate, t, a, h)
                if abs(inc) < MAX_STEP_TURNS:
                    break
                h /= 2
                if h < dt_floor:
                    raise DtFloorError(f"angle step {inc:.3g} turns at t={t:.6g} below dt floor")
            k1 = A0 @ X
            k2 = Am @ (X + h / 2 * k1)
            k3 = Am @ (X + h / 2 * k2)
            k4 = A1 @ (X + h * k3)
            X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            a = a + inc
            t = hi if hi - (t + h) < 1e-15 else t + h
            times.append(t)
            mats.append(X)
            alpha.append(a)
    mats = np.array(mats)
    return Trajectory(np.array(times), mats, np.array(alpha), _matrix_angles(mats, alpha0))


def heun_step_matrices(A, B, dW: np.ndarray, h: float) -> np.ndarray:
    """Stratonovich-Heun step matrices ``I + M + M^2 / 2``, ``M = A h + sum_i B_i dW_i``."""
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2, 2)
    M = _mat(A) * h + np.einsum("ki,iab->kab", np.asarray(dW).reshape(len(dW), -1), B)
    return np.eye(2) + M + 0.5 * (M @ M)


def _angle_path(A, B, dW, h, alpha0):
    """Angular Heun along one path; returns the angle at every grid point."""
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2, 2)
    out = np.empty(len(dW) + 1)
    a = out[0] = alpha0
    for k, w in enumerate(dW):
        c, s = math.cos(TWO_PI * a), math.sin(TWO_PI * a)
        a0 = _tangential(A, c, s) / TWO_PI
        b0 = [_tangential(b, c, s) / TWO_PI for b in B]
        pred = a + a0 * h + sum(bi * wi for bi, wi in zip(b0, w))
        c, s = math.cos(TWO_PI * pred), math.sin(TWO_PI * pred)
        inc = 0.5 * (a0 + _tangential(A, c, s) / TWO_PI) * h
        for i, b in enumerate(B):
            inc += 0.5 * (b0[i] + _tangential(b, c, s) / TWO_PI) * w[i]
        a = out[k + 1] = a + inc
    return out


def sde_increments(spec: SdeCocycle, T: float, cfg: SdeConfig, stream: int = 0):
    """Brownian increments for ``[0, T]`` at step ``cfg.dt`` from stream ``stream``."""
    steps = max(1, math.ceil(T / cfg.dt - 1e-9))
    h = T / steps
    gen = philox(cfg.seed, stream)
    return gen.standard_normal((steps, spec.m)) * math.sqrt(h), h


def integrate_sde(spec: SdeCocycle, T: float, cfg: SdeConfig = SdeConfig(), s0=(1.0, 0.0),
                  dW: np.ndarray | None = None, stream: int = 0) -> Trajectory:
    """Heun predictor-corrector for the matrix and the angle, sharing one noise path.

    ``dW`` (shape ``(steps, m)``) may be supplied; the step is then ``T / steps``.
    If an angle step reaches 1/4 turn the path is refined by Brownian-bridge
    splitting (the coarse increments are kept) until the floor ``cfg.dt_floor``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if dW is None:
        dW, h = sde_increments(spec, T, cfg, stream)
    else:
        dW = np.asarray(dW, dtype=np.float64).reshape(-1, spec.m)
        h = T / len(dW)
    alpha0 = _start_angle(s0)
    level = 0
    while True:
        alpha = _angle_path(spec.A, spec.B_array, dW, h, alpha0)
        if len(alpha) < 2 or np.max(np.abs(np.diff(alpha))) < MAX_STEP_TURNS:
            break
        if h / 2 < cfg.dt_floor:
            raise DtFloorError(f"angle step exceeds 1/4 turn at dt={h:.3g} (floor {cfg.dt_floor:.3g})")
        level += 1
        dW = refine_increments(dW, h, philox(cfg.seed, stream + (level << 40)))
        h /= 2
    steps = heun_step_matrices(spec.A, spec.B_array, dW, h)
    mats = np.empty((len(dW) + 1, 2, 2))
    mats[0] = np.eye(2)
    for k, S in enumerate(steps):
        mats[k + 1] = S @ mats[k]
    times = np.linspace(0.0, T, len(dW) + 1)
    return Trajectory(times, mats, alpha, _matrix_angles(mats, alpha0))


def integrate(spec, T: float, cfg: SdeConfig = SdeConfig(), s0=(1.0, 0.0), seed: int | None = None,
              **kw) -> Trajectory:
    """Dispatch on the cocycle kind."""
    if spec.kind == "deterministic":
        return _deterministic_trajectory(spec, T, cfg.dt, _start_angle(s0))
    if spec.kind == "real_noise":
        return integrate_real_noise(spec, T, cfg.dt, s0, cfg.seed if seed is None else seed, **kw)
    if spec.kind == "sde":
        return integrate_sde(spec, T, cfg, s0, **kw)
    raise ValueError(f"unknown cocycle kind {spec.kind!r}")


def continuous_rotation_number(traj: Trajectory) -> RotationEstimate:
    """Average angular velocity ``(alpha(T) - alpha(0)) / T`` in turns per unit time."""
    T = traj.T
    if not T > 0:
        raise ValueError("trajectory has zero length")
    value = float(traj.alpha[-1] - traj.alpha[0]) / T
    return RotationEstimate(value, len(traj.times) - 1, 0.0, 0.0, value)


# -- ensembles ----------------------------------------------------------------

CHUNK = 4096


def _ensemble_chunk(args):
    """Angle increments and crossing counts for one chunk of independent paths."""
    A, B, T, dt, dt_floor, seed, chunk, paths, alpha0 = args
    m = B.shape[0]
    steps = max(1, math.ceil(T / dt - 1e-9))
    h = T / steps
    dW = philox(seed, chunk).standard_normal((paths, steps, m)) * math.sqrt(h)
    level = 0
    while True:
        delta, up, down, max_inc = kernels.angle_heun(A, B, dW, h, alpha0)
        if max_inc < MAX_STEP_TURNS:
            return delta, up, down
        if h / 2 < dt_floor:
            raise DtFloorError(f"angle step {max_inc:.3g} turns at dt={h:.3g}")
        level += 1
        dW = refine_increments(dW, h, philox(seed, chunk + (level << 40)), axis=1)
        h /= 2


def angle_ensemble(spec: SdeCocycle, T: float, n_paths: int, cfg: SdeConfig = SdeConfig(),
                   s0=(1.0, 0.0), workers: int = 1):
    """``n_paths`` independent angular paths on ``[0, T]``.

    Returns ``(delta, up, down)``: the unwrapped increments and the numbers of
    anti-clockwise / clockwise crossings of the levels ``k + 1/2`` by
    ``alpha - alpha(0)``. Paths come in fixed chunks of 4096, chunk ``c``
    using stream ``c`` of ``cfg.seed``, so results do not depend on ``workers``.
    """
    from .parallel import map_tasks

    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    alpha0 = _start_angle(s0)
    tasks = []
    for c, lo in enumerate(range(0, n_paths, CHUNK)):
        tasks.append((spec.A, spec.B_array, float(T), cfg.dt, cfg.dt_floor, cfg.seed, c,
                      min(CHUNK, n_paths - lo), alpha0))
    parts = map_tasks(_ensemble_chunk, tasks, workers)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def ensemble_rotation_number(spec: SdeCocycle, T: float, replicas: int,
                             cfg: SdeConfig = SdeConfig(), s0=(1.0, 0.0),
                             workers: int = 1) -> RotationEstimate:
    """Continuous rotation number pooled over ``replicas`` paths of length ``T``.

    Long horizons are integrated in time slabs so memory stays bounded.
    """
    steps = max(1, math.ceil(T / cfg.dt - 1e-9))
    h = T / steps
    slab = max(1, min(steps, 2_000_000 // max(replicas, 1)))
    alpha = np.full(replicas, _start_angle(s0))
    start = alpha.copy()
    gen = philox(cfg.seed, 0)
    done = 0
    while done < steps:
        k = min(slab, steps - done)
        dW = gen.standard_normal((replicas, k, spec.m)) * math.sqrt(h)
        delta, _, _, max_inc = kernels.angle_heun(spec.A, spec.B_array, dW, h, alpha)
        if max_inc >= MAX_STEP_TURNS:
            raise DtFloorError(f"angle step {max_inc:.3g} turns at dt={h:.3g}; lower dt")
        alpha = alpha + delta
        done += k
    rates = (alpha - start) / T
    stderr = float(rates.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return RotationEstimate(float(rates.mean()), steps, stderr, 0.0, float(rates.mean()), replicas)

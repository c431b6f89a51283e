"""Sampling continuous cocycles at period T.

The window matrices ``phi(T, theta_(kT) omega)`` form a stationary sequence
whose rotation number, divided by T, approaches the continuous rotation
number as T -> 0 (and equals it exactly below the Nyquist rate for
autonomous flows). This module runs those studies and the winding-count
diagnostic that relates the wrapped window displacement to the true angle
increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from . import kernels
from .circle import RotationEstimate, wrap_turn, wrap_turns
from .composition import _pool
from .flows import (
    SdeConfig,
    Trajectory,
    _start_angle,
    angle_ensemble,
    flow_deterministic,
    integrate,
    integrate_real_noise,
)
from .parallel import map_tasks
from .projective import eigen_rotation_number
from .rng import philox, replica_seed

# Chunk of Brownian steps generated at once along a long shared path.
PATH_CHUNK = 1 << 20


@dataclass(frozen=True)
class SamplingStudy:
    """A convergence study over a decreasing grid of sampling periods.

    ``steps_per_T`` is the number of windows of the largest period; every
    period is sampled along the same path of length ``steps_per_T * max(T_grid)``.
    ``dt`` is the integration step (``None`` picks 1e-4 for SDEs, 1e-3 otherwise).
    """

    spec: object
    T_grid: tuple
    steps_per_T: int = 10_000
    replicas: int = 32
    seed: int = 0
    dt: float | None = None

    def __post_init__(self):
        grid = tuple(float(t) for t in self.T_grid)
        if not grid or min(grid) <= 0:
            raise ValueError("T_grid must hold positive periods")
        if self.steps_per_T < 1 or self.replicas < 1:
            raise ValueError("steps_per_T and replicas must be >= 1")
        object.__setattr__(self, "T_grid", grid)

    @property
    def step(self) -> float:
        if self.dt is not None:
            return float(self.dt)
        return 1e-4 if self.spec.kind == "sde" else 1e-3

    @property
    def horizon(self) -> float:
        return self.steps_per_T * max(self.T_grid)


def _steps_per_window(T_grid: Sequence[float], h: float) -> list[int]:
    out = []
    for T in T_grid:
        w = round(T / h)
        if w < 1 or abs(w * h - T) > 1e-9 * max(T, 1.0):
            raise ValueError(f"period {T} is not a multiple of the step {h}")
        out.append(int(w))
    return out


# -- window matrices -----------------------------------------------------------


def _windows_from_trajectory(traj: Trajectory, T: float, n: int) -> np.ndarray:
    idx = np.searchsorted(traj.times, np.arange(n + 1) * T - 1e-9)
    X = traj.matrices[idx]
    # phi((k+1)T) phi(kT)^-1, via a solve on the transposes
    return np.transpose(np.linalg.solve(np.transpose(X[:-1], (0, 2, 1)),
                                        np.transpose(X[1:], (0, 2, 1))), (0, 2, 1))


def _sde_path_windows(spec, spw: list[int], total: int, h: float, seed: int, alpha0: float = 0.0):
    """Window products for several window sizes along one shared Heun path.

    The path is drawn in chunks (chunk ``c`` from stream ``c`` of ``seed``);
    step matrices are first multiplied into base windows of ``gcd(spw)`` steps.
    Returns ``(windows per size, unwrapped angle change of the matrix path)``.
    """
    base = reduce(math.gcd, spw)
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), spw)
    chunk = max(lcm, (PATH_CHUNK // lcm) * lcm)
    total = -(-total // lcm) * lcm
    parts = [[] for _ in spw]
    turn = 0.0
    sq = math.sqrt(h)
    A, B = spec.A, spec.B_array
    for c, lo in enumerate(range(0, total, chunk)):
        k = min(chunk, total - lo)
        dW = philox(seed, c).standard_normal((k, spec.m)) * sq
        (basewin,), d = kernels.heun_windows(A, B, dW, h, [base], alpha0 + turn)
        turn += d
        for j, w in enumerate(spw):
            r = w // base
            blocks = basewin.reshape(-1, r, 2, 2)
            acc = blocks[:, 0]
            for i in range(1, r):
                acc = blocks[:, i] @ acc
            parts[j].append(acc)
    return [np.concatenate(p) for p in parts], turn


def sample_matrices(spec, T: float, n: int, seed: int = 0, dt: float | None = None,
                    s0=(1.0, 0.0)) -> np.ndarray:
    """The ``n`` window matrices ``phi((k+1)T) phi(kT)^-1`` of one trajectory on ``[0, nT]``."""
    if not T > 0 or n < 1:
        raise ValueError("need T > 0 and n >= 1")
    if spec.kind == "deterministic":
        return np.broadcast_to(flow_deterministic(spec.A, T), (n, 2, 2)).copy()
    if spec.kind == "real_noise":
        h = dt or 1e-3
        traj = integrate_real_noise(spec, n * T, h, s0, seed, marks=np.arange(1, n) * T)
        return _windows_from_trajectory(traj, T, n)
    if spec.kind == "sde":
        h = dt or 1e-3
        (w,) = _steps_per_window([T], h)
        (mats,), _ = _sde_path_windows(spec, [w], n * w, T / w, seed, _start_angle(s0))
        return mats[:n]
    raise ValueError(f"unknown cocycle kind {spec.kind!r}")


def sampled_rotation_number(mats, x0: float = 0.0) -> RotationEstimate:
    """Rotation number (turns per window) of the product of the given windows.

    ``mats`` is one ``(n, 2, 2)`` sequence, or a list of such sequences from
    independent replicas, which are pooled.
    """
    seqs = [mats] if isinstance(mats, np.ndarray) and mats.ndim == 3 else list(mats)
    if not seqs or any(len(s) == 0 for s in seqs):
        raise ValueError("need a nonempty window sequence")
    raws = [kernels.matrix_sequence_orbit(np.asarray(s, dtype=np.float64), float(x0))[0] / len(s)
            for s in seqs]
    return _pool(raws, min(len(s) for s in seqs))


# -- convergence study --------------------------------------------------------------


@dataclass
class ConvergenceTable:
    """Rows ``(T, rho_over_T, stderr)`` sorted by decreasing T, plus the reference rate."""

    T: np.ndarray
    rho_over_T: np.ndarray
    stderr: np.ndarray
    rho_cont: float
    rho_cont_stderr: float = 0.0
    per_replica: np.ndarray | None = field(default=None, repr=False)

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.rho_over_T - self.rho_cont)

    @property
    def monotone(self) -> bool:
        """``|rho_T/T - rho_cont|`` nonincreasing along the grid, within 2 stderr."""
        e, s = self.errors, self.stderr
        return bool(all(e[i + 1] <= e[i] + 2 * max(s[i], s[i + 1]) + 1e-12
                        for i in range(len(e) - 1)))

    def rows(self):
        return [(float(t), float(r), float(s)) for t, r, s in zip(self.T, self.rho_over_T, self.stderr)]


def _sde_replica(args):
    spec, grid, h, total_steps, seed = args
    spw = _steps_per_window(grid, h)
    windows, turn = _sde_path_windows(spec, spw, total_steps, h, seed)
    rates = [kernels.matrix_sequence_orbit(w, 0.0)[0] / len(w) for w in windows]
    return rates, turn / (total_steps * h)


def _real_noise_replica(args):
    spec, grid, h, horizon, seed = args
    marks = sorted({round(k * T, 12) for T in grid for k in range(1, int(round(horizon / T)))})
    traj = integrate_real_noise(spec, horizon, h, seed=seed, marks=marks)
    rates = []
    for T in grid:
        w = _windows_from_trajectory(traj, T, int(round(horizon / T)))
        rates.append(kernels.matrix_sequence_orbit(w, 0.0)[0] / len(w))
    return rates, float(traj.alpha[-1] - traj.alpha[0]) / horizon


def continuous_rate(A) -> float:
    """``b / 2 pi`` (signed by the turning direction) for eigenvalues ``a +- ib``; 0 if real."""
    A = np.asarray(A, dtype=np.float64)
    disc = (A[0, 0] - A[1, 1]) ** 2 + 4.0 * A[0, 1] * A[1, 0]
    if disc >= 0:
        return 0.0
    b = 0.5 * math.sqrt(-disc)
    return math.copysign(b, A[1, 0]) / (2 * math.pi)


def convergence_study(study: SamplingStudy, workers: int = 1) -> ConvergenceTable:
    """``rho(phi(T), theta_T) / T`` for each T of the grid.

    SDE and real-noise studies sample every period along the same path per
    replica; the continuous rate is measured on that path too. Autonomous
    flows use the eigenvalue formula for the constant window ``e^(TA)``.
    """
    grid = sorted(study.T_grid, reverse=True)
    spec = study.spec
    if spec.kind == "deterministic":
        rho = continuous_rate(spec.A)
        vals = np.array([eigen_rotation_number(flow_deterministic(spec.A, T)) / T for T in grid])
        return ConvergenceTable(np.array(grid), vals, np.zeros(len(grid)), rho)

    h = study.step
    seeds = [replica_seed(study.seed, r) for r in range(study.replicas)]
    if spec.kind == "sde":
        steps = int(round(study.horizon / h))
        tasks = [(spec, grid, h, steps, s) for s in seeds]
        results = map_tasks(_sde_replica, tasks, workers)
    elif spec.kind == "real_noise":
        tasks = [(spec, grid, h, study.horizon, s) for s in seeds]
        results = map_tasks(_real_noise_replica, tasks, workers)
    else:
        raise ValueError(f"unknown cocycle kind {spec.kind!r}")

    per = np.array([r for r, _ in results])  # (replicas, len(grid)), turns per window
    cont = np.array([c for _, c in results])
    vals, errs = [], []
    for j, T in enumerate(grid):
        est = _pool(per[:, j], 1)
        vals.append(est.value / T)
        errs.append(est.stderr / T)
    cont_err = float(cont.std(ddof=1) / math.sqrt(cont.size)) if cont.size > 1 else 0.0
    return ConvergenceTable(np.array(grid), np.array(vals), np.array(errs),
                            float(cont.mean()), cont_err, per)


# -- Nyquist ----------------------------------------------------------------------


@dataclass(frozen=True)
class NyquistResult:
    exact: bool
    rho_T_over_T: float
    rho_cont: float
    below_nyquist: bool

    @property
    def defect(self) -> float:
        return abs(self.rho_T_over_T - self.rho_cont)


def nyquist_check(A, T: float) -> NyquistResult:
    """Compare ``rho(e^(TA)) / T`` with the continuous rate of ``x' = Ax``.

    Below the Nyquist period ``1 / (2 |rho|)`` the two agree to rounding;
    above it the sampled value aliases and is reported as is.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    rho = continuous_rate(A)
    rho_T = eigen_rotation_number(flow_deterministic(A, T)) / T
    below = rho == 0.0 or T < 1.0 / (2.0 * abs(rho))
    exact = below and abs(rho_T - rho) < 1e-12
    return NyquistResult(exact, rho_T, rho, below)


# -- window displacement and winding counts ----------------------------------------


def wrapped_gaussian_mean(mu: float, var: float, terms: int = 64) -> float:
    """``E[wrap(X)]`` for ``X ~ Normal(mu, var)`` by summing over unit translates.

    ``sum_k int_(k-1/2)^(k+1/2) (x - k) density(x) dx`` with each piece in
    closed form through the normal CDF and density.
    """
    sd = math.sqrt(var)
    if sd == 0:
        return wrap_turn(mu)
    total = 0.0
    centre = round(mu)
    for k in range(centre - terms, centre + terms + 1):
        a = (k - 0.5 - mu) / sd
        b = (k + 0.5 - mu) / sd
        mass = 0.5 * (math.erf(b / math.sqrt(2)) - math.erf(a / math.sqrt(2)))
        dens = (math.exp(-0.5 * b * b) - math.exp(-0.5 * a * a)) / math.sqrt(2 * math.pi)
        total += (mu - k) * mass - sd * dens
    return total


def wrapped_gaussian_mean_series(mu: float, var: float, terms: int = 200) -> float:
    """Same mean from the Fourier series of the wrapped density."""
    k = np.arange(1, terms + 1)
    return float(np.sum((-1.0) ** (k + 1) / (np.pi * k) * np.exp(-2 * np.pi ** 2 * k ** 2 * var)
                        * np.sin(2 * np.pi * k * mu)))


def wrapped_gaussian_cdf(y, mu: float, var: float, terms: int = 64) -> np.ndarray:
    """CDF on (-1/2, 1/2] of ``wrap(X)``, ``X ~ Normal(mu, var)``."""
    from math import erf

    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    sd = math.sqrt(var)
    phi = np.vectorize(lambda z: 0.5 * (1 + erf(z / math.sqrt(2))))
    out = np.zeros_like(y)
    centre = round(mu)
    for k in range(centre - terms, centre + terms + 1):
        out += phi((k + y - mu) / sd) - phi((k - 0.5 - mu) / sd)
    return out


@dataclass
class BetaDistribution:
    """Samples of the wrapped window displacement with their histogram on (-1/2, 1/2]."""

    T: float
    samples: np.ndarray = field(repr=False)
    mean: float
    stderr: float
    edges: np.ndarray = field(repr=False)
    mass: np.ndarray = field(repr=False)

    def ks_distance(self, cdf) -> float:
        """Sup distance between the binned empirical CDF and ``cdf`` at the bin edges."""
        emp = np.concatenate([[0.0], np.cumsum(self.mass)])
        return float(np.max(np.abs(emp - cdf(self.edges))))


def _path_deltas(spec, T, n_samples, seed, s0, dt, workers):
    """Unwrapped increments and crossing counts ``(delta, up, down)`` per sample."""
    if spec.kind == "sde":
        return angle_ensemble(spec, T, n_samples, SdeConfig(dt=dt, seed=seed), s0, workers)
    out = np.empty(n_samples)
    up = np.zeros(n_samples, dtype=np.int64)
    down = np.zeros(n_samples, dtype=np.int64)
    for i in range(n_samples):
        traj = integrate(spec, T, SdeConfig(dt=dt, seed=seed), s0, seed=replica_seed(seed, i))
        out[i] = traj.alpha[-1] - traj.alpha[0]
        up[i], down[i] = count_crossings(traj.alpha)
        if spec.kind == "deterministic":
            out[1:], up[1:], down[1:] = out[0], up[0], down[0]
            break
    return out, up, down


def beta_T_samples(spec, T: float, n_samples: int, seed: int = 0, s0=(1.0, 0.0),
                   bins: int = 1024, dt: float = 1e-3, workers: int = 1) -> BetaDistribution:
    """``wrap(alpha(T) - alpha(0))`` over ``n_samples`` independent windows."""
    if not T > 0 or n_samples < 1:
        raise ValueError("need T > 0 and n_samples >= 1")
    delta, _, _ = _path_deltas(spec, T, n_samples, seed, s0, min(dt, T), workers)
    beta = wrap_turns(delta)
    edges = np.linspace(-0.5, 0.5, bins + 1)
    counts, _ = np.histogram(beta, bins=edges)
    stderr = float(beta.std(ddof=1) / math.sqrt(beta.size)) if beta.size > 1 else 0.0
    return BetaDistribution(T, beta, float(beta.mean()), stderr, edges, counts / beta.size)


def count_crossings(alpha) -> tuple[int, int]:
    """Anti-clockwise and clockwise crossings of the levels ``k + 1/2`` by ``alpha - alpha[0]``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    level = np.ceil(alpha - alpha[0] - 0.5).astype(np.int64)
    jump = np.diff(level)
    return int(jump[jump > 0].sum()), int(-jump[jump < 0].sum())


def first_antipode_time(traj: Trajectory) -> float:
    """First grid time where ``|alpha - alpha(0)|`` reaches 1/2 (``inf`` if never)."""
    y = np.abs(traj.alpha - traj.alpha[0])
    hit = np.nonzero(y >= 0.5)[0]
    if hit.size == 0:
        return math.inf
    k = int(hit[0])
    t0, t1, y0, y1 = traj.times[k - 1], traj.times[k], y[k - 1], y[k]
    return float(t0 + (0.5 - y0) / (y1 - y0) * (t1 - t0))


@dataclass
class WindingStudy:
    """Per-window net antipode crossings ``N = up - down`` and their positive / negative parts."""

    T: float
    delta: np.ndarray = field(repr=False)
    up: np.ndarray = field(repr=False)
    down: np.ndarray = field(repr=False)

    @property
    def N(self) -> np.ndarray:
        return self.up - self.down

    @property
    def N_plus(self) -> np.ndarray:
        return np.maximum(self.N, 0)

    @property
    def N_minus(self) -> np.ndarray:
        return np.maximum(-self.N, 0)

    @property
    def E_Nplus_over_T(self) -> float:
        return float(self.N_plus.mean()) / self.T

    @property
    def E_Nminus_over_T(self) -> float:
        return float(self.N_minus.mean()) / self.T

    def stderr_over_T(self, which: str = "plus") -> float:
        x = self.N_plus if which == "plus" else self.N_minus
        return float(x.std(ddof=1) / math.sqrt(x.size)) / self.T if x.size > 1 else 0.0

    @property
    def gross_up_over_T(self) -> float:
        return float(self.up.mean()) / self.T

    @property
    def gross_down_over_T(self) -> float:
        return float(self.down.mean()) / self.T


def winding_counts(spec, T: float, n_samples: int, fine_dt: float | None = None, seed: int = 0,
                   s0=(1.0, 0.0), workers: int = 1) -> WindingStudy:
    """Antipode crossings inside ``n_samples`` windows ``[0, T]`` on a grid of step ``fine_dt``."""
    if not T > 0 or n_samples < 1:
        raise ValueError("need T > 0 and n_samples >= 1")
    fine_dt = T / 256 if fine_dt is None else fine_dt
    delta, up, down = _path_deltas(spec, T, n_samples, seed, s0, fine_dt, workers)
    return WindingStudy(T, delta, up, down)


@dataclass(frozen=True)
class IdentityCheck:
    """Defects of ``beta = (alpha_T - alpha_0) - N`` over a sample."""

    integer_defect: int
    angle_defect: float
    samples: int
    nonzero_N: int


def erratum_identity_check(spec, T: float, n_samples: int, seed: int = 0,
                           fine_dt: float | None = None, study: WindingStudy | None = None) -> IdentityCheck:
    """Compare the integer removed by wrapping with the counted crossings, sample by sample.

    For every window ``wrap(Delta) = Delta - k`` with an integer ``k``; the
    check is ``k == N`` where ``N`` is the net number of anti-clockwise
    crossings of the antipode, i.e. ``beta - Delta = -N``.
    """
    if study is None:
        study = winding_counts(spec, T, n_samples, fine_dt, seed)
    beta = wrap_turns(study.delta)
    k = np.rint(study.delta - beta).astype(np.int64)
    int_defect = int(np.max(np.abs(k - study.N))) if k.size else 0
    angle_defect = float(np.max(np.abs(beta - (study.delta - study.N)))) if k.size else 0.0
    return IdentityCheck(int_defect, angle_defect, int(k.size), int(np.count_nonzero(study.N)))

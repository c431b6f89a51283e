"""Rotation numbers of compositions of stationary random circle homeomorphisms.

A :class:`HomeoSampler` realises the stationary sequence ``f_n = f o theta^(n-1)``
through ``initial_state`` / ``shift`` / ``emit``. All lifts it emits are
normalised (``F(0)`` in (-1/2, 1/2]).
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from . import kernels
from .circle import (
    Lift,
    RotationEstimate,
    normalize_lift,
    ordered_lifted_orbit,
    orbit_rotation_number,
    wrap_turn,
)
from .parallel import map_tasks
from .rng import replica_seed

DEFAULT_BINS = 1024


class EmpiricalMeasure:
    """Weighted atoms on the circle (positions in [0, 1)) with a histogram view.

    Occupation measures are stored already binned: the atoms are the bin
    centres. ``antipodal`` marks a measure living on the projective line,
    i.e. on [0, 1/2).
    """

    def __init__(self, positions, masses, bins: int = DEFAULT_BINS, antipodal: bool = False):
        positions = np.asarray(positions, dtype=np.float64).ravel()
        masses = np.asarray(masses, dtype=np.float64).ravel()
        if positions.shape != masses.shape:
            raise ValueError("positions and masses differ in length")
        if np.any(masses < 0):
            raise ValueError("masses must be non-negative")
        total = masses.sum()
        if not total > 0:
            raise ValueError("measure has no mass")
        period = 0.5 if antipodal else 1.0
        self.positions = positions % period
        self.masses = masses / total
        self.bins = int(bins)
        self.antipodal = antipodal

    @classmethod
    def from_points(cls, points, bins: int = DEFAULT_BINS, weights=None) -> "EmpiricalMeasure":
        counts = histogram_counts(points, bins, weights)
        return cls.from_counts(counts)

    @classmethod
    def from_counts(cls, counts, antipodal: bool = False) -> "EmpiricalMeasure":
        counts = np.asarray(counts, dtype=np.float64)
        bins = counts.size
        period = 0.5 if antipodal else 1.0
        centres = (np.arange(bins) + 0.5) * period / bins
        return cls(centres, counts, bins, antipodal)

    @classmethod
    def point_mass(cls, p: float, bins: int = DEFAULT_BINS) -> "EmpiricalMeasure":
        return cls([p % 1.0], [1.0], bins)

    @classmethod
    def uniform(cls, bins: int = DEFAULT_BINS) -> "EmpiricalMeasure":
        return cls.from_counts(np.ones(bins))

    @property
    def period(self) -> float:
        return 0.5 if self.antipodal else 1.0

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.period, self.bins + 1)

    @property
    def weights(self) -> np.ndarray:
        """Histogram masses over ``bins`` equal bins of one period."""
        return histogram_counts(self.positions / self.period, self.bins, self.masses)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def integrate(self, fn: Callable) -> float:
        """``sum_j m_j fn(x_j)`` over the atoms."""
        return float(np.dot(self.masses, np.asarray(fn(self.positions), dtype=np.float64)))

    def quotient(self) -> "EmpiricalMeasure":
        """Image on the projective line (antipodal points identified)."""
        if self.antipodal:
            return self
        return EmpiricalMeasure(self.positions % 0.5, self.masses, max(self.bins // 2, 1), True)

    def kuiper_distance(self, other: "EmpiricalMeasure") -> float:
        """Kuiper distance between the two atomic measures (rotation invariant)."""
        pts, idx = np.unique(np.concatenate([self.positions, other.positions]), return_inverse=True)
        w = np.bincount(idx, weights=np.concatenate([self.masses, -other.masses]), minlength=pts.size)
        d = np.append(np.cumsum(w), 0.0)
        return float(d.max() - d.min())

    def __repr__(self):
        return f"EmpiricalMeasure(atoms={self.positions.size}, bins={self.bins}, antipodal={self.antipodal})"


def histogram_counts(points, bins: int, weights=None) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64) % 1.0
    idx = np.minimum((pts * bins).astype(np.int64), bins - 1)
    return np.bincount(idx, weights=weights, minlength=bins).astype(np.float64)


def merge_measures(measures: Sequence[EmpiricalMeasure]) -> EmpiricalMeasure:
    """Equal-weight mixture; associative and independent of order up to rounding."""
    pos = np.concatenate([m.positions for m in measures])
    mass = np.concatenate([m.masses / len(measures) for m in measures])
    first = measures[0]
    return EmpiricalMeasure(pos, mass, first.bins, first.antipodal)


# -- samplers ---------------------------------------------------------------


class HomeoSampler:
    """A stationary sequence of random homeomorphisms driven by ``omega``.

    Subclasses define ``initial_state``, ``shift`` and ``emit``. The default
    :meth:`lifts` iterates them; :meth:`reseed` gives an independent copy.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def initial_state(self):
        raise NotImplementedError

    def shift(self, state):
        raise NotImplementedError

    def emit(self, state) -> Lift:
        raise NotImplementedError

    def lifts(self, n: int) -> Iterator[Lift]:
        if n < 1:
            return
        state = self.initial_state()
        yield self.emit(state)
        for _ in range(n - 1):
            state = self.shift(state)
            yield self.emit(state)

    def reseed(self, seed: int) -> "HomeoSampler":
        other = copy.copy(self)
        other.seed = int(seed)
        return other


class _Cursor:
    __slots__ = ("rng", "value")

    def __init__(self, rng, value):
        self.rng = rng
        self.value = value


class IIDHomeoSampler(HomeoSampler):
    """I.i.d. choice among finitely many homeomorphisms with given probabilities."""

    def __init__(self, homeos: Sequence, probs: Sequence[float] | None = None, seed: int = 0):
        super().__init__(seed)
        self.homeos = [normalize_lift(h) for h in homeos]
        k = len(self.homeos)
        p = np.full(k, 1.0 / k) if probs is None else np.asarray(probs, dtype=np.float64)
        if p.shape != (k,) or np.any(p < 0) or not math.isclose(p.sum(), 1.0):
            raise ValueError("probs must be a probability vector matching homeos")
        self.probs = p

    def initial_state(self):
        rng = np.random.default_rng(self.seed)
        return _Cursor(rng, rng.choice(len(self.homeos), p=self.probs))

    def shift(self, state):
        return _Cursor(state.rng, state.rng.choice(len(self.homeos), p=self.probs))

    def emit(self, state) -> Lift:
        return self.homeos[state.value]


class PeriodicSampler(HomeoSampler):
    """Deterministic cycle ``f_1, f_2, ..., f_k, f_1, ...`` (theta = cyclic shift)."""

    def __init__(self, cycle: Sequence, phase: int = 0, seed: int = 0):
        super().__init__(seed)
        self.cycle = [normalize_lift(h) for h in cycle]
        self.phase = int(phase)

    def initial_state(self):
        return self.phase % len(self.cycle)

    def shift(self, state):
        return (state + 1) % len(self.cycle)

    def emit(self, state) -> Lift:
        return self.cycle[state]


class IrrationalRotationDriver(HomeoSampler):
    """Ergodic, non-i.i.d. driver: ``omega`` on the circle, ``theta(omega) = omega + step``.

    ``family(omega)`` returns the homeomorphism attached to ``omega``; the
    starting ``omega`` is uniform, drawn from the seed.
    """

    def __init__(self, step: float, family: Callable[[float], Lift], seed: int = 0):
        super().__init__(seed)
        self.step = float(step)
        self.family = family

    def initial_state(self):
        return float(np.random.default_rng(self.seed).random())

    def shift(self, state):
        return (state + self.step) % 1.0

    def emit(self, state) -> Lift:
        return self.family(state)


# -- estimators -------------------------------------------------------------


def beta_displacement(f: Lift, s: float) -> float:
    """Angular displacement ``beta(s) = F(x) - x`` for any representative ``x`` of ``s``."""
    value = float(f.displacement(float(s)))
    if not abs(value) < 1.5:
        raise ValueError(f"displacement {value} outside (-3/2, 3/2): lift not normalised")
    return value


def _run(sampler, n: int, x0: float, record: bool):
    """Telescoped sum ``F_n(x0) - x0``, optionally with the visited circle points."""
    if hasattr(sampler, "matrices"):
        return kernels.matrix_sequence_orbit(sampler.matrices(n), float(x0), record)
    positions = np.empty(n) if record else None
    frac = float(x0) % 1.0
    total = 0.0
    for k, f in enumerate(sampler.lifts(n)):
        d = float(f.displacement(frac))
        if record:
            positions[k] = frac
        total += d
        frac = (frac + d) % 1.0
    return total, positions


def _pool(raws: Sequence[float], n: int) -> RotationEstimate:
    raws = np.asarray(raws, dtype=np.float64)
    mean = float(raws.mean())
    stderr = float(raws.std(ddof=1) / math.sqrt(raws.size)) if raws.size > 1 else 0.0
    return RotationEstimate(wrap_turn(mean), n, stderr, 1.0 / n, mean, int(raws.size))


def _replica_total(args):
    sampler, n, x0, record, bins = args
    total, positions = _run(sampler, n, x0, record)
    counts = histogram_counts(positions, bins) if record else None
    return total, counts


def _replicas(sampler, replicas):
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if replicas == 1:
        return [sampler]
    return [sampler.reseed(replica_seed(sampler.seed, r)) for r in range(replicas)]


def compose_rotation_number(sampler: HomeoSampler, n: int, x0: float = 0.0,
                            replicas: int = 1, workers: int = 1) -> RotationEstimate:
    """First-approach rotation number ``(F_n(x0) - x0) / n`` of the composition.

    ``F_n(x0) = x0 + sum_i beta_1(Theta^(i-1)(omega, p))`` is accumulated step
    by step rather than by nesting lifts. Replicas use independent seeds
    derived from ``sampler.seed``; the reported value is their mean.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tasks = [(s, n, x0, False, 0) for s in _replicas(sampler, replicas)]
    results = map_tasks(_replica_total, tasks, workers)
    return _pool([t / n for t, _ in results], n)


def pointwise_rotation(sampler: HomeoSampler, n: int, p: float = 0.0) -> RotationEstimate:
    """Second-approach rotation number via the ordered lifted orbit of ``p``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x0 = wrap_turn(p)
    if hasattr(sampler, "matrices"):
        total, positions = kernels.matrix_sequence_orbit(sampler.matrices(n), x0, True)
        images = np.append(positions[1:], (x0 + total) % 1.0)
    else:
        images = np.empty(n)
        x = x0
        for k, f in enumerate(sampler.lifts(n)):
            x = float(f(x)) % 1.0
            images[k] = x
    return orbit_rotation_number(ordered_lifted_orbit(images, x0))


def ergodic_rotation_via_occupation(sampler: HomeoSampler, n: int, replicas: int = 1,
                                    bins: int = DEFAULT_BINS, x0: float = 0.0,
                                    workers: int = 1):
    """Birkhoff average of ``beta_1 o Theta^(i-1)`` plus the occupation measure.

    Returns ``(estimate, measure)``; ``measure`` is the pooled occupation
    measure of the circle coordinate of the skew product, an estimate of
    ``E[nu_omega]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tasks = [(s, n, x0, True, bins) for s in _replicas(sampler, replicas)]
    results = map_tasks(_replica_total, tasks, workers)
    estimate = _pool([t / n for t, _ in results], n)
    counts = np.sum([c for _, c in results], axis=0)
    return estimate, EmpiricalMeasure.from_counts(counts)


def occupation_integral(sampler: HomeoSampler, measure: EmpiricalMeasure,
                        draws: int = 4096, seed: int | None = None) -> float:
    """``int E[beta_1(omega, s)] d nu(s)`` with the expectation over ``draws`` samples.

    This is the integral side of the i.i.d. formula; for a general stationary
    driver it averages ``beta_1`` over ``omega`` against the marginal measure.
    """
    src = sampler if seed is None else sampler.reseed(seed)
    s = measure.positions
    if hasattr(src, "matrices"):
        from .projective import displacement_table
        mean_beta = displacement_table(src.matrices(draws), s).mean(axis=0)
    else:
        acc = np.zeros_like(s)
        for f in src.lifts(draws):
            acc += np.asarray(f.displacement(s), dtype=np.float64)
        mean_beta = acc / draws
    return float(np.dot(measure.masses, mean_beta))


@dataclass(frozen=True)
class InvariantAverage:
    """``integral`` of the displacement against a measure and the measure's
    invariance defect (Kuiper distance to its push-forward)."""

    integral: float
    defect: float

    @property
    def value(self) -> float:
        return wrap_turn(self.integral)


def invariant_average_check(f: Lift, nu: EmpiricalMeasure) -> InvariantAverage:
    """Average displacement of ``f`` against ``nu``; equals rho(f) mod 1 when ``nu`` is invariant."""
    integral = nu.integrate(f.displacement)
    pushed = EmpiricalMeasure(np.asarray(f(nu.positions), dtype=np.float64) % 1.0,
                              nu.masses, nu.bins)
    return InvariantAverage(integral, nu.kuiper_distance(pushed))


# -- Example 1 ---------------------------------------------------------------


def example1_maps() -> list[Lift]:
    """Four piecewise-linear lifts with ``f_i(0) = 0`` and
    ``f1(1/8) = 3/8, f2(3/8) = -3/8, f3(-3/8) = -1/8, f4(-1/8) = 1/8`` on the circle."""
    from .circle import PiecewiseLinearLift

    return [
        PiecewiseLinearLift([0.0, 1 / 8], [0.0, 3 / 8]),
        PiecewiseLinearLift([0.0, 3 / 8], [0.0, 5 / 8]),
        PiecewiseLinearLift([0.0, 5 / 8], [0.0, 7 / 8]),
        PiecewiseLinearLift([0.0, 7 / 8], [0.0, 1 / 8]),
    ]


def example1_sampler() -> PeriodicSampler:
    return PeriodicSampler(example1_maps())

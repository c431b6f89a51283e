"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION <k>: PASS|FAIL`` line with the measured
values and runtime; the lines are repeated in the terminal summary.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from rotnum import kernels
from rotnum.circle import RotationLift, wrap_turn
from rotnum.composition import compose_rotation_number, example1_sampler, ergodic_rotation_via_occupation
from rotnum.composition import EmpiricalMeasure, pointwise_rotation
from rotnum.circle import ordered_lifted_orbit
from rotnum.examples import FIGURE_MEANS
from rotnum.flows import J, TWO_PI, example4_cocycle
from rotnum.projective import (
    eigen_rotation_number,
    random_gl2_plus,
    uniform_rotation_sampler,
    upper_triangular_sampler,
)
from rotnum.sampling import (
    SamplingStudy,
    beta_T_samples,
    continuous_rate,
    convergence_study,
    erratum_identity_check,
    nyquist_check,
    winding_counts,
    wrapped_gaussian_mean,
)

VERDICTS = []
SEED = 0


def report(capsys, k, ok, elapsed, limit, detail):
    ok = bool(ok) and elapsed < limit
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s, limit {limit:g}s) {detail}"
    VERDICTS.append(line)
    with capsys.disabled():
        print("\n" + line)
    return ok


def test_criterion_1_two_approaches(capsys):
    t0 = time.perf_counter()
    sampler = example1_sampler()
    n = 100
    first = compose_rotation_number(sampler, n, 0.0)
    second = pointwise_rotation(sampler, n, 1 / 8)
    x, images = 1 / 8, []
    for f in sampler.lifts(n):
        x = float(f(x)) % 1.0
        images.append(x)
    theta = ordered_lifted_orbit(images, 1 / 8).thetas
    exact_orbit = bool(np.array_equal(theta, (2 * np.arange(n + 1) + 1) / 8))
    ok = first.value == 0.0 and second.value == 0.25 and exact_orbit
    assert report(capsys, 1, ok, time.perf_counter() - t0, 1.0,
                  f"first={first.value!r} second(1/8)={second.value!r} "
                  f"theta_n=(2n+1)/8 for n<=100: {exact_orbit}")


def test_criterion_2_iteration_matches_eigenvalues(capsys):
    t0 = time.perf_counter()
    mats = random_gl2_plus(np.random.default_rng(SEED), 1000)
    n = 10 ** 6
    totals = kernels.matrix_power_orbits(mats, n, 0.0)
    diffs = np.array([abs(wrap_turn(t / n - eigen_rotation_number(g))) for g, t in zip(mats, totals)])
    tol = 2e-6 + 1e-9
    ok = bool(np.all(diffs <= tol))
    assert report(capsys, 2, ok, time.perf_counter() - t0, 60.0,
                  f"max |iterative - eigen| = {diffs.max():.3e} (tol {tol:.3e}) over {len(mats)} matrices, "
                  f"n={n}")


def test_criterion_3_iid_rotations(capsys):
    t0 = time.perf_counter()
    sampler = uniform_rotation_sampler(0.05, 0.35, SEED)
    est, measure = ergodic_rotation_via_occupation(sampler, 10 ** 6, replicas=8, bins=1024)
    dev = float(np.max(np.abs(measure.weights - 1 / measure.bins)))
    kuiper = measure.kuiper_distance(EmpiricalMeasure.uniform(measure.bins))
    ok = abs(est.value - 0.2) <= 3 * est.stderr and dev < 0.005
    assert report(capsys, 3, ok, time.perf_counter() - t0, 30.0,
                  f"rho={est.value:.7f} stderr={est.stderr:.2e} |rho-0.2|={abs(est.value - 0.2):.2e}; "
                  f"sup bin deviation={dev:.2e} (<0.005); Kuiper to uniform={kuiper:.2e}")


def test_criterion_4_upper_triangular(capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for p in (0.2, 0.5, 0.8):
        est = compose_rotation_number(upper_triangular_sampler(p, SEED), 10 ** 6, replicas=8)
        good = abs(est.value - p / 2) <= 3 * est.stderr
        ok &= good
        parts.append(f"p={p}: {est.value:.6f}+-{est.stderr:.1e} vs {p / 2}")
    assert report(capsys, 4, ok, time.perf_counter() - t0, 30.0, "; ".join(parts))


def test_criterion_5_sampling_below_nyquist(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    mats = random_gl2_plus(rng, 100, complex_only=True)
    defects = []
    for A in mats:
        T = rng.uniform(0.01, 0.99) / (2 * abs(continuous_rate(A)))
        r = nyquist_check(A, T)
        defects.append(r.defect if r.below_nyquist else math.inf)
    alias = nyquist_check(TWO_PI * J, 0.75)
    ok = max(defects) < 1e-12 and abs(alias.rho_T_over_T + 1 / 3) < 1e-12 and not alias.below_nyquist
    assert report(capsys, 5, ok, time.perf_counter() - t0, 5.0,
                  f"max defect={max(defects):.2e} over 100 matrices; aliasing A=2piJ, T=0.75: "
                  f"rho_T/T={alias.rho_T_over_T:.15f}")


def test_criterion_6_window_displacement_means(capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for T, (ref, tol) in sorted(FIGURE_MEANS.items(), reverse=True):
        dist = beta_T_samples(example4_cocycle(), T, 10 ** 6, SEED, dt=1e-3)
        oracle = wrapped_gaussian_mean(T, T)
        ref_ok = abs(dist.mean - ref) <= tol
        z = (dist.mean - oracle) / dist.stderr
        oracle_ok = abs(z) <= 3
        ok &= ref_ok and oracle_ok
        parts.append(f"T={T}: mean={dist.mean:.5f}+-{dist.stderr:.1e} reference {ref}+-{tol} "
                     f"[{'ok' if ref_ok else 'MISS'}], oracle {oracle:.5f} z={z:+.2f} "
                     f"[{'ok' if oracle_ok else 'MISS'}]")
    assert report(capsys, 6, ok, time.perf_counter() - t0, 120.0, "; ".join(parts))


def test_criterion_7_sampled_rate_converges(capsys):
    t0 = time.perf_counter()
    study = SamplingStudy(example4_cocycle(), (0.5, 0.25, 0.1, 0.05, 0.02), steps_per_T=10_000,
                          replicas=32, seed=SEED, dt=1e-4)
    table = convergence_study(study)
    v, s = table.rho_over_T, table.stderr
    below = bool(np.all(v < 1))
    nondecreasing = all(v[i + 1] >= v[i] - 2 * max(s[i], s[i + 1]) for i in range(len(v) - 1))
    final = abs(v[-1] - 1) <= 0.02
    rows = ", ".join(f"T={t}: {r:.4f}+-{e:.1e}" for t, r, e in table.rows())
    assert report(capsys, 7, below and nondecreasing and final, time.perf_counter() - t0, 300.0,
                  f"{rows}; below 1: {below}, nondecreasing within 2 stderr: {nondecreasing}, "
                  f"|final-1|={abs(v[-1] - 1):.4f}")


def test_criterion_8_winding_counts(capsys):
    t0 = time.perf_counter()
    n = 10 ** 4
    coarse = winding_counts(example4_cocycle(), 0.25, n, seed=SEED)
    fine = winding_counts(example4_cocycle(), 0.02, n, seed=SEED)
    plus_ok = coarse.E_Nplus_over_T >= 3 * fine.E_Nplus_over_T
    minus_ok = coarse.E_Nminus_over_T >= 3 * fine.E_Nminus_over_T
    checks = [erratum_identity_check(example4_cocycle(), w.T, n, study=w) for w in (coarse, fine)]
    ident_ok = all(c.integer_defect == 0 for c in checks)
    ok = plus_ok and minus_ok and ident_ok
    assert report(capsys, 8, ok, time.perf_counter() - t0, 300.0,
                  f"E[N+]/T: {coarse.E_Nplus_over_T:.4f} -> {fine.E_Nplus_over_T:.4f}, "
                  f"E[N-]/T: {coarse.E_Nminus_over_T:.4f} -> {fine.E_Nminus_over_T:.4f} "
                  f"(T=0.25 -> 0.02, need factor 3); integer defect "
                  f"{[c.integer_defect for c in checks]} on {n} samples each "
                  f"({[c.nonzero_N for c in checks]} with N != 0)")


PROPERTY_SELECTION = " or ".join([
    "wrap", "sine_lift_invariants", "lift_invariants", "lift_is_monotone", "initial_point",
    "conjugacy", "reflection", "orbit_and_classical", "window_product", "heun", "closed_form",
    "example4_angle", "cocycle_property", "drift",
])


def test_criterion_9_property_suites(capsys):
    t0 = time.perf_counter()
    here = Path(__file__).parent
    files = [str(here / f) for f in ("test_circle.py", "test_projective.py", "test_flows.py",
                                     "test_sampling.py")]
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           "-k", PROPERTY_SELECTION, *files], capture_output=True, text=True, cwd=here.parent)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    assert report(capsys, 9, proc.returncode == 0, time.perf_counter() - t0, 180.0, summary)

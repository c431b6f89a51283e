"""Canonical configurations of the four reference examples.

Each runner returns a :class:`ResultRecord` whose ``checks`` compare the
computed values with the known answers at documented tolerances:

1. cyclic piecewise-linear maps: composition value 0, orbit value 1/4 at p = 1/8;
2. i.i.d. rotations by lambda: rho = E[lambda], uniform stationary measure;
3. i.i.d. upper-triangular matrices: rho = P[a11 < 0] / 2;
4. random rotation SDE ``alpha_t = t + W_t``: rho_T / T -> 1 and the means of
   the wrapped window displacement.
"""

from __future__ import annotations

import numpy as np

from .composition import (
    compose_rotation_number,
    ergodic_rotation_via_occupation,
    example1_sampler,
    pointwise_rotation,
)
from .circle import ordered_lifted_orbit
from .flows import example4_cocycle
from .projective import upper_triangular_sampler, uniform_rotation_sampler
from .reports import ResultRecord, below, check
from .sampling import (
    SamplingStudy,
    beta_T_samples,
    convergence_study,
    wrapped_gaussian_mean,
)

CHECK_COLUMNS = ["check", "value", "expected", "tol", "ok"]

# Reference means of the wrapped displacement for the SDE example.
FIGURE_MEANS = {0.25: (0.0259, 0.002), 0.02: (0.0197, 0.001)}

DEFAULTS = {
    1: {"n": 100},
    2: {"lo": 0.05, "hi": 0.35, "n": 1_000_000, "replicas": 8, "bins": 1024},
    3: {"p": 0.5, "n": 1_000_000, "replicas": 8},
    4: {"T_grid": [0.5, 0.25, 0.1, 0.05, 0.02], "n": 10_000, "replicas": 32,
        "dt": 1e-4, "beta_samples": 1_000_000, "beta_dt": 1e-3},
}


def _record(example: int, params: dict, seed: int, checks: dict, estimates: dict) -> ResultRecord:
    rows = [(name, c["value"], c["expected"], c["tol"], c["ok"]) for name, c in checks.items()]
    return ResultRecord(f"example{example}", CHECK_COLUMNS, rows, params, estimates, seed,
                        all(c["ok"] for c in checks.values()), checks)


def _example1(p, seed, workers):
    n = int(p["n"])
    sampler = example1_sampler()
    first = compose_rotation_number(sampler, n, x0=0.0)
    second = pointwise_rotation(sampler, n, 1 / 8)
    second0 = pointwise_rotation(sampler, n, 0.0)
    x = 1 / 8
    images = []
    for f in sampler.lifts(n):
        x = float(f(x)) % 1.0
        images.append(x)
    theta = np.asarray(ordered_lifted_orbit(images, 1 / 8).thetas)
    orbit_err = float(np.max(np.abs(theta - (2 * np.arange(n + 1) + 1) / 8)))
    checks = {
        "rho_first": check(first.value, 0.0, 0.0),
        "rot_second_at_1_8": check(second.value, 0.25, 1e-12),
        "rot_second_at_0": check(second0.value, 0.0, 0.0),
        "orbit_max_error": check(orbit_err, 0.0, 1e-12),
    }
    return checks, {"rho_first": first.value, "rot_second_at_1_8": second.value}


def _example2(p, seed, workers):
    sampler = uniform_rotation_sampler(p["lo"], p["hi"], seed)
    est, measure = ergodic_rotation_via_occupation(sampler, int(p["n"]), int(p["replicas"]),
                                                   int(p["bins"]), workers=workers)
    expected = 0.5 * (p["lo"] + p["hi"])
    dev = float(np.max(np.abs(measure.weights - 1.0 / measure.bins)))
    checks = {
        "rho": check(est.value, expected, 3 * est.stderr, stderr=est.stderr),
        "sup_bin_deviation": check(dev, 0.0, 0.005),
    }
    return checks, {"rho": est.value, "stderr": est.stderr}


def _example3(p, seed, workers):
    sampler = upper_triangular_sampler(p["p"], seed)
    est = compose_rotation_number(sampler, int(p["n"]), replicas=int(p["replicas"]), workers=workers)
    return ({"rho": check(est.value, p["p"] / 2, 3 * est.stderr, stderr=est.stderr)},
            {"rho": est.value, "stderr": est.stderr})


def _example4(p, seed, workers):
    grid = sorted((float(t) for t in p["T_grid"]), reverse=True)
    study = SamplingStudy(example4_cocycle(), tuple(grid), int(p["n"]), int(p["replicas"]),
                          seed, p["dt"])
    table = convergence_study(study, workers)
    vals, errs = table.rho_over_T, table.stderr
    checks = {
        "max_rho_over_T_below_1": below(float(np.max(vals)), 1.0),
        "nondecreasing_slack": check(
            float(max([vals[i] - vals[i + 1] - 2 * max(errs[i], errs[i + 1])
                       for i in range(len(vals) - 1)] + [0.0])), 0.0, 0.0),
        "final_rho_over_T": check(vals[-1], 1.0, 0.02),
    }
    estimates = {"rows": table.rows(), "rho_cont": table.rho_cont}
    for T, (ref, tol) in FIGURE_MEANS.items():
        dist = beta_T_samples(example4_cocycle(), T, int(p["beta_samples"]), seed,
                              dt=p["beta_dt"], workers=workers)
        oracle = wrapped_gaussian_mean(T, T)
        checks[f"beta_mean_T{T}_reference"] = check(dist.mean, ref, tol, stderr=dist.stderr)
        checks[f"beta_mean_T{T}_oracle"] = check(dist.mean, oracle, 3 * dist.stderr,
                                                 stderr=dist.stderr)
        estimates[f"beta_mean_T{T}"] = dist.mean
    return checks, estimates


RUNNERS = {1: _example1, 2: _example2, 3: _example3, 4: _example4}


def run_example(example: int, overrides: dict | None = None, seed: int = 0,
                workers: int = 1) -> ResultRecord:
    """Run reference example ``example`` (1-4) with its defaults updated by ``overrides``."""
    if example not in RUNNERS:
        raise ValueError(f"unknown example {example!r}; choose 1, 2, 3 or 4")
    params = {**DEFAULTS[example], **{k: v for k, v in (overrides or {}).items()
                                      if k in DEFAULTS[example] and v is not None}}
    checks, estimates = RUNNERS[example](params, seed, workers)
    return _record(example, params, seed, checks, estimates)

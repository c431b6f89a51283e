"""Command-line interface.

Every subcommand prints (or writes with ``--out``) one table. Parameters can
come from a YAML file given with ``--config``; explicit flags win over the
file, and the file wins over built-in defaults.

Exit codes: 0 success, 1 tolerance failure, 2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from .circle import RotnumError, SineLift, classical_rotation_number, RotationLift
from .composition import ergodic_rotation_via_occupation
from .flows import (
    DeterministicCocycle,
    DtFloorError,
    SdeConfig,
    SdeCocycle,
    continuous_rotation_number,
    ensemble_rotation_number,
    example4_cocycle,
    integrate,
)
from .projective import (
    discrete_rotation_sampler,
    eigen_rotation_number,
    matrix_lift,
    uniform_rotation_sampler,
    upper_triangular_sampler,
)
from .reports import (
    HISTOGRAM_COLUMNS,
    ReportError,
    ResultRecord,
    StudyConfig,
    emit_table,
    histogram_rows,
    load_config,
    table_csv,
)
from .sampling import (
    SamplingStudy,
    beta_T_samples,
    convergence_study,
    erratum_identity_check,
    nyquist_check,
    winding_counts,
    wrapped_gaussian_mean,
)

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("rotnum")

# Built-in defaults per subcommand (flag dest -> value).
DEFAULTS = {
    "homeo": {"family": "arnold", "omega": 0.3, "coupling": 0.05, "n": 100_000, "x0": 0.0},
    "matrix": {"matrix": [0.0, -1.0, 1.0, 0.0], "n": 100_000},
    "product": {"kind": "uniform", "lo": 0.05, "hi": 0.35, "values": [0.1, 0.3],
                "p_negative": 0.5, "n": 100_000, "replicas": 8, "bins": 1024},
    "cocycle": {"system": "example4", "A": [0.0, -2 * math.pi, 2 * math.pi, 0.0],
                "T": 100.0, "dt": 1e-3, "replicas": 16},
    "sample-study": {"system": "example4", "A": [0.0, -2 * math.pi, 2 * math.pi, 0.0],
                     "T_grid": [0.5, 0.25, 0.1, 0.05, 0.02], "n": 1000, "replicas": 8,
                     "dt": None},
    "nyquist": {"A": [0.0, -2 * math.pi, 2 * math.pi, 0.0], "T": 0.4},
    "beta-dist": {"system": "example4", "A": [0.0, -2 * math.pi, 2 * math.pi, 0.0],
                  "T": 0.25, "n": 100_000, "dt": 1e-3, "bins": 1024},
    "winding": {"system": "example4", "A": [0.0, -2 * math.pi, 2 * math.pi, 0.0],
                "T_grid": [0.25, 0.1, 0.05, 0.02], "n": 10_000, "fine_dt": None},
    "example": {"id": 1, "n": None, "replicas": None, "T_grid": None, "dt": None, "p": None,
                "bins": None},
}


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _matrix(values) -> np.ndarray:
    v = [float(x) for x in values]
    if len(v) != 4:
        raise ValueError("a matrix needs four entries a11 a12 a21 a22")
    return np.array(v).reshape(2, 2)


def _system(p):
    if p["system"] == "example4":
        return example4_cocycle()
    if p["system"] == "deterministic":
        return DeterministicCocycle(_matrix(p["A"]))
    if p["system"] == "rotation-sde":
        A = _matrix(p["A"])
        return SdeCocycle(A, (A,))
    raise ValueError(f"unknown system {p['system']!r}")


def _record(study, columns, rows, p, seed, **kw) -> ResultRecord:
    return ResultRecord(study, columns, rows, dict(p), kw.pop("estimates", {}), seed, **kw)


# -- subcommands ------------------------------------------------------------------


def cmd_homeo(p, seed, workers):
    if p["family"] == "rotation":
        f = RotationLift(p["omega"])
    elif p["family"] in ("arnold", "sine"):
        f = SineLift(p["omega"], p["coupling"])
    else:
        raise ValueError(f"unknown family {p['family']!r}")
    est = classical_rotation_number(f, int(p["n"]), p["x0"])
    return _record("homeo", ["rho", "n", "bound"], [(est.value, est.n, est.bound)], p, seed)


def cmd_matrix(p, seed, workers):
    g = _matrix(p["matrix"])
    eig = eigen_rotation_number(g)
    it = classical_rotation_number(matrix_lift(g), int(p["n"]))
    return _record("matrix", ["rho_eigen", "rho_iterative", "n"], [(eig, it.value, it.n)], p, seed)


def cmd_product(p, seed, workers):
    kind = p["kind"]
    if kind == "uniform":
        sampler, expected = uniform_rotation_sampler(p["lo"], p["hi"], seed), 0.5 * (p["lo"] + p["hi"])
    elif kind == "discrete":
        sampler, expected = discrete_rotation_sampler(p["values"], None, seed), float(np.mean(p["values"]))
    elif kind == "triangular":
        sampler, expected = upper_triangular_sampler(p["p_negative"], seed), 0.5 * p["p_negative"]
    else:
        raise ValueError(f"unknown product kind {kind!r}")
    est, measure = ergodic_rotation_via_occupation(sampler, int(p["n"]), int(p["replicas"]),
                                                   int(p["bins"]), workers=workers)
    ok = abs(est.value - expected) <= 3 * est.stderr + 1e-12
    return _record("product", ["rho", "stderr", "n", "replicas", "expected"],
                   [(est.value, est.stderr, est.n, est.replicas, expected)], p, seed,
                   passed=ok, estimates={"histogram": histogram_rows(measure.edges, measure.weights)})


def cmd_cocycle(p, seed, workers):
    spec = _system(p)
    cfg = SdeConfig(dt=p["dt"], seed=seed)
    if spec.kind == "sde":
        est = ensemble_rotation_number(spec, p["T"], int(p["replicas"]), cfg, workers=workers)
    else:
        est = continuous_rotation_number(integrate(spec, p["T"], cfg))
    return _record("cocycle", ["rho", "stderr", "T", "replicas"],
                   [(est.value, est.stderr, p["T"], est.replicas)], p, seed)


def cmd_sample_study(p, seed, workers):
    study = SamplingStudy(_system(p), tuple(p["T_grid"]), int(p["n"]), int(p["replicas"]), seed,
                          p["dt"])
    table = convergence_study(study, workers)
    return _record("sample-study", ["T", "rho_over_T", "stderr"], table.rows(), p, seed,
                   estimates={"rho_cont": table.rho_cont, "monotone": table.monotone})


def cmd_nyquist(p, seed, workers):
    r = nyquist_check(_matrix(p["A"]), p["T"])
    return _record("nyquist", ["T", "rho_T_over_T", "rho_cont", "below_nyquist", "exact"],
                   [(p["T"], r.rho_T_over_T, r.rho_cont, r.below_nyquist, r.exact)], p, seed,
                   passed=r.exact or not r.below_nyquist)


def cmd_beta_dist(p, seed, workers):
    dist = beta_T_samples(_system(p), p["T"], int(p["n"]), seed, bins=int(p["bins"]), dt=p["dt"],
                          workers=workers)
    est = {"mean": dist.mean, "stderr": dist.stderr}
    if p["system"] == "example4":
        est["wrapped_gaussian_mean"] = wrapped_gaussian_mean(p["T"], p["T"])
    return _record("beta-dist", HISTOGRAM_COLUMNS, histogram_rows(dist.edges, dist.mass), p, seed,
                   estimates=est)


def cmd_winding(p, seed, workers):
    spec = _system(p)
    rows = []
    for T in sorted(p["T_grid"], reverse=True):
        w = winding_counts(spec, T, int(p["n"]), p["fine_dt"], seed, workers=workers)
        chk = erratum_identity_check(spec, T, int(p["n"]), seed, study=w)
        rows.append((T, w.E_Nplus_over_T, w.E_Nminus_over_T, chk.integer_defect, chk.angle_defect))
    return _record("winding", ["T", "E_Nplus_over_T", "E_Nminus_over_T", "integer_defect",
                               "angle_defect"], rows, p, seed,
                   passed=all(r[3] == 0 for r in rows))


def cmd_example(p, seed, workers):
    from .examples import run_example

    overrides = {k: v for k, v in p.items() if k != "id"}
    if overrides.get("T_grid") is None:
        overrides.pop("T_grid", None)
    return run_example(int(p["id"]), overrides, seed, workers)


COMMANDS = {
    "homeo": cmd_homeo,
    "matrix": cmd_matrix,
    "product": cmd_product,
    "cocycle": cmd_cocycle,
    "sample-study": cmd_sample_study,
    "nyquist": cmd_nyquist,
    "beta-dist": cmd_beta_dist,
    "winding": cmd_winding,
    "example": cmd_example,
}


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotnum", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML study file; flags override its values")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    common.add_argument("--out", help="write the table here (plus a .json provenance sidecar)")
    common.add_argument("--format", choices=["csv", "json"], help="table format (default csv)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, description=help_)

    s = add("homeo", "rotation number of a circle homeomorphism")
    s.add_argument("--family", choices=["rotation", "arnold", "sine"])
    s.add_argument("--omega", type=float)
    s.add_argument("--coupling", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--x0", type=float)

    s = add("matrix", "rotation number of one GL+(2) matrix: eigenvalue formula vs iteration")
    s.add_argument("--matrix", type=float, nargs=4, metavar=("A11", "A12", "A21", "A22"))
    s.add_argument("--n", type=int)

    s = add("product", "rotation number of a product of i.i.d. random matrices")
    s.add_argument("--kind", choices=["uniform", "discrete", "triangular"])
    s.add_argument("--lo", type=float)
    s.add_argument("--hi", type=float)
    s.add_argument("--values", type=_floats, help="rotation angles in turns, e.g. '0.1,0.3'")
    s.add_argument("--p-negative", dest="p_negative", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--replicas", type=int)
    s.add_argument("--bins", type=int)

    system_help = "example4 (random rotation SDE), deterministic (x' = Ax) or rotation-sde (B = A)"
    for name, help_ in [("cocycle", "continuous rotation number of a cocycle"),
                        ("sample-study", "rho(phi_T)/T over a grid of sampling periods"),
                        ("beta-dist", "distribution of the wrapped window displacement"),
                        ("winding", "antipode crossing rates and the wrapping identity")]:
        s = add(name, help_)
        s.add_argument("--system", choices=["example4", "deterministic", "rotation-sde"],
                       help=system_help)
        s.add_argument("--A", type=float, nargs=4, metavar=("A11", "A12", "A21", "A22"))
        s.add_argument("--n", type=int)
        if name in ("cocycle", "beta-dist"):
            s.add_argument("--T", type=float)
        if name in ("sample-study", "winding"):
            s.add_argument("--T-grid", dest="T_grid", type=_floats, help="e.g. '0.5,0.25,0.1'")
        if name in ("cocycle", "sample-study", "beta-dist"):
            s.add_argument("--dt", type=float)
        if name in ("cocycle", "sample-study"):
            s.add_argument("--replicas", type=int)
        if name == "beta-dist":
            s.add_argument("--bins", type=int)
        if name == "winding":
            s.add_argument("--fine-dt", dest="fine_dt", type=float)

    s = add("nyquist", "exactness of the sampled rotation number of x' = Ax")
    s.add_argument("--A", type=float, nargs=4, metavar=("A11", "A12", "A21", "A22"))
    s.add_argument("--T", type=float)

    s = add("example", "run one of the four reference examples and check it")
    s.add_argument("id", type=int, nargs="?", choices=[1, 2, 3, 4])
    s.add_argument("--n", type=int)
    s.add_argument("--replicas", type=int)
    s.add_argument("--T-grid", dest="T_grid", type=_floats)
    s.add_argument("--dt", type=float)
    s.add_argument("--p", type=float, help="P[a11 < 0] for example 3")
    s.add_argument("--bins", type=int)
    return parser


GLOBAL = ("seed", "workers", "out", "format")


def resolve(args: argparse.Namespace) -> StudyConfig:
    """Merge defaults, the config file and explicit flags into one :class:`StudyConfig`."""
    cfg = load_config(args.config) if args.config else StudyConfig(args.command)
    if cfg.command != args.command:
        raise ValueError(f"config is for {cfg.command!r}, not {args.command!r}")
    params = dict(DEFAULTS[args.command])
    unknown = set(cfg.params) - set(params)
    if unknown:
        raise ValueError(f"unknown parameters for {args.command}: {sorted(unknown)}")
    params.update(cfg.params)
    flags = vars(args)
    params.update({k: flags[k] for k in DEFAULTS[args.command] if flags.get(k) is not None})
    glob = {k: flags[k] if flags.get(k) is not None else getattr(cfg, k) for k in GLOBAL}
    return StudyConfig(args.command, params=params, **glob)


def execute(cfg: StudyConfig) -> ResultRecord:
    return COMMANDS[cfg.command](cfg.params, cfg.seed, cfg.workers)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        record = execute(cfg)
        if cfg.out:
            emit_table(record, cfg.out, cfg.format)
            log.info("wrote %s", cfg.out)
        elif cfg.format == "json":
            import json

            sys.stdout.write(json.dumps({"columns": record.columns, "rows": record.rows,
                                         **record.provenance()}, default=str, indent=1) + "\n")
        else:
            sys.stdout.write(table_csv(record.columns, record.rows))
    except DtFloorError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RotnumError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if record.passed is False:
        for name in record.failures() or ["tolerance"]:
            c = record.checks.get(name, {})
            print(f"FAIL {name}: value={c.get('value')} expected={c.get('expected')} "
                  f"tol={c.get('tol')}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

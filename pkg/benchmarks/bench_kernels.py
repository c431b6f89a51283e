"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""

import argparse
import math
import sys
import time

import numpy as np

from rotnum import kernels
from rotnum.rng import philox


def _cases(scale):
    rng = np.random.default_rng(0)
    g = rng.standard_normal((int(20_000 * scale), 2, 2))
    g = g[g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0] > 0]
    A = 2 * math.pi * np.array([[0.0, -1.0], [1.0, 0.0]])
    B = A[None]
    dW_paths = philox(1, 0).standard_normal((256, int(250 * scale), 1)) * math.sqrt(1e-3)
    dW_long = philox(2, 0).standard_normal((int(200_000 * scale), 1)) * 1e-2
    power = g[: max(1, len(g) // 20)]
    return {
        "matrix_sequence_orbit": lambda k: k.matrix_sequence_orbit(g, 0.0, True),
        "matrix_power_orbits": lambda k: k.matrix_power_orbits(power, 200, 0.0),
        "sine_orbit": lambda k: k.sine_orbit(0.3, 0.05, 0.0, int(200_000 * scale)),
        "angle_heun": lambda k: k.angle_heun(A, B, dW_paths, 1e-3, 0.0),
        "heun_windows": lambda k: k.heun_windows(A, B, dW_long, 1e-4, [100, 500], 0.0),
    }


def _best(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled kernels not built; only the fallback is available", file=sys.stderr)
    print(f"{'kernel':<24}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, call in _cases(args.scale).items():
        tp = _best(lambda: call(kernels.pure), args.repeat)
        if kernels.compiled is None:
            print(f"{name:<24}{tp:>12.4f}{'-':>12}{'-':>10}")
            continue
        tc = _best(lambda: call(kernels.compiled), args.repeat)
        print(f"{name:<24}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotnum import kernels
from rotnum.flows import J, TWO_PI, example4_cocycle
from rotnum.projective import random_gl2_plus

pure = kernels.pure
compiled = kernels.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _mats(seed, n):
    return random_gl2_plus(np.random.default_rng(seed), n)


@needs_compiled
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 200), st.floats(-2, 2))
@settings(max_examples=30, deadline=None)
def test_sequence_orbit_parity(seed, n, x0):
    mats = _mats(seed, n)
    tp, pp = pure.matrix_sequence_orbit(mats, x0, True)
    tc, pc = compiled.matrix_sequence_orbit(mats, x0, True)
    assert tc == pytest.approx(tp, abs=1e-9)
    assert np.allclose(pc, pp, atol=1e-9)
    assert compiled.matrix_sequence_orbit(mats, x0)[1] is None


@needs_compiled
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 300), st.floats(-1, 1))
@settings(max_examples=30, deadline=None)
def test_power_orbit_parity(seed, n, x0):
    mats = _mats(seed, 7)
    assert np.allclose(compiled.matrix_power_orbits(mats, n, x0), pure.matrix_power_orbits(mats, n, x0),
                       atol=1e-9)


@needs_compiled
@given(st.floats(-0.5, 0.5), st.floats(-0.15, 0.15), st.floats(-1, 1), st.integers(0, 500))
@settings(max_examples=30)
def test_sine_orbit_parity(omega, coupling, x0, n):
    assert compiled.sine_orbit(omega, coupling, x0, n) == pytest.approx(
        pure.sine_orbit(omega, coupling, x0, n), abs=1e-9)


def _sde(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2, 2))
    B = rng.standard_normal((2, 2, 2)) * 0.7
    return A, B


@needs_compiled
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1, 1))
@settings(max_examples=20, deadline=None)
def test_angle_heun_parity(seed, alpha0):
    A, B = _sde(seed)
    dW = np.random.default_rng(seed + 1).standard_normal((5, 200, 2)) * 0.05
    a = pure.angle_heun(A, B, dW, 0.0025, alpha0)
    b = compiled.angle_heun(A, B, dW, 0.0025, alpha0)
    assert np.allclose(a[0], b[0], atol=1e-9)
    assert np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])
    assert a[3] == pytest.approx(b[3], abs=1e-9)


@needs_compiled
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1, 1))
@settings(max_examples=20, deadline=None)
def test_heun_windows_parity(seed, alpha0):
    A, B = _sde(seed)
    dW = np.random.default_rng(seed + 2).standard_normal((600, 2)) * 0.03
    wp, tp = pure.heun_windows(A, B, dW, 1e-3, [3, 50], alpha0)
    wc, tc = compiled.heun_windows(A, B, dW, 1e-3, [3, 50], alpha0)
    for x, y in zip(wp, wc):
        assert np.allclose(x, y, rtol=1e-9, atol=1e-12)
    assert tc == pytest.approx(tp, abs=1e-9)


@pytest.mark.parametrize("impl", [pure] + ([compiled] if compiled is not None else []),
                         ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_random_rotation_kernels_exact(impl):
    spec = example4_cocycle()
    dW = np.random.default_rng(0).standard_normal((3, 500, 1)) * 0.03
    delta, up, down, max_inc = impl.angle_heun(spec.A, spec.B_array, dW, 1e-3, 0.0)
    assert np.allclose(delta, 0.5 + dW.sum(axis=(1, 2)), atol=1e-12)
    assert max_inc < 0.25
    # Heun step matrices are rotations up to O(dW^3): the matrix angle stays close
    (w,), turn = impl.heun_windows(spec.A, spec.B_array, dW[0], 1e-3, [500], 0.0)
    ang = math.atan2(w[0, 1, 0], w[0, 0, 0]) / TWO_PI
    assert abs(turn - delta[0]) < 0.02
    assert abs((turn - ang) - round(turn - ang)) < 1e-9


def test_backend_selection():
    assert kernels.BACKEND_NAME in ("cython", "python")
    assert kernels.backend is (compiled if compiled is not None else pure)
    assert np.allclose(kernels.matrix_power_orbits(TWO_PI * J[None] / 40, 3, 0.0), 0.75)

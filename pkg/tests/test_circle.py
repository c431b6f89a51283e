import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotnum.circle import (
    FunctionLift,
    NotHomeomorphismError,
    OrbitSequence,
    PiecewiseLinearLift,
    RotationLift,
    SineLift,
    classical_rotation_number,
    conjugate,
    lift_compose,
    normalize_lift,
    orbit_images,
    orbit_rotation_number,
    ordered_lifted_orbit,
    reflection,
    wrap_turn,
    wrap_turns,
)
from rotnum.composition import example1_sampler

from oracles import arnold_multistart, nested

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


# -- wrapping ------------------------------------------------------------------


@pytest.mark.parametrize("x, expected", [(0.0, 0.0), (0.5, 0.5), (-0.5, 0.5), (1.75, -0.25),
                                         (-1.25, -0.25), (2.5, 0.5)])
def test_wrap_examples(x, expected):
    assert wrap_turn(x) == expected


@given(finite)
def test_wrap_range_congruence_idempotence(x):
    w = wrap_turn(x)
    assert -0.5 < w <= 0.5
    assert abs((x - w) - round(x - w)) < 1e-9
    assert wrap_turn(w) == w


def test_wrap_rejects_non_finite():
    with pytest.raises(ValueError):
        wrap_turn(float("nan"))
    with pytest.raises(ValueError):
        wrap_turn(float("inf"))


def test_wrap_turns_matches_scalar():
    x = np.array([-3.5, -0.5, 0.0, 0.25, 0.5, 0.75, 10.125])
    assert np.array_equal(wrap_turns(x), [wrap_turn(v) for v in x])


# -- lifts -----------------------------------------------------------------------


@given(st.floats(-0.5, 0.5), st.floats(-0.15, 0.15), st.floats(-5, 5))
def test_sine_lift_invariants(omega, coupling, x):
    f = SineLift(omega, coupling)
    assert abs(f(x + 1) - f(x) - 1) < 1e-9
    assert abs(f.displacement(x)) < 1.5
    f.check()


def test_lift_check_rejects_bad_maps():
    with pytest.raises(NotHomeomorphismError):
        normalize_lift(lambda x: x + 0.3 * np.sin(2 * np.pi * x))  # not monotone
    with pytest.raises(NotHomeomorphismError):
        normalize_lift(lambda x: 1.1 * x)  # not periodic
    with pytest.raises(NotHomeomorphismError):
        SineLift(0.1, 0.2)


@pytest.mark.parametrize("shift, expected", [(3.25, 0.25), (0.5, 0.5), (-0.5, 0.5), (-7.0, 0.0)])
def test_normalize_lift(shift, expected):
    F = normalize_lift(lambda x: x + shift)
    assert F(0.0) == pytest.approx(expected, abs=1e-15)
    assert F(0.3) - 0.3 == pytest.approx(expected, abs=1e-15)


def test_normalized_lift_differs_by_integer():
    raw = lambda x: x + 2.3 + 0.05 * np.sin(2 * np.pi * x)  # noqa: E731
    F = normalize_lift(raw)
    xs = np.linspace(-2, 2, 101)
    assert np.allclose(raw(xs) - F(xs), 2.0)


def test_compose_translations_and_identity():
    g, f = RotationLift(0.25), RotationLift(1 / 3)
    assert lift_compose(g, f)(0.1) == pytest.approx(0.1 + 7 / 12)
    ident = RotationLift(0.0)
    for x in [-0.3, 0.0, 0.7]:
        assert lift_compose(g, ident)(x) == g(x)


def test_compose_matches_nested_evaluation():
    F = SineLift(0.3, 0.05)
    assert abs(lift_compose(F, F)(0.0) - F(F(0.0))) < 1e-12
    # composition is not renormalised: winding accumulates
    H = lift_compose(RotationLift(0.4), RotationLift(0.4))
    assert H(0.0) == pytest.approx(0.8)


def test_piecewise_linear_lift():
    f = PiecewiseLinearLift([0.0, 0.25, 0.5], [0.0, 0.5, 0.75])
    assert f(0.25) == pytest.approx(0.5)
    assert f(1.25) == pytest.approx(1.5)
    assert f(-0.75) == pytest.approx(-0.5)
    f.check()
    with pytest.raises(ValueError):
        PiecewiseLinearLift.from_table(np.linspace(0, 0.9, 100))
    table = PiecewiseLinearLift.from_table(np.arange(256) / 256 + 0.1)
    assert table(0.5) == pytest.approx(0.6)


@given(st.floats(-0.2, 0.2), st.floats(-0.1, 0.1), st.floats(-3, 3))
@settings(max_examples=50)
def test_inverse_roundtrip(omega, coupling, y):
    f = SineLift(omega, coupling)
    assert abs(f(f.inverse(y)) - y) < 1e-10


# -- rotation numbers ------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 7, 1000])
@pytest.mark.parametrize("x0", [0.0, 0.37, -2.1])
def test_rigid_rotation_exact(n, x0):
    est = classical_rotation_number(RotationLift(1 / 3), n, x0)
    assert est.value == pytest.approx(1 / 3, abs=1e-12)
    assert est.bound == pytest.approx(1 / n)


def test_fixed_point_forces_zero():
    est = classical_rotation_number(FunctionLift(lambda x: x + 0.1 * np.sin(2 * np.pi * x)), 5000, 0.3)
    assert abs(est.value) <= est.bound


def test_arnold_rotation_number_against_multistart_oracle():
    f = SineLift(0.3, 0.05)
    n = 10 ** 6
    est = classical_rotation_number(f, n)
    oracle = arnold_multistart(0.3, 0.05, 2 * 10 ** 5)
    # independent start points agree with each other and with the estimate
    assert np.ptp(oracle) < 2 / 2e5
    assert abs(est.value - oracle.mean()) < 1e-5


@given(st.floats(-0.5, 0.5), st.floats(-0.15, 0.15), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=40, deadline=None)
def test_initial_point_independence(omega, coupling, x, y):
    f = SineLift(omega, coupling)
    n = 500
    a = classical_rotation_number(f, n, x).raw
    b = classical_rotation_number(f, n, y).raw
    assert abs(a - b) <= 2 / n + 1e-12


# -- ordered lifted orbits ----------------------------------------------------------


def test_example1_orbit_at_one_eighth():
    sampler = example1_sampler()
    x = 1 / 8
    imgs = []
    for f in sampler.lifts(100):
        x = float(f(x)) % 1.0
        imgs.append(x)
    orbit = ordered_lifted_orbit(imgs, 1 / 8)
    assert np.allclose(orbit.thetas, (2 * np.arange(101) + 1) / 8, atol=1e-12)
    assert orbit_rotation_number(orbit).value == pytest.approx(0.25)


def test_orbit_constant_and_quarter_steps():
    orbit = ordered_lifted_orbit([0.2] * 10, 0.2)
    assert np.all(orbit.thetas == 0.2)
    imgs = orbit_images(RotationLift(0.25), 0.1, 12)
    orbit = ordered_lifted_orbit(imgs, 0.1)
    assert np.allclose(orbit.thetas, 0.1 + np.arange(13) / 4)


def test_orbit_empty_and_validation():
    orbit = ordered_lifted_orbit([], 0.7)
    assert len(orbit) == 1 and orbit.thetas[0] == pytest.approx(-0.3)
    with pytest.raises(ValueError):
        orbit_rotation_number(orbit)
    with pytest.raises(ValueError):
        OrbitSequence(np.array([0.0, 1.2]))
    with pytest.raises(ValueError):
        OrbitSequence(np.array([0.0, -0.1]))


@given(st.floats(0.16, 0.84), st.floats(-0.15, 0.15), st.floats(-0.5, 0.5))
@settings(max_examples=30, deadline=None)
def test_orbit_and_classical_agree(omega, coupling, p):
    # 0 < F(x) - x < 1 everywhere, so the ordered lifted orbit follows F itself
    f = SineLift(omega, coupling)
    n = 2000
    orbit = orbit_rotation_number(ordered_lifted_orbit(orbit_images(f, p, n), p))
    classical = classical_rotation_number(f, n, p)
    assert abs(wrap_turn(orbit.raw - classical.raw)) <= 2 / n + 1e-12


# -- conjugation --------------------------------------------------------------------


def test_conjugate_by_identity_is_unchanged():
    f = SineLift(0.2, 0.1)
    g = conjugate(RotationLift(0.0), f)
    xs = np.linspace(-1, 1, 17)
    assert np.allclose(g(xs), f(xs), atol=1e-10)


@pytest.mark.parametrize("h", [SineLift(0.0, 0.12), PiecewiseLinearLift([0.0, 0.3], [0.1, 0.8]),
                               FunctionLift(lambda x: x + 0.05 * np.sin(4 * np.pi * x) + 0.2)])
def test_conjugacy_invariance(h):
    n = 2000
    f = RotationLift(0.2)
    g = conjugate(h, f)
    g.check(grid=256)
    assert abs(classical_rotation_number(g, n).value - 0.2) <= 2 / n


def test_reflection_flips_sign():
    n = 2000
    f = SineLift(0.2, 0.08)
    rho = classical_rotation_number(f, n).value
    g = conjugate(reflection, f, reverse=True)
    assert abs(classical_rotation_number(g, n).value + rho) <= 2 / n
    assert abs(classical_rotation_number(conjugate(reflection, RotationLift(0.2), reverse=True), n).value
               + 0.2) <= 2 / n


def test_conjugate_rejects_non_homeomorphism():
    f = RotationLift(0.1)
    with pytest.raises(NotHomeomorphismError):
        conjugate(lambda x: x + 0.4 * np.sin(2 * np.pi * x), f)
    with pytest.raises(NotHomeomorphismError):
        conjugate(reflection, f)


def test_nested_oracle_helper():
    fs = [SineLift(0.1 * k, 0.03) for k in range(5)]
    assert nested(fs, 0.2) == pytest.approx(fs[4](fs[3](fs[2](fs[1](fs[0](0.2))))))
    assert math.isfinite(nested(fs, 0.0))

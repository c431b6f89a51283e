import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotnum.flows import J, TWO_PI, DeterministicCocycle, PeriodicDriver, RealNoiseCocycle, SdeConfig
from rotnum.flows import example4_cocycle, integrate, integrate_real_noise
from rotnum.projective import random_gl2_plus
from rotnum.sampling import (
    SamplingStudy,
    beta_T_samples,
    continuous_rate,
    convergence_study,
    count_crossings,
    erratum_identity_check,
    first_antipode_time,
    nyquist_check,
    sample_matrices,
    sampled_rotation_number,
    winding_counts,
    wrapped_gaussian_cdf,
    wrapped_gaussian_mean,
    wrapped_gaussian_mean_series,
)

from oracles import wrapped_normal_mean_quad


def _rotation(rate):
    return DeterministicCocycle(TWO_PI * rate * J)


# -- Nyquist ----------------------------------------------------------------------


def test_nyquist_exact_below_rate():
    rng = np.random.default_rng(0)
    mats = random_gl2_plus(rng, 100, complex_only=True)
    for A in mats:
        rho = continuous_rate(A)
        T = rng.uniform(0.05, 0.95) / (2 * abs(rho))
        res = nyquist_check(A, T)
        assert res.below_nyquist and res.exact
        assert res.defect < 1e-12


def test_nyquist_aliasing_case():
    res = nyquist_check(TWO_PI * J, 0.75)
    assert not res.below_nyquist and not res.exact
    assert res.rho_T_over_T == pytest.approx(-1 / 3, abs=1e-12)
    assert res.rho_cont == pytest.approx(1.0)


def test_nyquist_real_eigenvalues_and_validation():
    res = nyquist_check(np.diag([1.0, -0.5]), 3.0)
    assert res.exact and res.rho_cont == 0.0
    with pytest.raises(ValueError):
        nyquist_check(TWO_PI * J, 0.0)


@pytest.mark.parametrize("A, rate", [(TWO_PI * J, 1.0), (-TWO_PI * J, -1.0),
                                     (np.array([[0.0, -4.0], [1.0, 0.0]]), 1 / math.pi),
                                     (np.diag([1.0, 2.0]), 0.0)])
def test_continuous_rate(A, rate):
    assert continuous_rate(A) == pytest.approx(rate)


# -- window matrices ------------------------------------------------------------------


def test_sde_window_product_identity():
    spec = example4_cocycle()
    T, n = 0.05, 40
    windows = sample_matrices(spec, T, n, seed=3, dt=1e-3)
    whole = sample_matrices(spec, n * T, 1, seed=3, dt=1e-3)[0]
    prod = np.eye(2)
    for w in windows:
        prod = w @ prod
    assert np.allclose(prod, whole, rtol=1e-10, atol=1e-10)


def test_real_noise_window_product_identity():
    A0, A1 = np.array([[0.1, -2.0], [1.0, 0.0]]), np.array([[0.0, 1.0], [-3.0, -0.2]])
    spec = RealNoiseCocycle([A0, A1], PeriodicDriver((0.13, 0.21)))
    windows = sample_matrices(spec, 0.1, 20, seed=0)
    traj = integrate_real_noise(spec, 2.0, 1e-3, marks=np.arange(1, 20) * 0.1)
    prod = np.eye(2)
    for w in windows:
        prod = w @ prod
    assert np.allclose(prod, traj.matrices[-1], rtol=1e-9, atol=1e-9)


def test_deterministic_windows_and_rotation_number():
    spec = _rotation(0.8)
    mats = sample_matrices(spec, 0.25, 100)
    assert mats.shape == (100, 2, 2)
    assert sampled_rotation_number(mats).value == pytest.approx(0.2, abs=1e-12)
    pooled = sampled_rotation_number([mats, mats[:50]])
    assert pooled.replicas == 2 and pooled.value == pytest.approx(0.2)
    with pytest.raises(ValueError):
        sampled_rotation_number([])
    with pytest.raises(ValueError):
        sample_matrices(spec, 0.0, 10)


# -- convergence study ------------------------------------------------------------------


def test_deterministic_study_exact_below_nyquist():
    table = convergence_study(SamplingStudy(_rotation(1.7), (0.25, 0.1, 0.05)))
    assert np.allclose(table.rho_over_T, 1.7, atol=1e-12)
    assert table.monotone
    assert [r[0] for r in table.rows()] == [0.25, 0.1, 0.05]


def test_sde_study_tracks_wrapped_gaussian_oracle():
    study = SamplingStudy(example4_cocycle(), (0.5, 0.25, 0.1), steps_per_T=400, replicas=6,
                          seed=1, dt=1e-4)
    table = convergence_study(study)
    assert list(table.T) == [0.5, 0.25, 0.1]
    assert np.all(table.rho_over_T < 1)
    for T, v, s in zip(table.T, table.rho_over_T, table.stderr):
        # rotations commute, so rho(phi_T) is the mean wrapped increment
        expected = wrapped_gaussian_mean(T, T) / T
        assert abs(v - expected) < 4 * s + 0.01
    assert abs(table.rho_cont - 1.0) < 4 * table.rho_cont_stderr + 0.01


def test_study_reproducible_and_worker_independent():
    study = SamplingStudy(example4_cocycle(), (0.1, 0.05), steps_per_T=100, replicas=3, seed=4,
                          dt=1e-3)
    a = convergence_study(study, workers=1)
    b = convergence_study(study, workers=2)
    assert np.array_equal(a.rho_over_T, b.rho_over_T)
    assert np.array_equal(a.stderr, b.stderr)


def test_real_noise_study_converges():
    spec = RealNoiseCocycle([TWO_PI * 0.5 * J, TWO_PI * 2.0 * J], PeriodicDriver((0.5, 0.5)))
    table = convergence_study(SamplingStudy(spec, (0.5, 0.25, 0.1), steps_per_T=20, replicas=2))
    assert table.rho_cont == pytest.approx(1.25, abs=1e-9)
    assert abs(table.rho_over_T[-1] - 1.25) < 1e-6


def test_study_validation():
    with pytest.raises(ValueError):
        SamplingStudy(example4_cocycle(), ())
    with pytest.raises(ValueError):
        SamplingStudy(example4_cocycle(), (0.1,), replicas=0)
    with pytest.raises(ValueError):
        convergence_study(SamplingStudy(example4_cocycle(), (0.1, 0.0335), steps_per_T=10, dt=1e-3))


# -- wrapped Gaussian oracles ---------------------------------------------------------


@pytest.mark.parametrize("T, expected", [(0.25, 0.0022892), (0.1, 0.0259336), (0.02, 0.0197738)])
def test_wrapped_gaussian_mean_values(T, expected):
    assert wrapped_gaussian_mean(T, T) == pytest.approx(expected, abs=2e-7)


@given(st.floats(-2, 2), st.floats(0.001, 2))
@settings(max_examples=40, deadline=None)
def test_wrapped_gaussian_three_ways(mu, var):
    closed = wrapped_gaussian_mean(mu, var)
    assert closed == pytest.approx(wrapped_gaussian_mean_series(mu, var, terms=2000), abs=1e-6)
    assert closed == pytest.approx(wrapped_normal_mean_quad(mu, var), abs=1e-6)


def test_wrapped_gaussian_cdf_limits():
    ys = np.linspace(-0.5, 0.5, 11)
    cdf = wrapped_gaussian_cdf(ys, 0.3, 0.2)
    assert cdf[0] == pytest.approx(0.0, abs=1e-12) and cdf[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(cdf) > 0)


def test_beta_samples_match_wrapped_gaussian():
    dist = beta_T_samples(example4_cocycle(), 0.25, 20_000, seed=2, bins=128)
    assert dist.mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert len(dist.mass) == 128
    assert abs(dist.mean - wrapped_gaussian_mean(0.25, 0.25)) < 4 * dist.stderr
    assert dist.ks_distance(lambda y: wrapped_gaussian_cdf(y, 0.25, 0.25)) < 0.02
    assert np.all(np.abs(dist.samples) <= 0.5)


# -- winding counts -------------------------------------------------------------------


@pytest.mark.parametrize("rate, T, N", [(1.0, 0.3, 0), (1.0, 0.7, 1), (-1.0, 0.7, -1), (1.0, 1.6, 2),
                                        (2.0, 0.2, 0)])
def test_winding_deterministic_rotation(rate, T, N):
    study = winding_counts(_rotation(rate), T, 5)
    assert np.all(study.N == N)
    assert study.E_Nplus_over_T == pytest.approx(max(N, 0) / T)
    assert study.E_Nminus_over_T == pytest.approx(max(-N, 0) / T)
    check = erratum_identity_check(_rotation(rate), T, 5, study=study)
    assert check.integer_defect == 0 and check.angle_defect < 1e-12


def test_count_crossings_and_antipode_time():
    assert count_crossings([0.0, 0.6, 0.4, 0.7, 1.6]) == (3, 1)
    assert count_crossings([0.2, 0.69, 0.71]) == (1, 0)
    assert count_crossings([0.0]) == (0, 0)
    traj = integrate(_rotation(1.0), 1.0, SdeConfig(dt=1e-3))
    assert first_antipode_time(traj) == pytest.approx(0.5, abs=1e-9)
    assert first_antipode_time(integrate(_rotation(0.2), 1.0, SdeConfig(dt=1e-2))) == math.inf


def test_winding_identity_on_random_rotation():
    check = erratum_identity_check(example4_cocycle(), 0.25, 4000, seed=1)
    assert check.integer_defect == 0
    assert check.angle_defect < 1e-9
    assert check.nonzero_N > 0 and check.samples == 4000


def test_winding_rates_decay_with_T():
    coarse = winding_counts(example4_cocycle(), 0.25, 4000, seed=3)
    fine = winding_counts(example4_cocycle(), 0.02, 4000, seed=3)
    assert coarse.E_Nplus_over_T > 3 * fine.E_Nplus_over_T
    assert coarse.E_Nminus_over_T > 3 * fine.E_Nminus_over_T
    # gross counts bound the net parts
    assert coarse.gross_up_over_T >= coarse.E_Nplus_over_T
    assert coarse.stderr_over_T("minus") > 0


def test_crossing_rates_over_grid_match_gaussian_tails():
    # net crossings of T + W_T: N = +1 past 1/2, N = -1 below -1/2 (two-level terms are tiny)
    Phi = lambda z: 0.5 * (1 + math.erf(z / math.sqrt(2)))  # noqa: E731
    grid = [0.25, 0.1, 0.05, 0.02]
    studies = [winding_counts(example4_cocycle(), T, 40_000, seed=5) for T in grid]
    plus = [w.E_Nplus_over_T for w in studies]
    assert all(a > b for a, b in zip(plus, plus[1:]))
    for T, w in zip(grid, studies):
        sd = math.sqrt(T)
        exp_minus = sum(Phi((-k + 0.5 - T) / sd) for k in range(1, 6)) / T
        assert abs(w.E_Nminus_over_T - exp_minus) < 4 * w.stderr_over_T("minus") + 1e-3
    # the clockwise rate first rises (0.267 -> 0.289) before decaying to zero
    minus = [w.E_Nminus_over_T for w in studies]
    assert minus[1] > minus[2] > minus[3]


def test_beta_histogram_shape_at_full_size():
    dist = beta_T_samples(example4_cocycle(), 0.02, 1_000_000, seed=0)
    assert dist.ks_distance(lambda y: wrapped_gaussian_cdf(y, 0.02, 0.02)) < 0.01

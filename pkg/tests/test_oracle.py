import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fisheripm import distributions as dz
from fisheripm.errors import (ConfigError, DegenerateDistance, NonConverged,
                              UnboundedIntegrand)
from fisheripm.oracle import (QuadratureConfig, chi2_distance, chi2_monte_carlo,
                              chi2_squared, critic_moments, effective_dimension,
                              linear_fisher_ipm, neyman_divergence, optimal_critic,
                              pearson_divergence, rayleigh_quotient)

U01 = dz.UniformBox([0.0], [1.0])
U23 = dz.UniformBox([2.0], [3.0])


def gauss1(mu, var=1.0):
    return dz.Gaussian([mu], [[var]])


def test_identical_pair_is_zero():
    for P in (gauss1(0.3), dz.Ring(8, 2.0, 0.3), U01):
        assert chi2_distance(P, P).value == pytest.approx(0.0, abs=1e-9)


def test_disjoint_uniforms_give_two():
    assert chi2_distance(U01, U23).value == pytest.approx(2.0, abs=1e-3)


def test_shifted_gaussians_increase_and_match_monte_carlo():
    vals = []
    for d in (0.5, 1.0, 2.0, 4.0):
        P, Q = gauss1(0.0), gauss1(d)
        q = chi2_distance(P, Q).value
        mc = chi2_monte_carlo(P, Q, n=10**6, seed=1)
        assert abs(q - mc.value) <= 3 * mc.stderr
        vals.append(q)
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_chi2_bounded_and_symmetric():
    P = dz.gaussian_mixture([0.4, 0.6], [[0.0, 0.0], [2.0, 1.0]], [np.eye(2), 0.5 * np.eye(2)])
    Q = dz.Gaussian([1.0, -1.0], [[1.0, 0.2], [0.2, 1.0]])
    a, b = chi2_distance(P, Q).value, chi2_distance(Q, P).value
    assert 0.0 <= a <= 2.0
    assert a == b


def test_squared_variant_consistent():
    P, Q = gauss1(0.0), gauss1(1.0)
    assert chi2_squared(P, Q).value == pytest.approx(chi2_distance(P, Q).value ** 2, rel=1e-12)


def test_nonconverged_on_coarse_grid_with_tight_tolerance():
    P, Q = dz.Ring(8, 2.0, 0.02), dz.Gaussian([0.0, 0.0], np.eye(2))
    with pytest.raises(NonConverged) as info:
        chi2_distance(P, Q, QuadratureConfig(points_per_axis=16, tol=1e-6))
    assert info.value.error_estimate > 1e-6


def test_trapezoid_scheme_agrees():
    P, Q = gauss1(0.0), gauss1(2.0)
    t = chi2_distance(P, Q, QuadratureConfig(scheme="trapezoid")).value
    assert t == pytest.approx(chi2_distance(P, Q).value, abs=1e-6)


@pytest.mark.parametrize("kw", [dict(scheme="simpson"), dict(points_per_axis=8),
                                dict(refinement_factor=1), dict(bounds=[(1.0, 0.0)])])
def test_quadrature_config_validation(kw):
    with pytest.raises(ConfigError):
        QuadratureConfig(**kw)


def test_dimension_checks():
    with pytest.raises(ConfigError):
        chi2_distance(gauss1(0.0), dz.Gaussian([0.0, 0.0], np.eye(2)))
    with pytest.raises(ConfigError):
        chi2_distance(dz.Gaussian(np.zeros(5), np.eye(5)), dz.Gaussian(np.ones(5), np.eye(5)))


# --- optimal critic -----------------------------------------------------------


def test_optimal_critic_on_disjoint_uniforms():
    f = optimal_critic(U01, U23, 2.0, np.array([[0.5], [2.5]]))
    assert np.allclose(f, [1.0, -1.0])


def test_optimal_critic_midpoint_and_antisymmetry():
    d = 1.7
    P, Q = gauss1(0.0), gauss1(d)
    chi = chi2_distance(P, Q).value
    assert optimal_critic(P, Q, chi, np.array([d / 2])) == pytest.approx(0.0, abs=1e-15)
    t = np.linspace(0.1, 3, 7)[:, None]
    assert np.allclose(optimal_critic(P, Q, chi, d / 2 + t), -optimal_critic(P, Q, chi, d / 2 - t))


def test_optimal_critic_flags_underflow():
    P, Q = gauss1(0.0), gauss1(1.0)
    vals, flags = optimal_critic(P, Q, 0.9, np.array([[0.0], [100.0]]), return_flags=True)
    assert flags.tolist() == [False, True] and vals[1] == 0.0


def test_optimal_critic_degenerate():
    with pytest.raises(DegenerateDistance):
        optimal_critic(U01, U01, 0.0, np.array([0.5]))


def test_optimal_critic_feasible_and_attains_distance():
    P = dz.Gaussian([0.0, 0.0], np.eye(2))
    Q = dz.gaussian_mixture([0.5, 0.5], [[1.5, 0.0], [-1.0, 1.0]], [np.eye(2), 0.7 * np.eye(2)])
    chi = chi2_distance(P, Q).value
    m = critic_moments(P, Q, lambda x: optimal_critic(P, Q, chi, x))
    assert m.omega == pytest.approx(1.0, abs=1e-3)
    assert m.ratio == pytest.approx(chi, abs=1e-3)


# --- Pearson / Neyman -------------------------------------------------------------


def test_pearson_zero_and_closed_form():
    assert pearson_divergence(gauss1(0.0), gauss1(0.0)).value == pytest.approx(0.0, abs=1e-12)
    # unit-variance Gaussians: exp(delta^2) - 1
    assert pearson_divergence(gauss1(0.0), gauss1(1.0)).value == pytest.approx(math.e - 1, abs=1e-6)


def test_pearson_closed_form_against_monte_carlo():
    # E_Q[(P/Q - 1)^2] by sampling Q, independent of the grid
    P, Q = gauss1(0.0), gauss1(1.0)
    x = Q.sample(10**6, 5)
    r = (P.pdf(x) / Q.pdf(x) - 1.0) ** 2
    assert abs(r.mean() - (math.e - 1)) <= 4 * r.std() / math.sqrt(r.size)


def test_neyman_is_swapped_pearson():
    P, Q = gauss1(0.0, 1.0), gauss1(0.5, 1.5)
    assert neyman_divergence(P, Q).value == pearson_divergence(Q, P).value
    assert neyman_divergence(P, P).value == pytest.approx(0.0, abs=1e-12)


def test_disjoint_support_divergences_unbounded():
    with pytest.raises((UnboundedIntegrand, NonConverged)):
        neyman_divergence(U01, U23)
    with pytest.raises((UnboundedIntegrand, NonConverged)):
        pearson_divergence(U01, U23)


def test_pearson_midpoint_identity():
    # P - (P+Q)/2 = (P-Q)/2, so Pearson(P, (P+Q)/2) = chi2^2 / 4
    P, Q = gauss1(0.0), gauss1(2.0, 0.5)
    chi = chi2_distance(P, Q).value
    pear = pearson_divergence(P, dz.mix(P, Q)).value
    assert pear == pytest.approx(0.25 * chi**2, rel=1e-3)


# --- linear closed form ---------------------------------------------------------------


def test_linear_fisher_ipm_hand_value():
    val, v = linear_fisher_ipm(np.array([1.0, 3.0]), np.array([-1.0, -3.0]), 0.0)
    assert val == pytest.approx(4 / math.sqrt(5), abs=1e-12)
    assert v @ (5.0 * v) == pytest.approx(1.0)


def test_linear_fisher_ipm_equal_means_zero(rng):
    F = rng.normal(size=(50, 3))
    val, _ = linear_fisher_ipm(F, F[::-1], 0.1)
    assert val == pytest.approx(0.0, abs=1e-12)


def test_linear_fisher_ipm_scale_invariant(rng):
    FP, FQ = rng.normal(0.3, 1, (200, 4)), rng.normal(0, 1, (200, 4))
    assert linear_fisher_ipm(7.5 * FP, 7.5 * FQ, 0.0)[0] == pytest.approx(
        linear_fisher_ipm(FP, FQ, 0.0)[0], rel=1e-12)


def test_linear_fisher_ipm_is_supremum(rng):
    FP, FQ = rng.normal(0.3, 1, (300, 5)), rng.normal(-0.2, 1.3, (300, 5))
    val, v = linear_fisher_ipm(FP, FQ, 0.05)
    dirs = rng.normal(size=(10**4, 5))
    rq = rayleigh_quotient(dirs, FP, FQ, 0.05)
    assert np.max(rq) <= val + 1e-9
    assert rayleigh_quotient(v, FP, FQ, 0.05)[0] == pytest.approx(val, rel=1e-12)


def test_linear_fisher_ipm_rejects_negative_gamma():
    with pytest.raises(ConfigError):
        linear_fisher_ipm(np.ones((2, 1)), np.zeros((2, 1)), -1.0)


def test_effective_dimension():
    s = np.ones(6)
    assert effective_dimension(s, 0.0) == 6
    assert effective_dimension(s, 1.0) == 3
    assert effective_dimension(s, np.inf) == 0.0
    assert effective_dimension(s, 1e12) < 1e-10


@given(st.floats(0.0, 5.0), st.floats(0.3, 3.0))
@settings(max_examples=15, deadline=None)
def test_chi2_range_property(shift, scale):
    P, Q = gauss1(0.0), gauss1(shift, scale**2)
    v = chi2_distance(P, Q, QuadratureConfig(tol=1e-2)).value
    assert 0.0 <= v <= 2.0 + 1e-9

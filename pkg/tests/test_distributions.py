import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fisheripm import distributions as dz
from fisheripm.errors import ConfigError
from fisheripm.metrics import mode_coverage
from fisheripm.oracle import QuadratureConfig, _grid


def all_variants():
    return [
        dz.Gaussian([0.5, -1.0], [[1.0, 0.3], [0.3, 0.5]]),
        dz.UniformBox([0.0, -1.0], [2.0, 1.0]),
        dz.gaussian_mixture([0.2, 0.8], [[0.0], [3.0]], [[[1.0]], [[0.25]]]),
        dz.Ring(8, 2.0, 0.1),
        dz.three_class_mixture(),
    ]


def test_standard_normal_density_at_zero():
    assert dz.Gaussian([0.0], [[1.0]]).pdf([0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)


def test_uniform_outside_support_is_zero():
    assert dz.UniformBox([0.0], [1.0]).pdf([2.0]) == 0.0


def test_symmetric_mixture_matches_component_at_origin():
    m = dz.gaussian_mixture([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]])
    assert m.pdf([0.0]) == pytest.approx(dz.Gaussian([1.0], [[1.0]]).pdf([0.0]), rel=1e-15)


def test_sample_mean_clt_bound():
    x = dz.Gaussian([0.0], [[1.0]]).sample(10**5, seed=3)
    assert abs(x.mean()) < 4 / math.sqrt(10**5)


def test_ring_every_mode_nonempty():
    ring = dz.Ring(8, 2.0, 0.02)
    cov = mode_coverage(ring.sample(8000, seed=0), ring.centers)
    assert np.all(cov > 0)


@pytest.mark.parametrize("spec", all_variants(), ids=lambda s: s.variant)
def test_sampling_is_deterministic(spec):
    assert np.array_equal(spec.sample(100, 7), spec.sample(100, 7))
    assert not np.array_equal(spec.sample(100, 7), spec.sample(100, 8))


@pytest.mark.parametrize("spec", all_variants(), ids=lambda s: s.variant)
def test_density_integrates_to_one(spec):
    lo, hi = spec.truncation_box()
    n = 2048 if spec.dim == 1 else 512
    pts, w = _grid(spec, spec, list(zip(lo, hi)), n, "gauss-legendre")
    assert np.sum(spec.pdf(pts) * w) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("spec", all_variants(), ids=lambda s: s.variant)
def test_json_roundtrip(spec):
    back = dz.from_json(spec.to_json())
    assert back == spec
    x = spec.sample(50, 1)
    assert np.array_equal(back.pdf(x), spec.pdf(x))


@pytest.mark.parametrize("spec", all_variants()[:3], ids=lambda s: s.variant)
def test_moment_convergence_rate(spec):
    ns = [10**3, 10**4, 10**5]
    errs = []
    for n in ns:
        e = []
        for seed in range(20):
            x = spec.sample(n, seed)
            e.append(np.linalg.norm(x.mean(axis=0) - spec.mean())
                     + np.linalg.norm(np.atleast_2d(np.cov(x.T)) - spec.covariance()))
        errs.append(np.mean(e))
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert -0.65 <= slope <= -0.35


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2))
@settings(max_examples=50, deadline=None)
def test_density_finite_nonnegative(x):
    for spec in all_variants():
        if spec.dim == 2:
            v = spec.pdf(np.array(x))
            assert np.isfinite(v) and v >= 0


@pytest.mark.parametrize("bad", [
    lambda: dz.Gaussian([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]),
    lambda: dz.Gaussian([0.0, 0.0], [[1.0, 0.1], [0.0, 1.0]]),
    lambda: dz.UniformBox([0.0], [0.0]),
    lambda: dz.gaussian_mixture([0.5, 0.6], [[0.0], [1.0]], [[[1.0]], [[1.0]]]),
    lambda: dz.GaussianMixture([0.5, 0.5], [dz.Gaussian([0.0], 1.0), dz.Gaussian([0.0, 0.0], np.eye(2))]),
    lambda: dz.Ring(8, -1.0, 0.1),
])
def test_invalid_specs_rejected(bad):
    with pytest.raises(ConfigError):
        bad()


def test_sample_needs_positive_n():
    with pytest.raises(ConfigError):
        dz.Gaussian([0.0], 1.0).sample(0, 1)


def test_labeled_mixture_sampling_and_bayes():
    lm = dz.three_class_mixture()
    X, y = lm.sample_labeled(3000, 0)
    assert X.shape == (3000, 2) and set(np.unique(y)) == {0, 1, 2}
    assert np.mean(lm.bayes_predict(X) == y) > 0.99
    assert np.allclose(lm.pdf(X), sum(w * c.pdf(X) for w, c in zip(lm.prior, lm.classes)))


def test_shared_covariance_fast_path_matches_generic():
    means = np.random.default_rng(0).normal(size=(30, 2))
    cov = [[0.3, 0.1], [0.1, 0.2]]
    fast = dz.GaussianMixture.shared_covariance(means, cov)
    x = np.random.default_rng(1).normal(size=(100, 2))
    slow = sum(w * c.pdf(x) for w, c in zip(fast.weights, fast.components))
    assert np.allclose(fast.pdf(x), slow, rtol=1e-12, atol=0)

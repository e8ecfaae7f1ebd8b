"""Exact reference computations for pairs of analytic distributions.

Everything here is computed in float64 from densities, never from a trained
model: the symmetric chi-squared distance by tensor-grid quadrature (with a
refinement error estimate) and by Monte Carlo, the full-capacity optimal
critic, Pearson and Neyman divergences, the closed-form Fisher IPM of a linear
critic on fixed features, and the effective-dimension diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .distributions import Distribution, mix
from .errors import (
    ConfigError,
    DegenerateDistance,
    NonConverged,
    SingularCovariance,
    UnboundedIntegrand,
)
from .rng import as_generator

DENSITY_FLOOR = 1e-300
OVERFLOW_THRESHOLD = 1e300
DEFAULT_POINTS = {1: 2048, 2: 512, 3: 64, 4: 32}
MAX_DIM = 4
_GL_ORDER = 8


@dataclass
class QuadratureConfig:
    """Tensor-grid quadrature settings.

    ``bounds`` defaults to the union of both distributions' truncation boxes
    and ``points_per_axis`` to a per-dimension default (2048 in 1D, 512 in 2D).
    The integral is computed at ``points_per_axis`` and again at
    ``refinement_factor`` times that; their difference is the error estimate.
    """

    bounds: Optional[list] = None
    points_per_axis: Optional[int] = None
    scheme: str = "gauss-legendre"
    refinement_factor: int = 2
    tol: float = 1e-3

    def __post_init__(self):
        if self.scheme not in ("trapezoid", "gauss-legendre"):
            raise ConfigError(f"unknown quadrature scheme {self.scheme!r}")
        if self.points_per_axis is not None and self.points_per_axis < 16:
            raise ConfigError("points_per_axis must be >= 16")
        if self.refinement_factor < 2:
            raise ConfigError("refinement_factor must be >= 2")
        if self.bounds is not None:
            for lo, hi in self.bounds:
                if not lo < hi:
                    raise ConfigError("quadrature bounds need lo < hi on every axis")

    def to_dict(self):
        return {
            "bounds": None if self.bounds is None else [list(map(float, b)) for b in self.bounds],
            "points_per_axis": self.points_per_axis,
            "scheme": self.scheme,
            "refinement_factor": self.refinement_factor,
            "tol": self.tol,
        }


class QuadResult(NamedTuple):
    value: float
    error_estimate: float
    points_per_axis: int


class MonteCarloResult(NamedTuple):
    """Monte Carlo estimate of chi2 and of chi2 squared, with standard errors."""

    value: float
    stderr: float
    squared: float
    squared_stderr: float
    n: int


def _check_pair(P, Q):
    if P.dim != Q.dim:
        raise ConfigError("P and Q must live in the same dimension")
    if P.dim > MAX_DIM:
        raise ConfigError(f"quadrature oracle supports d <= {MAX_DIM}")


def _segments(lo, hi, cuts):
    inner = np.sort(cuts[(cuts > lo) & (cuts < hi)])
    edges = np.concatenate([[lo], inner, [hi]])
    return edges[:-1], edges[1:]


def _axis_rule(lo, hi, cuts, n, scheme):
    """Nodes and weights on one axis, split at density discontinuities."""
    a, b = _segments(lo, hi, cuts)
    lengths = b - a
    if scheme == "gauss-legendre":
        panels = max(len(a), n // _GL_ORDER)
        per = np.maximum(1, np.round(panels * lengths / lengths.sum()).astype(int))
        x0, w0 = np.polynomial.legendre.leggauss(_GL_ORDER)
        nodes, weights = [], []
        for s, e, k in zip(a, b, per):
            edges = np.linspace(s, e, k + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[:-1] + edges[1:])
            nodes.append((mid[:, None] + half[:, None] * x0[None, :]).ravel())
            weights.append((half[:, None] * w0[None, :]).ravel())
        return np.concatenate(nodes), np.concatenate(weights)
    per = np.maximum(2, np.round(n * lengths / lengths.sum()).astype(int))
    nodes, weights = [], []
    for s, e, k in zip(a, b, per):
        x = np.linspace(s, e, k)
        w = np.full(k, (e - s) / (k - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _resolve(P, Q, quad):
    quad = quad or QuadratureConfig()
    d = P.dim
    if quad.bounds is None:
        lp, hp = P.truncation_box()
        lq, hq = Q.truncation_box()
        bounds = list(zip(np.minimum(lp, lq), np.maximum(hp, hq)))
    else:
        bounds = [tuple(b) for b in quad.bounds]
        if len(bounds) != d:
            raise ConfigError("quadrature bounds must have one (lo, hi) per axis")
    n = quad.points_per_axis or DEFAULT_POINTS[d]
    return quad, bounds, n


def _grid(P, Q, bounds, n, scheme):
    """Tensor-product nodes ``(n_pts, d)`` and weights ``(n_pts,)``."""
    cp, cq = P.breakpoints(), Q.breakpoints()
    rules = [
        _axis_rule(lo, hi, np.concatenate([cp[i], cq[i]]), n, scheme)
        for i, (lo, hi) in enumerate(bounds)
    ]
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    return pts, np.prod(np.stack([m.ravel() for m in wmesh]), axis=0)


def _grid_integral(P, Q, bounds, n, scheme, integrand):
    pts, w = _grid(P, Q, bounds, n, scheme)
    vals = integrand(P.pdf(pts), Q.pdf(pts))
    # contiguous 1-D np.sum is a fixed pairwise tree: bit-reproducible
    return float(np.sum(np.ascontiguousarray(vals * w)))


def _refined(P, Q, quad, integrand, transform=lambda v: v):
    quad, bounds, n = _resolve(P, Q, quad)
    coarse = transform(_grid_integral(P, Q, bounds, n, quad.scheme, integrand))
    n_fine = n * quad.refinement_factor
    fine = transform(_grid_integral(P, Q, bounds, n_fine, quad.scheme, integrand))
    err = abs(fine - coarse)
    if err > quad.tol:
        raise NonConverged(
            f"refinement error {err:.3g} exceeds tolerance {quad.tol:g}", fine, err
        )
    return QuadResult(fine, err, n_fine)


def _chi2_integrand(p, q):
    s = p + q
    out = np.zeros_like(s)
    ok = s >= DENSITY_FLOOR
    diff = p[ok] - q[ok]
    out[ok] = 2.0 * diff * diff / s[ok]
    return out


def chi2_distance(P: Distribution, Q: Distribution, quad: QuadratureConfig = None) -> QuadResult:
    """Symmetric chi-squared distance ``sqrt(int (P-Q)^2 / ((P+Q)/2))``.

    Raises :class:`NonConverged` when the coarse and refined grids disagree by
    more than ``quad.tol``.
    """
    _check_pair(P, Q)
    return _refined(P, Q, quad, _chi2_integrand, lambda v: float(np.sqrt(max(v, 0.0))))


def chi2_squared(P, Q, quad=None) -> QuadResult:
    """Same integral as :func:`chi2_distance` without the square root."""
    _check_pair(P, Q)
    return _refined(P, Q, quad, _chi2_integrand)


def _pearson_integrand(p, q):
    out = np.zeros_like(p)
    live = (p >= DENSITY_FLOOR) | (q >= DENSITY_FLOOR)
    if np.any(live & (q < DENSITY_FLOOR)):
        raise UnboundedIntegrand("reference density vanishes where the other does not")
    diff = p[live] - q[live]
    out[live] = diff * diff / q[live]
    if not np.all(np.isfinite(out)) or out.max(initial=0.0) > OVERFLOW_THRESHOLD:
        raise UnboundedIntegrand("integrand exceeds the overflow threshold on the grid")
    return out


def pearson_divergence(P, Q, quad=None) -> QuadResult:
    """Pearson divergence ``int (P-Q)^2 / Q``."""
    _check_pair(P, Q)
    return _refined(P, Q, quad, _pearson_integrand)


def neyman_divergence(P, Q, quad=None) -> QuadResult:
    """Neyman divergence ``int (P-Q)^2 / P``, i.e. Pearson with roles swapped."""
    return pearson_divergence(Q, P, quad)


def chi2_monte_carlo(P, Q, n=10**7, seed=0, chunk=10**6) -> MonteCarloResult:
    """Independent Monte Carlo estimate of the chi-squared distance.

    Uses ``chi2^2 = E_{x ~ (P+Q)/2} [(2 (P-Q) / (P+Q))^2]`` with i.i.d. draws
    from the midpoint mixture. The standard error of ``chi2`` follows from the
    delta method.
    """
    _check_pair(P, Q)
    rng = as_generator(seed)
    M = mix(P, Q)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        x = M._draw(m, rng)
        p, q = P.pdf(x), Q.pdf(x)
        s = p + q
        r = np.where(s > 0, 2.0 * (p - q) / np.where(s > 0, s, 1.0), 0.0)
        w = r * r
        total += w.sum()
        total_sq += (w * w).sum()
        done += m
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    se_sq = np.sqrt(var / n)
    chi = np.sqrt(mean)
    se = se_sq / (2 * chi) if chi > 0 else se_sq
    return MonteCarloResult(float(chi), float(se), float(mean), float(se_sq), int(n))


def optimal_critic(P, Q, chi2, x, tol=1e-12, return_flags=False):
    """Full-capacity optimal critic ``(P - Q) / ((P + Q) / 2) / chi2`` at ``x``.

    Points where ``P + Q`` underflows get the value 0; pass
    ``return_flags=True`` to also receive a boolean mask of those points.
    """
    chi2 = float(chi2)
    if chi2 <= tol:
        raise DegenerateDistance("optimal critic needs P != Q (chi2 > 0)")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    p, q = P.pdf(pts), Q.pdf(pts)
    s = p + q
    flags = s < DENSITY_FLOOR
    vals = np.where(flags, 0.0, 2.0 * (p - q) / np.where(flags, 1.0, s)) / chi2
    if single:
        vals, flags = vals[0], flags[0]
    return (vals, flags) if return_flags else vals


@dataclass
class CriticMoments:
    """Population mean difference and pooled second moment of a critic."""

    mean_diff: float
    omega: float
    ratio: float = field(init=False)

    def __post_init__(self):
        self.ratio = 0.0 if self.omega <= 0 else self.mean_diff / np.sqrt(self.omega)


def critic_moments(P, Q, critic, quad=None) -> CriticMoments:
    """Integrate ``E_P f - E_Q f`` and ``(E_P f^2 + E_Q f^2) / 2`` on the grid.

    ``critic`` maps an ``(n, d)`` array to ``n`` values. The grid is the finer
    of the two refinement levels.
    """
    _check_pair(P, Q)
    quad, bounds, n = _resolve(P, Q, quad)
    pts, w = _grid(P, Q, bounds, n * quad.refinement_factor, quad.scheme)
    f = np.asarray(critic(pts), dtype=np.float64).ravel()
    p, q = P.pdf(pts), Q.pdf(pts)
    mean_diff = float(np.sum(f * (p - q) * w))
    omega = float(np.sum(f * f * 0.5 * (p + q) * w))
    return CriticMoments(mean_diff, omega)


def _as_features(feat):
    feat = np.asarray(feat, dtype=np.float64)
    return feat.reshape(-1, 1) if feat.ndim == 1 else feat


def _second_moment(feat):
    return feat.T @ feat / feat.shape[0]


def pooled_second_moment(featP, featQ, gamma):
    """``Sigma = Sigma(P)/2 + Sigma(Q)/2 + gamma I`` with uncentered Gramians."""
    featP, featQ = _as_features(featP), _as_features(featQ)
    if featP.shape[1] != featQ.shape[1]:
        raise ConfigError("feature matrices must have the same number of columns")
    m = featP.shape[1]
    return 0.5 * _second_moment(featP) + 0.5 * _second_moment(featQ) + gamma * np.eye(m)


def rayleigh_quotient(v, featP, featQ, gamma):
    """``<v, mu_P - mu_Q> / sqrt(v' Sigma v)`` for one or many directions (rows of v)."""
    featP, featQ = _as_features(featP), _as_features(featQ)
    sigma = pooled_second_moment(featP, featQ, gamma)
    delta = featP.mean(axis=0) - featQ.mean(axis=0)
    v = np.atleast_2d(v)
    num = v @ delta
    den = np.sqrt(np.einsum("ij,jk,ik->i", v, sigma, v))
    return num / den


def linear_fisher_ipm(featP, featQ, gamma):
    """Closed-form Fisher IPM of the linear critic ``f = <v, phi>`` on fixed features.

    Returns ``(value, v_star)`` where ``value = ||Sigma^{-1/2} (mu_P - mu_Q)||``
    and ``v_star = Sigma^{-1} (mu_P - mu_Q)`` scaled to ``v' Sigma v = 1``.
    """
    if gamma < 0:
        raise ConfigError("gamma must be >= 0")
    featP, featQ = _as_features(featP), _as_features(featQ)
    sigma = pooled_second_moment(featP, featQ, gamma)
    delta = featP.mean(axis=0) - featQ.mean(axis=0)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("pooled feature covariance is not positive definite") from exc
    white = np.linalg.solve(chol, delta)
    value = float(np.sqrt(white @ white))
    if value == 0.0:
        v = np.zeros_like(delta)
        v[0] = 1.0 / np.sqrt(sigma[0, 0])
        return 0.0, v
    v = np.linalg.solve(chol.T, white) / value
    return value, v


def effective_dimension(singular_values, gamma):
    """``sum_j s_j^2 / (s_j^2 + gamma)``; tends to 0 as gamma grows."""
    s = np.asarray(singular_values, dtype=np.float64)
    if np.any(s < 0):
        raise ConfigError("singular values must be non-negative")
    if gamma < 0:
        raise ConfigError("gamma must be >= 0")
    if np.isinf(gamma):
        return 0.0
    s2 = s * s
    den = s2 + gamma
    return float(np.sum(np.where(den > 0, s2 / np.where(den > 0, den, 1.0), 0.0)))

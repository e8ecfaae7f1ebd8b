"""Analytic synthetic distributions with exact densities and seeded samplers.

These are the ground truth for every oracle computation: each variant knows
its density in closed form, its first two moments, a truncation box holding
all but a negligible amount of its mass, and how to (de)serialize itself to a
JSON object tagged with a ``"variant"`` field.

Example
-------
>>> p = Gaussian([0.0], [[1.0]])
>>> round(float(p.pdf([0.0])), 6)
0.398942
"""

from __future__ import annotations

import copy
import json
import math

import numpy as np

from .errors import ConfigError
from .rng import as_generator

#: number of standard deviations kept on each side of a Gaussian component
TRUNCATION_SIGMAS = 8.0
_WEIGHT_TOL = 1e-12


def _as_points(x, dim):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ConfigError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return x, single


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.shape != (n,):
        raise ConfigError(f"need {n} weights, got {w.shape[0]}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > _WEIGHT_TOL:
        raise ConfigError("mixture weights must be non-negative and sum to 1")
    return w


class Distribution:
    """Common interface. Subclasses implement ``pdf``, ``_draw`` and friends."""

    variant = "abstract"
    dim: int

    def pdf(self, x):
        raise NotImplementedError

    def sample(self, n, seed):
        """Draw ``n`` i.i.d. rows. The same ``seed`` always gives the same array."""
        if int(n) < 1:
            raise ConfigError("n must be >= 1")
        return self._draw(int(n), as_generator(seed))

    def _draw(self, n, rng):
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def covariance(self):
        raise NotImplementedError

    def truncation_box(self):
        """Per-axis ``(lo, hi)`` arrays enclosing essentially all mass."""
        raise NotImplementedError

    def breakpoints(self):
        """Per-axis coordinates where the density may be discontinuous."""
        return [np.empty(0) for _ in range(self.dim)]

    def to_dict(self):
        raise NotImplementedError

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()})"


class Gaussian(Distribution):
    variant = "Gaussian"

    def __init__(self, mean, cov):
        self.mu = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        if self.mu.ndim != 1:
            raise ConfigError("mean must be a vector")
        self.dim = self.mu.shape[0]
        cov = np.asarray(cov, dtype=np.float64)
        if cov.ndim == 0:
            cov = cov * np.eye(self.dim)
        if cov.shape != (self.dim, self.dim):
            raise ConfigError(f"cov must be {self.dim}x{self.dim}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ConfigError("covariance must be symmetric")
        try:
            self.chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("covariance must be positive definite") from exc
        self.cov = cov
        self._log_norm = -0.5 * self.dim * math.log(2 * math.pi) - np.log(np.diag(self.chol)).sum()

    def logpdf(self, x):
        x, single = _as_points(x, self.dim)
        z = np.linalg.solve(self.chol, (x - self.mu).T)
        out = self._log_norm - 0.5 * np.einsum("ij,ij->j", z, z)
        return out[0] if single else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def _draw(self, n, rng):
        return self.mu + rng.standard_normal((n, self.dim)) @ self.chol.T

    def mean(self):
        return self.mu.copy()

    def covariance(self):
        return self.cov.copy()

    def truncation_box(self):
        half = TRUNCATION_SIGMAS * np.sqrt(np.diag(self.cov))
        return self.mu - half, self.mu + half

    def to_dict(self):
        return {"variant": self.variant, "mean": self.mu.tolist(), "cov": self.cov.tolist()}


class UniformBox(Distribution):
    variant = "UniformBox"

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ConfigError("lo and hi must be vectors of equal length")
        if not np.all(self.lo < self.hi):
            raise ConfigError("UniformBox needs lo < hi elementwise")
        self.dim = self.lo.shape[0]
        self._density = 1.0 / np.prod(self.hi - self.lo)

    def pdf(self, x):
        x, single = _as_points(x, self.dim)
        inside = np.all((x >= self.lo) & (x <= self.hi), axis=1)
        out = np.where(inside, self._density, 0.0)
        return out[0] if single else out

    def _draw(self, n, rng):
        return self.lo + (self.hi - self.lo) * rng.random((n, self.dim))

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def covariance(self):
        return np.diag((self.hi - self.lo) ** 2 / 12.0)

    def truncation_box(self):
        return self.lo.copy(), self.hi.copy()

    def breakpoints(self):
        return [np.array([self.lo[i], self.hi[i]]) for i in range(self.dim)]

    def to_dict(self):
        return {"variant": self.variant, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Mixture(Distribution):
    """Convex combination of arbitrary component distributions."""

    variant = "Mixture"

    def __init__(self, weights, components):
        components = list(components)
        if not components:
            raise ConfigError("a mixture needs at least one component")
        self.weights = _check_weights(weights, len(components))
        self.components = components
        self.dim = components[0].dim
        if any(c.dim != self.dim for c in components):
            raise ConfigError("all mixture components must share one dimension")

    def pdf(self, x):
        x, single = _as_points(x, self.dim)
        out = np.zeros(x.shape[0])
        for w, c in zip(self.weights, self.components):
            if w > 0:
                out += w * c.pdf(x)
        return out[0] if single else out

    def _draw(self, n, rng):
        idx = rng.choice(len(self.components), size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for k, c in enumerate(self.components):
            rows = np.flatnonzero(idx == k)
            if rows.size:
                out[rows] = c._draw(rows.size, rng)
        return out

    def mean(self):
        return sum(w * c.mean() for w, c in zip(self.weights, self.components))

    def covariance(self):
        mu = self.mean()
        second = sum(
            w * (c.covariance() + np.outer(c.mean(), c.mean()))
            for w, c in zip(self.weights, self.components)
        )
        return second - np.outer(mu, mu)

    def truncation_box(self):
        boxes = [c.truncation_box() for w, c in zip(self.weights, self.components) if w > 0]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def breakpoints(self):
        per = [c.breakpoints() for c in self.components]
        return [np.unique(np.concatenate([p[i] for p in per])) for i in range(self.dim)]

    def to_dict(self):
        return {
            "variant": self.variant,
            "weights": self.weights.tolist(),
            "components": [c.to_dict() for c in self.components],
        }


class GaussianMixture(Mixture):
    """Mixture whose components are all :class:`Gaussian`.

    Mixtures with one shared covariance (kernel density estimates, rings)
    get a vectorized density path, so thousands of components stay cheap.
    """

    variant = "GaussianMixture"

    def __init__(self, weights, components):
        components = list(components)
        if not all(isinstance(c, Gaussian) for c in components):
            raise ConfigError("GaussianMixture components must be Gaussian")
        super().__init__(weights, components)
        self._means = np.stack([c.mu for c in components])
        cov0 = components[0].cov
        self._shared = all(np.array_equal(c.cov, cov0) for c in components)

    @classmethod
    def shared_covariance(cls, means, cov, weights=None):
        """Equal-covariance mixture (e.g. a Gaussian KDE) built without per-component factorizations."""
        means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        base = Gaussian(means[0], cov)
        comps = []
        for mu in means:
            g = copy.copy(base)
            g.mu = mu
            comps.append(g)
        if weights is None:
            weights = np.full(len(comps), 1.0 / len(comps))
            weights[-1] = 1.0 - weights[:-1].sum()
        return cls(weights, comps)

    @property
    def means(self):
        return self._means.copy()

    def pdf(self, x):
        if not self._shared:
            return super().pdf(x)
        x, single = _as_points(x, self.dim)
        c0 = self.components[0]
        zm = np.linalg.solve(c0.chol, self._means.T).T  # (K, d)
        out = np.empty(x.shape[0])
        # 2**22 kernel evaluations per chunk
        step = max(1, (1 << 22) // len(self.components))
        for s in range(0, x.shape[0], step):
            zx = np.linalg.solve(c0.chol, x[s : s + step].T).T
            sq = (
                np.einsum("ij,ij->i", zx, zx)[:, None]
                + np.einsum("ij,ij->i", zm, zm)[None, :]
                - 2.0 * zx @ zm.T
            )
            np.maximum(sq, 0.0, out=sq)
            out[s : s + step] = np.exp(c0._log_norm - 0.5 * sq) @ self.weights
        return out[0] if single else out

    def _draw(self, n, rng):
        if not self._shared:
            return super()._draw(n, rng)
        idx = rng.choice(len(self.components), size=n, p=self.weights)
        return self._means[idx] + rng.standard_normal((n, self.dim)) @ self.components[0].chol.T


class Ring(GaussianMixture):
    """``k`` equal-weight isotropic Gaussians at angles ``2*pi*j/k`` on a circle."""

    variant = "Ring"

    def __init__(self, k=8, radius=2.0, sigma=0.02):
        if int(k) < 1 or radius <= 0 or sigma <= 0:
            raise ConfigError("Ring needs k >= 1, radius > 0, sigma > 0")
        self.k, self.radius, self.sigma = int(k), float(radius), float(sigma)
        angles = 2.0 * np.pi * np.arange(self.k) / self.k
        centers = self.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        comps = [Gaussian(c, self.sigma**2 * np.eye(2)) for c in centers]
        super().__init__(np.full(self.k, 1.0 / self.k), comps)

    @property
    def centers(self):
        return self.means

    def to_dict(self):
        return {"variant": self.variant, "k": self.k, "radius": self.radius, "sigma": self.sigma}


class LabeledMixture(Mixture):
    """Class-conditional mixtures with a class prior; the marginal is a mixture.

    Labels are the integers ``0..K-1`` in the order given.
    """

    variant = "LabeledMixture"

    def __init__(self, classes, prior=None):
        if isinstance(classes, dict):
            keys = sorted(classes, key=lambda k: int(k))
            if [int(k) for k in keys] != list(range(len(keys))):
                raise ConfigError("class labels must be 0..K-1")
            classes = [classes[k] for k in keys]
        self.classes = list(classes)
        if len(self.classes) < 2:
            raise ConfigError("need at least two classes")
        if not all(isinstance(c, GaussianMixture) for c in self.classes):
            raise ConfigError("each class must be a GaussianMixture")
        if prior is None:
            prior = np.full(len(self.classes), 1.0 / len(self.classes))
        super().__init__(prior, self.classes)

    @property
    def n_classes(self):
        return len(self.classes)

    @property
    def prior(self):
        return self.weights

    def class_pdf(self, x, label):
        return self.classes[int(label)].pdf(x)

    def sample_labeled(self, n, seed):
        """Return ``(X, y)`` with ``y ~ prior`` and ``X | y`` from the class mixture."""
        rng = as_generator(seed)
        y = rng.choice(self.n_classes, size=int(n), p=self.weights)
        X = np.empty((int(n), self.dim))
        for k, c in enumerate(self.classes):
            rows = np.flatnonzero(y == k)
            if rows.size:
                X[rows] = c._draw(rows.size, rng)
        return X, y

    def sample_class(self, label, n, seed):
        return self.classes[int(label)].sample(n, seed)

    def bayes_predict(self, x):
        """Bayes-optimal label under the true class densities."""
        x, _ = _as_points(x, self.dim)
        scores = np.stack([w * c.pdf(x) for w, c in zip(self.weights, self.classes)], axis=1)
        return np.argmax(scores, axis=1)

    def to_dict(self):
        return {
            "variant": self.variant,
            "prior": self.weights.tolist(),
            "classes": {str(i): c.to_dict() for i, c in enumerate(self.classes)},
        }


def gaussian_mixture(weights, means, covs):
    """Convenience constructor from parallel lists of means and covariances."""
    return GaussianMixture(weights, [Gaussian(m, c) for m, c in zip(means, covs)])


def mix(p, q, weight=0.5):
    """The mixture ``weight * p + (1 - weight) * q``."""
    if isinstance(p, Gaussian) and isinstance(q, Gaussian):
        return GaussianMixture([weight, 1.0 - weight], [p, q])
    return Mixture([weight, 1.0 - weight], [p, q])


def from_dict(data):
    """Inverse of ``to_dict`` for every variant."""
    if isinstance(data, Distribution):
        return data
    kind = data.get("variant")
    if kind == "Gaussian":
        return Gaussian(data["mean"], data["cov"])
    if kind == "UniformBox":
        return UniformBox(data["lo"], data["hi"])
    if kind == "Ring":
        return Ring(data.get("k", 8), data.get("radius", 2.0), data.get("sigma", 0.02))
    if kind == "GaussianMixture":
        return GaussianMixture(data["weights"], [from_dict(c) for c in data["components"]])
    if kind == "Mixture":
        return Mixture(data["weights"], [from_dict(c) for c in data["components"]])
    if kind == "LabeledMixture":
        classes = {k: from_dict(v) for k, v in data["classes"].items()}
        return LabeledMixture(classes, data.get("prior"))
    raise ConfigError(f"unknown distribution variant {kind!r}")


def from_json(text):
    return from_dict(json.loads(text))


def sample(spec, n, seed):
    return spec.sample(n, seed)


def density(spec, x):
    return spec.pdf(x)


def shifted_gaussians(shift, dim=2, scale=1.0):
    """Shifted pair: ``N(0, s^2 I)`` and the same Gaussian moved by ``shift`` along axis 0."""
    mu = np.zeros(dim)
    p = Gaussian(mu, scale**2 * np.eye(dim))
    mu_q = mu.copy()
    mu_q[0] = shift
    return p, Gaussian(mu_q, scale**2 * np.eye(dim))


def three_class_mixture(separation=4.0, sigma=0.5):
    """Well-separated 3-class 2D mixture used by the semi-supervised toy."""
    angles = 2.0 * np.pi * np.arange(3) / 3 + np.pi / 2
    centers = separation / np.sqrt(3) * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    classes = [GaussianMixture([1.0], [Gaussian(c, sigma**2 * np.eye(2))]) for c in centers]
    return LabeledMixture(classes)

"""Run diagnostics: metric rows, mode coverage, the KDE chi-squared proxy, timing."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np
from scipy.stats import gaussian_kde

from .distributions import GaussianMixture
from .oracle import chi2_monte_carlo

CSV_COLUMNS = ("iter", "e_hat", "omega_hat", "lambda", "loss", "chi2_oracle",
               "chi2_kde_proxy", "wall_ms")


@dataclass
class MetricsRecord:
    iter: int
    e_hat: float
    omega_hat: float
    lam: float
    loss: float
    chi2_oracle: Optional[float] = None
    chi2_kde_proxy: Optional[float] = None
    wall_ms: float = 0.0

    def as_row(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {k: d[k] for k in CSV_COLUMNS}


def records_to_arrays(records):
    """Column dict of float arrays (missing values become NaN)."""
    out = {}
    for f in fields(MetricsRecord):
        vals = [getattr(r, f.name) for r in records]
        out[f.name] = np.array([np.nan if v is None else v for v in vals], dtype=np.float64)
    return out


def mode_coverage(samples, centers):
    """Fraction of samples whose nearest center is each of ``centers``."""
    samples = np.asarray(samples, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    d2 = ((samples[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    counts = np.bincount(np.argmin(d2, axis=1), minlength=len(centers))
    return counts / samples.shape[0]


def kde_mixture(samples):
    """Gaussian KDE of ``samples`` (Scott's rule) as an equal-weight mixture."""
    samples = np.asarray(samples, dtype=np.float64)
    kde = gaussian_kde(samples.T, bw_method="scott")
    return GaussianMixture.shared_covariance(samples, np.atleast_2d(kde.covariance))


def chi2_kde_proxy(data, generated, n_mc=4000, seed=0):
    """Monte Carlo chi2 between the data density and a KDE of generated samples.

    A trend monitor only: the KDE bandwidth blurs sharp targets, so the value
    does not go to zero even for a perfect generator.
    """
    return chi2_monte_carlo(data, kde_mixture(generated), n=n_mc, seed=seed, chunk=n_mc).value


def median_wall_ms(wall_ms, warmup=10):
    """Median per-iteration wallclock, skipping the first ``warmup`` iterations."""
    w = np.asarray(wall_ms, dtype=np.float64)
    if w.size > warmup:
        w = w[warmup:]
    return float(np.median(w)) if w.size else float("nan")

"""Empirical Fisher IPM quantities on critic outputs.

All functions take the critic evaluated on a batch from P (``fP``) and on a
batch from Q or the generator (``fQ``). The ``*_terms`` helpers return the
objective value together with its gradient w.r.t. ``fP`` and ``fQ``, which is
what the reverse pass through the critic consumes.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


def _vec(f):
    f = np.asarray(f, dtype=np.float64).ravel()
    if f.size == 0:
        raise ValueError("critic outputs must be non-empty")
    return f


def empirical_mean_diff(fP, fQ):
    """``mean(fP) - mean(fQ)``."""
    return float(_vec(fP).mean() - _vec(fQ).mean())


def empirical_omega(fP, fQ):
    """Pooled second moment ``mean(fP^2)/2 + mean(fQ^2)/2``."""
    fP, fQ = _vec(fP), _vec(fQ)
    return float(0.5 * np.mean(fP * fP) + 0.5 * np.mean(fQ * fQ))


def alm_objective(e_hat, omega_hat, alm=None, *, lam=None, rho=None):
    """``E + lam (1 - Omega) - rho/2 (Omega - 1)^2``.

    Pass an :class:`~fisheripm.optim.AlmState` or explicit ``lam``/``rho``.
    """
    if alm is not None:
        lam, rho = alm.lam, alm.rho
    return float(e_hat + lam * (1.0 - omega_hat) - 0.5 * rho * (omega_hat - 1.0) ** 2)


def fisher_ratio(fP, fQ):
    """Scale-invariant ratio ``E / sqrt(Omega)``; 0 for the all-zero critic."""
    omega = empirical_omega(fP, fQ)
    if omega == 0.0:
        return 0.0
    return empirical_mean_diff(fP, fQ) / np.sqrt(omega)


def fisher_ratio_stderr(fP, fQ):
    """Delta-method standard error of :func:`fisher_ratio` for independent samples."""
    fP, fQ = _vec(fP), _vec(fQ)
    omega = empirical_omega(fP, fQ)
    if omega == 0.0:
        return 0.0
    e = empirical_mean_diff(fP, fQ)
    s = np.sqrt(omega)
    # gradient w.r.t. (mean f, mean f^2) for each sample
    gm = np.array([1.0 / s, -0.25 * e / s**3])
    var = 0.0
    for f, sign in ((fP, 1.0), (fQ, -1.0)):
        cov = np.cov(np.stack([f, f * f]), ddof=1) / f.size
        g = gm * np.array([sign, 1.0])
        var += g @ cov @ g
    return float(np.sqrt(max(var, 0.0)))


class Terms(NamedTuple):
    """Objective value, its gradient w.r.t. both output batches, and diagnostics."""

    value: float
    dfP: np.ndarray
    dfQ: np.ndarray
    e_hat: float
    omega_hat: float


def alm_terms(fP, fQ, lam, rho, omega_from="both"):
    """Augmented Lagrangian ``L_F`` and its output gradients.

    ``omega_from="P"`` uses ``mean(fP^2)`` as the constraint (Neyman variant).
    """
    fP, fQ = _vec(fP), _vec(fQ)
    n, m = fP.size, fQ.size
    e = empirical_mean_diff(fP, fQ)
    if omega_from == "P":
        omega = float(np.mean(fP * fP))
        dom_P, dom_Q = 2.0 * fP / n, np.zeros(m)
    else:
        omega = empirical_omega(fP, fQ)
        dom_P, dom_Q = fP / n, fQ / m
    value = alm_objective(e, omega, lam=lam, rho=rho)
    c = lam + rho * (omega - 1.0)
    return Terms(value, 1.0 / n - c * dom_P, -1.0 / m - c * dom_Q, e, omega)


def fgan_chi2_terms(fP, fQ):
    """f-GAN chi-squared critic objective ``E/2 - Omega/4`` (fixed multiplier 1/2)."""
    fP, fQ = _vec(fP), _vec(fQ)
    n, m = fP.size, fQ.size
    e = empirical_mean_diff(fP, fQ)
    omega = empirical_omega(fP, fQ)
    return Terms(0.5 * e - 0.25 * omega, 0.5 / n - 0.25 * fP / n,
                 -0.5 / m - 0.25 * fQ / m, e, omega)


def mean_diff_terms(fP, fQ):
    """Unconstrained IPM objective ``E`` (weight clipping / gradient penalty)."""
    fP, fQ = _vec(fP), _vec(fQ)
    return Terms(empirical_mean_diff(fP, fQ), np.full(fP.size, 1.0 / fP.size),
                 np.full(fQ.size, -1.0 / fQ.size), empirical_mean_diff(fP, fQ),
                 empirical_omega(fP, fQ))

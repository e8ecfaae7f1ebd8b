"""Adam updates for network parameters and the SGD rule on the Lagrange multiplier."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, NonFiniteGradient
from .nn import Params


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    u: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    # largest |step| / lr of the most recent update; flags divergence
    last_max_step: float = 0.0

    @classmethod
    def for_params(cls, params, lr=1e-3, beta1=0.5, beta2=0.999, eps=1e-8):
        n = len(params)
        return cls(np.zeros(n), np.zeros(n), 0, lr, beta1, beta2, eps)


def adam_step(state: AdamState, params: Params, grad: Params, maximize=False,
              mask: Optional[np.ndarray] = None):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``.

    With ``maximize=True`` the step goes up the gradient. ``mask`` (boolean,
    flat) freezes the entries where it is False: their moments and values are
    left untouched.
    """
    g = grad.flat if isinstance(grad, Params) else np.asarray(grad, dtype=np.float64)
    if g.shape != params.flat.shape:
        raise ConfigError("gradient is not congruent with the parameters")
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("gradient has non-finite entries")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    u = state.beta2 * state.u + (1.0 - state.beta2) * (g * g)
    m_hat = m / (1.0 - state.beta1**t)
    u_hat = u / (1.0 - state.beta2**t)
    step = state.lr * m_hat / (np.sqrt(u_hat) + state.eps)
    if mask is not None:
        step = np.where(mask, step, 0.0)
        m = np.where(mask, m, state.m)
        u = np.where(mask, u, state.u)
    new_flat = params.flat + step if maximize else params.flat - step
    biggest = float(np.max(np.abs(step))) / state.lr if step.size else 0.0
    return params.like(new_flat), replace(state, m=m, u=u, t=t, last_max_step=biggest)


@dataclass(frozen=True)
class AlmState:
    """Lagrange multiplier ``lam`` and quadratic penalty weight ``rho``."""

    lam: float = 0.0
    rho: float = 1e-2

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("rho must be > 0")


def lambda_step(alm: AlmState, omega_hat: float) -> AlmState:
    """``lam <- lam - rho * (1 - omega_hat)``: grows while the constraint is exceeded."""
    return replace(alm, lam=alm.lam - alm.rho * (1.0 - float(omega_hat)))

"""Fisher IPM training: critic and generator updates, estimation and GAN loops.

The critic ascends the augmented Lagrangian

    L_F = E + lam (1 - Omega) - rho/2 (Omega - 1)^2

with Adam while ``lam`` follows plain SGD with step ``rho`` on ``1 - Omega``.
The generator descends ``E`` with the critic frozen; the constraint is only
imposed on the critic.  Baseline critics (weight clipping, two-sided gradient
penalty, the f-GAN chi-squared objective with ``lam`` fixed at 1/2, and the
Neyman variant constraining only ``E_P f^2``) share the same loop.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import List, NamedTuple, Optional

import numpy as np

from . import nn
from .distributions import Distribution
from .errors import ConfigError, NonFiniteLoss
from .metrics import MetricsRecord, chi2_kde_proxy
from .nn import Critic, MlpSpec, Params
from .objectives import (
    alm_terms,
    fgan_chi2_terms,
    fisher_ratio,
    fisher_ratio_stderr,
    mean_diff_terms,
)
from .optim import AdamState, AlmState, adam_step, lambda_step
from .rng import substream

log = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = 1e6


# ---------------------------------------------------------------------------
# Constraint modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FisherALM:
    kind = "fisher_alm"


@dataclass(frozen=True)
class NeymanALM:
    """ALM with the constraint ``E_P f^2 = 1`` on the P batch only."""

    kind = "neyman_alm"


@dataclass(frozen=True)
class FGanChi2:
    """Critic ascends ``E/2 - Omega/4``: the ALM with ``lam = 1/2``, ``rho = 0``."""

    kind = "fgan_chi2"


@dataclass(frozen=True)
class WeightClip:
    c: float = 0.01
    kind = "weight_clip"

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError("clip value c must be > 0")


@dataclass(frozen=True)
class GradientPenalty:
    mu: float = 10.0
    kind = "gradient_penalty"

    def __post_init__(self):
        if self.mu < 0:
            raise ConfigError("penalty weight must be >= 0")


MODES = {m.kind: m for m in (FisherALM, NeymanALM, FGanChi2, WeightClip, GradientPenalty)}


def parse_mode(obj):
    """Mode from an instance, a name (``"weight_clip:0.01"``) or a dict."""
    if isinstance(obj, tuple(MODES.values())):
        return obj
    if isinstance(obj, str):
        name, _, arg = obj.partition(":")
        cls = MODES.get(name)
        if cls is None:
            raise ConfigError(f"unknown constraint mode {name!r}")
        if arg:
            if cls is WeightClip:
                return cls(float(arg))
            if cls is GradientPenalty:
                return cls(float(arg))
            raise ConfigError(f"mode {name!r} takes no argument")
        return cls()
    if isinstance(obj, dict):
        d = dict(obj)
        cls = MODES.get(d.pop("kind", None))
        if cls is None:
            raise ConfigError(f"unknown constraint mode {obj!r}")
        return cls(**d)
    raise ConfigError(f"cannot interpret constraint mode {obj!r}")


def mode_to_dict(mode):
    return {"kind": mode.kind, **asdict(mode)}


# ---------------------------------------------------------------------------
# Configuration and state
# ---------------------------------------------------------------------------


def default_critic_spec(in_dim=2, depth=5, width=16):
    return nn.mlp(in_dim, [width] * depth, 1)


@dataclass
class TrainConfig:
    """Hyperparameters for critic estimation and GAN runs.

    ``iterations`` counts generator iterations in GAN training and critic
    updates in pure estimation runs.
    """

    critic: MlpSpec = field(default_factory=default_critic_spec)
    generator: Optional[MlpSpec] = None
    generator_hidden: tuple = (64, 64, 64)
    n_critic: int = 2
    batch_size: int = 512
    n_z: int = 4
    mode: object = field(default_factory=FisherALM)
    iterations: int = 2000
    lr: float = 1e-3
    lr_generator: Optional[float] = None
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    rho: float = 1e-2
    gamma: float = 0.0
    weight_decay_omega: float = 1e-6
    weight_decay_v: float = 1e-3
    weight_decay_generator: float = 0.0
    init_stdev: float = 0.02
    generator_init_stdev: float = 0.02
    seed: int = 0
    log_every: int = 1
    proxy_every: int = 500
    proxy_samples: int = 4000
    proxy_generated: int = 10_000

    def __post_init__(self):
        if isinstance(self.critic, dict):
            self.critic = MlpSpec.from_dict(self.critic)
        if isinstance(self.generator, dict):
            self.generator = MlpSpec.from_dict(self.generator)
        self.mode = parse_mode(self.mode)
        self.generator_hidden = tuple(int(w) for w in self.generator_hidden)
        if self.n_critic < 1:
            raise ConfigError("n_critic must be >= 1")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.n_z < 1:
            raise ConfigError("n_z must be >= 1")
        if self.rho <= 0:
            raise ConfigError("rho must be > 0")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")

    def generator_spec(self, out_dim, extra_inputs=0):
        if self.generator is not None:
            return self.generator
        return nn.mlp(self.n_z + extra_inputs, list(self.generator_hidden), out_dim)

    def to_dict(self):
        d = {}
        for f in self.__dataclass_fields__:
            v = getattr(self, f)
            if isinstance(v, MlpSpec):
                v = v.to_dict()
            elif f == "mode":
                v = mode_to_dict(v)
            d[f] = v
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class CriticState:
    params: Params
    adam: AdamState
    alm: AlmState
    step: int = 0


@dataclass
class GeneratorState:
    params: Params
    adam: AdamState
    spec: MlpSpec
    step: int = 0


class StepInfo(NamedTuple):
    e_hat: float
    omega_hat: float
    lam: float
    loss: float
    max_abs_f: float
    ce: float = 0.0
    max_step: float = 0.0


def init_critic_state(critic: Critic, config: TrainConfig, params=None):
    if params is None:
        params = critic.init(substream(config.seed, "critic_init"), config.init_stdev)
    adam = AdamState.for_params(params, config.lr, config.beta1, config.beta2, config.eps)
    return CriticState(params, adam, AlmState(0.0, config.rho))


def init_generator_state(spec: MlpSpec, config: TrainConfig, params=None):
    if params is None:
        params = nn.init(spec, substream(config.seed, "generator_init"),
                         config.generator_init_stdev, last_tag="theta", hidden_tag="theta")
    lr = config.lr_generator or config.lr
    adam = AdamState.for_params(params, lr, config.beta1, config.beta2, config.eps)
    return GeneratorState(params, adam, spec)


def _weight_decay(params, config):
    return params.tag_vector({"omega": config.weight_decay_omega, "v": config.weight_decay_v})


def _onehot(labels, k):
    out = np.zeros((len(labels), k))
    out[np.arange(len(labels)), np.asarray(labels, dtype=int)] = 1.0
    return out


def ce_terms(logits, labels):
    """Mean cross-entropy of ``labels`` under ``softmax(logits)`` and d/dlogits."""
    labels = np.asarray(labels, dtype=int)
    logp = nn.log_softmax(logits)
    n = logits.shape[0]
    ce = float(-logp[np.arange(n), labels].mean())
    dlogits = (np.exp(logp) - _onehot(labels, logits.shape[1])) / n
    return ce, dlogits


# ---------------------------------------------------------------------------
# Updates
# ---------------------------------------------------------------------------


def critic_update(state: CriticState, critic: Critic, xP, xQ, config: TrainConfig,
                  rng=None, labeled=None, ce_weight=0.0, train_mask=None):
    """One critic ascent step on fresh batches ``xP`` and ``xQ``.

    ``labeled=(X, y)`` with ``ce_weight > 0`` subtracts ``ce_weight * CE``
    from the objective (semi-supervised critic). ``train_mask`` freezes the
    parameters where it is False. Returns ``(new_state, StepInfo)``.
    """
    mode = config.mode
    p = state.params
    n = xP.shape[0]
    X = np.concatenate([xP, xQ], axis=0)
    f, cache = critic.forward_cache(p, X)
    if not np.all(np.isfinite(f)):
        raise NonFiniteLoss("critic produced non-finite outputs",
                            {"step": state.step, "lam": state.alm.lam})
    fP, fQ = f[:n], f[n:]
    lam = state.alm.lam
    v_reg = 0.0
    if config.gamma > 0:
        v = p[f"W{critic.spec.n_layers - 1}"]
        v_reg = config.gamma * float(np.sum(v * v))

    if isinstance(mode, (FisherALM, NeymanALM)):
        omega_from = "P" if isinstance(mode, NeymanALM) else "both"
        terms = _alm_with_offset(fP, fQ, lam, state.alm.rho, omega_from, v_reg)
    elif isinstance(mode, FGanChi2):
        terms = fgan_chi2_terms(fP, fQ)
        lam = 0.5
    else:
        terms = mean_diff_terms(fP, fQ)
    grad, _ = critic.backward(p, cache, np.concatenate([terms.dfP, terms.dfQ]))
    loss = terms.value

    if v_reg and isinstance(mode, (FisherALM, NeymanALM)):
        c = lam + state.alm.rho * (terms.omega_hat - 1.0)
        name = f"W{critic.spec.n_layers - 1}"
        grad[name][...] -= c * 2.0 * config.gamma * p[name]

    if isinstance(mode, GradientPenalty):
        if xQ.shape[0] != n:
            raise ConfigError("gradient penalty needs equal batch sizes")
        if critic.form == "kplus1":
            raise ConfigError("gradient penalty is only implemented for MLP critics")
        u = rng.random((n, 1))
        x_hat = u * xP + (1.0 - u) * xQ
        pen, gpen, _ = nn.input_grad_penalty(p, critic.spec, x_hat)
        grad = grad.like(grad.flat - mode.mu * gpen.flat)
        loss -= mode.mu * pen

    ce = 0.0
    if labeled is not None and ce_weight > 0:
        XL, yL = labeled
        _, lcache = critic.forward_cache(p, XL)
        ce, dlogits = ce_terms(lcache.logits, yL)
        gce, _ = critic.backward(p, lcache, None, -ce_weight * dlogits)
        grad = grad.like(grad.flat + gce.flat)
        loss -= ce_weight * ce

    g = grad.flat - _weight_decay(p, config) * p.flat
    new_p, adam = adam_step(state.adam, p, g, maximize=True, mask=train_mask)
    if isinstance(mode, WeightClip):
        new_p = new_p.like(np.clip(new_p.flat, -mode.c, mode.c))

    alm = state.alm
    if isinstance(mode, (FisherALM, NeymanALM)):
        alm = lambda_step(alm, terms.omega_hat)
    info = StepInfo(terms.e_hat, terms.omega_hat, lam, loss,
                    float(np.max(np.abs(f))), ce, adam.last_max_step)
    return CriticState(new_p, adam, alm, state.step + 1), info


def _alm_with_offset(fP, fQ, lam, rho, omega_from, offset):
    # the gamma * ||v||^2 ridge enters the constraint like an extra second moment
    base = alm_terms(fP, fQ, lam, rho, omega_from)
    omega = base.omega_hat + offset
    if not offset:
        return base
    c = lam + rho * (omega - 1.0)
    n, m = len(fP), len(fQ)
    if omega_from == "P":
        dP = 1.0 / n - c * 2.0 * fP / n
        dQ = np.full(m, -1.0 / m)
    else:
        dP = 1.0 / n - c * fP / n
        dQ = -1.0 / m - c * fQ / m
    value = base.e_hat + lam * (1.0 - omega) - 0.5 * rho * (omega - 1.0) ** 2
    return base._replace(value=value, dfP=dP, dfQ=dQ, omega_hat=omega)


def generator_update(gstate: GeneratorState, critic: Critic, critic_params, z,
                     config: TrainConfig, labels=None, ce_weight=0.0):
    """One Adam descent step of the generator on ``-mean f(g(z))``.

    ``z`` is the full generator input (noise, plus a one-hot label block for
    conditional generators). With ``labels`` and ``ce_weight > 0`` the loss
    gains ``ce_weight * CE(g(z), labels)``. Returns ``(new_state, info)``
    where ``info`` holds the critic term and the cross-entropy.
    """
    gp = gstate.params
    X, gcache = nn.forward_cache(gp, gstate.spec, z)
    f, ccache = critic.forward_cache(critic_params, X)
    if not np.all(np.isfinite(f)):
        raise NonFiniteLoss("critic output on generated samples is non-finite",
                            {"generator_step": gstate.step})
    n = X.shape[0]
    loss = -float(f.mean())
    df = np.full(n, -1.0 / n)
    dlogits = None
    ce = 0.0
    if labels is not None and ce_weight > 0:
        ce, dl = ce_terms(ccache.logits, labels)
        dlogits = ce_weight * dl
        loss += ce_weight * ce
    _, dX = critic.backward(critic_params, ccache, df, dlogits, need_input=True)
    grad, _ = nn.backward(gp, gstate.spec, gcache, dX)
    g = grad.flat + config.weight_decay_generator * gp.flat
    new_p, adam = adam_step(gstate.adam, gp, g, maximize=False)
    return GeneratorState(new_p, adam, gstate.spec, gstate.step + 1), {"loss": loss, "ce": ce}


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------


class Sampler:
    """Draws batches either fresh from a distribution or from a fixed dataset."""

    def __init__(self, source, rng):
        self.rng = rng
        if isinstance(source, Distribution):
            self.dist, self.data = source, None
        else:
            self.dist, self.data = None, np.asarray(source, dtype=np.float64)
            if self.data.ndim != 2 or self.data.shape[0] < 1:
                raise ConfigError("dataset must be a non-empty (n, d) array")

    @property
    def dim(self):
        return self.dist.dim if self.dist is not None else self.data.shape[1]

    @property
    def size(self):
        return None if self.data is None else self.data.shape[0]

    def __call__(self, n):
        if self.dist is not None:
            return self.dist._draw(n, self.rng)
        return self.data[self.rng.integers(0, self.data.shape[0], size=n)]


# ---------------------------------------------------------------------------
# Critic fitting and IPM estimation
# ---------------------------------------------------------------------------


@dataclass
class CriticFit:
    state: CriticState
    critic: Critic
    metrics: List[MetricsRecord]
    wall_ms: List[float]
    diverged: bool = False
    max_step: float = 0.0

    @property
    def params(self):
        return self.state.params


def fit_critic(source_p, source_q, config: TrainConfig, critic: Critic = None,
               params=None, train_mask=None, chi2_oracle=None, steps=None):
    """Run ``steps`` (default ``config.iterations``) critic updates.

    Sources are distributions (fresh batches every step) or ``(n, d)`` arrays
    (minibatches drawn with replacement from the fixed set).
    """
    sp = Sampler(source_p, substream(config.seed, "batch_p"))
    sq = Sampler(source_q, substream(config.seed, "batch_q"))
    if sp.dim != sq.dim:
        raise ConfigError("the two samples must have the same dimension")
    critic = critic or Critic(config.critic)
    if critic.spec.in_dim != sp.dim:
        raise ConfigError(f"critic expects inputs of dimension {critic.spec.in_dim}, data has {sp.dim}")
    gp_rng = substream(config.seed, "penalty")
    state = init_critic_state(critic, config, params)
    bp = min(config.batch_size, sp.size or config.batch_size)
    bq = min(config.batch_size, sq.size or config.batch_size)
    if isinstance(config.mode, GradientPenalty):
        bp = bq = min(bp, bq)
    metrics, walls = [], []
    diverged = False
    max_step = 0.0
    for it in range(1, (steps or config.iterations) + 1):
        t0 = time.perf_counter()
        state, info = critic_update(state, critic, sp(bp), sq(bq), config, gp_rng,
                                    train_mask=train_mask)
        walls.append(1e3 * (time.perf_counter() - t0))
        max_step = max(max_step, info.max_step)
        if info.max_abs_f > DIVERGENCE_THRESHOLD:
            diverged = True
        if it % config.log_every == 0 or it == 1:
            metrics.append(MetricsRecord(it, info.e_hat, info.omega_hat, info.lam, info.loss,
                                         chi2_oracle, None, walls[-1]))
    return CriticFit(state, critic, metrics, walls, diverged, max_step)


@dataclass
class IpmEstimate:
    estimate: float
    stderr: float
    critic: Params
    fit: CriticFit
    n_train: Optional[int]
    n_eval: int
    oracle: Optional[float] = None

    def __iter__(self):
        # ``estimate, critic = estimate_ipm(...)``
        return iter((self.estimate, self.critic))


def evaluate_ratio(critic: Critic, params, XP, XQ):
    """Out-of-sample Fisher ratio and its delta-method standard error."""
    fP, fQ = critic(params, XP), critic(params, XQ)
    return fisher_ratio(fP, fQ), fisher_ratio_stderr(fP, fQ), max(np.abs(fP).max(), np.abs(fQ).max())


def estimate_ipm(P, Q, config: TrainConfig, n_train=10**4, n_eval=10**5,
                 sampling="dataset", chi2_oracle=None):
    """Train a critic to separate P from Q and report the held-out Fisher ratio.

    ``sampling="dataset"`` draws ``n_train`` points from each distribution once
    and trains on minibatches from that fixed set; ``"fresh"`` draws new
    batches every step and ignores ``n_train``. The estimate is
    ``E / sqrt(Omega)`` on ``n_eval`` fresh held-out samples per side.
    """
    if sampling not in ("dataset", "fresh"):
        raise ConfigError("sampling must be 'dataset' or 'fresh'")
    if n_eval < 2:
        raise ConfigError("n_eval must be >= 2")
    if sampling == "dataset":
        src_p = P.sample(n_train, substream(config.seed, "train_p"))
        src_q = Q.sample(n_train, substream(config.seed, "train_q"))
    else:
        src_p, src_q, n_train = P, Q, None
    critic = Critic(config.critic)
    fit = fit_critic(src_p, src_q, config, critic, chi2_oracle=chi2_oracle)
    XP = P.sample(n_eval, substream(config.seed, "eval_p"))
    XQ = Q.sample(n_eval, substream(config.seed, "eval_q"))
    est, se, fmax = evaluate_ratio(critic, fit.params, XP, XQ)
    if not np.isfinite(est) or fmax > DIVERGENCE_THRESHOLD:
        fit.diverged = True
    return IpmEstimate(float(est), float(se), fit.params, fit, n_train, n_eval, chi2_oracle)


# ---------------------------------------------------------------------------
# Adversarial training
# ---------------------------------------------------------------------------


@dataclass
class GanResult:
    generator: Params
    critic: Params
    metrics: List[MetricsRecord]
    generator_spec: MlpSpec
    critic_model: Critic
    config: TrainConfig
    critic_wall_ms: List[float] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        # ``generator, critic, metrics = train_gan(...)``
        return iter((self.generator, self.critic, self.metrics))

    def sample(self, n, seed=0, labels=None):
        rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
        z = rng.standard_normal((n, self.config.n_z))
        if self.extra.get("conditional"):
            k = self.extra["n_classes"]
            if labels is None:
                labels = rng.integers(0, k, size=n)
            z = np.concatenate([z, _onehot(labels, k)], axis=1)
        return nn.forward(self.generator, self.generator_spec, z)


def _save_checkpoint(directory, name, params, spec):
    from .io import save_params

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{name}.fipm"
    save_params(path, params, spec)
    return str(path)


def adversarial_loop(data, config: TrainConfig, critic: Critic, *, labeled=None,
                     ce_weight_d=0.0, ce_weight_g=0.0, conditional=False, n_classes=0,
                     class_prior=None, proxy=True, checkpoint_dir=None, callback=None):
    """Alternate ``n_critic`` critic updates with one generator update.

    ``data`` is a :class:`Distribution` (fresh samples) or an ``(n, d)`` array.
    Semi-supervised extras: ``labeled=(X, y)`` supplies the labeled set for the
    critic cross-entropy, ``conditional`` appends a one-hot label to the
    generator input. With all extras off this is exactly plain Fisher GAN.
    """
    sample_data = Sampler(data, substream(config.seed, "data"))
    noise = substream(config.seed, "noise")
    gp_rng = substream(config.seed, "penalty")
    lab_rng = substream(config.seed, "labeled_batches")
    label_rng = substream(config.seed, "generator_labels")
    d = sample_data.dim
    gspec = config.generator_spec(d, n_classes if conditional else 0)
    if gspec.out_dim != d:
        raise ConfigError("generator output dimension must match the data")
    cstate = init_critic_state(critic, config)
    gstate = init_generator_state(gspec, config)
    B = config.batch_size
    prior = None if class_prior is None else np.asarray(class_prior, dtype=np.float64)
    can_proxy = proxy and isinstance(data, Distribution) and d <= 2
    proxy_iters = {100, config.iterations}

    def gen_input(n):
        z = noise.standard_normal((n, config.n_z))
        if not conditional:
            return z, None
        y = label_rng.choice(n_classes, size=n, p=prior)
        return np.concatenate([z, _onehot(y, n_classes)], axis=1), y

    def labeled_batch():
        XL, yL = labeled
        nb = min(B, XL.shape[0])
        if nb == XL.shape[0]:
            return XL, yL
        idx = lab_rng.choice(XL.shape[0], size=nb, replace=False)
        return XL[idx], yL[idx]

    metrics, critic_walls = [], []
    last_good = (cstate.params, gstate.params)
    for it in range(1, config.iterations + 1):
        t0 = time.perf_counter()
        try:
            for _ in range(config.n_critic):
                xr = sample_data(B)
                zin, _ = gen_input(B)
                xg = nn.forward(gstate.params, gspec, zin)
                lb = labeled_batch() if (labeled is not None and ce_weight_d > 0) else None
                tc = time.perf_counter()
                cstate, info = critic_update(cstate, critic, xr, xg, config, gp_rng,
                                             labeled=lb, ce_weight=ce_weight_d)
                critic_walls.append(1e3 * (time.perf_counter() - tc))
            zin, y = gen_input(B)
            gstate, ginfo = generator_update(gstate, critic, cstate.params, zin, config,
                                             labels=y, ce_weight=ce_weight_g)
        except NonFiniteLoss as exc:
            diag = dict(exc.diagnostics)
            diag.update(iteration=it, metrics=metrics)
            if checkpoint_dir is not None:
                diag["critic_checkpoint"] = _save_checkpoint(checkpoint_dir, "critic_last_good",
                                                             last_good[0], critic.spec)
                diag["generator_checkpoint"] = _save_checkpoint(checkpoint_dir, "generator_last_good",
                                                                last_good[1], gspec)
            raise NonFiniteLoss(f"training diverged at iteration {it}: {exc}", diag) from exc
        last_good = (cstate.params, gstate.params)
        wall = 1e3 * (time.perf_counter() - t0)
        proxy_val = None
        if can_proxy and (it in proxy_iters or it % config.proxy_every == 0):
            zp, _ = _proxy_input(config, n_classes if conditional else 0, prior)
            gen = nn.forward(gstate.params, gspec, zp)
            proxy_val = chi2_kde_proxy(data, gen, config.proxy_samples,
                                       seed=substream(config.seed, "proxy_mc"))
        if it % config.log_every == 0 or it == 1 or proxy_val is not None:
            metrics.append(MetricsRecord(it, info.e_hat, info.omega_hat, info.lam, info.loss,
                                         None, proxy_val, wall))
        if callback is not None:
            callback(it, cstate, gstate, info)
    result = GanResult(gstate.params, cstate.params, metrics, gspec, critic, config,
                       critic_walls, {"conditional": conditional, "n_classes": n_classes,
                                      "lam": cstate.alm.lam})
    return result


def _proxy_input(config, n_classes, prior):
    # fixed noise so proxy values are comparable across iterations
    rng = substream(config.seed, "proxy_noise")
    z = rng.standard_normal((config.proxy_generated, config.n_z))
    if not n_classes:
        return z, None
    y = rng.choice(n_classes, size=config.proxy_generated, p=prior)
    return np.concatenate([z, _onehot(y, n_classes)], axis=1), y


def train_gan(data, config: TrainConfig, *, proxy=True, checkpoint_dir=None, callback=None):
    """Fisher GAN (or a baseline critic mode) on ``data``.

    Returns a :class:`GanResult`; it unpacks as ``(generator, critic, metrics)``.
    """
    critic = Critic(config.critic)
    return adversarial_loop(data, config, critic, proxy=proxy,
                            checkpoint_dir=checkpoint_dir, callback=callback)

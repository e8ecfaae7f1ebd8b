"""Semi-supervised critics: cross-entropy terms, K+1 critic and conditional generators.

The critic keeps its Fisher objective and additionally fits a class head
``S`` on a small labeled set; the generator can be conditioned on a one-hot
label and pushed to produce samples the head classifies as that label.
Accuracy is always read off the head: ``argmax_y <S_y, Phi(x)>``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from . import nn
from .distributions import LabeledMixture
from .errors import ConfigError, ShapeMismatch
from .fisher import GanResult, TrainConfig, adversarial_loop, ce_terms
from .metrics import MetricsRecord
from .nn import Critic, MlpSpec
from .optim import AdamState, adam_step
from .rng import substream

#: CE weights (lambda_D, lambda_G) used when the config leaves them unset
DEFAULT_WEIGHTS = {"split": (0.1, 0.1), "kplus1": (1.5, 0.1)}


@dataclass
class SslConfig:
    n_classes: int = 3
    lambda_d: Optional[float] = None
    lambda_g: Optional[float] = None
    labeled_per_class: int = 10
    critic_form: str = "kplus1"
    conditional: bool = True
    n_test: int = 10_000

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError("need K >= 2 classes")
        if self.critic_form not in DEFAULT_WEIGHTS:
            raise ConfigError(f"critic_form must be one of {sorted(DEFAULT_WEIGHTS)}")
        ld, lg = DEFAULT_WEIGHTS[self.critic_form]
        if self.lambda_d is None:
            self.lambda_d = ld
        if self.lambda_g is None:
            self.lambda_g = lg
        if self.lambda_d < 0 or self.lambda_g < 0:
            raise ConfigError("CE weights must be >= 0")
        if self.labeled_per_class < 1:
            raise ConfigError("labeled_per_class must be >= 1")
        if self.n_test < 1:
            raise ConfigError("n_test must be >= 1")

    def to_dict(self):
        return asdict(self)


def ce_loss(S, features, labels):
    """Mean ``-log softmax(features @ S.T)[label]`` over rows."""
    S = np.asarray(S, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if S.ndim != 2 or features.ndim != 2 or S.shape[1] != features.shape[1]:
        raise ShapeMismatch(f"S {S.shape} and features {features.shape} do not agree")
    if labels.shape != (features.shape[0],):
        raise ShapeMismatch("need one label per feature row")
    if labels.size and (labels.min() < 0 or labels.max() >= S.shape[0]):
        raise ShapeMismatch("labels must lie in [0, K)")
    return ce_terms(features @ S.T, labels)[0]


def critic_loss_ssl(fisher_value, ce, lambda_d):
    """Critic objective (maximized): ``L_F - lambda_d * CE``."""
    return float(fisher_value - lambda_d * ce)


def generator_loss_ssl(e_hat, ce_gen, lambda_g):
    """Generator objective (minimized): ``E + lambda_g * CE`` on generated samples."""
    return float(e_hat + lambda_g * ce_gen)


def conditional_forward(gen_params, spec: MlpSpec, z, y, n_classes):
    """Generator output for noise ``z`` with the one-hot of ``y`` appended."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    if z.ndim != 2 or y.shape != (z.shape[0],):
        raise ShapeMismatch("z must be (n, n_z) with one label per row")
    if z.shape[1] + n_classes != spec.in_dim:
        raise ShapeMismatch(
            f"generator takes {spec.in_dim} inputs, got {z.shape[1]} noise + {n_classes} label")
    onehot = np.zeros((z.shape[0], n_classes))
    onehot[np.arange(z.shape[0]), y.astype(int)] = 1.0
    return nn.forward(gen_params, spec, np.concatenate([z, onehot], axis=1))


def stratified_labeled_set(data: LabeledMixture, per_class, seed):
    """``per_class`` samples from every class, labels ascending."""
    rng = substream(seed, "labeled_set")
    X = np.concatenate([data.classes[k]._draw(per_class, rng) for k in range(data.n_classes)])
    y = np.repeat(np.arange(data.n_classes), per_class)
    return X, y


def head_accuracy(critic: Critic, params, X, y):
    pred = np.argmax(critic.logits(params, X), axis=1)
    return float(np.mean(pred == y))


@dataclass
class SslResult:
    accuracy: float
    metrics: List[MetricsRecord]
    gan: GanResult
    ssl: SslConfig
    labeled: tuple
    probe_accuracy: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        # ``accuracy, metrics = train_ssl(...)``
        return iter((self.accuracy, self.metrics))

    def summary(self, seed):
        return {
            "seed": seed,
            "labeled_per_class": self.ssl.labeled_per_class,
            "critic_form": self.ssl.critic_form,
            "conditional": self.ssl.conditional,
            "test_accuracy": self.accuracy,
            "probe_accuracy": self.probe_accuracy,
        }


def fit_head(critic: Critic, params, X, y, config: TrainConfig, steps=500):
    """Fit only the ``S`` head on frozen features by Adam descent on CE."""
    mask = params.mask("S")
    adam = AdamState.for_params(params, config.lr * 10, config.beta1, config.beta2, config.eps)
    p = params
    for _ in range(steps):
        _, cache = critic.forward_cache(p, X)
        _, dlogits = ce_terms(cache.logits, y)
        grad, _ = critic.backward(p, cache, None, dlogits)
        p, adam = adam_step(adam, p, grad, maximize=False, mask=mask)
    return p


def train_ssl(data: LabeledMixture, ssl: SslConfig, config: TrainConfig, *,
              proxy=False, checkpoint_dir=None, callback=None):
    """Semi-supervised Fisher GAN on ``data``; returns an :class:`SslResult`.

    The labeled set (``labeled_per_class`` per class) is drawn once per run;
    accuracy is measured on ``ssl.n_test`` fresh held-out samples. With both
    CE weights at 0, ``conditional=False`` and the ``split`` critic, the
    training trajectory is identical to :func:`~fisheripm.fisher.train_gan`.
    ``probe_accuracy`` is a head fit afterwards on the labeled set over the
    final (frozen) critic features.
    """
    if not isinstance(data, LabeledMixture):
        raise ConfigError("train_ssl needs a LabeledMixture")
    if data.n_classes != ssl.n_classes:
        raise ConfigError(f"data has {data.n_classes} classes, config says {ssl.n_classes}")
    critic = Critic(config.critic, ssl.critic_form, ssl.n_classes)
    labeled = stratified_labeled_set(data, ssl.labeled_per_class, config.seed)
    res = adversarial_loop(
        data, config, critic, labeled=labeled, ce_weight_d=ssl.lambda_d,
        ce_weight_g=ssl.lambda_g if ssl.conditional else 0.0,
        conditional=ssl.conditional, n_classes=ssl.n_classes, class_prior=data.prior,
        proxy=proxy, checkpoint_dir=checkpoint_dir, callback=callback,
    )
    Xt, yt = data.sample_labeled(ssl.n_test, substream(config.seed, "test_set"))
    acc = head_accuracy(critic, res.critic, Xt, yt)
    probe = fit_head(critic, res.critic, labeled[0], labeled[1], config)
    return SslResult(acc, res.metrics, res, ssl, labeled, head_accuracy(critic, probe, Xt, yt))


def supervised_baseline(data: LabeledMixture, ssl: SslConfig, config: TrainConfig, steps=None):
    """Same critic network trained on the labeled set by CE alone.

    Reference point for the semi-supervised accuracy target.
    """
    critic = Critic(config.critic, "split", ssl.n_classes)
    X, y = stratified_labeled_set(data, ssl.labeled_per_class, config.seed)
    params = critic.init(substream(config.seed, "critic_init"), config.init_stdev)
    adam = AdamState.for_params(params, config.lr, config.beta1, config.beta2, config.eps)
    for _ in range(steps or config.iterations * config.n_critic):
        _, cache = critic.forward_cache(params, X)
        _, dlogits = ce_terms(cache.logits, y)
        grad, _ = critic.backward(params, cache, None, dlogits)
        params, adam = adam_step(adam, params, grad, maximize=False)
    Xt, yt = data.sample_labeled(ssl.n_test, substream(config.seed, "test_set"))
    return head_accuracy(critic, params, Xt, yt)

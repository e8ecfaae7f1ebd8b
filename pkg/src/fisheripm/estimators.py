"""scikit-learn style wrappers around the training loops.

``FisherIPM`` fits a critic between two samples, ``FisherGAN`` fits a
generator to one sample, ``FisherSSLClassifier`` fits the semi-supervised
critic and predicts with its class head (unlabeled rows carry ``y == -1``).
All hyperparameters are constructor arguments, so ``get_params``,
``set_params`` and ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import nn
from .distributions import Distribution
from .errors import ConfigError, ShapeMismatch
from .fisher import TrainConfig, adversarial_loop, evaluate_ratio, fit_critic
from .nn import Critic
from .objectives import fisher_ratio
from .rng import substream
from .ssl import DEFAULT_WEIGHTS

UNLABELED = -1


def check_samples(X, name="X", n_features=None, min_samples=1):
    """Finite float64 ``(n, d)`` array, optionally with a required width."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=min_samples,
                    input_name=name)
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeMismatch(f"{name} has {X.shape[1]} features, expected {n_features}")
    return X


def check_semi_labels(y, n):
    y = np.asarray(y)
    if y.shape != (n,):
        raise ShapeMismatch(f"y must have shape ({n},), got {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ConfigError("labels must be integers (-1 for unlabeled)")
        y = y.astype(int)
    if y.min() < UNLABELED:
        raise ConfigError("labels must be >= -1")
    return y


class _TrainMixin:
    def _config(self, in_dim, iterations):
        return TrainConfig(
            critic=nn.mlp(in_dim, list(self.hidden), 1),
            n_critic=self.n_critic,
            batch_size=self.batch_size,
            mode=getattr(self, "mode", "fisher_alm"),
            iterations=iterations,
            lr=self.learning_rate,
            rho=self.rho,
            seed=self.random_state,
            log_every=max(1, iterations // 100),
            **getattr(self, "_extra_config", lambda: {})(),
        )


class FisherIPM(_TrainMixin, TransformerMixin, BaseEstimator):
    """Learned Fisher IPM between two samples.

    ``fit(X, Y)`` trains the critic to separate rows of ``X`` (from P) from
    rows of ``Y`` (from Q). ``score(X, Y)`` is the Fisher ratio on new
    samples, ``decision_function`` the critic value and ``transform`` the
    penultimate features.

    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> X, Y = rng.normal(0, 1, (2000, 1)), rng.normal(2, 1, (2000, 1))
    >>> est = FisherIPM(hidden=(8,), n_iter=300, random_state=0).fit(X, Y)
    >>> est.score(X, Y) > 0.5
    True
    """

    def __init__(self, hidden=(16, 16, 16, 16, 16), n_iter=2000, batch_size=512,
                 n_critic=1, mode="fisher_alm", learning_rate=1e-3, rho=1e-2,
                 gamma=0.0, random_state=0):
        self.hidden = hidden
        self.n_iter = n_iter
        self.batch_size = batch_size
        self.n_critic = n_critic
        self.mode = mode
        self.learning_rate = learning_rate
        self.rho = rho
        self.gamma = gamma
        self.random_state = random_state

    def _extra_config(self):
        return {"gamma": self.gamma}

    def fit(self, X, Y):
        X = check_samples(X, "X", min_samples=2)
        Y = check_samples(Y, "Y", X.shape[1], min_samples=2)
        cfg = self._config(X.shape[1], self.n_iter)
        self.critic_ = Critic(cfg.critic)
        fit = fit_critic(X, Y, cfg, self.critic_)
        self.params_ = fit.params
        self.lambda_ = fit.state.alm.lam
        self.diverged_ = fit.diverged
        self.metrics_ = fit.metrics
        self.n_features_in_ = X.shape[1]
        self.estimate_ = fisher_ratio(self.critic_(self.params_, X), self.critic_(self.params_, Y))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        return self.critic_(self.params_, check_samples(X, "X", self.n_features_in_))

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_samples(X, "X", self.n_features_in_)
        return nn.features(self.params_, self.critic_.spec, X)

    def score(self, X, Y):
        check_is_fitted(self, "params_")
        X = check_samples(X, "X", self.n_features_in_, 2)
        Y = check_samples(Y, "Y", self.n_features_in_, 2)
        return float(evaluate_ratio(self.critic_, self.params_, X, Y)[0])


class FisherGAN(_TrainMixin, BaseEstimator):
    """Generator trained against a Fisher critic on the rows of ``X``.

    ``X`` may also be a :class:`~fisheripm.distributions.Distribution`, in
    which case fresh samples are drawn every step.
    """

    def __init__(self, hidden=(16, 16, 16, 16, 16), generator_hidden=(64, 64, 64),
                 n_z=4, n_iter=2000, batch_size=512, n_critic=2, mode="fisher_alm",
                 learning_rate=1e-3, rho=1e-2, random_state=0):
        self.hidden = hidden
        self.generator_hidden = generator_hidden
        self.n_z = n_z
        self.n_iter = n_iter
        self.batch_size = batch_size
        self.n_critic = n_critic
        self.mode = mode
        self.learning_rate = learning_rate
        self.rho = rho
        self.random_state = random_state

    def fit(self, X, y=None):
        if isinstance(X, Distribution):
            data, d = X, X.dim
        else:
            data = check_samples(X, "X")
            d = data.shape[1]
        cfg = self._config(d, self.n_iter)
        cfg.n_z = self.n_z
        cfg.generator = nn.mlp(self.n_z, list(self.generator_hidden), d)
        self.result_ = adversarial_loop(data, cfg, Critic(cfg.critic), proxy=False)
        self.n_features_in_ = d
        self.metrics_ = self.result_.metrics
        return self

    def sample(self, n, random_state=None):
        check_is_fitted(self, "result_")
        seed = self.random_state if random_state is None else random_state
        return self.result_.sample(int(n), substream(seed, "sample"))


class FisherSSLClassifier(_TrainMixin, ClassifierMixin, BaseEstimator):
    """Semi-supervised classifier from a Fisher critic with a class head.

    ``y`` holds class labels for labeled rows and ``-1`` for unlabeled ones.
    All rows feed the unlabeled (real) side of the critic; labeled rows also
    feed the cross-entropy term.
    """

    def __init__(self, hidden=(16, 16, 16, 16, 16), critic_form="kplus1",
                 lambda_d=None, lambda_g=None, conditional=True, n_z=4, n_iter=2000,
                 batch_size=256, n_critic=2, learning_rate=1e-3, rho=1e-2,
                 random_state=0):
        self.hidden = hidden
        self.critic_form = critic_form
        self.lambda_d = lambda_d
        self.lambda_g = lambda_g
        self.conditional = conditional
        self.n_z = n_z
        self.n_iter = n_iter
        self.batch_size = batch_size
        self.n_critic = n_critic
        self.learning_rate = learning_rate
        self.rho = rho
        self.random_state = random_state

    def fit(self, X, y):
        X = check_samples(X, "X")
        y = check_semi_labels(y, X.shape[0])
        lab = y != UNLABELED
        if not lab.any():
            raise ConfigError("need at least one labeled row")
        if self.critic_form not in DEFAULT_WEIGHTS:
            raise ConfigError(f"critic_form must be one of {sorted(DEFAULT_WEIGHTS)}")
        self.classes_, y_enc = np.unique(y[lab], return_inverse=True)
        k = len(self.classes_)
        if k < 2:
            raise ConfigError("need at least two classes among the labeled rows")
        ld, lg = DEFAULT_WEIGHTS[self.critic_form]
        ld = ld if self.lambda_d is None else self.lambda_d
        lg = lg if self.lambda_g is None else self.lambda_g
        cfg = self._config(X.shape[1], self.n_iter)
        cfg.n_z = self.n_z
        prior = np.bincount(y_enc, minlength=k) / y_enc.size
        self.critic_ = Critic(cfg.critic, self.critic_form, k)
        res = adversarial_loop(X, cfg, self.critic_, labeled=(X[lab], y_enc),
                               ce_weight_d=ld, ce_weight_g=lg if self.conditional else 0.0,
                               conditional=self.conditional, n_classes=k, class_prior=prior,
                               proxy=False)
        self.result_ = res
        self.params_ = res.critic
        self.metrics_ = res.metrics
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        X = check_samples(X, "X", self.n_features_in_)
        return nn.softmax(self.critic_.logits(self.params_, X))

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        return self.critic_(self.params_, check_samples(X, "X", self.n_features_in_))

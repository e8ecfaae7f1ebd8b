"""Feed-forward LeakyReLU networks with hand-written reverse-mode gradients.

Parameters live in one flat float64 vector (:class:`Params`) whose named
blocks are reshaped views, so optimizers work on the flat vector while the
layer code indexes ``params["W0"]``.  Every block carries a partition tag:
``omega`` for the feature layers, ``v`` for the last linear layer of a critic,
``S`` for a classifier head and ``theta`` for generator layers.

Only the fixed MLP topology is supported; no general autodiff graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError, NonFiniteLoss, ShapeMismatch
from .rng import as_generator


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths from input to output plus activation choices.

    ``layer_sizes=(2, 16, 16, 1)`` is a 2-input network with two hidden
    LeakyReLU layers of width 16 and a scalar linear output. Zero hidden
    layers gives a plain affine map.
    """

    layer_sizes: tuple
    slope: float = 0.2
    output_activation: str = "linear"
    output_bias: bool = True

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigError("layer_sizes needs an input and an output width >= 1")
        if not 0.0 < self.slope < 1.0:
            raise ConfigError("LeakyReLU slope must lie in (0, 1)")
        if self.output_activation not in ("linear", "tanh"):
            raise ConfigError("output_activation must be 'linear' or 'tanh'")

    @property
    def n_layers(self):
        return len(self.layer_sizes) - 1

    @property
    def in_dim(self):
        return self.layer_sizes[0]

    @property
    def out_dim(self):
        return self.layer_sizes[-1]

    @property
    def feature_dim(self):
        """Width of the penultimate activation (the feature map)."""
        return self.layer_sizes[-2]

    def to_dict(self):
        return {
            "layer_sizes": list(self.layer_sizes),
            "slope": self.slope,
            "output_activation": self.output_activation,
            "output_bias": self.output_bias,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["layer_sizes"]), d.get("slope", 0.2),
                   d.get("output_activation", "linear"), d.get("output_bias", True))


def mlp(in_dim, hidden, out_dim, **kw):
    """Shorthand: ``mlp(2, [16] * 5, 1)``."""
    return MlpSpec((in_dim, *hidden, out_dim), **kw)


class Block(NamedTuple):
    offset: int
    shape: tuple
    tag: str


def build_layout(blocks):
    """Layout from ``[(name, shape, tag), ...]`` in storage order."""
    layout, offset = {}, 0
    for name, shape, tag in blocks:
        shape = tuple(int(s) for s in shape)
        layout[name] = Block(offset, shape, tag)
        offset += int(np.prod(shape))
    return layout


def mlp_blocks(spec: MlpSpec, last_tag="v", hidden_tag="omega", prefix=""):
    out = []
    for l, (i, o) in enumerate(zip(spec.layer_sizes[:-1], spec.layer_sizes[1:])):
        tag = last_tag if l == spec.n_layers - 1 else hidden_tag
        out.append((f"{prefix}W{l}", (o, i), tag))
        if l < spec.n_layers - 1 or spec.output_bias:
            out.append((f"{prefix}b{l}", (o,), tag))
    return out


class Params:
    """Flat float64 vector with named, reshaped views."""

    def __init__(self, flat, layout):
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        size = sum(int(np.prod(b.shape)) for b in layout.values())
        if flat.ndim != 1 or flat.shape[0] != size:
            raise ShapeMismatch(f"flat vector has {flat.shape} entries, layout needs {size}")
        self.flat = flat
        self.layout = layout

    @classmethod
    def zeros(cls, layout):
        size = sum(int(np.prod(b.shape)) for b in layout.values())
        return cls(np.zeros(size), layout)

    def __getitem__(self, name):
        b = self.layout[name]
        n = int(np.prod(b.shape))
        return self.flat[b.offset : b.offset + n].reshape(b.shape)

    def __contains__(self, name):
        return name in self.layout

    def __len__(self):
        return self.flat.shape[0]

    def copy(self):
        return Params(self.flat.copy(), self.layout)

    def like(self, flat):
        return Params(flat, self.layout)

    def mask(self, tag):
        """Boolean mask over the flat vector selecting blocks with ``tag``."""
        m = np.zeros(len(self), dtype=bool)
        for b in self.layout.values():
            if b.tag == tag:
                m[b.offset : b.offset + int(np.prod(b.shape))] = True
        return m

    def tag_vector(self, values, default=0.0):
        """Per-entry vector taking ``values[tag]`` on each block."""
        out = np.full(len(self), default)
        for b in self.layout.values():
            out[b.offset : b.offset + int(np.prod(b.shape))] = values.get(b.tag, default)
        return out

    def __eq__(self, other):
        return (isinstance(other, Params) and self.layout == other.layout
                and np.array_equal(self.flat, other.flat))

    def __repr__(self):
        return f"Params(n={len(self)}, blocks={list(self.layout)})"


# A gradient is a vector congruent with a Params layout.
Gradient = Params


def init_params(layout, seed, stdev=0.02):
    """Weights ``~ N(0, stdev^2)``, biases exactly zero, reproducible per seed."""
    if stdev <= 0:
        raise ConfigError("stdev must be > 0")
    rng = as_generator(seed)
    p = Params.zeros(layout)
    for name, b in layout.items():
        if name.rsplit("/", 1)[-1].startswith("b"):
            continue
        p[name][...] = rng.normal(0.0, stdev, size=b.shape)
    return p


def init(spec: MlpSpec, seed, stdev=0.02, last_tag="v", hidden_tag="omega"):
    return init_params(build_layout(mlp_blocks(spec, last_tag, hidden_tag)), seed, stdev)


def leaky_relu(a, slope=0.2):
    return np.where(a > 0, a, slope * a)


@dataclass
class MlpCache:
    inputs: list = field(default_factory=list)   # input to every layer
    preacts: list = field(default_factory=list)  # pre-activation of every layer
    out: Optional[np.ndarray] = None

    @property
    def features(self):
        """Penultimate activation, i.e. the input of the last layer."""
        return self.inputs[-1]


def _check_input(spec, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.in_dim:
        raise ShapeMismatch(f"expected input (n, {spec.in_dim}), got {X.shape}")
    return X


def forward_cache(params, spec: MlpSpec, X, prefix=""):
    X = _check_input(spec, X)
    cache = MlpCache()
    h = X
    last = spec.n_layers - 1
    for l in range(spec.n_layers):
        cache.inputs.append(h)
        a = h @ params[f"{prefix}W{l}"].T
        if l < last or spec.output_bias:
            a = a + params[f"{prefix}b{l}"]
        cache.preacts.append(a)
        if l < last:
            h = leaky_relu(a, spec.slope)
        elif spec.output_activation == "tanh":
            h = np.tanh(a)
        else:
            h = a
    cache.out = h
    return h, cache


def forward(params, spec: MlpSpec, X, prefix=""):
    """Deterministic forward pass, returns ``(n, out_dim)``."""
    return forward_cache(params, spec, X, prefix)[0]


def features(params, spec: MlpSpec, X, prefix=""):
    """Penultimate activations ``Phi(X)``."""
    return forward_cache(params, spec, X, prefix)[1].features


def backward(params, spec: MlpSpec, cache: MlpCache, dout=None, dfeat=None,
             need_input=False, grad=None, prefix=""):
    """Reverse pass. Accumulates into ``grad`` (a zero Params if None).

    ``dout`` is the upstream gradient w.r.t. the network output, ``dfeat`` an
    optional extra gradient w.r.t. the penultimate features. Returns
    ``(grad, dX)`` with ``dX`` None unless ``need_input``.
    """
    if grad is None:
        grad = Params.zeros(params.layout)
    last = spec.n_layers - 1
    n = cache.inputs[0].shape[0]
    d = None
    if dout is not None:
        d = np.asarray(dout, dtype=np.float64).reshape(n, spec.out_dim)
        if spec.output_activation == "tanh":
            d = d * (1.0 - cache.out**2)
    for l in range(last, -1, -1):
        if l < last:
            if l == last - 1 and dfeat is not None:
                d = dfeat if d is None else d + dfeat
            if d is None:
                continue
            d = d * np.where(cache.preacts[l] > 0, 1.0, spec.slope)
        elif d is None:
            continue
        grad[f"{prefix}W{l}"][...] += d.T @ cache.inputs[l]
        if l < last or spec.output_bias:
            grad[f"{prefix}b{l}"][...] += d.sum(axis=0)
        if l > 0 or need_input:
            d = d @ params[f"{prefix}W{l}"]
    if spec.n_layers == 1 and dfeat is not None and need_input:
        # features are the raw input
        d = dfeat if d is None else d + dfeat
    dX = d if need_input else None
    if need_input and dX is None:
        dX = np.zeros_like(cache.inputs[0])
    return grad, dX


def grad_params(params, spec: MlpSpec, X, loss_closure):
    """Exact gradient of ``loss_closure(forward(X))`` w.r.t. all parameters.

    ``loss_closure(out)`` returns ``(loss, dloss/dout)``.
    Returns ``(loss, Gradient)``.
    """
    out, cache = forward_cache(params, spec, X)
    if not np.all(np.isfinite(out)):
        raise NonFiniteLoss("forward pass produced non-finite outputs")
    loss, dout = loss_closure(out)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss}")
    grad, _ = backward(params, spec, cache, dout)
    return float(loss), grad


def grad_input(params, spec: MlpSpec, X):
    """Per-row gradient of a scalar-output network w.r.t. its input."""
    if spec.out_dim != 1:
        raise ShapeMismatch("grad_input needs a scalar-output network")
    out, cache = forward_cache(params, spec, X)
    _, dX = backward(params, spec, cache, np.ones_like(out), need_input=True)
    return dX


def input_grad_penalty(params, spec: MlpSpec, X, target=1.0):
    """Two-sided penalty ``mean((||grad_x f(x)|| - target)^2)`` and its gradient.

    Differentiates through the input-gradient chain by a second reverse pass.
    LeakyReLU masks are piecewise constant, so this is exact away from kinks.
    Requires a scalar critic with linear output. Returns
    ``(penalty, Gradient, input_grads)``.
    """
    if spec.out_dim != 1 or spec.output_activation != "linear":
        raise ConfigError("gradient penalty needs a scalar critic with linear output")
    _, cache = forward_cache(params, spec, X)
    n = cache.inputs[0].shape[0]
    last = spec.n_layers - 1
    masks = [np.where(cache.preacts[l] > 0, 1.0, spec.slope) for l in range(last)]
    # chain: g_last = W_last broadcast; g <- (g * mask_l) @ W_l
    g = np.broadcast_to(params[f"W{last}"], (n, spec.layer_sizes[-2])).copy()
    deltas = [None] * last
    for l in range(last - 1, -1, -1):
        deltas[l] = g * masks[l]
        g = deltas[l] @ params[f"W{l}"]
    norms = np.sqrt(np.einsum("ij,ij->i", g, g))
    penalty = float(np.mean((norms - target) ** 2))
    safe = np.where(norms > 0, norms, 1.0)
    u = (2.0 / n) * ((norms - target) / safe)[:, None] * g
    u = np.where(norms[:, None] > 0, u, 0.0)
    grad = Params.zeros(params.layout)
    for l in range(last):
        grad[f"W{l}"][...] += deltas[l].T @ u
        u = (u @ params[f"W{l}"].T) * masks[l]
    grad[f"W{last}"][...] += u.sum(axis=0, keepdims=True)
    return penalty, grad, g


# ---------------------------------------------------------------------------
# Critic forms
# ---------------------------------------------------------------------------

CRITIC_FORMS = ("plain", "split", "kplus1")


class CriticCache(NamedTuple):
    mlp: MlpCache
    features: np.ndarray
    logits: Optional[np.ndarray]
    probs: Optional[np.ndarray]
    f: np.ndarray


class Critic:
    """Scalar critic built on an MLP feature map.

    ``plain``  f(x) = MLP(x)
    ``split``  f(x) = <v, Phi(x)> (+ bias) with an extra classifier head S
    ``kplus1`` f(x) = sum_y p(y|x) <S_y, Phi(x)> - <v, Phi(x)>,
               p(y|x) = softmax(S Phi(x))_y

    The MLP's last layer is the ``v`` block. ``kplus1`` forces it bias-free.
    """

    def __init__(self, spec: MlpSpec, form="plain", n_classes=None):
        if form not in CRITIC_FORMS:
            raise ConfigError(f"critic form must be one of {CRITIC_FORMS}")
        if spec.out_dim != 1:
            raise ConfigError("critic MLP must have a scalar output")
        if form != "plain" and not n_classes:
            raise ConfigError(f"{form!r} critic needs n_classes")
        if form == "kplus1":
            spec = MlpSpec(spec.layer_sizes, spec.slope, "linear", output_bias=False)
        self.spec = spec
        self.form = form
        self.n_classes = int(n_classes) if n_classes else 0
        blocks = mlp_blocks(spec)
        if self.n_classes:
            blocks.append(("S", (self.n_classes, spec.feature_dim), "S"))
        self.layout = build_layout(blocks)

    def init(self, seed, stdev=0.02):
        return init_params(self.layout, seed, stdev)

    def forward_cache(self, params, X):
        out, c = forward_cache(params, self.spec, X)
        phi = c.features
        logits = probs = None
        if self.n_classes:
            logits = phi @ params["S"].T
            probs = softmax(logits)
        f = out[:, 0]
        if self.form == "kplus1":
            f = np.einsum("ij,ij->i", probs, logits) - f
        return f, CriticCache(c, phi, logits, probs, f)

    def __call__(self, params, X):
        return self.forward_cache(params, X)[0]

    def logits(self, params, X):
        return self.forward_cache(params, X)[1].logits

    def backward(self, params, cache: CriticCache, df=None, dlogits=None, need_input=False):
        """Gradient of a loss with ``dloss/df = df`` and ``dloss/dlogits = dlogits``."""
        n = cache.features.shape[0]
        dl = None if dlogits is None else np.array(dlogits, dtype=np.float64)
        dout = None
        if df is not None:
            df = np.asarray(df, dtype=np.float64).reshape(n)
            if self.form == "kplus1":
                # d/dl_y sum_k p_k l_k = p_y (1 + l_y - sum_k p_k l_k)
                mean_l = np.einsum("ij,ij->i", cache.probs, cache.logits)
                dk = df[:, None] * cache.probs * (1.0 + cache.logits - mean_l[:, None])
                dl = dk if dl is None else dl + dk
                dout = -df[:, None]
            else:
                dout = df[:, None]
        grad = Params.zeros(self.layout)
        dfeat = None
        if dl is not None:
            grad["S"][...] += dl.T @ cache.features
            dfeat = dl @ params["S"]
        grad, dX = backward(params, self.spec, cache.mlp, dout, dfeat, need_input, grad)
        return grad, dX


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def kplus1_critic(params, spec: MlpSpec, X, n_classes):
    """Value of the K+1 critic per row; see :class:`Critic`."""
    return Critic(spec, "kplus1", n_classes)(params, X)

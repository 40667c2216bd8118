"""Dense numerics and a small tanh MLP with hand-written gradients.

Every array function accepts either a single sample (1-D) or a batch
(2-D, one row per sample).  Gradients returned by :func:`backward` are
summed over the batch, so callers pick their own normalization inside
``dloss_dprobs``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

EPS = 1e-7


def sigmoid(x):
    """Logistic function, stable for large ``|x|``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def clamp_probability(q):
    return np.clip(q, EPS, 1.0 - EPS)


def bce(p, q):
    """Binary cross-entropy ``-p log q - (1-p) log(1-q)``, element-wise.

    ``p`` is the target, ``q`` the probability being scored.  ``q`` is
    clamped to ``[EPS, 1-EPS]`` before taking logs.
    """
    p = np.asarray(p, dtype=np.float64)
    qc = clamp_probability(np.asarray(q, dtype=np.float64))
    out = -p * np.log(qc) - (1.0 - p) * np.log1p(-qc)
    if out.ndim == 0:
        return float(out)
    return out


def bce_grad_q(p, q):
    """Derivative of :func:`bce` with respect to ``q``.

    Zero where the clamp is active, which is the exact derivative of the
    clamped function.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    qc = clamp_probability(q)
    g = (qc - p) / (qc * (1.0 - qc))
    return np.where((q > EPS) & (q < 1.0 - EPS), g, 0.0)


@dataclass
class MlpParams:
    """Weights of ``x -> sigmoid(w2 tanh(w1 x + b1) + b2)``.

    ``hidden_width == 0`` is the linear model ``sigmoid(w2 x + b2)``; then
    ``w1`` has shape ``(0, d)`` and ``b1`` shape ``(0,)``.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, np.asarray(getattr(self, f.name), dtype=np.float64))
        h, d = self.w1.shape
        n_out, n_in = self.w2.shape
        if self.b1.shape != (h,) or self.b2.shape != (n_out,):
            raise ValueError("bias shapes do not match weight shapes")
        if n_in != (h if h > 0 else d):
            raise ValueError(
                f"w2 expects {n_in} inputs but the hidden layer provides {h if h > 0 else d}"
            )

    @property
    def hidden_width(self) -> int:
        return self.w1.shape[0]

    @property
    def n_features(self) -> int:
        return self.w1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "MlpParams":
        return MlpParams(**{k: v.copy() for k, v in self.arrays().items()})

    def to_dict(self) -> dict:
        return {"hidden_width": self.hidden_width, "n_features": self.n_features,
                **{k: v.tolist() for k, v in self.arrays().items()}}

    @classmethod
    def from_dict(cls, data: dict) -> "MlpParams":
        h, d = int(data["hidden_width"]), int(data["n_features"])
        w1 = np.asarray(data["w1"], dtype=np.float64).reshape(h, d)
        b1 = np.asarray(data["b1"], dtype=np.float64).reshape(h)
        w2 = np.asarray(data["w2"], dtype=np.float64)
        if w2.ndim == 1:
            w2 = w2.reshape(-1, h if h > 0 else d)
        return cls(w1=w1, b1=b1, w2=w2, b2=np.asarray(data["b2"], dtype=np.float64))


@dataclass
class ForwardCache:
    x: np.ndarray
    hidden_pre: np.ndarray
    hidden: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


def init_params(n_features: int, n_classes: int, hidden_width: int = 0, rng=None,
                scale: float = 1.0) -> MlpParams:
    """Glorot-style random init; biases start at zero."""
    rng = np.random.default_rng(rng)
    if hidden_width > 0:
        w1 = rng.normal(0.0, scale / np.sqrt(n_features), size=(hidden_width, n_features))
        w2 = rng.normal(0.0, scale / np.sqrt(hidden_width), size=(n_classes, hidden_width))
    else:
        w1 = np.zeros((0, n_features))
        w2 = rng.normal(0.0, scale / np.sqrt(n_features), size=(n_classes, n_features))
    return MlpParams(w1=w1, b1=np.zeros(hidden_width), w2=w2, b2=np.zeros(n_classes))


def zeros_like(params: MlpParams) -> MlpParams:
    return MlpParams(**{k: np.zeros_like(v) for k, v in params.arrays().items()})


def forward(params: MlpParams, x):
    """Class probabilities for ``x`` plus the cache needed by :func:`backward`."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.n_features:
        raise ValueError(f"expected {params.n_features} features, got {x.shape[-1]}")
    if params.hidden_width > 0:
        hidden_pre = x @ params.w1.T + params.b1
        hidden = np.tanh(hidden_pre)
    else:
        hidden_pre = hidden = x[..., :0]
    inner = hidden if params.hidden_width > 0 else x
    logits = inner @ params.w2.T + params.b2
    probs = sigmoid(logits)
    return probs, ForwardCache(x=x, hidden_pre=hidden_pre, hidden=hidden, logits=logits, probs=probs)


def backward(params: MlpParams, cache: ForwardCache, dloss_dprobs) -> MlpParams:
    """Gradients of a loss with respect to every parameter tensor.

    ``dloss_dprobs`` has the shape of ``cache.probs``.  Contributions of
    the samples in a batch are summed.
    """
    g = np.asarray(dloss_dprobs, dtype=np.float64)
    if g.shape != cache.probs.shape:
        raise ValueError(f"gradient shape {g.shape} != probability shape {cache.probs.shape}")
    if params.w2.shape[0] != g.shape[-1]:
        raise ValueError("cache does not belong to these parameters")
    x2 = np.atleast_2d(cache.x)
    dlogits = np.atleast_2d(g * cache.probs * (1.0 - cache.probs))
    db2 = dlogits.sum(axis=0)
    if params.hidden_width == 0:
        return MlpParams(w1=np.zeros_like(params.w1), b1=np.zeros_like(params.b1),
                         w2=dlogits.T @ x2, b2=db2)
    hidden = np.atleast_2d(cache.hidden)
    dw2 = dlogits.T @ hidden
    dpre = (dlogits @ params.w2) * (1.0 - hidden ** 2)
    return MlpParams(w1=dpre.T @ x2, b1=dpre.sum(axis=0), w2=dw2, b2=db2)


def sgd_step(params: MlpParams, grads: MlpParams, lr: float) -> MlpParams:
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    out = {}
    for name, value in params.arrays().items():
        g = getattr(grads, name)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name}")
        with np.errstate(over="ignore", invalid="ignore"):
            out[name] = value - lr * g
        if not np.all(np.isfinite(out[name])):
            raise FloatingPointError(f"parameter {name} overflowed")
    return MlpParams(**out)

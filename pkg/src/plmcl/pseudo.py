"""Soft pseudo labels moved by momentum.

A :class:`PseudoState` holds the per-class vectors of one image, or of many
images stacked row-wise; every function here is element-wise over the last
axis and therefore works on either.  Observed entries are pinned: their
soft value is the observed bit, their momentum stays zero and their latent
slot is an unused 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ndcore import sigmoid


@dataclass(frozen=True)
class PseudoHyper:
    beta1: float = 0.7
    alpha: float = 1.0
    lam: float = 4.0
    n: int = 2

    def __post_init__(self):
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")


@dataclass
class PseudoState:
    latent: np.ndarray
    soft: np.ndarray
    momentum: np.ndarray
    observed_mask: np.ndarray
    observed_values: np.ndarray

    @property
    def free(self) -> np.ndarray:
        return ~self.observed_mask

    @property
    def n_scalars(self) -> int:
        return sum(a.size for a in (self.latent, self.soft, self.momentum,
                                    self.observed_mask, self.observed_values))

    def rows(self, idx) -> "PseudoState":
        return PseudoState(self.latent[idx], self.soft[idx], self.momentum[idx],
                           self.observed_mask[idx], self.observed_values[idx])

    def assign_rows(self, idx, sub: "PseudoState") -> None:
        """Write ``sub`` back into rows ``idx`` in place."""
        self.latent[idx] = sub.latent
        self.soft[idx] = sub.soft
        self.momentum[idx] = sub.momentum

    def confidence(self) -> float:
        """Mean ``|2 soft - 1|`` over free entries (nan when there are none)."""
        free = self.free
        if not free.any():
            return float("nan")
        return float(np.abs(2.0 * self.soft[free] - 1.0).mean())


def init_pseudo(obs_row) -> PseudoState:
    """Initial state from an observation vector or matrix coded 1 / 0 / -1."""
    obs = np.asarray(obs_row)
    mask = obs >= 0
    values = np.where(mask, obs, 0).astype(np.int8)
    soft = np.where(mask, values, 0.5).astype(np.float64)
    zeros = np.zeros(obs.shape, dtype=np.float64)
    return PseudoState(latent=zeros, soft=soft, momentum=zeros.copy(),
                       observed_mask=mask, observed_values=values)


def grad_lcs(pred, state: PseudoState) -> np.ndarray:
    """Gradient of the mean BCE between ``pred`` and the soft labels w.r.t. the latents.

    With ``soft = sigmoid(latent)`` the chain rule collapses to
    ``(soft - pred) / L`` on free entries.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != state.soft.shape:
        raise ValueError(f"prediction shape {pred.shape} != state shape {state.soft.shape}")
    n_classes = pred.shape[-1]
    return np.where(state.free, (state.soft - pred) / n_classes, 0.0)


def momentum_step(state: PseudoState, grad, beta1: float) -> PseudoState:
    if not 0.0 <= beta1 < 1.0:
        raise ValueError(f"beta1 must lie in [0, 1), got {beta1}")
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient in momentum update")
    m = beta1 * state.momentum + (1.0 - beta1) * grad
    return replace(state, momentum=np.where(state.free, m, 0.0))


def self_guided_factor(soft, hyper: PseudoHyper):
    """Step-size factor ``alpha * exp(-lam * |2 soft - 1| ** n)``, largest at soft = 0.5."""
    conf = np.abs(2.0 * np.asarray(soft, dtype=np.float64) - 1.0)
    return hyper.alpha * np.exp(-hyper.lam * conf ** hyper.n)


def latent_update(state: PseudoState, hyper: PseudoHyper) -> PseudoState:
    """Move free latents against the momentum, then squash them back through the sigmoid.

    The factor is evaluated on the soft labels held before this update.
    """
    free = state.free
    step = self_guided_factor(state.soft, hyper) * state.momentum
    latent = np.where(free, state.latent - step, state.latent)
    if not np.all(np.isfinite(latent)):
        raise FloatingPointError("non-finite latent pseudo label")
    soft = np.where(free, sigmoid(latent), state.soft)
    return replace(state, latent=latent, soft=soft)


def epoch_update(state: PseudoState, pred, hyper: PseudoHyper) -> PseudoState:
    """One gradient -> momentum -> latent -> sigmoid round for the given predictions."""
    g = grad_lcs(pred, state)
    return latent_update(momentum_step(state, g, hyper.beta1), hyper)

"""Scheduled pseudo-label objective and the assume-negative baselines.

Every loss here is a weighted BCE over the entries of ``pred`` (plus, for
the observed term, a squared-count regularizer), so they share one kernel
that yields the value, the split between observed and unobserved entries,
and the gradient with respect to ``pred``.  For a 2-D batch the per-image
losses are averaged over rows.

Pass ``with_grad=True`` to get ``(value, dvalue_dpred)`` back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ndcore import bce, bce_grad_q
from .pseudo import PseudoState

LOSSES = ("plmcl", "an", "an_ls", "wan")

# fixed sharpness of the scheduler's confidence term
_XI_SHARPNESS = 10.0


@dataclass(frozen=True)
class LossBreakdown:
    obs_term: float
    unobs_term: float
    regularizer: float

    @property
    def total(self) -> float:
        return self.obs_term + self.unobs_term + self.regularizer

    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        return LossBreakdown(self.obs_term + other.obs_term,
                             self.unobs_term + other.unobs_term,
                             self.regularizer + other.regularizer)

    def scaled(self, factor: float) -> "LossBreakdown":
        return LossBreakdown(self.obs_term * factor, self.unobs_term * factor,
                             self.regularizer * factor)


def scheduler_xi(soft, phi, beta2):
    """Weight of an unobserved entry given its soft label and training progress ``phi``.

    Zero for an uncertain label at the start of training, ``beta2`` at the end.
    """
    gamma = 1.0 - np.asarray(phi, dtype=np.float64)
    e = np.exp(-_XI_SHARPNESS * np.abs(2.0 * np.asarray(soft, dtype=np.float64) - 1.0))
    out = beta2 * (1.0 - gamma * e) / (1.0 + gamma * e)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _weighted_bce(pred, targets, weights, observed):
    """Batch-mean of ``sum_j w_j bce(t_j, pred_j)`` split by the observed mask."""
    pred = np.asarray(pred, dtype=np.float64)
    n_rows = pred.shape[0] if pred.ndim == 2 else 1
    terms = weights * bce(targets, pred)
    obs_part = float(np.where(observed, terms, 0.0).sum()) / n_rows
    unobs_part = float(np.where(observed, 0.0, terms).sum()) / n_rows
    grad = weights * bce_grad_q(targets, pred) / n_rows
    return obs_part, unobs_part, grad


def _regularizer(pred, reg_weight, expected_positives):
    pred = np.asarray(pred, dtype=np.float64)
    n_rows = pred.shape[0] if pred.ndim == 2 else 1
    n_classes = pred.shape[-1]
    dev = (pred.sum(axis=-1, keepdims=True) - expected_positives) / n_classes
    value = reg_weight * float((dev ** 2).sum()) / n_rows
    grad = np.broadcast_to(2.0 * reg_weight * dev / n_classes / n_rows, pred.shape)
    return value, grad


def _observed(obs):
    obs = np.asarray(obs)
    return obs >= 0, np.where(obs > 0, 1.0, 0.0)


def _check(pred, obs):
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != np.shape(obs):
        raise ValueError(f"prediction shape {pred.shape} != observation shape {np.shape(obs)}")
    return pred


def _obs_breakdown(pred, obs, reg_weight, expected_positives):
    observed, targets = _observed(obs)
    n_obs = observed.sum(axis=-1, keepdims=True)
    weights = np.where(observed, 1.0 / np.maximum(n_obs, 1), 0.0)
    obs_part, _, grad = _weighted_bce(pred, targets, weights, observed)
    reg, reg_grad = _regularizer(pred, reg_weight, expected_positives)
    return obs_part, reg, grad + reg_grad


def loss_obs(pred, obs, reg_weight: float = 0.1, expected_positives: float = 1.0,
             with_grad: bool = False):
    """Mean BCE over observed entries plus ``reg_weight * ((sum(pred) - k) / L) ** 2``.

    Images without observations contribute only the regularizer.
    """
    pred = _check(pred, obs)
    obs_part, reg, grad = _obs_breakdown(pred, obs, reg_weight, expected_positives)
    if with_grad:
        return obs_part + reg, grad
    return obs_part + reg


def _unobs_breakdown(pred, state: PseudoState, phi, beta2):
    free = state.free
    weights = np.where(free, scheduler_xi(state.soft, phi, beta2), 0.0)
    _, unobs_part, grad = _weighted_bce(pred, state.soft, weights, ~free)
    return unobs_part, grad


def loss_unobs(pred, state: PseudoState, phi: float, beta2: float = 0.6,
               with_grad: bool = False):
    """Scheduler-weighted BCE pulling predictions toward the soft pseudo labels.

    The soft labels are constants here; they move only through the momentum
    update.
    """
    pred = _check(pred, state.soft)
    value, grad = _unobs_breakdown(pred, state, phi, beta2)
    if with_grad:
        return value, grad
    return value


def loss_plmcl(pred, state: PseudoState, obs, phi: float, beta2: float = 0.6,
               reg_weight: float = 0.1, expected_positives: float = 1.0,
               with_grad: bool = False):
    """Observed-label term plus scheduled pseudo-label term, as a :class:`LossBreakdown`."""
    pred = _check(pred, obs)
    obs_part, reg, g_obs = _obs_breakdown(pred, obs, reg_weight, expected_positives)
    unobs_part, g_unobs = _unobs_breakdown(pred, state, phi, beta2)
    out = LossBreakdown(obs_part, unobs_part, reg)
    if with_grad:
        return out, g_obs + g_unobs
    return out


def _assume_negative(pred, obs, target_pos, target_neg, assumed_weight, with_grad=False):
    pred = _check(pred, obs)
    observed, _ = _observed(obs)
    n_classes = pred.shape[-1]
    targets = np.where(np.asarray(obs) > 0, target_pos, target_neg)
    weights = np.where(observed, 1.0, assumed_weight) / n_classes
    obs_part, unobs_part, grad = _weighted_bce(pred, targets, weights, observed)
    out = LossBreakdown(obs_part, unobs_part, 0.0)
    if with_grad:
        return out, grad
    return out.total


def loss_an(pred, obs, with_grad: bool = False):
    """Mean BCE over all classes with unobserved entries taken as negatives."""
    return _public(_assume_negative(pred, obs, 1.0, 0.0, 1.0, with_grad), with_grad)


def loss_an_ls(pred, obs, eps: float = 0.1, with_grad: bool = False):
    """Assume-negative BCE with targets smoothed to ``1 - eps`` and ``eps``."""
    return _public(_assume_negative(pred, obs, 1.0 - eps, eps, 1.0, with_grad), with_grad)


def loss_wan(pred, obs, gamma_w: float | None = None, with_grad: bool = False):
    """Assume-negative BCE with the assumed negatives down-weighted by ``gamma_w``.

    ``gamma_w`` defaults to ``1 / (L - 1)``.  Observed negatives keep weight 1.
    """
    if gamma_w is None:
        n_classes = np.shape(pred)[-1]
        gamma_w = 1.0 / (n_classes - 1) if n_classes > 1 else 1.0
    return _public(_assume_negative(pred, obs, 1.0, 0.0, gamma_w, with_grad), with_grad)


def _public(result, with_grad):
    if with_grad:
        breakdown, grad = result
        return breakdown.total, grad
    return result


def objective(name: str, pred, obs, state: PseudoState | None = None, phi: float = 0.0,
              beta2: float = 0.6, reg_weight: float = 0.1, expected_positives: float = 1.0,
              ls_eps: float = 0.1, wan_gamma: float | None = None):
    """``(LossBreakdown, dloss_dpred)`` for the loss called ``name``."""
    if name == "plmcl":
        if state is None:
            raise ValueError("the plmcl loss needs a pseudo-label state")
        return loss_plmcl(pred, state, obs, phi, beta2, reg_weight, expected_positives,
                          with_grad=True)
    if name == "an":
        return _assume_negative(pred, obs, 1.0, 0.0, 1.0, True)
    if name == "an_ls":
        return _assume_negative(pred, obs, 1.0 - ls_eps, ls_eps, 1.0, True)
    if name == "wan":
        if wan_gamma is None:
            n_classes = np.shape(pred)[-1]
            wan_gamma = 1.0 / (n_classes - 1) if n_classes > 1 else 1.0
        return _assume_negative(pred, obs, 1.0, 0.0, wan_gamma, True)
    raise ValueError(f"unknown loss {name!r}; expected one of {LOSSES}")

"""Observation masks for the five label settings.

Observations use the on-disk coding: 1 positive, 0 negative, -1 unobserved.
Random draws come from :func:`numpy.random.default_rng` (PCG64), so a seed
gives the same mask on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

SETTINGS = ("ffl", "fpl", "fspl", "sspl", "sfl")


class Obs(IntEnum):
    POSITIVE = 1
    NEGATIVE = 0
    UNOBSERVED = -1


@dataclass
class ObservationMatrix:
    obs: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.obs)
        if obs.ndim != 2:
            raise ValueError("observation matrix must be 2-D")
        if not np.isin(obs, (-1, 0, 1)).all():
            raise ValueError("observations must be 1, 0 or -1")
        self.obs = obs.astype(np.int8)

    @property
    def shape(self):
        return self.obs.shape

    @property
    def observed(self) -> np.ndarray:
        return self.obs != Obs.UNOBSERVED

    @property
    def labeled_set(self) -> np.ndarray:
        """Indices of rows with at least one observed entry."""
        return np.flatnonzero(self.observed.any(axis=1))

    def n_observed(self) -> int:
        return int(self.observed.sum())

    def __eq__(self, other):
        if not isinstance(other, ObservationMatrix):
            return NotImplemented
        return self.obs.shape == other.obs.shape and bool(np.array_equal(self.obs, other.obs))


def _check_gt(gt) -> np.ndarray:
    gt = np.asarray(gt)
    if gt.ndim != 2:
        raise ValueError("ground truth must be a 2-D 0/1 matrix")
    if not np.isin(gt, (0, 1)).all():
        raise ValueError("ground truth entries must be 0 or 1")
    return gt.astype(np.int8)


def _check_fraction(fraction: float, name: str) -> float:
    fraction = float(fraction)
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"{name} must lie in (0, 1], got {fraction}")
    return fraction


def _subset_rows(n_rows: int, fraction: float, rng) -> np.ndarray:
    n_keep = math.floor(fraction * n_rows)
    keep = np.zeros(n_rows, dtype=bool)
    if n_keep == n_rows:
        return ~keep
    keep[rng.choice(n_rows, size=n_keep, replace=False)] = True
    return keep


def mask_ffl(gt) -> ObservationMatrix:
    return ObservationMatrix(_check_gt(gt).copy())


def mask_fspl(gt, rng) -> ObservationMatrix:
    """Keep one positive per image, chosen uniformly among its positives."""
    gt = _check_gt(gt)
    empty = np.flatnonzero(gt.sum(axis=1) == 0)
    if empty.size:
        raise ValueError(f"row {empty[0]} has no positive label to observe")
    rng = np.random.default_rng(rng)
    # argmax of i.i.d. uniforms restricted to the positives is a uniform pick
    keys = np.where(gt == 1, rng.random(gt.shape), -1.0)
    chosen = keys.argmax(axis=1)
    obs = np.full(gt.shape, Obs.UNOBSERVED, dtype=np.int8)
    obs[np.arange(gt.shape[0]), chosen] = Obs.POSITIVE
    return ObservationMatrix(obs)


def mask_sspl(gt, labeled_fraction: float, rng) -> ObservationMatrix:
    """Single-positive masks on ``floor(fraction * N)`` random rows; the rest unlabeled.

    The per-row draw happens before the subset draw, so ``labeled_fraction=1``
    reproduces :func:`mask_fspl` under the same seed.
    """
    labeled_fraction = _check_fraction(labeled_fraction, "labeled_fraction")
    rng = np.random.default_rng(rng)
    obs = mask_fspl(gt, rng).obs
    keep = _subset_rows(obs.shape[0], labeled_fraction, rng)
    obs[~keep] = Obs.UNOBSERVED
    return ObservationMatrix(obs)


def mask_fpl(gt, per_image_fraction: float, rng) -> ObservationMatrix:
    """Observe ``ceil(fraction * L)`` random entries per image, positives and negatives alike."""
    per_image_fraction = _check_fraction(per_image_fraction, "per_image_fraction")
    gt = _check_gt(gt)
    n, n_classes = gt.shape
    k = max(1, math.ceil(per_image_fraction * n_classes))
    if k >= n_classes:
        return mask_ffl(gt)
    rng = np.random.default_rng(rng)
    picked = np.argsort(rng.random((n, n_classes)), axis=1, kind="stable")[:, :k]
    obs = np.full(gt.shape, Obs.UNOBSERVED, dtype=np.int8)
    rows = np.arange(n)[:, None]
    obs[rows, picked] = gt[rows, picked]
    return ObservationMatrix(obs)


def mask_sfl(gt, labeled_fraction: float, rng) -> ObservationMatrix:
    """Fully observe ``floor(fraction * N)`` random rows; the rest unlabeled."""
    labeled_fraction = _check_fraction(labeled_fraction, "labeled_fraction")
    obs = _check_gt(gt).copy()
    keep = _subset_rows(obs.shape[0], labeled_fraction, np.random.default_rng(rng))
    obs[~keep] = Obs.UNOBSERVED
    return ObservationMatrix(obs)


def make_mask(setting: str, gt, fraction: float = 1.0, seed=0) -> ObservationMatrix:
    """Dispatch on a setting name; ``fraction`` is ignored for ffl and fspl."""
    setting = setting.lower()
    if setting == "ffl":
        return mask_ffl(gt)
    if setting == "fspl":
        return mask_fspl(gt, seed)
    if setting == "sspl":
        return mask_sspl(gt, fraction, seed)
    if setting == "fpl":
        return mask_fpl(gt, fraction, seed)
    if setting == "sfl":
        return mask_sfl(gt, fraction, seed)
    raise ValueError(f"unknown label setting {setting!r}; expected one of {SETTINGS}")

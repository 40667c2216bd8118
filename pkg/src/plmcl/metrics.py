"""Average precision and its class mean for multi-label score matrices."""

from __future__ import annotations

import math

import numpy as np


def average_precision(scores, truth) -> float:
    """AP of one class: mean of precision@k over the ranks k of the positives.

    Items are ranked by descending score; equal scores keep their original
    order (stable sort).  The precisions are summed with ``math.fsum``, which
    rounds once, so the result does not depend on summation order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth).astype(bool)
    if scores.shape != truth.shape or scores.ndim != 1:
        raise ValueError("scores and truth must be 1-D arrays of equal length")
    n_pos = int(truth.sum())
    if n_pos == 0:
        raise ValueError("average precision is undefined without positives")
    order = np.argsort(-scores, kind="stable")
    hits = truth[order]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, n_pos + 1) / ranks
    return math.fsum(precision_at_hits.tolist()) / n_pos


def per_class_ap(scores, truth) -> np.ndarray:
    """AP for each column; nan for classes with no positive."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.shape != truth.shape or scores.ndim != 2:
        raise ValueError(f"score shape {scores.shape} != truth shape {truth.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    out = np.full(scores.shape[1], np.nan)
    for j in range(scores.shape[1]):
        if truth[:, j].any():
            out[j] = average_precision(scores[:, j], truth[:, j])
    return out


def mean_of_aps(aps) -> float:
    """Mean of the non-nan entries of a per-class AP vector; nan when all are nan."""
    aps = np.asarray(aps, dtype=np.float64)
    valid = aps[~np.isnan(aps)]
    if valid.size == 0:
        return float("nan")
    return math.fsum(valid.tolist()) / valid.size


def mean_average_precision(scores, truth) -> float:
    """Unweighted mean of per-class AP over classes that have a positive."""
    aps = per_class_ap(scores, truth)
    if np.isnan(aps).all():
        raise ValueError("no class has a positive example")
    return mean_of_aps(aps)

"""Input checks shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np

from .labelsettings import ObservationMatrix


def check_observations(Y, n_rows=None) -> np.ndarray:
    """Return ``Y`` as an int8 matrix of 1 / 0 / -1 codes."""
    if isinstance(Y, ObservationMatrix):
        Y = Y.obs
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError(f"observations must be 2-D, got shape {Y.shape}")
    if not np.isin(Y, (-1, 0, 1)).all():
        raise ValueError("observations must be coded 1, 0 or -1")
    if n_rows is not None and Y.shape[0] != n_rows:
        raise ValueError(f"{n_rows} samples but {Y.shape[0]} observation rows")
    return Y.astype(np.int8)


def check_truth(Y, shape=None) -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError(f"labels must be 2-D, got shape {Y.shape}")
    if not np.isin(Y, (0, 1)).all():
        raise ValueError("ground-truth labels must be 0 or 1")
    if shape is not None and Y.shape != tuple(shape):
        raise ValueError(f"labels have shape {Y.shape}, expected {tuple(shape)}")
    return Y.astype(np.int8)

"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np


def check_levels_array(X, name: str = "X") -> np.ndarray:
    """Validate a (n_samples, 3) array of functioning levels 1..5."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(
            f"{name} must have shape (n_samples, 3) with one level per "
            f"category, got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one sample")
    if not np.issubdtype(X.dtype, np.number):
        raise ValueError(f"{name} must be numeric, got dtype {X.dtype}")
    as_int = X.astype(np.int64)
    if not np.array_equal(as_int, X):
        raise ValueError(f"{name} levels must be integers")
    if as_int.min() < 1 or as_int.max() > 5:
        raise ValueError(f"{name} levels must lie in 1..5")
    return as_int


def check_level_labels(y, n_samples: int, name: str = "y") -> np.ndarray:
    """Validate a (n_samples,) vector of level labels 1..5."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {y.shape}")
    if y.shape[0] != n_samples:
        raise ValueError(
            f"{name} has {y.shape[0]} labels for {n_samples} samples")
    as_int = y.astype(np.int64)
    if not np.array_equal(as_int, y):
        raise ValueError(f"{name} labels must be integers")
    if as_int.min() < 1 or as_int.max() > 5:
        raise ValueError(f"{name} labels must lie in 1..5")
    return as_int

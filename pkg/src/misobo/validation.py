"""Small input-validation helpers shared across the estimators."""

from __future__ import annotations

import numpy as np

# Slack allowed when checking unit-cube membership; absorbs round-trip noise
# from the log-scale transforms.
UNIT_ATOL = 1e-9


def as_point_matrix(X, d=None, name="X"):
    """Coerce to a float (n, d) matrix; a single point (d,) becomes (1, d)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"{name} must be a point or a matrix of points, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    if d is not None and X.shape[1] != d:
        raise ValueError(f"{name} has {X.shape[1]} columns, expected {d}")
    return X


def check_unit_points(X, d=None, name="X"):
    """Validate points in the unit cube, clipping unit-scale float fuzz."""
    X = as_point_matrix(X, d=d, name=name)
    if X.size and (X.min() < -UNIT_ATOL or X.max() > 1.0 + UNIT_ATOL):
        raise ValueError(f"{name} has coordinates outside [0, 1]")
    return np.clip(X, 0.0, 1.0)


def as_vector(y, n=None, name="y"):
    """Coerce to a finite float vector of length n."""
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    if n is not None and y.shape[0] != n:
        raise ValueError(f"{name} has length {y.shape[0]}, expected {n}")
    return y

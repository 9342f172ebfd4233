"""Shared input checks for estimators and rule evaluators."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


def check_feature_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Coerce ``X`` to a finite 2-D float64 array, optionally checking width."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if X.size and not np.isfinite(X).all():
        raise ValueError("feature matrix contains NaN or infinite values")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def check_sample(x, n_features: int | None = None) -> np.ndarray:
    """Coerce a single sample to a finite 1-D float64 array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D sample, got ndim={x.ndim}")
    if x.size and not np.isfinite(x).all():
        raise ValueError("sample contains NaN or infinite values")
    if n_features is not None and x.shape[0] != n_features:
        raise ValueError(f"expected {n_features} features, got {x.shape[0]}")
    return x


def check_binary_targets(y, n_samples: int | None = None) -> np.ndarray:
    """Coerce targets to int64 and require every value to be 0 or 1."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"expected a 1-D target vector, got ndim={y.ndim}")
    if y.dtype.kind == "f" and y.size and not (y == np.rint(y)).all():
        raise ValueError("targets must be integers")
    y = y.astype(np.int64)
    if y.size and not np.isin(y, (0, 1)).all():
        raise ValueError("targets must be 0 or 1")
    if n_samples is not None and y.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} targets, got {y.shape[0]}")
    return y


def check_is_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit first"
        )

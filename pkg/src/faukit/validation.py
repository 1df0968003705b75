"""Small input-validation helpers shared by the estimator and the data layer.

All helpers coerce to float64 C-contiguous arrays and raise typed errors from
:mod:`faukit.errors` so the CLI can map them onto its exit-code contract.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError


def as_float_array(values, name: str = "array") -> np.ndarray:
    """Coerce to a float64 ndarray, rejecting non-numeric input."""
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name} is not numeric: {exc}") from None
    return arr


def check_feature_matrix(X, expected_dim: int | None = None, name: str = "X") -> np.ndarray:
    """Validate a 2-D (n_samples, n_features) float matrix."""
    arr = as_float_array(X, name)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D (n_samples, n_features), got ndim={arr.ndim}")
    if expected_dim is not None and arr.shape[1] != expected_dim:
        raise DimensionError(
            f"{name} has {arr.shape[1]} features, expected {expected_dim}"
        )
    return np.ascontiguousarray(arr)


def check_probability_vector(p, expected_len: int | None = None, name: str = "p") -> np.ndarray:
    """Validate a 1-D vector of probabilities in [0, 1]."""
    arr = as_float_array(p, name)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if expected_len is not None and arr.shape[0] != expected_len:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {expected_len}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError(f"{name} values must lie in [0, 1]")
    return arr


def check_labels(y, n_classes: int, name: str = "y") -> np.ndarray:
    """Validate an integer label vector with values in 0..n_classes-1."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={arr.ndim}")
    try:
        ints = arr.astype(np.int64)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must contain integer labels") from None
    if not np.array_equal(ints, np.asarray(arr, dtype=np.float64)):
        raise DomainError(f"{name} must contain integer labels")
    if ints.size and (ints.min() < 0 or ints.max() >= n_classes):
        raise DomainError(f"{name} labels must lie in 0..{n_classes - 1}")
    return ints


def check_open_unit(value: float, name: str) -> float:
    """Validate a scalar in the open interval (0, 1)."""
    value = float(value)
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_unit_interval(value: float, name: str) -> float:
    """Validate a scalar in the closed interval [0, 1]."""
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_non_negative(value: float, name: str) -> float:
    value = float(value)
    if value < 0.0:
        raise DomainError(f"{name} must be >= 0, got {value}")
    return value

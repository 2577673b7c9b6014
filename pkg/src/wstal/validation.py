"""Input validation helpers used at the public API boundaries."""

from __future__ import annotations

import numpy as np


def check_features(features, name: str = "features") -> np.ndarray:
    """Coerce to a finite (T, d) float64 array with T >= 1 and d >= 1."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d (segments x dims), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_vector(v, length: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


def check_label_set(labels, num_classes: int) -> tuple[int, ...]:
    """Normalize video-level labels to a sorted tuple of ids in 1..num_classes.

    Id 0 is reserved for the background class and is never a valid video label.
    """
    ids = sorted({int(y) for y in labels})
    if not ids:
        raise ValueError("label set is empty")
    for y in ids:
        if y < 1 or y > num_classes:
            raise ValueError(
                f"label id {y} outside the valid range 1..{num_classes} "
                "(0 is reserved for background)"
            )
    return tuple(ids)


def check_probability_vector(p, name: str = "probabilities") -> np.ndarray:
    arr = check_vector(p, name=name)
    if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} is not a probability simplex vector")
    return arr


def check_unit_interval(v, name: str = "values") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr

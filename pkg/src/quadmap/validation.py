"""Input validation helpers.

All public entry points funnel array-likes through these checks so that
shape and value errors surface early, with consistent exception types.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, ShapeError


def as_dense_map(x, name: str = "map") -> np.ndarray:
    """Coerce to a 2-D float64 grid of finite, non-negative values."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise ShapeError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite values")
    if np.any(a < 0):
        raise ValueError(f"{name} contains negative values")
    return a


def as_image(x, name: str = "image") -> np.ndarray:
    """Coerce to an (h, w, c) float64 array of intensities in [0, 1].

    A 2-D input is promoted to a single channel.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[0] == 0 or a.shape[1] == 0 or a.shape[2] == 0:
        raise ShapeError(f"{name} must be (h, w) or (h, w, c), got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ValueError(f"{name} intensities must lie in [0, 1]")
    return a


def require_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what} have mismatched shapes {a.shape} vs {b.shape}")


def require_divisible(h: int, w: int, factor: int, name: str = "map") -> None:
    if h % factor or w % factor:
        raise DimensionError(
            f"{name} dimensions ({h}, {w}) must be divisible by {factor}"
        )


def require_even(h: int, w: int, name: str = "grid") -> None:
    if h % 2 or w % 2:
        raise DimensionError(f"{name} dimensions ({h}, {w}) must be even")

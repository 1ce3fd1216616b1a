"""Estimator-style front end for the quadtree codec.

``QuadtreeEncoder`` follows the scikit-learn transformer protocol
(``fit``/``transform``/``inverse_transform`` plus ``get_params``/
``set_params``) without importing scikit-learn, so it clones and composes
in that ecosystem while keeping this package dependency-light.
"""

from __future__ import annotations

import numpy as np

from .quadtree import EncodeConfig, QuadForest, encode_dense, rasterize
from .validation import as_dense_map, require_divisible


class QuadtreeEncoder:
    """Lossy quadtree transform for dense non-negative disparity maps.

    Parameters
    ----------
    tau : float
        Subdivision threshold; a cell splits when the spread of its four
        child candidates exceeds it. 0 keeps everything (lossless on maps
        without exactly-equal sibling means).
    level_count : int
        Number of quadtree levels; input dimensions must be divisible by
        ``2 ** (level_count - 1)``.
    keep_children : bool
        When False, sibling quadruples without deeper structure are dropped
        for the smallest tree.
    """

    def __init__(self, tau: float = 0.1, level_count: int = 6, keep_children: bool = True):
        self.tau = tau
        self.level_count = level_count
        self.keep_children = keep_children

    def _config(self) -> EncodeConfig:
        return EncodeConfig(
            tau=self.tau,
            level_count=self.level_count,
            keep_children=self.keep_children,
        )

    def get_params(self, deep: bool = True) -> dict:
        return {
            "tau": self.tau,
            "level_count": self.level_count,
            "keep_children": self.keep_children,
        }

    def set_params(self, **params) -> "QuadtreeEncoder":
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r} for QuadtreeEncoder")
            setattr(self, key, value)
        return self

    def fit(self, X, y=None) -> "QuadtreeEncoder":
        """Validate the input; the transform itself is stateless."""
        X = as_dense_map(X, "X")
        cfg = self._config()
        require_divisible(*X.shape, 2 ** (cfg.level_count - 1), "X")
        return self

    def transform(self, X) -> QuadForest:
        return encode_dense(X, self._config())

    def fit_transform(self, X, y=None) -> QuadForest:
        return self.fit(X).transform(X)

    def inverse_transform(self, forest: QuadForest) -> np.ndarray:
        return rasterize(forest)

    def reconstruct(self, X) -> np.ndarray:
        """Round-trip a map through the transform (encode, then expand)."""
        return self.inverse_transform(self.transform(X))

    def __repr__(self) -> str:
        return (
            f"QuadtreeEncoder(tau={self.tau!r}, level_count={self.level_count!r}, "
            f"keep_children={self.keep_children!r})"
        )

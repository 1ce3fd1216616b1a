"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from quadmap import LevelSlice, QuadForest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


def up2(a: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(a, 2, axis=0), 2, axis=1)


def random_forest(
    rng: np.random.Generator,
    base_h: int = 2,
    base_w: int = 2,
    level_count: int = 4,
    p_active: float = 0.45,
    f32_values: bool = True,
) -> QuadForest:
    """Random structurally valid forest.

    Activity is drawn per cell, presence follows from it, and values are
    float32-representable by default so QFM1 round trips are bit-exact.
    """
    present = [None] * level_count
    active = [None] * level_count
    shapes = [
        (base_h * 2 ** (level_count - 1 - lv), base_w * 2 ** (level_count - 1 - lv))
        for lv in range(level_count)
    ]
    present[level_count - 1] = np.ones(shapes[level_count - 1], dtype=bool)
    for lv in range(level_count - 1, 0, -1):
        active[lv] = present[lv] & (rng.random(shapes[lv]) < p_active)
        present[lv - 1] = up2(active[lv])
    active[0] = np.zeros(shapes[0], dtype=bool)

    slices = []
    for lv in range(level_count - 1, -1, -1):
        vals = rng.uniform(0.0, 20.0, size=shapes[lv])
        if f32_values:
            vals = vals.astype(np.float32).astype(np.float64)
        slices.append(
            LevelSlice(
                level=lv,
                values=np.where(present[lv], vals, 0.0),
                present=present[lv],
                active=active[lv],
            )
        )
    forest = QuadForest(levels=slices, base_h=base_h, base_w=base_w)
    forest.validate()
    return forest

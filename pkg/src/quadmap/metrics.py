"""Evaluation quantities: compression ratio, tree-structure agreement,
per-level data distribution, and depth error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError, ShapeError
from .quadtree import QuadForest, node_count
from .validation import require_same_shape


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rmse: float
    n_valid: int


@dataclass(frozen=True)
class StructureReport:
    """Agreement between the branching structures of two forests."""

    likelihood: float
    per_level_match: tuple[float, ...]
    compression_a: float
    compression_b: float


def compression_ratio(f: QuadForest) -> float:
    """Dense pixel count divided by the number of stored nodes."""
    return f.full_h * f.full_w / node_count(f).total


def _labels(sl) -> np.ndarray:
    # 0 absent, 1 leaf (present, not subdivided), 2 inner (present, subdivided)
    return sl.present.astype(np.int8) + sl.active.astype(np.int8)


def structure_likelihood(a: QuadForest, b: QuadForest) -> StructureReport:
    """Label-match between two forests of identical geometry.

    Every cell is labeled absent, leaf, or inner; a level's match is the
    fraction of equal labels, and the overall likelihood weights levels by
    the union of their present-cell counts.
    """
    if a.level_count != b.level_count or a.base_h != b.base_h or a.base_w != b.base_w:
        raise ShapeError(
            f"forests have mismatched geometry "
            f"({a.level_count}, {a.base_h}, {a.base_w}) vs "
            f"({b.level_count}, {b.base_h}, {b.base_w})"
        )
    matches = []
    weights = []
    for sa, sb in zip(a.levels, b.levels):
        matches.append(float((_labels(sa) == _labels(sb)).mean()))
        weights.append(int((sa.present | sb.present).sum()))
    total_w = sum(weights)
    likelihood = sum(m * w for m, w in zip(matches, weights)) / total_w
    return StructureReport(
        likelihood=likelihood,
        per_level_match=tuple(matches),
        compression_a=compression_ratio(a),
        compression_b=compression_ratio(b),
    )


def level_distribution(f: QuadForest) -> tuple[float, ...]:
    """Percentage of pixels whose final value originates at each level
    (coarsest first). A pixel's origin is the finest present cell covering
    it, which is what the composed full-resolution map actually shows."""
    origin = np.full((f.full_h, f.full_w), f.level_count - 1, dtype=np.int32)
    for level in range(f.level_count - 1, -1, -1):
        sl = f.slice_at(level)
        factor = 2**level
        pres = np.repeat(np.repeat(sl.present, factor, axis=0), factor, axis=1)
        origin = np.where(pres, level, origin)
    total = origin.size
    return tuple(
        float((origin == level).sum()) * 100.0 / total
        for level in range(f.level_count - 1, -1, -1)
    )


def depth_metrics(
    pred,
    gt,
    valid_mask,
    scale: float = 1.0,
    space: str = "depth",
    max_depth: float | None = None,
) -> DepthMetrics:
    """Absolute relative, square relative, and RMS errors over masked pixels.

    Inputs are disparity grids. In the default depth space both are
    converted through depth = scale / disparity before scoring; pass
    space="disparity" to score the raw values. ``max_depth`` optionally
    drops pixels whose ground-truth depth exceeds it.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mask = np.asarray(valid_mask, dtype=bool)
    require_same_shape(pred, gt, "prediction and ground truth")
    require_same_shape(gt, mask, "ground truth and mask")
    if space not in ("depth", "disparity"):
        raise ValueError(f"space must be 'depth' or 'disparity', got {space!r}")
    if scale <= 0:
        raise ValueError("scale must be positive")
    if not mask.any():
        raise EmptyMaskError("validity mask selects no pixels")

    g = gt[mask]
    p = pred[mask]
    if np.any(g <= 0):
        raise ValueError("ground truth must be positive inside the mask")
    if space == "depth":
        if np.any(p <= 0):
            raise ValueError("prediction must be positive inside the mask")
        g = scale / g
        p = scale / p
        if max_depth is not None:
            keep = g <= max_depth
            if not keep.any():
                raise EmptyMaskError("max_depth filter removed every pixel")
            g, p = g[keep], p[keep]

    diff = g - p
    return DepthMetrics(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff**2 / g)),
        rmse=float(np.sqrt(np.mean(diff**2))),
        n_valid=int(g.size),
    )

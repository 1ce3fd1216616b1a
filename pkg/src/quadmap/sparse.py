"""Submanifold sparse convolution on 2-D grids, with cost accounting.

Feature grids carry an explicit active-site mask. Convolutions only produce
output at active sites and only gather active inputs (zero-padding semantics
via window truncation at the borders), so the active set is preserved. A
small decoder built from these pieces turns a seed feature grid into a
quadtree forest by thresholding each level's prediction to decide where the
next, finer level is worth computing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ShapeError
from .quadtree import LevelSlice, QuadForest

__all__ = [
    "FeatureGrid",
    "Kernel",
    "FlopReport",
    "DecoderStage",
    "submanifold_conv",
    "sparsify",
    "flop_count",
    "build_decoder_stages",
    "toy_decoder_forward",
    "toy_decoder_profile",
]


@dataclass
class FeatureGrid:
    """Per-site feature vectors (h, w, c) with a boolean active mask (h, w).

    Features at inactive sites are exactly zero; ``create`` enforces this.
    """

    data: np.ndarray
    active: np.ndarray

    @classmethod
    def create(cls, data, active) -> "FeatureGrid":
        data = np.asarray(data, dtype=np.float64)
        active = np.asarray(active, dtype=bool)
        if data.ndim != 3:
            raise ShapeError(f"features must be (h, w, c), got {data.shape}")
        if active.shape != data.shape[:2]:
            raise ShapeError(
                f"active mask {active.shape} does not match grid {data.shape[:2]}"
            )
        return cls(data=np.where(active[:, :, None], data, 0.0), active=active)

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class Kernel:
    """Dense k x k convolution weights (k, k, c_in, c_out) plus bias (c_out,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        w = self.weights
        if w.ndim != 4 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be (k, k, c_in, c_out), got {w.shape}")
        if w.shape[0] % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {w.shape[0]}")
        if self.bias.shape != (w.shape[3],):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match c_out {w.shape[3]}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(self.bias))):
            raise ValueError("kernel weights must be finite")

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[2]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[3]


@dataclass(frozen=True)
class FlopReport:
    """Multiply-accumulate counts for one convolution over one grid."""

    sparse_macs: int
    dense_macs: int
    active_fraction: float


def _shifted(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """a translated so that out[y, x] = a[y + dy, x + dx], zero elsewhere."""
    h, w = a.shape[:2]
    out = np.zeros_like(a)
    ys = slice(max(0, dy), h + min(0, dy))
    xs = slice(max(0, dx), w + min(0, dx))
    yd = slice(max(0, -dy), h + min(0, -dy))
    xd = slice(max(0, -dx), w + min(0, -dx))
    out[yd, xd] = a[ys, xs]
    return out


def submanifold_conv(x: FeatureGrid, kern: Kernel) -> FeatureGrid:
    """Convolve, producing output only at the input's active sites.

    Inactive inputs contribute nothing (their features are zero), inactive
    outputs stay exactly zero, and the active set is unchanged.
    """
    if kern.in_channels != x.channels:
        raise ShapeError(
            f"kernel expects {kern.in_channels} channels, grid has {x.channels}"
        )
    r = kern.k // 2
    acc = np.zeros((x.h, x.w, kern.out_channels), dtype=np.float64)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            acc += _shifted(x.data, dy, dx) @ kern.weights[dy + r, dx + r]
    acc += kern.bias
    acc *= x.active[:, :, None]
    return FeatureGrid(data=acc, active=x.active.copy())


def sparsify(pred: np.ndarray, tau: float) -> np.ndarray:
    """Threshold a prediction into an active mask for further refinement.

    Each non-overlapping 2x2 patch is marked active as a whole exactly when
    its max - min exceeds ``tau`` (strict). The mask has the same shape as
    ``pred``; upsampled 2x it gates where the next finer level gets children.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim != 2:
        raise ShapeError(f"prediction must be 2-D, got {pred.shape}")
    h, w = pred.shape
    if h % 2 or w % 2:
        raise DimensionError(f"prediction dimensions ({h}, {w}) must be even")
    blocks = pred.reshape(h // 2, 2, w // 2, 2)
    fired = blocks.max(axis=(1, 3)) - blocks.min(axis=(1, 3)) > tau
    return np.repeat(np.repeat(fired, 2, axis=0), 2, axis=1)


def _window_counts(active: np.ndarray, k: int) -> np.ndarray:
    """Number of active sites inside each site's k x k in-bounds window."""
    r = k // 2
    counts = np.zeros(active.shape, dtype=np.int64)
    a = active.astype(np.int64)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            counts += _shifted(a, dy, dx)
    return counts


def flop_count(x: FeatureGrid, kern: Kernel) -> FlopReport:
    """Count MACs the sparse gather executes vs. a dense convolution.

    Dense cost is the straight h*w*k^2*c_in*c_out formula; the sparse count
    only pays for active inputs inside each active output's (truncated)
    window.
    """
    if kern.in_channels != x.channels:
        raise ShapeError(
            f"kernel expects {kern.in_channels} channels, grid has {x.channels}"
        )
    gathered = _window_counts(x.active, kern.k)[x.active].sum()
    sparse = int(gathered) * kern.in_channels * kern.out_channels
    dense = x.h * x.w * kern.k**2 * kern.in_channels * kern.out_channels
    return FlopReport(
        sparse_macs=sparse,
        dense_macs=dense,
        active_fraction=float(x.active.mean()),
    )


# ---------------------------------------------------------------------------
# Toy decoder


@dataclass(frozen=True)
class DecoderStage:
    """Kernels for one decoder level: a feature conv and a 1x1 prediction head."""

    conv: Kernel
    head: Kernel


def build_decoder_stages(
    level_count: int, channels: int, seed: int = 0, k: int = 3
) -> list[DecoderStage]:
    """Random untrained stages, uniform weights in [-0.1, 0.1]."""
    rng = np.random.default_rng(seed)

    def uniform(shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    stages = []
    for _ in range(level_count):
        conv = Kernel(uniform((k, k, channels, channels)), uniform((channels,)))
        head = Kernel(uniform((1, 1, channels, 1)), uniform((1,)))
        stages.append(DecoderStage(conv=conv, head=head))
    return stages


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _upsample_grid(x: FeatureGrid) -> FeatureGrid:
    data = np.repeat(np.repeat(x.data, 2, axis=0), 2, axis=1)
    active = np.repeat(np.repeat(x.active, 2, axis=0), 2, axis=1)
    return FeatureGrid(data=data, active=active)


def toy_decoder_forward(
    seed: FeatureGrid,
    stages: list[DecoderStage],
    tau: float,
    d_min: float = 0.01,
    d_max: float = 10.0,
) -> QuadForest:
    """Run the sparse decoder and assemble its predictions into a forest.

    Starting from a fully active seed at root resolution, each stage
    convolves the features, predicts a disparity slice through the 1x1 head
    (sigmoid mapped into [d_min, d_max]), and thresholds that prediction to
    choose which sites continue to the next, 2x-upsampled level. Sites that
    do not fire are dropped from all finer levels.
    """
    forest, _ = toy_decoder_profile(seed, stages, tau, d_min, d_max)
    return forest


def toy_decoder_profile(
    seed: FeatureGrid,
    stages: list[DecoderStage],
    tau: float,
    d_min: float = 0.01,
    d_max: float = 10.0,
) -> tuple[QuadForest, list[FlopReport]]:
    """Like toy_decoder_forward, also reporting per-stage conv+head MACs."""
    if not seed.active.all():
        raise ValueError("decoder seed grid must be fully active")
    if seed.h % 2 or seed.w % 2:
        raise DimensionError("root grid dimensions must be even")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    if not d_max > d_min > 0:
        raise ValueError("need d_max > d_min > 0")
    level_count = len(stages)
    if level_count < 2:
        raise ValueError("decoder needs at least 2 stages")

    feats = seed
    slices = []
    reports = []
    for i, stage in enumerate(stages):
        level = level_count - 1 - i
        if i > 0:
            feats = _upsample_grid(feats)
        conv_report = flop_count(feats, stage.conv)
        feats = submanifold_conv(feats, stage.conv)
        head_report = flop_count(feats, stage.head)
        raw = submanifold_conv(feats, stage.head)
        present = feats.active.copy()
        disp = np.where(present, d_min + _sigmoid(raw.data[:, :, 0]) * (d_max - d_min), 0.0)
        if level > 0:
            active = sparsify(disp, tau) & present
        else:
            active = np.zeros_like(present)
        slices.append(
            LevelSlice(level=level, values=disp, present=present, active=active)
        )
        reports.append(
            FlopReport(
                sparse_macs=conv_report.sparse_macs + head_report.sparse_macs,
                dense_macs=conv_report.dense_macs + head_report.dense_macs,
                active_fraction=conv_report.active_fraction,
            )
        )
        if level > 0:
            feats = FeatureGrid(
                data=np.where(active[:, :, None], feats.data, 0.0),
                active=active,
            )
    forest = QuadForest(levels=slices, base_h=seed.h, base_w=seed.w)
    return forest, reports

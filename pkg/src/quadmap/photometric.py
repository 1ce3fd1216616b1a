"""Self-supervised loss primitives: SSIM, photometric error, inverse
warping, minimum reprojection, edge-aware smoothness, and their multi-level
combination over a quadtree forest.

Images are (h, w, c) arrays in [0, 1]; disparity grids are 2-D, positive
where sampled. All functions are pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, EmptyError, ShapeError
from .quadtree import QuadForest, compose
from .validation import as_dense_map, as_image, require_same_shape

_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus the rigid pose from target to source frame."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=np.float64)
        )
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        r = self.rotation
        if r.shape != (3, 3) or self.translation.shape != (3,):
            raise ShapeError("rotation must be 3x3 and translation a 3-vector")
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9) or not np.isclose(
            np.linalg.det(r), 1.0, atol=1e-9
        ):
            raise ValueError("rotation must be orthonormal with determinant +1")


@dataclass(frozen=True)
class LossConfig:
    """Weights of the combined objective."""

    alpha: float = 0.85
    mu: float = 1.0
    lam: float = 1e-3
    level_count: int = 6

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.mu < 0 or self.lam < 0:
            raise ValueError("mu and lam must be >= 0")
        if self.level_count < 1:
            raise ValueError("level_count must be >= 1")


def _shifted(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    h, w = a.shape[:2]
    out = np.zeros_like(a)
    ys = slice(max(0, dy), h + min(0, dy))
    xs = slice(max(0, dx), w + min(0, dx))
    yd = slice(max(0, -dy), h + min(0, -dy))
    xd = slice(max(0, -dx), w + min(0, -dx))
    out[yd, xd] = a[ys, xs]
    return out


def _box_filter3(a: np.ndarray) -> np.ndarray:
    """3x3 local mean with window truncation at the borders (per channel)."""
    total = np.zeros_like(a, dtype=np.float64)
    count = np.zeros(a.shape[:2], dtype=np.float64)
    ones = np.ones(a.shape[:2], dtype=np.float64)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            total += _shifted(a, dy, dx)
            count += _shifted(ones, dy, dx)
    return total / count[:, :, None]


def ssim(a, b) -> np.ndarray:
    """Per-pixel structural similarity with 3x3 uniform local statistics.

    Channels are averaged into a single (h, w) map. Symmetric in its
    arguments; identical inputs give exactly 1 everywhere.
    """
    a = as_image(a, "first image")
    b = as_image(b, "second image")
    require_same_shape(a, b, "images")
    mu_a = _box_filter3(a)
    mu_b = _box_filter3(b)
    var_a = _box_filter3(a * a) - mu_a * mu_a
    var_b = _box_filter3(b * b) - mu_b * mu_b
    cov = _box_filter3(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + _SSIM_C1) * (2.0 * cov + _SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + _SSIM_C1) * (var_a + var_b + _SSIM_C2)
    return (num / den).mean(axis=2)


def photometric_error(a, b, alpha: float = 0.85) -> np.ndarray:
    """Blend of structural dissimilarity and L1: alpha/2*(1-SSIM) + (1-alpha)*L1."""
    a = as_image(a, "first image")
    b = as_image(b, "second image")
    require_same_shape(a, b, "images")
    l1 = np.abs(a - b).mean(axis=2)
    if alpha == 0.0:
        return l1
    return 0.5 * alpha * (1.0 - ssim(a, b)) + (1.0 - alpha) * l1


def reproject(
    src, disp, cam: CameraModel, baseline_scale: float
) -> tuple[np.ndarray, np.ndarray]:
    """Warp a source image into the target frame through predicted disparity.

    Every target pixel is back-projected at depth ``baseline_scale / disp``,
    moved by the camera pose, projected with the intrinsics, and sampled
    bilinearly from ``src``. Returns the warped image and a validity mask;
    pixels that land outside the source, sit behind the camera, or have
    non-positive disparity are invalid (and zero in the warped image).
    """
    src = as_image(src, "source image")
    disp = np.asarray(disp, dtype=np.float64)
    if disp.ndim != 2:
        raise ShapeError(f"disparity must be 2-D, got {disp.shape}")
    if baseline_scale <= 0:
        raise ValueError("baseline_scale must be positive")
    h, w = disp.shape
    if src.shape[:2] != (h, w):
        raise ShapeError(
            f"source image {src.shape[:2]} does not match disparity {disp.shape}"
        )

    us, vs = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    pos = disp > 0
    # work with rays scaled by 1/depth: (R*P + t)/z = R*dir + t*disp/baseline,
    # so a zero translation cancels without any depth round trip
    inv_z = disp / baseline_scale
    dirs = np.stack(
        [(us - cam.cx) / cam.fx, (vs - cam.cy) / cam.fy, np.ones_like(us)], axis=-1
    )
    pts = dirs @ cam.rotation.T + cam.translation * inv_z[:, :, None]
    zp = pts[:, :, 2]
    in_front = zp > 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        up = cam.fx * pts[:, :, 0] / np.where(in_front, zp, 1.0) + cam.cx
        vp = cam.fy * pts[:, :, 1] / np.where(in_front, zp, 1.0) + cam.cy
    # snap float noise onto exact pixel centers so integer-coordinate warps
    # (identity pose in particular) sample exactly and border pixels survive
    up_round = np.round(up)
    vp_round = np.round(vp)
    up = np.where(np.abs(up - up_round) < 1e-9, up_round, up)
    vp = np.where(np.abs(vp - vp_round) < 1e-9, vp_round, vp)
    valid = pos & in_front & (up >= 0) & (up <= w - 1) & (vp >= 0) & (vp <= h - 1)
    if not valid.any():
        raise DegenerateError("no target pixel projects inside the source image")

    up = np.where(valid, up, 0.0)
    vp = np.where(valid, vp, 0.0)
    x0 = np.floor(up).astype(np.int64)
    y0 = np.floor(vp).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (up - x0)[:, :, None]
    fy = (vp - y0)[:, :, None]
    warped = (
        src[y0, x0] * (1 - fx) * (1 - fy)
        + src[y0, x1] * fx * (1 - fy)
        + src[y1, x0] * (1 - fx) * fy
        + src[y1, x1] * fx * fy
    )
    warped *= valid[:, :, None]
    return warped, valid


def min_reprojection(
    target, candidates: list[tuple[np.ndarray, np.ndarray]], alpha: float = 0.85
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel minimum photometric error over warped candidates.

    Each candidate is a (warped image, validity mask) pair; a pixel counts
    wherever at least one candidate is valid. Returns (loss map, mask);
    the loss map is zero outside the mask.
    """
    if not candidates:
        raise EmptyError("need at least one warped candidate")
    target = as_image(target, "target image")
    best = np.full(target.shape[:2], np.inf)
    any_valid = np.zeros(target.shape[:2], dtype=bool)
    for warped, mask in candidates:
        warped = as_image(warped, "warped candidate")
        require_same_shape(warped, target, "candidate and target")
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != target.shape[:2]:
            raise ShapeError(
                f"mask {mask.shape} does not match image {target.shape[:2]}"
            )
        err = photometric_error(target, warped, alpha)
        best = np.where(mask, np.minimum(best, err), best)
        any_valid |= mask
    return np.where(any_valid, best, 0.0), any_valid


def smoothness(disp, img) -> float:
    """Edge-aware first-order smoothness of mean-normalized disparity.

    Forward differences; each image gradient (averaged over channels)
    attenuates the matching disparity gradient through exp(-|grad I|).
    The last column/row is dropped from the respective means.
    """
    disp = as_dense_map(disp, "disparity")
    img = as_image(img, "image")
    if img.shape[:2] != disp.shape:
        raise ShapeError(
            f"image {img.shape[:2]} does not match disparity {disp.shape}"
        )
    mean = disp.mean()
    if mean == 0.0:
        raise DegenerateError("disparity mean is zero, cannot normalize")
    d = disp / mean
    gx_d = np.abs(d[:, 1:] - d[:, :-1])
    gy_d = np.abs(d[1:, :] - d[:-1, :])
    gx_i = np.abs(img[:, 1:] - img[:, :-1]).mean(axis=2)
    gy_i = np.abs(img[1:, :] - img[:-1, :]).mean(axis=2)
    return float((gx_d * np.exp(-gx_i)).mean() + (gy_d * np.exp(-gy_i)).mean())


@dataclass(frozen=True)
class LevelLoss:
    level: int
    photometric: float
    smooth: float

    @property
    def weighted(self) -> float:
        return self.photometric + self.smooth


@dataclass(frozen=True)
class MultiscaleLoss:
    total: float
    per_level: tuple[LevelLoss, ...]


def multiscale_loss(
    forest: QuadForest,
    target,
    sources: list[tuple[np.ndarray, CameraModel]],
    cfg: LossConfig,
    baseline_scale: float,
) -> MultiscaleLoss:
    """Average of mu*L_p + lam*L_s over the forest's composed levels.

    Each level is composed, upsampled (nearest neighbor) to full resolution,
    used to warp every source into the target frame, and scored there.
    """
    target = as_image(target, "target image")
    if target.shape[:2] != (forest.full_h, forest.full_w):
        raise ShapeError(
            f"target {target.shape[:2]} does not match forest resolution "
            f"({forest.full_h}, {forest.full_w})"
        )
    if not sources:
        raise EmptyError("need at least one source view")
    if cfg.level_count > forest.level_count:
        raise ShapeError(
            f"config wants {cfg.level_count} levels, forest has {forest.level_count}"
        )

    terms = []
    for level in range(cfg.level_count):
        d = compose(forest, level)
        factor = 2**level
        d_full = np.repeat(np.repeat(d, factor, axis=0), factor, axis=1)
        lp = 0.0
        if cfg.mu > 0.0:
            candidates = [
                reproject(img, d_full, cam, baseline_scale) for img, cam in sources
            ]
            loss_map, mask = min_reprojection(target, candidates, cfg.alpha)
            if not mask.any():
                raise DegenerateError(f"level {level} has no valid reprojection")
            lp = float(loss_map[mask].mean())
        ls = smoothness(d_full, target) if cfg.lam > 0.0 else 0.0
        terms.append(
            LevelLoss(level=level, photometric=cfg.mu * lp, smooth=cfg.lam * ls)
        )
    total = sum(t.weighted for t in terms) / cfg.level_count
    return MultiscaleLoss(total=float(total), per_level=tuple(terms))

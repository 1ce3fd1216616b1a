"""Deterministic synthetic disparity scenes for demos and regression tests."""

from __future__ import annotations

import numpy as np

# (center u, center v, half width, half height, depth in meters) per obstacle,
# in fractions of the image size
_BOXES = (
    (0.22, 0.62, 0.06, 0.16, 9.0),
    (0.55, 0.58, 0.09, 0.11, 14.0),
    (0.80, 0.66, 0.05, 0.22, 6.0),
)

_DISP_FLOOR = 0.005


def street_scene(width: int = 640, height: int = 192) -> np.ndarray:
    """Road-like disparity map: flat ground plane, far sky, three boxes.

    The ground disparity grows linearly from the horizon to the bottom edge
    and carries multi-frequency surface relief, so detail keeps appearing as
    the subdivision threshold drops; each box stands on the ground at a fixed
    depth with milder relief on its face. Values are disparities (inverse
    depth) with an implicit unit baseline scale, floored at a small positive
    constant.
    """
    d = np.empty((height, width), dtype=np.float64)
    horizon = int(round(0.38 * height))
    sky_disp = 0.01
    max_disp = 8.0
    d[:horizon] = sky_disp
    rows = np.arange(horizon, height, dtype=np.float64)
    ground = sky_disp + (rows - horizon) / max(height - 1 - horizon, 1) * (
        max_disp - sky_disp
    )
    d[horizon:] = ground[:, None]

    us, vs = np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )
    relief = (
        0.40 * np.sin(2 * np.pi * us / 160.0) * np.sin(2 * np.pi * vs / 96.0)
        + 0.18 * np.sin(2 * np.pi * (us + 37) / 52.0) * np.cos(2 * np.pi * vs / 40.0)
        + 0.07 * np.cos(2 * np.pi * (us * 0.9 + vs * 1.3) / 17.0)
        + 0.03 * np.sin(2 * np.pi * (us * 1.7 - vs * 0.8) / 7.0)
    )
    ramp = np.clip((vs - horizon) / max(height - 1 - horizon, 1), 0.0, None)
    d += relief * ramp

    for cu, cv, hw, hh, depth in _BOXES:
        u0 = int((cu - hw) * width)
        u1 = int((cu + hw) * width)
        v0 = int((cv - hh) * height)
        v1 = int((cv + hh) * height)
        d[v0:v1, u0:u1] = 1.0 / depth + relief[v0:v1, u0:u1] * 0.1
    return np.maximum(d, _DISP_FLOOR)


def shaded_image(disp: np.ndarray) -> np.ndarray:
    """Grayscale rendering of a disparity map as an (h, w, 1) image in [0, 1].

    Handy as the photographic counterpart of a synthetic scene: image edges
    coincide with disparity edges, which is what edge-aware terms expect.
    """
    peak = disp.max()
    gray = disp / peak if peak > 0 else np.zeros_like(disp)
    return gray[:, :, None]

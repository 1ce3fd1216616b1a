"""Readers, writers, and rendering.

Forest container (``QFM1``), all integers little-endian uint32:

    magic   4 bytes  b"QFM1"
    header  5 x u32  level_count, base_h, base_w, value tag, endian tag
    levels  coarsest first, each:
              present bitmap  row-major, 8 cells/byte, zero-padded per row
              active bitmap   same packing
              values          float32 (little), present cells in row-major order

The value tag is 1 (float32) and the endian tag is 1 (little) in this
version. Serialization is canonical: equal forests produce identical bytes.

Dense maps are exchanged as PFM ("Pf"/"PF", scale sign encodes endianness,
rows stored bottom-up) or binary PGM ("P5", maxval 255 or 65535, big-endian
samples); renders are written as binary PPM ("P6").
"""

from __future__ import annotations

import re
import struct
from io import BytesIO
from typing import BinaryIO

import numpy as np

from .errors import FormatError
from .quadtree import LevelSlice, QuadForest, rasterize

_QFM_MAGIC = b"QFM1"
_QFM_VALUE_TAG_F32 = 1
_QFM_ENDIAN_TAG_LE = 1

# border palette for rendered quadtrees, indexed by level
_LEVEL_COLORS = np.array(
    [
        (228, 26, 28),
        (255, 127, 0),
        (255, 255, 51),
        (77, 175, 74),
        (55, 126, 184),
        (152, 78, 163),
        (166, 86, 40),
        (247, 129, 191),
    ],
    dtype=np.uint8,
)


def _pack_rows(mask: np.ndarray) -> bytes:
    return np.packbits(mask, axis=1).tobytes()


def _unpack_rows(buf: bytes, h: int, w: int) -> np.ndarray:
    row_bytes = (w + 7) // 8
    raw = np.frombuffer(buf, dtype=np.uint8).reshape(h, row_bytes)
    bits = np.unpackbits(raw, axis=1)
    if w % 8 and bits[:, w:].any():
        raise FormatError("bitmap row padding bits must be zero")
    return bits[:, :w].astype(bool)


def write_forest(f: QuadForest, stream: BinaryIO | None = None) -> bytes:
    """Serialize a forest; returns the bytes and optionally writes them.

    Values are stored as float32, so a bit-exact round trip requires
    float32-representable values.
    """
    out = BytesIO()
    out.write(_QFM_MAGIC)
    out.write(
        struct.pack(
            "<5I",
            f.level_count,
            f.base_h,
            f.base_w,
            _QFM_VALUE_TAG_F32,
            _QFM_ENDIAN_TAG_LE,
        )
    )
    for sl in f.levels:
        out.write(_pack_rows(sl.present))
        out.write(_pack_rows(sl.active))
        out.write(sl.values[sl.present].astype("<f4").tobytes())
    data = out.getvalue()
    if stream is not None:
        stream.write(data)
    return data


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated stream")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk


def read_forest(data: bytes) -> QuadForest:
    """Parse a QFM1 stream, validating every forest invariant."""
    cur = _Cursor(bytes(data))
    if cur.take(4) != _QFM_MAGIC:
        raise FormatError("bad magic, not a QFM1 stream")
    level_count, base_h, base_w, value_tag, endian_tag = struct.unpack(
        "<5I", cur.take(20)
    )
    if value_tag != _QFM_VALUE_TAG_F32:
        raise FormatError(f"unsupported value encoding tag {value_tag}")
    if endian_tag != _QFM_ENDIAN_TAG_LE:
        raise FormatError(f"unsupported endianness tag {endian_tag}")
    if level_count < 2 or base_h < 1 or base_w < 1:
        raise FormatError("invalid header dimensions")

    slices = []
    for i in range(level_count):
        level = level_count - 1 - i
        factor = 2 ** (level_count - 1 - level)
        h, w = base_h * factor, base_w * factor
        row_bytes = (w + 7) // 8
        present = _unpack_rows(cur.take(h * row_bytes), h, w)
        active = _unpack_rows(cur.take(h * row_bytes), h, w)
        n_vals = int(present.sum())
        raw = np.frombuffer(cur.take(4 * n_vals), dtype="<f4")
        values = np.zeros((h, w), dtype=np.float64)
        values[present] = raw.astype(np.float64)
        slices.append(
            LevelSlice(level=level, values=values, present=present, active=active)
        )
    if cur.pos != len(cur.data):
        raise FormatError(f"{len(cur.data) - cur.pos} trailing bytes after payload")

    forest = QuadForest(levels=slices, base_h=base_h, base_w=base_w)
    forest.validate()
    return forest


# ---------------------------------------------------------------------------
# PFM


def write_pfm(grid: np.ndarray, stream: BinaryIO) -> None:
    """Write a 2-D grid (grayscale) or (h, w, 3) image as little-endian PFM."""
    a = np.asarray(grid, dtype=np.float32)
    if a.ndim == 2:
        ident = b"Pf"
    elif a.ndim == 3 and a.shape[2] == 3:
        ident = b"PF"
    else:
        raise FormatError(f"PFM supports 2-D or (h, w, 3) data, got {a.shape}")
    h, w = a.shape[:2]
    stream.write(ident + b"\n")
    stream.write(f"{w} {h}\n".encode("ascii"))
    stream.write(b"-1.0\n")
    stream.write(np.flipud(a).tobytes())


def _read_pfm(data: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    while len(tokens) < 3:
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise FormatError("incomplete PFM header")
        line = data[pos : nl].decode("latin-1").strip()
        pos = nl + 1
        if line.startswith("#"):
            continue
        tokens.extend(line.split())
    ident = tokens[0]
    if ident == "Pf":
        channels = 1
    elif ident == "PF":
        channels = 3
    else:
        raise FormatError(f"unknown PFM identifier {ident!r}")
    try:
        w, h = int(tokens[1]), int(tokens[2])
        scale = float(tokens[3]) if len(tokens) > 3 else None
    except (ValueError, IndexError) as exc:
        raise FormatError("malformed PFM header") from exc
    if scale is None:
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise FormatError("incomplete PFM header")
        try:
            scale = float(data[pos : nl].decode("latin-1").strip())
        except ValueError as exc:
            raise FormatError("malformed PFM scale line") from exc
        pos = nl + 1
    if w < 1 or h < 1 or scale == 0:
        raise FormatError("invalid PFM dimensions or scale")
    dtype = "<f4" if scale < 0 else ">f4"
    count = w * h * channels
    body = data[pos : pos + 4 * count]
    if len(body) != 4 * count:
        raise FormatError("truncated PFM payload")
    a = np.frombuffer(body, dtype=dtype).astype(np.float64)
    a = a.reshape((h, w) if channels == 1 else (h, w, channels))
    a = np.flipud(a).copy()
    if not np.all(np.isfinite(a)):
        raise FormatError("PFM payload contains NaN or infinite values")
    return a


# ---------------------------------------------------------------------------
# PGM


def _read_pgm(data: bytes, scale: float) -> np.ndarray:
    # header tokens may be separated by arbitrary whitespace and comments
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n|\S+)").match(data, pos)
        if m is None:
            raise FormatError("incomplete PGM header")
        pos = m.end()
        tok = m.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    if tokens[0] != b"P5":
        raise FormatError(f"unknown PGM identifier {tokens[0]!r}")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError("malformed PGM header") from exc
    if maxval == 65535:
        dtype, itemsize = ">u2", 2
    elif maxval == 255:
        dtype, itemsize = "u1", 1
    else:
        raise FormatError(f"unsupported PGM maxval {maxval}")
    if w < 1 or h < 1:
        raise FormatError("invalid PGM dimensions")
    # exactly one whitespace byte separates maxval from the binary payload
    if data[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise FormatError("missing whitespace before PGM payload")
    pos += 1
    body = data[pos : pos + itemsize * w * h]
    if len(body) != itemsize * w * h:
        raise FormatError("truncated PGM payload")
    raw = np.frombuffer(body, dtype=dtype).reshape(h, w)
    return raw.astype(np.float64) * scale


def read_dense(data: bytes, pgm_scale: float = 1.0 / 256.0) -> np.ndarray:
    """Decode a dense map or image from PFM or 16/8-bit binary PGM bytes.

    PGM samples are mapped to disparity as ``raw * pgm_scale`` (the usual
    stored-value/256 convention by default).
    """
    if data[:2] in (b"Pf", b"PF"):
        return _read_pfm(data)
    if data[:2] == b"P5":
        return _read_pgm(data, pgm_scale)
    raise FormatError("unrecognized dense-map format (expected PFM or PGM)")


# ---------------------------------------------------------------------------
# PPM + rendering


def write_ppm(image: np.ndarray, stream: BinaryIO) -> None:
    """Write an (h, w, 3) uint8 image as binary PPM."""
    a = np.asarray(image)
    if a.ndim != 3 or a.shape[2] != 3 or a.dtype != np.uint8:
        raise FormatError(f"PPM needs (h, w, 3) uint8 data, got {a.shape} {a.dtype}")
    h, w = a.shape[:2]
    stream.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
    stream.write(a.tobytes())


def render_quadtree(f: QuadForest) -> np.ndarray:
    """Render the forest as (h, w, 3) uint8: grayscale disparity shading with
    1-px leaf-cell borders colored by level (pixel-sized leaves draw none)."""
    raster = rasterize(f)
    peak = raster.max()
    gray = raster / peak if peak > 0 else raster
    img = np.repeat((gray * 255.0).round().astype(np.uint8)[:, :, None], 3, axis=2)

    full_h, full_w = f.full_h, f.full_w
    for sl in f.levels:
        if sl.level == 0:
            continue
        size = 2 ** sl.level
        color = _LEVEL_COLORS[sl.level % len(_LEVEL_COLORS)]
        leaves = sl.present & ~sl.active
        ys, xs = np.nonzero(leaves)
        for y, x in zip(ys.tolist(), xs.tolist()):
            top, left = y * size, x * size
            bottom, right = top + size, left + size
            img[top, left:right] = color
            img[top:bottom, left] = color
            if bottom == full_h:
                img[bottom - 1, left:right] = color
            if right == full_w:
                img[top:bottom, right - 1] = color
    return img

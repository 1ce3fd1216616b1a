"""Level-sliced quadtree forests over dense disparity maps.

A forest stores one slice per level, coarsest first. Level ``L-1`` is the
root grid (``base_h x base_w``); level 0 is pixel resolution. Each slice
carries a value grid plus two boolean grids: ``present`` (the cell holds a
value) and ``active`` (the cell was subdivided, i.e. its four children exist
one level finer). Presence therefore always arrives in sibling quadruples,
and the root slice is fully present.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InvariantError, LevelError
from .validation import as_dense_map, require_divisible


class QuadNode(NamedTuple):
    """One present cell: level, cell coordinates within the level, value."""

    level: int
    x: int
    y: int
    value: float


@dataclass
class LevelSlice:
    """All cells of one quadtree level.

    ``values`` is zero at absent cells; this canonical form makes equality
    and serialization byte-stable.
    """

    level: int
    values: np.ndarray
    present: np.ndarray
    active: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, LevelSlice):
            return NotImplemented
        return (
            self.level == other.level
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.present, other.present)
            and np.array_equal(self.active, other.active)
        )


@dataclass
class QuadForest:
    """A quadtree per root cell, stored as level slices (coarsest first)."""

    levels: list[LevelSlice]
    base_h: int
    base_w: int

    @property
    def level_count(self) -> int:
        return len(self.levels)

    @property
    def full_h(self) -> int:
        return self.base_h * 2 ** (self.level_count - 1)

    @property
    def full_w(self) -> int:
        return self.base_w * 2 ** (self.level_count - 1)

    def slice_at(self, level: int) -> LevelSlice:
        """Slice for a level index (0 = finest, level_count-1 = root)."""
        if not 0 <= level < self.level_count:
            raise LevelError(f"level {level} out of range [0, {self.level_count - 1}]")
        return self.levels[self.level_count - 1 - level]

    def level_shape(self, level: int) -> tuple[int, int]:
        f = 2 ** (self.level_count - 1 - level)
        return self.base_h * f, self.base_w * f

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadForest):
            return NotImplemented
        return (
            self.base_h == other.base_h
            and self.base_w == other.base_w
            and self.levels == other.levels
        )

    def validate(self) -> None:
        """Raise InvariantError unless every structural invariant holds."""
        n = self.level_count
        if n < 2:
            raise InvariantError("forest needs at least 2 levels")
        if self.base_h < 1 or self.base_w < 1:
            raise InvariantError("root grid must be non-empty")
        for i, sl in enumerate(self.levels):
            level = n - 1 - i
            if sl.level != level:
                raise InvariantError(
                    f"slice {i} has level {sl.level}, expected {level}"
                )
            shape = self.level_shape(level)
            for arr_name, arr in (("values", sl.values), ("present", sl.present),
                                  ("active", sl.active)):
                if arr.shape != shape:
                    raise InvariantError(
                        f"level {level} {arr_name} has shape {arr.shape}, "
                        f"expected {shape}"
                    )
            if sl.present.dtype != np.bool_ or sl.active.dtype != np.bool_:
                raise InvariantError("present/active grids must be boolean")
            if np.any(sl.active & ~sl.present):
                raise InvariantError(f"level {level} has active cells without values")
            vals = sl.values
            if not np.all(np.isfinite(vals)):
                raise InvariantError(f"level {level} has non-finite values")
            if np.any(vals[sl.present] < 0):
                raise InvariantError(f"level {level} has negative values")
            if np.any(vals[~sl.present] != 0.0):
                raise InvariantError(f"level {level} has nonzero values at absent cells")
        root = self.levels[0]
        if not root.present.all():
            raise InvariantError("root level must be fully present")
        finest = self.levels[-1]
        if finest.active.any():
            raise InvariantError("level 0 cells can never be active")
        for parent, child in zip(self.levels[:-1], self.levels[1:]):
            child_quads = _block_all(child.present)
            if not np.array_equal(parent.active, child_quads):
                raise InvariantError(
                    f"level {parent.level} active cells disagree with the "
                    f"presence of their level-{child.level} children"
                )
            # children may not exist outside complete quadruples
            if np.any(child.present & ~_up2(child_quads)):
                raise InvariantError(
                    f"level {child.level} has present cells outside sibling quadruples"
                )


@dataclass(frozen=True)
class EncodeConfig:
    """Parameters of the dense-map encoder."""

    tau: float = 0.1
    level_count: int = 6
    keep_children: bool = True

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.level_count < 2:
            raise ValueError(f"level_count must be >= 2, got {self.level_count}")


class NodeCount(NamedTuple):
    """Present-cell counts per level (coarsest first) and their sum."""

    per_level: tuple[int, ...]
    total: int


def _up2(a: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(a, 2, axis=0), 2, axis=1)


def _upsample(a: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return a
    return np.repeat(np.repeat(a, factor, axis=0), factor, axis=1)


def _blocks(a: np.ndarray) -> np.ndarray:
    h, w = a.shape
    return a.reshape(h // 2, 2, w // 2, 2)


def _block_all(a: np.ndarray) -> np.ndarray:
    return _blocks(a).all(axis=(1, 3))


def _block_any(a: np.ndarray) -> np.ndarray:
    return _blocks(a).any(axis=(1, 3))


def _block_spread(a: np.ndarray) -> np.ndarray:
    b = _blocks(a)
    return b.max(axis=(1, 3)) - b.min(axis=(1, 3))


def mean_pyramid(d: np.ndarray, level_count: int) -> list[np.ndarray]:
    """Successive 2x2 mean pooling; entry ``l`` is the level-l candidate grid."""
    pyr = [np.array(d, dtype=np.float64)]
    for _ in range(level_count - 1):
        pyr.append(_blocks(pyr[-1]).mean(axis=(1, 3)))
    return pyr


def encode_dense(d, cfg: EncodeConfig = EncodeConfig()) -> QuadForest:
    """Encode a dense disparity map into a quadtree forest.

    Candidate values come from a 2x2 mean pyramid. Starting from a fully
    present root grid, a present cell is subdivided exactly when the spread
    (max - min) of its four child candidates exceeds ``cfg.tau`` (strict);
    its children then become present one level finer and the recursion
    continues from them. Cells at level 0 are raw pixels and never subdivide.

    With ``keep_children=False``, sibling quadruples that carry no deeper
    subdivision are dropped afterwards, trading fidelity for the smallest
    tree (their parents revert to leaves).
    """
    d = as_dense_map(d, "disparity map")
    L = cfg.level_count
    h, w = d.shape
    require_divisible(h, w, 2 ** (L - 1), "disparity map")

    pyr = mean_pyramid(d, L)
    present: list[np.ndarray] = [np.empty(0)] * L
    active: list[np.ndarray] = [np.empty(0)] * L
    present[L - 1] = np.ones(pyr[L - 1].shape, dtype=bool)
    for level in range(L - 1, 0, -1):
        fired = _block_spread(pyr[level - 1]) > cfg.tau
        active[level] = present[level] & fired
        present[level - 1] = _up2(active[level])
    active[0] = np.zeros(pyr[0].shape, dtype=bool)

    if not cfg.keep_children:
        # Drop all-leaf quadruples (levels 1..L-2): none of the four cells
        # subdivides, so the criterion never fires below them. Keep masks are
        # taken from the unpruned tree; a parent losing its quadruple stays
        # present because its own gate fired.
        keeps = [_block_any(active[level]) for level in range(1, L - 1)]
        for level in range(1, L - 1):
            active[level + 1] &= keeps[level - 1]
            present[level] = _up2(active[level + 1])

    slices = [
        LevelSlice(
            level=level,
            values=np.where(present[level], pyr[level], 0.0),
            present=present[level],
            active=active[level],
        )
        for level in range(L - 1, -1, -1)
    ]
    return QuadForest(levels=slices, base_h=h // 2 ** (L - 1), base_w=w // 2 ** (L - 1))


def compose(f: QuadForest, n: int) -> np.ndarray:
    """Flatten levels ``n..L-1`` into a dense grid at level-n resolution.

    Each output cell takes the value of the finest present cell covering it,
    searching no finer than level ``n``. The root grid is fully present, so
    every output cell is defined.
    """
    if not 0 <= n < f.level_count:
        raise LevelError(f"level {n} out of range [0, {f.level_count - 1}]")
    out = np.zeros(f.level_shape(n), dtype=np.float64)
    for level in range(f.level_count - 1, n - 1, -1):
        sl = f.slice_at(level)
        factor = 2 ** (level - n)
        vals = _upsample(sl.values, factor)
        pres = _upsample(sl.present, factor)
        out = np.where(pres, vals, out)
    return out


def rasterize(f: QuadForest) -> np.ndarray:
    """Expand the forest to full pixel resolution."""
    return compose(f, 0)


def node_count(f: QuadForest) -> NodeCount:
    per_level = tuple(int(sl.present.sum()) for sl in f.levels)
    return NodeCount(per_level=per_level, total=sum(per_level))


def iter_nodes(f: QuadForest) -> Iterator[QuadNode]:
    """Yield every present cell as a QuadNode, coarsest level first."""
    for sl in f.levels:
        ys, xs = np.nonzero(sl.present)
        for y, x in zip(ys.tolist(), xs.tolist()):
            yield QuadNode(level=sl.level, x=x, y=y, value=float(sl.values[y, x]))

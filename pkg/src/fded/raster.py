"""Raster and point primitives shared by the edge pipeline.

Grids are plain numpy arrays indexed ``[row, col]`` = ``[y, x]``; pixel
centres sit at integer coordinates with the origin top-left.

* scalar grid  -- ``(H, W)`` float64
* edge map / mask -- ``(H, W)`` bool
* flow field -- ``(H, W, 2)`` float64, ``[..., 0] = dx``, ``[..., 1] = dy``
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


class ShapeError(ValueError):
    """Raised when rasters that must share dimensions do not."""


def check_same_shape(*arrays: np.ndarray, what: str = "rasters") -> None:
    shapes = {a.shape[:2] for a in arrays}
    if len(shapes) > 1:
        raise ShapeError(f"{what} have mismatched shapes: {sorted(shapes)}")


def round_half_away(v):
    """Round to nearest integer, ties away from zero (platform independent)."""
    v = np.asarray(v, dtype=np.float64)
    return (np.sign(v) * np.floor(np.abs(v) + 0.5)).astype(np.int64)


@dataclass(frozen=True)
class PointSet:
    """Ordered sub-pixel points with an optional chain label per point."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    chain_ids: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if self.chain_ids is not None:
            ids = np.asarray(self.chain_ids, dtype=np.int64).reshape(-1)
            if len(ids) != len(pts):
                raise ValueError("chain_ids length must match point count")
            object.__setattr__(self, "chain_ids", ids)

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, keep: np.ndarray) -> "PointSet":
        ids = None if self.chain_ids is None else self.chain_ids[keep]
        return PointSet(self.points[keep], ids)


def mask_union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    check_same_shape(a, b, what="edge maps")
    return np.logical_or(a, b)


def rasterize_points(pts: PointSet, width: int, height: int) -> tuple[np.ndarray, int]:
    """Set the nearest pixel of every in-bounds point.

    Returns the edge map and the number of points dropped for falling
    outside the frame.
    """
    out = np.zeros((height, width), dtype=bool)
    if len(pts) == 0:
        return out, 0
    ij = round_half_away(pts.points)
    x, y = ij[:, 0], ij[:, 1]
    inside = (x >= 0) & (x < width) & (y >= 0) & (y < height)
    out[y[inside], x[inside]] = True
    return out, int((~inside).sum())


def foreground_mask(depth: np.ndarray, background_sentinel: float) -> np.ndarray:
    return np.asarray(depth) < background_sentinel


def _window(radius: int) -> int:
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    return 2 * int(radius) + 1


def erode_mask(m: np.ndarray, radius: int) -> np.ndarray:
    """Chebyshev erosion; only in-bounds pixels take part in the test."""
    size = _window(radius)
    if size == 1:
        return np.array(m, dtype=bool)
    return ndimage.minimum_filter(np.asarray(m, dtype=np.uint8), size=size, mode="nearest").astype(bool)


def dilate_mask(m: np.ndarray, radius: int) -> np.ndarray:
    """Chebyshev dilation with a square (2r+1) structuring element."""
    size = _window(radius)
    if size == 1:
        return np.array(m, dtype=bool)
    return ndimage.maximum_filter(np.asarray(m, dtype=np.uint8), size=size, mode="nearest").astype(bool)


def set_pixels(m: np.ndarray) -> list[tuple[int, int]]:
    """Set pixels of a mask as ``(x, y)`` tuples in row-major order."""
    ys, xs = np.nonzero(m)
    return list(zip(xs.tolist(), ys.tolist()))


def bilinear_sample(field: np.ndarray, xs, ys) -> np.ndarray:
    """Bilinear lookup of a ``(H, W, C)`` or ``(H, W)`` field at sub-pixel
    positions; positions outside the frame clamp to the border."""
    h, w = field.shape[:2]
    xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, w - 1)
    ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, h - 1)
    x0 = np.minimum(np.floor(xs).astype(np.int64), max(w - 2, 0))
    y0 = np.minimum(np.floor(ys).astype(np.int64), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    if field.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = field[y0, x0] * (1 - fx) + field[y0, x1] * fx
    bot = field[y1, x0] * (1 - fx) + field[y1, x1] * fx
    return top * (1 - fy) + bot * fy

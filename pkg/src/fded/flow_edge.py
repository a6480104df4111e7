"""Flow-based recovery of edges hidden by occlusion.

Edge pixels of an occlusion-free source frame are turned into ordered
points, pushed along the (chained) flow into the current frame, kept only
where they land inside the current silhouette, and re-drawn as an edge map
either by dilation or by per-chain cubic B-splines.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import interpolate, ndimage

from .raster import (
    PointSet,
    bilinear_sample,
    check_same_shape,
    dilate_mask,
    erode_mask,
    rasterize_points,
    round_half_away,
)

_EIGHT = np.ones((3, 3), dtype=bool)
# Orthogonal steps before diagonal ones.
_NEIGHBOURS = [(0, -1), (-1, 0), (1, 0), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)]


@dataclass(frozen=True)
class FlowEdgeParams:
    interpolation: Literal["dilation", "spline"] = "dilation"
    dilation_radius: int = 1
    spline_min_chain: int = 4
    interior_margin: int = 1
    source_policy: Literal["previous_frame", "last_occlusion_free"] = "last_occlusion_free"

    def __post_init__(self):
        if self.interpolation not in ("dilation", "spline"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if self.source_policy not in ("previous_frame", "last_occlusion_free"):
            raise ValueError(f"unknown source policy {self.source_policy!r}")
        if self.dilation_radius < 0 or self.interior_margin < 0:
            raise ValueError("dilation_radius and interior_margin must be >= 0")
        if self.spline_min_chain < 4:
            raise ValueError("spline_min_chain must be >= 4")


def _order_component(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Greedy nearest-neighbour walk from the topmost-leftmost pixel.

    Among unvisited 8-neighbours the walk steps to the one with the fewest
    unvisited neighbours of its own (ties by a fixed order), so it hugs the
    end of a thick run instead of stranding pixels. With no unvisited
    neighbour it jumps to the closest unvisited pixel. Returns indices.
    """
    n = len(xs)
    index = {(int(x), int(y)): k for k, (x, y) in enumerate(zip(xs, ys))}
    alive = np.ones(n, dtype=bool)

    def open_neighbours(k):
        x, y = int(xs[k]), int(ys[k])
        found = (index.get((x + dx, y + dy), -1) for dx, dy in _NEIGHBOURS)
        return [j for j in found if j >= 0 and alive[j]]

    cur = int(np.lexsort((xs, ys))[0])
    order = [cur]
    alive[cur] = False
    for _ in range(n - 1):
        cx, cy = int(xs[cur]), int(ys[cur])
        cand = open_neighbours(cur)
        nxt = min(cand, key=lambda j: len(open_neighbours(j))) if cand else -1
        if nxt < 0:
            cand = np.flatnonzero(alive)
            d2 = (xs[cand] - cx) ** 2 + (ys[cand] - cy) ** 2
            nxt = int(cand[np.argmin(d2)])
        order.append(nxt)
        alive[nxt] = False
        cur = nxt
    return np.array(order, dtype=np.int64)


def edge_points(d: np.ndarray) -> PointSet:
    """One point per edge pixel, grouped and ordered by 8-connected chain."""
    labels, n = ndimage.label(d, structure=_EIGHT)
    if n == 0:
        return PointSet(np.zeros((0, 2)), np.zeros(0, dtype=np.int64))
    # Row-major scan order, so the first pixel of each label is its topmost-leftmost.
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    pts, ids = [], []
    # ndimage.label numbers components in scan order of their first pixel.
    for cid, k in enumerate(range(1, n + 1)):
        sel = lab == k
        cx, cy = xs[sel], ys[sel]
        order = _order_component(cx, cy)
        pts.append(np.column_stack([cx[order], cy[order]]))
        ids.append(np.full(len(order), cid, dtype=np.int64))
    return PointSet(np.concatenate(pts).astype(np.float64), np.concatenate(ids))


def propagate_points(p: PointSet, v: np.ndarray) -> PointSet:
    if len(p) == 0:
        return p
    shift = bilinear_sample(v, p.points[:, 0], p.points[:, 1])
    return PointSet(p.points + shift, p.chain_ids)


def interior_filter(p_star: PointSet, d_i: np.ndarray, fg: np.ndarray, margin: int) -> PointSet:
    """Keep the points whose rounded position lies in the eroded silhouette."""
    check_same_shape(d_i, fg, what="edge map and foreground mask")
    if len(p_star) == 0:
        return p_star
    interior = erode_mask(fg, margin)
    h, w = interior.shape
    ij = round_half_away(p_star.points)
    x, y = ij[:, 0], ij[:, 1]
    keep = (x >= 0) & (x < w) & (y >= 0) & (y < h)
    keep[keep] = interior[y[keep], x[keep]]
    return p_star.subset(keep)


def interpolate_dilation(p: PointSet, radius: int, w: int, h: int) -> np.ndarray:
    raster, _ = rasterize_points(p, w, h)
    return dilate_mask(raster, radius)


def _runs(points: np.ndarray, ids: np.ndarray, max_step: float):
    """Split ordered points into runs sharing a chain id with no big jumps."""
    if len(points) == 0:
        return []
    step = np.hypot(*np.diff(points, axis=0).T) if len(points) > 1 else np.zeros(0)
    cut = np.flatnonzero((np.diff(ids) != 0) | (step > max_step)) + 1
    return np.split(np.arange(len(points)), cut)


def _spline_samples(pts: np.ndarray) -> np.ndarray:
    # Drop consecutive duplicates, which splprep rejects.
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.diff(pts, axis=0) != 0, axis=1)
    pts = pts[keep]
    if len(pts) < 4:
        return pts
    seg = np.hypot(*np.diff(pts, axis=0).T)
    u = np.concatenate([[0.0], np.cumsum(seg)])
    u /= u[-1]
    tck, _ = interpolate.splprep([pts[:, 0], pts[:, 1]], u=u, k=3, s=0.25 * len(pts))
    n = int(np.ceil(seg.sum() / 0.4)) + 1
    x, y = interpolate.splev(np.linspace(0.0, 1.0, n), tck)
    return np.column_stack([x, y])


def interpolate_spline(p: PointSet, w: int, h: int, min_chain: int = 4, max_step: float = 3.0) -> np.ndarray:
    """Rasterise a cubic B-spline through each ordered chain.

    Chains are additionally split wherever consecutive points are more than
    ``max_step`` px apart; runs shorter than ``min_chain`` are drawn as
    individual points.
    """
    out = np.zeros((h, w), dtype=bool)
    if len(p) == 0:
        return out
    ids = p.chain_ids if p.chain_ids is not None else np.zeros(len(p), dtype=np.int64)
    for run in _runs(p.points, ids, max_step):
        pts = p.points[run]
        if len(run) >= min_chain:
            pts = _spline_samples(pts)
        raster, _ = rasterize_points(PointSet(pts), w, h)
        out |= raster
    return out


@dataclass
class FlowEdgeResult:
    f: np.ndarray
    source_points: int
    kept_points: int
    dropped_points: int


def flow_edge_detect(
    source_edges: np.ndarray,
    v_chain: np.ndarray,
    d_i: np.ndarray,
    fg_i: np.ndarray,
    params: FlowEdgeParams | None = None,
    diagnostics: bool = False,
    source_points: PointSet | None = None,
):
    """``source_points`` may carry a cached ``edge_points(source_edges)``."""
    params = params or FlowEdgeParams()
    check_same_shape(source_edges, v_chain, d_i, fg_i, what="flow-edge inputs")
    h, w = d_i.shape
    pts = source_points if source_points is not None else edge_points(source_edges)
    moved = propagate_points(pts, v_chain)
    kept = interior_filter(moved, d_i, fg_i, params.interior_margin)
    if len(kept) == 0:
        f = np.zeros((h, w), dtype=bool)
    elif params.interpolation == "dilation":
        f = interpolate_dilation(kept, params.dilation_radius, w, h)
    else:
        f = interpolate_spline(kept, w, h, params.spline_min_chain)
    # Interpolation may spill past the silhouette; flow edges stay in the foreground.
    f &= fg_i
    if diagnostics:
        return FlowEdgeResult(f, len(pts), len(kept), len(pts) - len(kept))
    return f

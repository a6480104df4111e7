"""Dense pyramidal Lucas-Kanade flow, flow composition and sub-pixel lookup.

Flow is forward: ``prev(x, y) ~= curr(x + dx, y + dy)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import ShapeError, bilinear_sample, check_same_shape


@dataclass(frozen=True)
class FlowParams:
    pyramid_levels: int = 3
    window_radius: int = 7
    iterations_per_level: int = 3
    min_eigen: float = 1e-4

    def __post_init__(self):
        if self.pyramid_levels < 1 or self.window_radius < 1 or self.iterations_per_level < 1:
            raise ValueError("pyramid_levels, window_radius and iterations_per_level must be positive")
        if self.min_eigen < 0:
            raise ValueError("min_eigen must be >= 0")


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of a ``(3, H, W)`` image."""
    r, g, b = np.asarray(rgb, dtype=np.float64)
    return 0.299 * r + 0.587 * g + 0.114 * b


def _downsample(img: np.ndarray) -> np.ndarray:
    return ndimage.gaussian_filter(img, 1.0, mode="nearest")[::2, ::2]


def _pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    pyr = [img]
    for _ in range(levels - 1):
        if min(pyr[-1].shape) < 8:
            break
        pyr.append(_downsample(pyr[-1]))
    return pyr


def _upsample_flow(flow: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    # Fine pixel centre x maps to coarse coordinate x / 2.
    up = bilinear_sample(flow, xs / 2.0, ys / 2.0)
    return 2.0 * up


def _warp(img: np.ndarray, flow: np.ndarray) -> np.ndarray:
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return bilinear_sample(img, xs + flow[..., 0], ys + flow[..., 1])


def _refine(prev: np.ndarray, curr: np.ndarray, flow: np.ndarray, p: FlowParams) -> np.ndarray:
    gy0, gx0 = np.gradient(prev)
    size = 2 * p.window_radius + 1
    box = lambda a: ndimage.uniform_filter(a, size, mode="nearest")
    flow = flow.copy()
    for _ in range(p.iterations_per_level):
        u, v = flow[..., 0], flow[..., 1]
        warped = _warp(curr, flow)
        gy1, gx1 = np.gradient(warped)
        # Average of both frames' gradients: symmetric and better conditioned
        # for the larger residual displacements of the first iterations.
        ix, iy = 0.5 * (gx0 + gx1), 0.5 * (gy0 + gy1)
        ixx, iyy, ixy = ix * ix, iy * iy, ix * iy
        sxx, syy, sxy = box(ixx), box(iyy), box(ixy)
        tr = sxx + syy
        det = sxx * syy - sxy * sxy
        lam_min = 0.5 * (tr - np.sqrt(np.maximum(tr * tr - 4 * det, 0.0)))
        ok = lam_min > p.min_eigen
        safe_det = np.where(ok, det, 1.0)
        it = warped - prev
        # Residuals of neighbour q are re-linearised to the centre pixel's
        # flow, so each window is effectively warped by a single vector.
        bx = box(ix * it) - box(ixx * u + ixy * v)
        by = box(iy * it) - box(ixy * u + iyy * v)
        nu = -(syy * bx - sxy * by) / safe_det
        nv = -(sxx * by - sxy * bx) / safe_det
        flow[..., 0] = np.where(ok, nu, u)
        flow[..., 1] = np.where(ok, nv, v)
    return flow


def estimate_flow(prev: np.ndarray, curr: np.ndarray, params: FlowParams | None = None) -> np.ndarray:
    params = params or FlowParams()
    prev = np.asarray(prev, dtype=np.float64)
    curr = np.asarray(curr, dtype=np.float64)
    check_same_shape(prev, curr, what="flow frames")
    p0 = _pyramid(prev, params.pyramid_levels)
    p1 = _pyramid(curr, params.pyramid_levels)
    flow = np.zeros(p0[-1].shape + (2,))
    for level in range(len(p0) - 1, -1, -1):
        if flow.shape[:2] != p0[level].shape:
            flow = _upsample_flow(flow, p0[level].shape)
        flow = _refine(p0[level], p1[level], flow, params)
    return flow


def sample_flow(v: np.ndarray, p: tuple[float, float]) -> tuple[float, float]:
    dx, dy = bilinear_sample(v, p[0], p[1])
    return float(dx), float(dy)


def compose_flows(v_ab: np.ndarray, v_bc: np.ndarray) -> np.ndarray:
    """Chain two forward flows: a -> b followed by b -> c."""
    if v_ab.shape != v_bc.shape:
        raise ShapeError(f"flow fields have mismatched shapes: {v_ab.shape} vs {v_bc.shape}")
    h, w = v_ab.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return v_ab + bilinear_sample(v_bc, xs + v_ab[..., 0], ys + v_ab[..., 1])


def endpoint_error(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    return np.hypot(est[..., 0] - truth[..., 0], est[..., 1] - truth[..., 1])

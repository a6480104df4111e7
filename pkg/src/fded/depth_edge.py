"""Depth edges by Gaussian adaptive thresholding.

A pixel is an edge when its depth exceeds the Gaussian-weighted mean of its
``w x w`` neighbourhood (plus a small offset), i.e. it lies on the far side
of a local depth discontinuity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class AdaptiveThresholdParams:
    """Parameters of the adaptive depth threshold.

    ``sigma`` defaults to ``w / 4`` and ``offset_c`` to ``offset_frac`` times
    the foreground depth range. Pixels with depth ``>= background_depth`` are
    background: they are replaced by a fill value before thresholding and are
    never reported as edges. ``fill="near"`` places the fill in front of the
    nearest foreground depth so that silhouette edges appear on the object
    side; ``fill="far"`` places it behind the farthest.
    """

    w: int = 9
    sigma: float | None = None
    offset_c: float | None = None
    offset_frac: float = 0.3
    background_depth: float | None = None
    fill: Literal["near", "far"] = "near"
    fill_scale: float = 1.0
    symmetric: bool = False

    def __post_init__(self):
        if self.w < 3 or self.w % 2 == 0:
            raise ParameterError(f"window width must be odd and >= 3, got {self.w}")
        if self.sigma is not None and not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if self.offset_c is not None and self.offset_c < 0:
            raise ParameterError(f"offset_c must be >= 0, got {self.offset_c}")
        if self.offset_frac < 0 or self.fill_scale < 0:
            raise ParameterError("offset_frac and fill_scale must be >= 0")
        if self.fill not in ("near", "far"):
            raise ParameterError(f"unknown fill policy {self.fill!r}")

    @property
    def resolved_sigma(self) -> float:
        return self.sigma if self.sigma is not None else self.w / 4.0


def gaussian_window(w: int, sigma: float) -> np.ndarray:
    """Normalised ``w x w`` Gaussian weights (sum 1)."""
    if w < 3 or w % 2 == 0:
        raise ParameterError(f"window width must be odd and >= 3, got {w}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    r = w // 2
    i = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(i[:, None] ** 2 + i[None, :] ** 2) / (2.0 * sigma**2))
    return g / g.sum()


def _foreground(depth: np.ndarray, params: AdaptiveThresholdParams) -> np.ndarray:
    if params.background_depth is None:
        return np.ones(depth.shape, dtype=bool)
    return depth < params.background_depth


def _span(values: np.ndarray) -> tuple[float, float, float]:
    lo, hi = float(values.min()), float(values.max())
    return lo, hi, hi - lo


def prepare_depth(depth: np.ndarray, params: AdaptiveThresholdParams):
    """Substitute the background fill; returns ``(filled, fg, offset)``."""
    depth = np.asarray(depth, dtype=np.float64)
    if not np.all(np.isfinite(depth)):
        raise ParameterError("depth grid contains non-finite values")
    fg = _foreground(depth, params)
    filled = depth.copy()
    if fg.any():
        lo, hi, span = _span(depth[fg])
    else:
        lo = hi = span = 0.0
    if not fg.all():
        scale = params.fill_scale * (span if span > 0 else 1.0)
        filled[~fg] = lo - scale if params.fill == "near" else hi + scale
    offset = params.offset_c if params.offset_c is not None else params.offset_frac * span
    return filled, fg, offset


def adaptive_threshold_map(depth: np.ndarray, params: AdaptiveThresholdParams) -> np.ndarray:
    """Gaussian-weighted local mean of the (background-filled) depth.

    Windows are clipped at the frame border and renormalised over the
    in-bounds weights.
    """
    filled, _, _ = prepare_depth(depth, params)
    return _weighted_mean(filled, params)


def _weighted_mean(filled: np.ndarray, params: AdaptiveThresholdParams) -> np.ndarray:
    g = gaussian_window(params.w, params.resolved_sigma)
    num = ndimage.correlate(filled, g, mode="constant", cval=0.0)
    den = ndimage.correlate(np.ones_like(filled), g, mode="constant", cval=0.0)
    return num / den


def _excess_over_mean(filled: np.ndarray, params: AdaptiveThresholdParams) -> np.ndarray:
    # D - T accumulated as weighted sums of (D - D_neighbour) so that flat
    # regions give exactly zero instead of rounding noise.
    g = gaussian_window(params.w, params.resolved_sigma)
    r = params.w // 2
    h, w = filled.shape
    pad = np.pad(filled, r)
    inb = np.pad(np.ones((h, w)), r)
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    for a in range(params.w):
        for b in range(params.w):
            nb = pad[a : a + h, b : b + w]
            ok = inb[a : a + h, b : b + w]
            num += g[a, b] * ok * (filled - nb)
            den += g[a, b] * ok
    return num / den


def depth_edge_detect(depth: np.ndarray, params: AdaptiveThresholdParams | None = None) -> np.ndarray:
    params = params or AdaptiveThresholdParams()
    filled, fg, offset = prepare_depth(depth, params)
    diff = _excess_over_mean(filled, params)
    if params.symmetric:
        edges = np.abs(diff) > offset
    else:
        edges = diff > offset
    return edges & fg

"""Edge precision/recall with a pixel tolerance, SSIM and temporal consistency."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np
from scipy import ndimage

from .raster import check_same_shape, dilate_mask


@dataclass(frozen=True)
class EdgeScore:
    precision: float
    recall: float
    f1: float
    tolerance: int
    matched_pred: int
    total_pred: int
    matched_oracle: int
    total_oracle: int
    empty_pred: bool = False
    empty_oracle: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def edge_prf(pred: np.ndarray, oracle: np.ndarray, tol: int = 2) -> EdgeScore:
    """One-to-many matching: a pixel is matched when any pixel of the other
    map lies within Chebyshev distance ``tol``."""
    check_same_shape(pred, oracle, what="prediction and oracle")
    if tol < 0:
        raise ValueError("tolerance must be >= 0")
    pred = np.asarray(pred, dtype=bool)
    oracle = np.asarray(oracle, dtype=bool)
    n_pred, n_orc = int(pred.sum()), int(oracle.sum())
    m_pred = int((pred & dilate_mask(oracle, tol)).sum())
    m_orc = int((oracle & dilate_mask(pred, tol)).sum())
    precision = m_pred / n_pred if n_pred else 0.0
    recall = m_orc / n_orc if n_orc else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision > 0 and recall > 0 else 0.0
    return EdgeScore(precision, recall, f1, tol, m_pred, n_pred, m_orc, n_orc, n_pred == 0, n_orc == 0)


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    window: int = 7,
    k1: float = 0.01,
    k2: float = 0.03,
    dynamic_range: float = 1.0,
) -> float:
    """Mean SSIM over all fully contained ``window x window`` windows with
    uniform weights and population (biased) variances."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b, what="SSIM inputs")
    if window < 1 or window > min(a.shape):
        raise ValueError(f"window {window} does not fit image of shape {a.shape}")
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    r = window // 2
    inner = (slice(r, a.shape[0] - (window - 1 - r)), slice(r, a.shape[1] - (window - 1 - r)))

    def mean(x):
        return ndimage.uniform_filter(x, window, mode="constant")[inner]

    mu_a, mu_b = mean(a), mean(b)
    var_a = mean(a * a) - mu_a**2
    var_b = mean(b * b) - mu_b**2
    cov = mean(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def temporal_consistency(frames: Sequence[np.ndarray], **ssim_kwargs) -> float:
    """Mean SSIM between consecutive frames (edge maps are cast to 0/1)."""
    if len(frames) < 2:
        raise ValueError("temporal consistency needs at least 2 frames")
    grids = [np.asarray(f, dtype=np.float64) for f in frames]
    return float(np.mean([ssim(x, y, **ssim_kwargs) for x, y in zip(grids, grids[1:])]))

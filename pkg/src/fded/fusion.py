"""Per-sequence orchestration: depth edges, chained flow, flow edges, union."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .depth_edge import AdaptiveThresholdParams, depth_edge_detect
from .flow import FlowParams, compose_flows, estimate_flow, luminance
from .flow_edge import FlowEdgeParams, edge_points, flow_edge_detect
from .raster import PointSet, foreground_mask, mask_union


class ConfigurationError(ValueError):
    pass


@dataclass
class FrameRecord:
    index: int
    rgb: np.ndarray  # (3, H, W) in [0, 1]
    depth: np.ndarray
    occlusion_free: bool = False
    flow_to_next: np.ndarray | None = None  # optional external flow


@dataclass(frozen=True)
class PipelineConfig:
    threshold: AdaptiveThresholdParams = field(default_factory=AdaptiveThresholdParams)
    flow: FlowParams = field(default_factory=FlowParams)
    flow_edge: FlowEdgeParams = field(default_factory=FlowEdgeParams)
    emit_diagnostics: bool = True
    external_flow: bool = False


@dataclass
class EdgeBundle:
    d: np.ndarray
    f: np.ndarray
    e: np.ndarray
    source_frame: int
    chain_length: int
    dropped_points: int
    source_points: int = 0

    def diagnostics(self) -> dict:
        return {
            "source_frame": self.source_frame,
            "chain_length": self.chain_length,
            "source_points": self.source_points,
            "dropped_points": self.dropped_points,
            "d_pixels": int(self.d.sum()),
            "f_pixels": int(self.f.sum()),
            "e_pixels": int(self.e.sum()),
        }


def select_reference(occlusion_free: Sequence[bool], i: int, policy: str = "last_occlusion_free") -> int:
    """Index of the frame whose depth edges seed flow propagation into frame ``i``."""
    if i == 0:
        return 0
    if policy == "previous_frame":
        return i - 1
    if policy != "last_occlusion_free":
        raise ConfigurationError(f"unknown source policy {policy!r}")
    for j in range(i - 1, -1, -1):
        if occlusion_free[j]:
            return j
    raise ConfigurationError(f"frame {i}: no occlusion-free frame precedes it")


class FlowCache:
    """Pairwise flows computed once; chains composed on demand and memoised."""

    def __init__(self, frames: Sequence[FrameRecord], params: FlowParams, external: bool = False):
        self.frames = frames
        self.params = params
        self.external = external
        self._pair: dict[int, np.ndarray] = {}
        self._chain: dict[tuple[int, int], np.ndarray] = {}
        self._luma: dict[int, np.ndarray] = {}

    def _lum(self, k: int) -> np.ndarray:
        if k not in self._luma:
            self._luma[k] = luminance(self.frames[k].rgb)
        return self._luma[k]

    def pair(self, k: int) -> np.ndarray:
        """Flow from frame ``k`` to frame ``k + 1``."""
        if k not in self._pair:
            ext = self.frames[k].flow_to_next
            if self.external:
                if ext is None:
                    raise ConfigurationError(f"frame {k}: external flow requested but not supplied")
                self._pair[k] = np.asarray(ext, dtype=np.float64)
            else:
                self._pair[k] = estimate_flow(self._lum(k), self._lum(k + 1), self.params)
        return self._pair[k]

    def chain(self, j: int, i: int) -> np.ndarray:
        if (j, i) in self._chain:
            return self._chain[(j, i)]
        if i == j + 1:
            v = self.pair(j)
        else:
            v = compose_flows(self.chain(j, i - 1), self.pair(i - 1))
        self._chain[(j, i)] = v
        return v


def run_pipeline(frames: Sequence[FrameRecord], cfg: PipelineConfig | None = None) -> list[EdgeBundle]:
    cfg = cfg or PipelineConfig()
    if not frames:
        raise ConfigurationError("empty frame sequence")
    ref_shape = frames[0].depth.shape
    for fr in frames:
        if fr.depth.shape != ref_shape or fr.rgb.shape[1:] != ref_shape:
            raise ConfigurationError(f"frame {fr.index}: raster dimensions differ from frame 0")
    flags = [fr.occlusion_free for fr in frames]
    thr = cfg.threshold
    sentinel = thr.background_depth if thr.background_depth is not None else np.inf

    d_maps = []
    for fr in frames:
        try:
            d_maps.append(depth_edge_detect(fr.depth, thr))
        except ValueError as exc:
            raise type(exc)(f"frame {fr.index}: {exc}") from exc

    cache = FlowCache(frames, cfg.flow, cfg.external_flow)
    source_pts: dict[int, PointSet] = {}
    bundles = []
    for i, fr in enumerate(frames):
        d = d_maps[i]
        j = select_reference(flags, i, cfg.flow_edge.source_policy)
        if j == i:
            f = np.zeros_like(d)
            bundles.append(EdgeBundle(d, f, d.copy(), j, 0, 0, 0))
            continue
        v = cache.chain(j, i)
        fg = foreground_mask(fr.depth, sentinel)
        if j not in source_pts:
            source_pts[j] = edge_points(d_maps[j])
        res = flow_edge_detect(d_maps[j], v, d, fg, cfg.flow_edge, diagnostics=True, source_points=source_pts[j])
        e = mask_union(d, res.f)
        bundles.append(EdgeBundle(d, res.f, e, j, i - j, res.dropped_points, res.source_points))
    return bundles

"""Occlusion-robust edge guidance for drawing stylization.

Depth edges from Gaussian adaptive thresholding are completed in occluded
regions by propagating edge points of an occlusion-free frame along optical
flow; the fused edges guide a patch-wise stylizer trained with a
reconstruction plus edge-guided contrastive ranking loss.
"""

__version__ = "0.1.0"

from .depth_edge import AdaptiveThresholdParams, adaptive_threshold_map, depth_edge_detect, gaussian_window
from .flow import FlowParams, compose_flows, estimate_flow, sample_flow
from .flow_edge import FlowEdgeParams, edge_points, flow_edge_detect, propagate_points
from .fusion import EdgeBundle, FrameRecord, PipelineConfig, run_pipeline, select_reference
from .raster import PointSet, mask_union

__all__ = [
    "AdaptiveThresholdParams",
    "EdgeBundle",
    "FlowEdgeParams",
    "FlowParams",
    "FrameRecord",
    "PipelineConfig",
    "PointSet",
    "adaptive_threshold_map",
    "compose_flows",
    "depth_edge_detect",
    "edge_points",
    "estimate_flow",
    "flow_edge_detect",
    "gaussian_window",
    "mask_union",
    "propagate_points",
    "run_pipeline",
    "sample_flow",
    "select_reference",
]

"""Scaled-down experiments shared by the acceptance tests and ``scripts/``."""
from __future__ import annotations

import dataclasses
import time

import numpy as np

from .config import RunConfig
from .depth_edge import AdaptiveThresholdParams, depth_edge_detect
from .flow import estimate_flow, luminance
from .fusion import FrameRecord, run_pipeline
from .losses import LossParams, edge_tiles, max_stable_lr, patchify, stylizer_inputs, train_toy
from .metrics import edge_prf, temporal_consistency
from .synth import SceneSpec, background_sentinel, canonical_scene, render_frame, render_sequence

# Depth gap around which depth-only detection of the limb/body boundary
# switches on and off in the canonical scene; jittering the gap across it
# makes the depth edges flicker.
FLICKER_GAP = 0.7
FLICKER_JITTER = 0.5


def records(truth) -> list[FrameRecord]:
    return [FrameRecord(i, t.rgb, t.depth, t.occlusion_free) for i, t in enumerate(truth)]


def run_scene(spec: SceneSpec, cfg: RunConfig | None = None):
    """Render ``spec`` and run the detector; returns ``(truth, bundles, seconds)``
    where the time covers the pipeline only."""
    cfg = cfg or RunConfig()
    truth = render_sequence(spec)
    frames = records(truth)
    t0 = time.perf_counter()
    bundles = run_pipeline(frames, cfg.pipeline(background_sentinel(spec)))
    return truth, bundles, time.perf_counter() - t0


def occlusion_recovery(seed: int = 0, size: int = 256, frames: int = 20, depth_gap: float = 1e-3, tol: int = 2, cfg=None) -> dict:
    spec = canonical_scene(size=size, frames=frames, depth_gap=depth_gap, seed=seed)
    truth, bundles, secs = run_scene(spec, cfg)
    rows = []
    for i, (t, b) in enumerate(zip(truth, bundles)):
        if not t.occluded_boundary.any():
            continue
        rows.append({
            "frame": i,
            "occlusion_rate": t.occlusion_rate,
            "d_recall": edge_prf(b.d, t.occluded_boundary, tol).recall,
            "e_recall": edge_prf(b.e, t.occluded_boundary, tol).recall,
        })
    return {"seed": seed, "pipeline_seconds": secs, "occluded_frames": rows}


def flicker_scene(seed: int, **kw) -> SceneSpec:
    kw.setdefault("depth_gap", FLICKER_GAP)
    kw.setdefault("depth_jitter", FLICKER_JITTER)
    return canonical_scene(seed=seed, **kw)


def hold_flicker_scene(seed: int, **kw) -> SceneSpec:
    """Flicker scene whose arm swings across the torso in two frames and then
    holds still, so only the depth gap changes from frame to frame."""
    spec = flicker_scene(seed, **kw)
    sweep = kw.get("sweep", 0.7)
    angles = [0.0, 0.5 * sweep] + [sweep] * (spec.frames - 2)
    return dataclasses.replace(spec, trajectory={"arm": angles[: spec.frames]})


def temporal_consistency_suite(seeds=range(10), cfg=None, scene=flicker_scene, **scene_kw) -> list[dict]:
    out = []
    for s in seeds:
        _, bundles, _ = run_scene(scene(s, **scene_kw), cfg)
        out.append({
            "seed": s,
            "d": temporal_consistency([b.d.astype(float) for b in bundles]),
            "e": temporal_consistency([b.e.astype(float) for b in bundles]),
        })
    return out


def with_flows(frames: list[FrameRecord], flows) -> list[FrameRecord]:
    return [dataclasses.replace(f, flow_to_next=v) for f, v in zip(frames, flows)]


def window_sweep(seeds=(0, 1, 2), ws=(7, 9, 11, 13), hs=("dilation", "spline"), tol: int = 2, cfg=None, size: int = 256) -> dict:
    """Mean per-frame F1 of ``e`` against the oracle for every ``(w, h)`` cell.
    Pairwise flow is estimated once per scene and reused across cells."""
    base = cfg or RunConfig()
    scores = {(w, h): [] for w in ws for h in hs}
    for s in seeds:
        spec = canonical_scene(size=size, seed=s)
        truth = render_sequence(spec)
        frames = records(truth)
        flows = [estimate_flow(luminance(a.rgb), luminance(b.rgb), base.flow) for a, b in zip(frames, frames[1:])]
        frames = with_flows(frames, flows + [None])
        for w in ws:
            for h in hs:
                cfg_c = dataclasses.replace(
                    base,
                    threshold=dataclasses.replace(base.threshold, w=w, sigma=None),
                    flow_edge=dataclasses.replace(base.flow_edge, interpolation=h),
                    external_flow=True,
                )
                bundles = run_pipeline(frames, cfg_c.pipeline(background_sentinel(spec)))
                f1 = np.mean([edge_prf(b.e, t.oracle_edges, tol).f1 for b, t in zip(bundles, truth)])
                scores[(w, h)].append(float(f1))
    grid = [{"w": w, "h": h, "f1": float(np.mean(v))} for (w, h), v in scores.items()]
    spread = {h: float(np.ptp([c["f1"] for c in grid if c["h"] == h])) for h in hs}
    return {"grid": grid, "f1_spread_over_w": spread}


def stylization_task(seed: int, size: int = 128, patch_px: int = 8):
    """Rest-pose frame of the canonical scene: degraded input patches ``Z``,
    edge tiles, and clean target patches ``X`` (whose flags mark edge patches)."""
    spec = canonical_scene(size=size, frames=1, seed=seed)
    fr = render_frame(spec, 0)
    e = depth_edge_detect(fr.depth, AdaptiveThresholdParams(background_depth=background_sentinel(spec)))
    return patchify(fr.rgb, e, patch_px), edge_tiles(e, patch_px), patchify(fr.clean, e, patch_px)


def iterations_to(history, threshold: float):
    return next((i for i, v in enumerate(history) if v <= threshold), None)


def contrastive_convergence(seeds=range(10), threshold: float = 500.0, iters: int = 400, size: int = 128) -> list[dict]:
    out = []
    for s in seeds:
        z, et, x = stylization_task(s, size)
        lr = max_stable_lr(stylizer_inputs(z.data, et))
        row = {"seed": s, "lr": lr}
        for tag, uc in (("with", True), ("without", False)):
            _, h = train_toy(z.data, et, x.data, x.edge_flags, LossParams(rng_seed=s), lr, iters, uc, s)
            row[f"iters_{tag}"] = iterations_to(h, threshold)
            row[f"final_{tag}"] = h[-1]
        out.append(row)
    return out

"""Command line entry point: ``fded <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .depth_edge import AdaptiveThresholdParams, depth_edge_detect
from .flow import estimate_flow, luminance
from .fusion import run_pipeline
from .io import (
    FormatError,
    dump_json,
    load_frames,
    load_json,
    read_manifest,
    read_pgm,
    read_ppm,
    write_flo,
    write_pgm,
    write_sequence,
)
from .losses import NumericError, edge_tiles, max_stable_lr, patchify, stylizer_inputs, train_toy
from .metrics import edge_prf, ssim
from .synth import SceneSpec, background_sentinel, canonical_scene, render_sequence

log = logging.getLogger("fded")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
RATE_BINS = (0.0, 0.05, 0.1, 0.2, 0.4, 1.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv(cast):
    def parse(text):
        try:
            return [cast(t) for t in text.split(",") if t]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None

    return parse


def _load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return RunConfig.from_dict(load_json(path))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _sentinel(manifest: dict):
    s = manifest.get("background_sentinel")
    return None if s is None else float(s)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# Subcommands -----------------------------------------------------------------


def cmd_synth(args) -> None:
    doc = load_json(args.spec)
    if "canonical" in doc:
        kwargs = dict(doc["canonical"] or {})
        kwargs["seed"] = args.seed
        spec = canonical_scene(**kwargs)
    else:
        doc = dict(doc, seed=args.seed)
        try:
            spec = SceneSpec.from_dict(doc)
        except TypeError as exc:
            raise ConfigError(f"{args.spec}: {exc}") from None
    frames = render_sequence(spec)
    write_sequence(args.out, spec, frames, background_sentinel(spec))
    log.info("wrote %d frames to %s", len(frames), args.out)


def cmd_detect(args) -> None:
    m = read_manifest(args.inp)
    frames = load_frames(args.inp, m)
    params = AdaptiveThresholdParams(w=args.w, sigma=args.sigma, offset_c=args.offset, background_depth=_sentinel(m))
    out = _out_dir(args.out)
    names = []
    for fr in frames:
        name = f"d_{fr.index:04d}.pgm"
        write_pgm(out / name, depth_edge_detect(fr.depth, params))
        names.append(name)
    dump_json(out / "config.json", {"threshold": dataclasses.asdict(params)})
    dump_json(out / "manifest.json", {"kind": "d", "frame_count": len(names), "d": names, "source": str(args.inp)})


def cmd_flow(args) -> None:
    m = read_manifest(args.inp)
    frames = load_frames(args.inp, m)
    cfg = _load_config(args.config)
    out = _out_dir(args.out)
    names = []
    for a, b in zip(frames, frames[1:]):
        v = estimate_flow(luminance(a.rgb), luminance(b.rgb), cfg.flow)
        if not np.all(np.isfinite(v)):
            raise NumericError(f"frame {a.index}: non-finite flow")
        name = f"flow_{a.index:04d}.flo"
        write_flo(out / name, v)
        names.append(name)
    dump_json(out / "manifest.json", {"kind": "flow", "pairs": names, "source": str(args.inp)})


def _run(seq_dir, cfg: RunConfig, manifest=None):
    m = manifest or read_manifest(seq_dir)
    frames = load_frames(seq_dir, m)
    return m, run_pipeline(frames, cfg.pipeline(_sentinel(m)))


def cmd_pipeline(args) -> None:
    cfg = _load_config(args.config)
    m, bundles = _run(args.inp, cfg)
    out = _out_dir(args.out)
    entries = []
    for i, b in enumerate(bundles):
        entry = {"index": i}
        for kind in ("d", "f", "e"):
            entry[kind] = f"{kind}_{i:04d}.pgm"
            write_pgm(out / entry[kind], getattr(b, kind))
        entries.append(entry)
    dump_json(out / "config.json", cfg.to_dict())
    if cfg.emit_diagnostics:
        dump_json(out / "diagnostics.json", {"frames": [dict(b.diagnostics(), index=i) for i, b in enumerate(bundles)]})
    dump_json(out / "manifest.json", {"kind": "edges", "frame_count": len(entries), "frames": entries, "source": str(args.inp)})


def _pred_maps(pred_dir: Path, kind: str, n: int) -> list[np.ndarray]:
    maps = []
    for i in range(n):
        path = pred_dir / f"{kind}_{i:04d}.pgm"
        if not path.exists():
            # A sequence directory scores its own oracle edges.
            alt = pred_dir / f"{i:04d}_edges.pgm"
            if not alt.exists():
                raise FormatError(f"{path}: prediction for frame {i} missing")
            path = alt
        maps.append(read_pgm(path))
    return maps


def evaluate(preds, truth_dir: Path, m: dict, tol: int) -> dict:
    per_frame = []
    occ_by_bin: dict[str, list[float]] = {}
    for i, (pred, f) in enumerate(zip(preds, m["frames"])):
        if "oracle_edges" not in f:
            raise FormatError(f"{truth_dir}: frame {i} has no oracle_edges")
        orc = read_pgm(truth_dir / f["oracle_edges"])
        if orc.shape != pred.shape:
            raise FormatError(f"frame {i}: prediction shape {pred.shape} != truth shape {orc.shape}")
        s = edge_prf(pred, orc, tol)
        row = {
            "index": i,
            "precision": s.precision,
            "recall": s.recall,
            "f1": s.f1,
            "ssim_prev": None if i == 0 else ssim(preds[i - 1].astype(float), pred.astype(float)),
            "occlusion_rate": f.get("occlusion_rate"),
            "occluded_recall": None,
        }
        if "occluded_boundary" in f:
            occ = read_pgm(truth_dir / f["occluded_boundary"])
            if occ.any():
                row["occluded_recall"] = edge_prf(pred, occ, tol).recall
        per_frame.append(row)
        rate = f.get("occlusion_rate")
        if rate is not None:
            occ_by_bin.setdefault(_rate_bin(rate), []).append(s.f1)
    ssims = [r["ssim_prev"] for r in per_frame if r["ssim_prev"] is not None]
    occ = [r["occluded_recall"] for r in per_frame if r["occluded_recall"] is not None]
    aggregate = {
        "precision": float(np.mean([r["precision"] for r in per_frame])),
        "recall": float(np.mean([r["recall"] for r in per_frame])),
        "f1": float(np.mean([r["f1"] for r in per_frame])),
        "temporal_consistency": float(np.mean(ssims)) if ssims else None,
        "occluded_recall_mean": float(np.mean(occ)) if occ else None,
        "occluded_recall_min": float(np.min(occ)) if occ else None,
        "f1_by_occlusion_rate": {k: {"frames": len(v), "f1": float(np.mean(v))} for k, v in sorted(occ_by_bin.items())},
    }
    return {"frames": [r["index"] for r in per_frame], "per_frame": per_frame, "aggregate": aggregate}


def _rate_bin(rate: float) -> str:
    if rate <= 0:
        return "0"
    for lo, hi in zip(RATE_BINS, RATE_BINS[1:]):
        if lo < rate <= hi:
            return f"({lo:g},{hi:g}]"
    return f">{RATE_BINS[-1]:g}"


def cmd_eval(args) -> None:
    truth = Path(args.truth)
    m = read_manifest(truth)
    preds = _pred_maps(Path(args.pred), args.kind, m["frame_count"])
    report = evaluate(preds, truth, m, args.tol)
    report["config_echo"] = {"tol": args.tol, "kind": args.kind, "pred": str(args.pred), "truth": str(args.truth)}
    report["version"] = __version__
    dump_json(args.out, report)


def cmd_sweep(args) -> None:
    base = _load_config(args.config)
    seq = Path(args.inp)
    m = read_manifest(seq)
    frames = load_frames(seq, m)
    if not base.external_flow:
        # Flow does not depend on w or h: estimate once, reuse for every cell.
        flows = [estimate_flow(luminance(a.rgb), luminance(b.rgb), base.flow) for a, b in zip(frames, frames[1:])]
        frames = [dataclasses.replace(f, flow_to_next=v) for f, v in zip(frames, flows + [None])]
    cells = []
    for w in args.w:
        for h in args.h:
            cfg = dataclasses.replace(
                base,
                threshold=dataclasses.replace(base.threshold, w=w, sigma=None),
                flow_edge=dataclasses.replace(base.flow_edge, interpolation=h),
                external_flow=True,
            )
            bundles = run_pipeline(frames, cfg.pipeline(_sentinel(m)))
            rep = evaluate([b.e for b in bundles], seq, m, args.tol)
            agg = rep["aggregate"]
            cells.append({
                "w": w,
                "h": h,
                "precision": agg["precision"],
                "recall": agg["recall"],
                "f1": agg["f1"],
                "temporal_consistency": agg["temporal_consistency"],
                "occluded_recall_mean": agg["occluded_recall_mean"],
            })
    spread = {}
    for h in args.h:
        f1s = [c["f1"] for c in cells if c["h"] == h]
        spread[h] = float(max(f1s) - min(f1s))
    dump_json(args.out, {
        "grid": cells,
        "f1_spread_over_w": spread,
        "config_echo": base.to_dict(),
        "tol": args.tol,
        "version": __version__,
    })


def cmd_train_toy(args) -> None:
    m = read_manifest(args.inp)
    f = m["frames"][args.frame]
    if "clean" not in f:
        raise FormatError(f"{args.inp}: frame {args.frame} has no clean (target) image")
    seq = Path(args.inp)
    cfg = _load_config(args.config)
    depth_frames = load_frames(seq, m)
    params = cfg.pipeline(_sentinel(m)).threshold
    e = depth_edge_detect(depth_frames[args.frame].depth, params)
    x = patchify(read_ppm(seq / f["clean"]), e)
    z = patchify(read_ppm(seq / f["rgb"]), e)
    et = edge_tiles(e)
    loss = dataclasses.replace(cfg.loss, rng_seed=args.seed)
    lr = args.lr if args.lr is not None else max_stable_lr(stylizer_inputs(z.data, et))
    _, history = train_toy(z.data, et, x.data, x.edge_flags, loss, lr, args.iters, not args.no_contrastive, args.seed)
    dump_json(args.out, {
        "loss_history": history,
        "lr": lr,
        "iters": args.iters,
        "use_contrastive": not args.no_contrastive,
        "seed": args.seed,
        "patches": x.n,
        "edge_patches": int(x.edge_flags.sum()),
        "config_echo": {"loss": dataclasses.asdict(loss)},
        "version": __version__,
    })


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fded", description="Flow-depth edge detection and edge-guided stylization losses.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="render a synthetic sequence")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("detect", help="depth edges per frame")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("-w", type=int, default=9)
    s.add_argument("--sigma", type=float, default=None)
    s.add_argument("--offset", type=float, default=None)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("flow", help="pairwise flow files")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config", default=None)
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("pipeline", help="full flow-depth edge detection")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config", default=None)
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("train-toy", help="train the toy stylizer, emit loss history")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--iters", type=int, required=True)
    s.add_argument("--lr", type=float, default=None)
    s.add_argument("--no-contrastive", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--frame", type=int, default=0)
    s.add_argument("--config", default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_toy)

    s = sub.add_parser("eval", help="score edge maps against ground truth")
    s.add_argument("--pred", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--tol", type=int, default=2)
    s.add_argument("--kind", default="e", choices=["d", "f", "e"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="window size x interpolator ablation grid")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--w", type=_csv(int), default=[7, 9, 11, 13])
    s.add_argument("--h", type=_csv(str), default=["dilation", "spline"])
    s.add_argument("--tol", type=int, default=2)
    s.add_argument("--config", default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (NumericError, FloatingPointError) as exc:
        print(f"fded {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, ConfigError, OSError, ValueError, KeyError, IndexError) as exc:
        print(f"fded {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())

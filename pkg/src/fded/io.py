"""Raster, flow and manifest files.

* edge maps / masks: binary PGM (P5), 0 = clear, 255 = set
* depth / luminance: PFM (``Pf``), little-endian, scale -1.0, rows stored
  bottom-to-top as the format prescribes
* RGB: binary PPM (P6), 8 bit
* flow: Middlebury ``.flo`` (magic 202021.25, int32 width/height, float32
  interleaved dx, dy, little-endian)
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

FLO_MAGIC = 202021.25
FORMAT_VERSION = "fded-seq/1"


class FormatError(ValueError):
    """Malformed or truncated file; the message names the file and offset."""


def _read_token(buf: bytes, pos: int, path) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError(f"{path}: unexpected end of header at byte {start}")
    return buf[start:pos], pos


def _header(buf: bytes, path, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    for _ in range(count):
        tok, pos = _read_token(buf, pos, path)
        tokens.append(tok)
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise FormatError(f"{path}: missing whitespace after header at byte {pos}")
    return tokens, pos + 1


def _int(tok: bytes, path, what: str) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise FormatError(f"{path}: bad {what} {tok!r}") from None
    if v <= 0:
        raise FormatError(f"{path}: non-positive {what} {v}")
    return v


def _payload(buf: bytes, start: int, size: int, path) -> bytes:
    if len(buf) - start < size:
        raise FormatError(f"{path}: truncated payload at byte {len(buf)}, expected {start + size} bytes")
    return buf[start : start + size]


def _write_atomic(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_pgm(path, mask: np.ndarray) -> None:
    m = np.asarray(mask)
    h, w = m.shape
    pixels = np.where(m.astype(bool), 255, 0).astype(np.uint8) if m.dtype == bool else m.astype(np.uint8)
    _write_atomic(path, f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes())


def read_pgm(path, as_bool: bool = True) -> np.ndarray:
    buf = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _header(buf, path, 4)
    if magic != b"P5":
        raise FormatError(f"{path}: expected P5 at byte 0, found {magic!r}")
    w, h = _int(w, path, "width"), _int(h, path, "height")
    if _int(maxval, path, "maxval") != 255:
        raise FormatError(f"{path}: only 8-bit graymaps are supported")
    img = np.frombuffer(_payload(buf, pos, w * h, path), dtype=np.uint8).reshape(h, w)
    return img > 127 if as_bool else img.copy()


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write a ``(3, H, W)`` image in [0, 1] (or uint8) as 8-bit P6."""
    a = np.asarray(rgb)
    if a.dtype != np.uint8:
        a = np.clip(np.floor(a * 255.0 + 0.5), 0, 255).astype(np.uint8)
    _, h, w = a.shape
    _write_atomic(path, f"P6\n{w} {h}\n255\n".encode() + np.moveaxis(a, 0, -1).tobytes())


def read_ppm(path, as_float: bool = True) -> np.ndarray:
    buf = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _header(buf, path, 4)
    if magic != b"P6":
        raise FormatError(f"{path}: expected P6 at byte 0, found {magic!r}")
    w, h = _int(w, path, "width"), _int(h, path, "height")
    if _int(maxval, path, "maxval") != 255:
        raise FormatError(f"{path}: only 8-bit pixmaps are supported")
    img = np.frombuffer(_payload(buf, pos, w * h * 3, path), dtype=np.uint8).reshape(h, w, 3)
    img = np.moveaxis(img, -1, 0).copy()
    return img / 255.0 if as_float else img


def write_pfm(path, grid: np.ndarray) -> None:
    g = np.asarray(grid, dtype="<f4")
    h, w = g.shape
    _write_atomic(path, f"Pf\n{w} {h}\n-1.0\n".encode() + np.ascontiguousarray(g[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    (magic, w, h, scale), pos = _header(buf, path, 4)
    if magic != b"Pf":
        raise FormatError(f"{path}: expected Pf at byte 0, found {magic!r}")
    w, h = _int(w, path, "width"), _int(h, path, "height")
    try:
        s = float(scale)
    except ValueError:
        raise FormatError(f"{path}: bad scale {scale!r}") from None
    dtype = "<f4" if s < 0 else ">f4"
    data = np.frombuffer(_payload(buf, pos, w * h * 4, path), dtype=dtype).reshape(h, w)
    return data[::-1].astype(np.float32)


def write_flo(path, flow: np.ndarray) -> None:
    f = np.asarray(flow, dtype="<f4")
    h, w = f.shape[:2]
    head = np.array([FLO_MAGIC], dtype="<f4").tobytes() + np.array([w, h], dtype="<i4").tobytes()
    _write_atomic(path, head + np.ascontiguousarray(f).tobytes())


def read_flo(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if len(buf) < 12:
        raise FormatError(f"{path}: truncated header at byte {len(buf)}")
    magic = np.frombuffer(buf[:4], dtype="<f4")[0]
    if magic != np.float32(FLO_MAGIC):
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    w, h = (int(v) for v in np.frombuffer(buf[4:12], dtype="<i4"))
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: bad dimensions {w}x{h} at byte 4")
    data = np.frombuffer(_payload(buf, 12, w * h * 8, path), dtype="<f4")
    return data.reshape(h, w, 2).astype(np.float32)


def dump_json(path, obj) -> None:
    """Deterministic JSON (sorted keys, fixed layout)."""
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    _write_atomic(path, text.encode())


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at byte {exc.pos}: {exc.msg}") from None


# Sequence directories --------------------------------------------------------


def frame_name(i: int, kind: str, ext: str) -> str:
    return f"{i:04d}_{kind}.{ext}"


def write_sequence(out_dir, spec, frames, sentinel: float) -> dict:
    """Write a rendered sequence; the manifest is written last."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, fr in enumerate(frames):
        entry = {
            "index": i,
            "rgb": frame_name(i, "rgb", "ppm"),
            "clean": frame_name(i, "clean", "ppm"),
            "depth": frame_name(i, "depth", "pfm"),
            "oracle_edges": frame_name(i, "edges", "pgm"),
            "occluded_boundary": frame_name(i, "occluded", "pgm"),
            "occlusion_free": bool(fr.occlusion_free),
            "occlusion_rate": float(fr.occlusion_rate),
        }
        write_ppm(out / entry["rgb"], fr.rgb)
        write_ppm(out / entry["clean"], fr.clean)
        write_pfm(out / entry["depth"], fr.depth)
        write_pgm(out / entry["oracle_edges"], fr.oracle_edges)
        write_pgm(out / entry["occluded_boundary"], fr.occluded_boundary)
        if i + 1 < len(frames):
            entry["true_flow"] = frame_name(i, "trueflow", "flo")
            write_flo(out / entry["true_flow"], fr.flow_to_next)
        entries.append(entry)
    manifest = {
        "version": FORMAT_VERSION,
        "frame_count": len(frames),
        "background_sentinel": float(np.float32(sentinel)),
        "spec": spec.to_dict() if spec is not None else None,
        "frames": entries,
    }
    dump_json(out / "manifest.json", manifest)
    return manifest


def read_manifest(seq_dir) -> dict:
    seq_dir = Path(seq_dir)
    path = seq_dir / "manifest.json"
    if not path.exists():
        raise FormatError(f"{path}: manifest not found")
    m = load_json(path)
    for key in ("frame_count", "frames"):
        if key not in m:
            raise FormatError(f"{path}: missing key {key!r}")
    idx = [f.get("index") for f in m["frames"]]
    if idx != list(range(len(idx))) or len(idx) != m["frame_count"]:
        raise FormatError(f"{path}: frame indices must be contiguous from 0 and match frame_count")
    for f in m["frames"]:
        for key in ("rgb", "depth"):
            if key not in f:
                raise FormatError(f"{path}: frame {f['index']} lacks {key!r}")
        for key in ("rgb", "depth", "flow", "oracle_edges", "occluded_boundary", "clean"):
            if key in f and not (seq_dir / f[key]).exists():
                raise FormatError(f"{seq_dir / f[key]}: referenced by frame {f['index']} but missing")
    return m


def load_frames(seq_dir, manifest: dict | None = None):
    """FrameRecords of a sequence directory (external flow attached when the
    manifest names a ``flow`` file for a frame)."""
    from .fusion import FrameRecord

    seq_dir = Path(seq_dir)
    m = manifest or read_manifest(seq_dir)
    frames = []
    for f in m["frames"]:
        flow = read_flo(seq_dir / f["flow"]).astype(np.float64) if "flow" in f else None
        frames.append(
            FrameRecord(
                index=f["index"],
                rgb=read_ppm(seq_dir / f["rgb"]),
                depth=read_pfm(seq_dir / f["depth"]).astype(np.float64),
                occlusion_free=bool(f.get("occlusion_free", False)),
                flow_to_next=flow,
            )
        )
    return frames

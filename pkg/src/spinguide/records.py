"""Run directories: config echo, CSV data and a JSON provenance manifest.

All numeric CSV output uses %.12e floats, a header row and LF endings, so the
same config and code produce byte-identical files.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .config import digest

FLOAT_FMT = "%.12e"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def write_csv(path: Path, columns, rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def code_hash() -> str:
    """sha256 over the package sources, in sorted path order."""
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def frame_rows(frames, threshold: float = 0.0):
    """Rows (t, i, j, re, im, prob) plus per-frame scales (t, peak, scale).

    Sites below ``threshold * peak`` are dropped; the scale 1/peak maps each
    snapshot's maximum to one for overlaid display.
    """
    rows, scales = [], []
    for t, grid in frames:
        p = np.abs(grid) ** 2
        peak = float(p.max())
        scales.append((t, peak, 1.0 / peak if peak > 0 else 0.0))
        keep = p >= threshold * peak
        for i, j in zip(*np.nonzero(keep)):
            a = grid[i, j]
            rows.append((t, int(i), int(j), a.real, a.imag, p[i, j]))
    return rows, scales


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def check_probabilities(record) -> None:
    """Every stored probability-like value must lie in [0, 1]."""
    keys = ("population", "pop_", "norm", ":pop")
    for t, name, val in record.tracks:
        if any(k in name for k in keys) and not (-1e-12 <= val <= 1 + 1e-9):
            raise ValueError(f"track {name} at t={t} has probability {val} outside [0, 1]")
    for tname, (cols, rows) in record.tables.items():
        for c_i, c in enumerate(cols):
            if c in ("R", "T", "inside", "pop_L", "pop_R", "returned", "bend_loss"):
                for r in rows:
                    if not (-1e-12 <= r[c_i] <= 1 + 1e-9):
                        raise ValueError(f"table {tname}.{c} has value {r[c_i]} outside [0, 1]")


def write_record(record, out_dir, subcommand: str, config_text: str,
                 frame_threshold: float = 0.0, started: str | None = None) -> Path:
    """Write ``record`` into ``out_dir`` and return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    check_probabilities(record)
    files = []
    (out / "config.json").write_text(config_text, encoding="utf-8", newline="\n")
    files.append("config.json")
    write_csv(out / "tracks.csv", ["t", "observable", "value"], record.tracks)
    files.append("tracks.csv")
    if record.frames:
        rows, scales = frame_rows(record.frames, frame_threshold)
        write_csv(out / "frames.csv", ["t", "i", "j", "re", "im", "prob"], rows)
        write_csv(out / "frame_scales.csv", ["t", "peak_prob", "scale"], scales)
        files += ["frames.csv", "frame_scales.csv"]
    for name, (cols, rows) in sorted(record.tables.items()):
        fn = f"{name}.csv"
        write_csv(out / fn, cols, rows)
        files.append(fn)
    (out / "summary.json").write_text(
        json.dumps(_jsonable(record.summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files.append("summary.json")
    now = _dt.datetime.now(_dt.timezone.utc).isoformat()
    manifest = {
        "tool": "spinguide",
        "version": __version__,
        "subcommand": subcommand,
        "config_digest": digest(config_text),
        "code_hash": code_hash(),
        "started": started or now,
        "finished": now,
        "wall_time_s": record.wall_time,
        "files": sorted(files),
        "warnings": list(record.warnings),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def write_error(out_dir, subcommand: str, exc: BaseException) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "error.json"
    path.write_text(json.dumps({"subcommand": subcommand, "error": type(exc).__name__,
                                "message": str(exc)}, indent=2) + "\n", encoding="utf-8")
    return path

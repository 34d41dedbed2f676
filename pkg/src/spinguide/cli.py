"""Command-line entry point: ``spinguide SUBCOMMAND [--config F] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

from . import config as C
from . import experiments as E
from .lattice import ConfigError
from .records import write_error, write_record

SUBCOMMANDS = {
    "dispersion": ("Gamma-X-M-Gamma band samples", lambda cfg, th: E.run_dispersion(cfg)),
    "modes": ("transverse modes, confinement factors", lambda cfg, th: E.run_modes(cfg)),
    "free": ("free packet propagation", lambda cfg, th: E.run_free_propagation(cfg)),
    "guide": ("packet in one straight guide", lambda cfg, th: E.run_guided_propagation(cfg)),
    "bend": ("bend loss versus radius", E.run_bend_study),
    "coupler": ("directional coupler transfer length", E.run_coupler),
    "dmc": ("crystal phase and R/T versus depth", E.run_dmc_sweep),
    "michelson": ("interferometer populations versus crystal depth", E.run_michelson),
    "units": ("lattice to SI conversion table", lambda cfg, th: E.run_units(cfg)),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinguide", description=__doc__)
    sub = ap.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", required=True)
    for name, (help_, _) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="YAML (or JSON) config; defaults otherwise")
        p.add_argument("--out", type=Path, help="run directory (default runs/<cmd>-<digest>)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker processes for sweeps (default: all cores)")
        p.add_argument("--sweep", action="append", default=[], metavar="KEY=START:STOP:STEP",
                       help="replace a list-valued field with an inclusive grid")
        if name == "dispersion":
            p.add_argument("--points", type=int, help="samples per Brillouin-zone arm")
    return ap


def resolve_config(args):
    cfg = C.parse_config(args.config, args.subcommand) if args.config else \
        C.load_config(args.subcommand)
    for s in args.sweep:
        key, vals = C.parse_sweep(s)
        cfg = C.apply_sweep(cfg, key, vals)
    if getattr(args, "points", None) is not None:
        cfg = C.from_dict(type(cfg), {**C.to_dict(cfg), "points": args.points})
    return cfg


def _print_units(record) -> None:
    cols, rows = record.tables["units"]
    w = max(len(r[0]) for r in rows)
    for q, v, unit, note in rows:
        print(f"{q:<{w}}  {v:>14.6g}  {unit:<10} {note}".rstrip())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    out = args.out
    try:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        cfg = resolve_config(args)
        text = C.echo(cfg)
        out = out or Path("runs") / f"{args.subcommand}-{C.digest(text)[:12]}"
        record = SUBCOMMANDS[args.subcommand][1](cfg, args.threads)
        thr = cfg.output.frame_threshold if hasattr(cfg, "output") else 0.0
        manifest = write_record(record, out, args.subcommand, text, thr, started)
    except Exception as exc:  # noqa: BLE001 - every failure gets an error record
        out = out or Path("runs") / f"{args.subcommand}-error"
        try:
            path = write_error(out, args.subcommand, exc)
        except OSError as io_exc:
            path = None
            exc = io_exc
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "record": str(path) if path else None}), file=sys.stderr)
        return 2 if isinstance(exc, (ConfigError, FileNotFoundError)) else 1
    if args.subcommand == "units":
        _print_units(record)
    for w in record.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())

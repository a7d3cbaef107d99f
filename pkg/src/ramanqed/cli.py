"""Command-line entry point.

Usage::

    ramanqed simulate|compare|validate-adiabatic|sweep CONFIG
        [--out DIR] [--jobs N] [--force] [--seed-meta]

Exit codes: 0 success, 2 invalid configuration, 3 grid validation failure
(bypass with --force), 4 numerical failure.  The output directory is taken
from --out, else $RAMANQED_OUT, else ``output.dir`` in the config, else
``ramanqed_out``.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, load_config
from .errors import InvalidArgument, NumericalError, RamanQEDError, StepTooLarge, TooLarge
from .runner import GridRejected, Result, Table, cmd_compare, cmd_simulate, cmd_sweep, cmd_validate_adiabatic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GRID = 3
EXIT_NUMERIC = 4

OUT_ENV = "RAMANQED_OUT"
DEFAULT_OUT = "ramanqed_out"
FLOAT_FORMAT = "{:.12g}"

COMMANDS = ("simulate", "compare", "validate-adiabatic", "sweep")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value)) if math.isfinite(value) else str(float(value))
    return str(value)


def write_table(path: Path, table: Table) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) + 0.0 if math.isfinite(obj) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def output_dir(args, cfg) -> Path:
    chosen = args.out or os.environ.get(OUT_ENV) or cfg.output_dir or DEFAULT_OUT
    return Path(chosen)


def _metadata(args, cfg, result: Result, total: float) -> dict:
    meta = {
        "version": __version__,
        "command": args.command,
        "config": str(args.config),
        "config_digest": cfg.digest,
        "jobs": args.jobs,
        "forced": args.force,
        "files": sorted(result.tables) + (["summary.json"] if "json" in cfg.formats else []),
    }
    if args.seed_meta:
        # deterministic sidecar: no wall-clock fields, so the whole output
        # directory is reproducible byte for byte
        meta["deterministic"] = True
        return meta
    meta.update(
        created=datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        runtime_seconds={"total": total, **result.runtimes},
        python=platform.python_version(),
        numpy=np.__version__,
        scipy=scipy.__version__,
    )
    return meta


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ramanqed",
        description="Raman-type two-atom entanglement: simulations, cross-checks and sweeps.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", help="scenario file (YAML)")
    ap.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and output.dir)")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for sweeps and ladders")
    ap.add_argument("--force", action="store_true", help="run even when the grid fails validation")
    ap.add_argument(
        "--seed-meta",
        action="store_true",
        help="write a deterministic metadata sidecar (no timestamp or runtimes)",
    )
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        if args.command == "simulate":
            result = cmd_simulate(cfg, force=args.force)
        elif args.command == "compare":
            result = cmd_compare(cfg, force=args.force)
        elif args.command == "validate-adiabatic":
            result = cmd_validate_adiabatic(cfg, force=args.force, jobs=args.jobs)
        else:
            result = cmd_sweep(cfg, force=args.force, jobs=args.jobs)
    except GridRejected as exc:
        print(f"error: {exc} (use --force to run anyway)", file=sys.stderr)
        return EXIT_GRID
    except (ConfigError, InvalidArgument, TooLarge, StepTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RamanQEDError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    total = time.perf_counter() - start

    out = output_dir(args, cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in cfg.formats:
            for name, table in result.tables.items():
                write_table(out / name, table)
        if "json" in cfg.formats:
            write_json(out / "summary.json", result.summary)
        write_json(out / "metadata.json", _metadata(args, cfg, result, total))
    except OSError as exc:
        print(f"error: cannot write outputs to {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    for line in result.lines:
        print(line)
    print(f"outputs in {out}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

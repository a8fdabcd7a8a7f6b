"""Command line entry point: ``gaussfb run|validate|list-channels``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import BUILTINS
from .config import CHANNEL_PARAMS, ConfigError, ExperimentConfig, load_config, validate_config
from .experiments import RUNNERS, ExperimentResult

log = logging.getLogger("gaussfb")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RUNTIME = 0, 1, 2, 3


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, result: ExperimentResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.header)
        for row in result.rows:
            writer.writerow([_cell(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v) if np.isfinite(v) else None
    return v


def run(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Execute one experiment, write its CSV and manifest, return (manifest, exit code)."""
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    result = RUNNERS[cfg.experiment](cfg)
    csv_path = out_dir / f"{cfg.experiment}.csv"
    write_csv(csv_path, result)
    passed = all(bool(v) for v in result.invariants.values())
    manifest = {
        "artifact": "gaussfb",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.echo(),
        "config_file": cfg.source,
        "summary": result.summary,
        "invariants": result.invariants,
        "passed": passed,
        "files": [{"path": csv_path.name, "sha256": hashlib.sha256(csv_path.read_bytes()).hexdigest()}],
    }
    manifest = _jsonable(manifest)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest, EXIT_OK if passed else EXIT_INVARIANT


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussfb", description="Gaussian feedback channel simulation studies")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--deterministic", action="store_true", default=None)
    r.add_argument("--output-dir")
    v = sub.add_parser("validate", help="check a config file without running it")
    v.add_argument("config")
    sub.add_parser("list-channels", help="print the builtin channel names and their parameters")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-channels":
        for name in BUILTINS:
            print(f"{name}: {', '.join(sorted(CHANNEL_PARAMS[name]))}")
        return EXIT_OK

    if args.command == "validate":
        try:
            errors = validate_config(args.config)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for e in errors:
            print(e, file=sys.stderr)
        if not errors:
            print("ok")
        return EXIT_CONFIG if errors else EXIT_OK

    overrides = {
        "seed": args.seed,
        "threads": args.threads,
        "deterministic": args.deterministic,
        "output_dir": args.output_dir,
    }
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        for e in exc.errors:
            print(e, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest, code = run(cfg)
    except Exception:
        log.exception("experiment %s failed", cfg.experiment)
        return EXIT_RUNTIME
    for name, ok in manifest["invariants"].items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"wrote {Path(cfg['output_dir']) / (cfg.experiment + '.csv')}")
    return code


if __name__ == "__main__":
    sys.exit(main())

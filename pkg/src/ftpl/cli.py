"""``ftpl run <config>`` and ``ftpl validate <config>``.

Exit codes: 0 success, 1 runtime failure (with replication and round when
known), 2 invalid config, 3 the experiment ran but one of its checks
failed. Errors are written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load
from .experiments import run_experiment
from .oracle import GridBudgetError

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_manifest(path: Path, cfg: ExperimentConfig, outcome, argv: list) -> None:
    """Everything needed to regenerate the outputs: version, resolved config, seeds."""
    lines = [
        f"ftpl {__version__}",
        f"numpy {np.__version__}",
        f"kind: {cfg.kind}",
        f"master_seed: {cfg.seed}",
        "command: ftpl " + " ".join(argv),
        "",
        "# resolved config",
        cfg.to_yaml().rstrip("\n"),
        "",
        "# streams",
    ]
    lines += [f"{label}: {s}" for label, s in outcome.seeds]
    lines += ["", "# checks"]
    lines += [f"{'pass' if ok else 'FAIL'}: {name} ({detail})" for name, ok, detail in outcome.checks]
    lines += ["", "# files"]
    lines += sorted(outcome.tables)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _error(payload: dict, code: int) -> int:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def _config_error(exc: ConfigError) -> int:
    return _error({"category": "config", "field": exc.field, "message": exc.message}, EXIT_CONFIG)


def cmd_validate(args) -> int:
    try:
        cfg = load(args.config, seed=args.seed, out=args.out)
    except ConfigError as exc:
        return _config_error(exc)
    report = {"status": "warning" if cfg.warnings else "ok", "kind": cfg.kind, "warnings": cfg.warnings}
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_run(args, argv) -> int:
    try:
        cfg = load(args.config, seed=args.seed, out=args.out)
    except ConfigError as exc:
        return _config_error(exc)
    if args.replications is not None:
        if args.replications < 1:
            return _config_error(ConfigError("replications", "must be >= 1"))
        cfg.raw["replications"] = args.replications
    for w in cfg.warnings:
        if w.get("warning") == "grid-budget-exceeded":
            return _error({"category": "config", **w, "message": "grid exceeds its point budget"}, EXIT_CONFIG)
    try:
        outcome = run_experiment(cfg, workers=args.workers)
    except GridBudgetError as exc:
        return _error({"category": "config", "message": str(exc), "suggested_h": exc.suggested_h}, EXIT_CONFIG)
    except Exception as exc:  # reported with replication/round ids, never swallowed silently
        payload = {
            "category": "runtime",
            "message": str(exc),
            "replication": getattr(exc, "replication", None),
            "round": getattr(exc, "round", None),
        }
        return _error(payload, EXIT_RUNTIME)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in outcome.tables.items():
        write_csv(out / name, header, rows)
    write_manifest(out / "manifest.txt", cfg, outcome, argv)
    for name, ok, detail in outcome.checks:
        print(f"{'pass' if ok else 'FAIL'}  {name}  ({detail})")
    print(f"wrote {len(outcome.tables)} file(s) and manifest.txt to {out}")
    if not outcome.ok:
        failed = [name for name, ok, _ in outcome.checks if not ok]
        return _error({"category": "check-failed", "checks": failed}, EXIT_CHECK)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftpl", description="Run FTPL experiments from YAML configs.")
    p.add_argument("--version", action="version", version=f"ftpl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run an experiment and write CSV files"), ("validate", "check a config")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="YAML config file, or a preset name such as 'killer'")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        if name == "run":
            sp.add_argument("--workers", type=int, default=1, help="parallel replication processes")
            sp.add_argument("--replications", type=int, help="override the replication count")
    return p


def _resolve(path: str) -> str:
    if Path(path).exists():
        return path
    from .presets import preset_path

    found = preset_path(path)
    return str(found) if found is not None else path


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.config = _resolve(args.config)
    if getattr(args, "workers", 1) < 1:
        return _config_error(ConfigError("--workers", "must be >= 1"))
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_run(args, argv)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

    coverhart run CONFIG.json [--seed N] [--out REPORT.json] [--csv ROW.csv]
    coverhart suite DIR [--seed N] [--out RESULTS_DIR] [--jobs N]

Exit status: 0 when every verdict matches its config's ``expect``, 1 when
some verdict does not (for example a certified kernel violating the bound),
2 on usage or config errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import config as cfgmod
from .exceptions import ConfigError

CSV_COLUMNS = (
    "schema_version",
    "experiment_id",
    "experiment",
    "alpha",
    "alpha_se",
    "beta",
    "beta_se",
    "ratio",
    "extremal",
    "verdict",
    "expected",
    "exit_code",
)

EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE = 0, 1, 2


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def csv_row(cfg: dict, outcome: cfgmod.Outcome) -> dict:
    row = {
        "schema_version": cfgmod.SCHEMA_VERSION,
        "experiment_id": cfg["id"],
        "experiment": cfg["experiment"],
        **outcome.row,
        "verdict": outcome.verdict,
        "expected": outcome.expected,
        "exit_code": outcome.exit_code,
    }
    return {k: _fmt(row[k]) for k in CSV_COLUMNS}


def render_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_config(raw: dict, seed: Optional[int] = None):
    """Resolve and execute one validated config; returns ``(cfg, outcome, report)``."""
    cfg = cfgmod.resolve(raw, seed)
    outcome = cfgmod.execute(cfg)
    return cfg, outcome, cfgmod.report_document(cfg, outcome)


def run(config_path, seed: Optional[int] = None, out: Optional[str] = None, csv_path: Optional[str] = None) -> int:
    try:
        raw = cfgmod.load(config_path)
        cfg, outcome, doc = run_config(raw, seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    target = Path(out or raw.get("output") or f"{cfg['id']}.report.json")
    atomic_write(target, cfgmod.dumps(doc))
    if csv_path:
        atomic_write(Path(csv_path), render_csv([csv_row(cfg, outcome)]))
    print(f"{cfg['id']}: {outcome.verdict} (expected {outcome.expected}) -> {target}")
    return outcome.exit_code


def run_suite(directory, seed: Optional[int] = None, out: Optional[str] = None, jobs: int = 1) -> int:
    directory = Path(directory)
    if not directory.is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return EXIT_USAGE
    paths = sorted(directory.glob("*.json"))
    if not paths:
        print(f"error: no *.json configs in {directory}", file=sys.stderr)
        return EXIT_USAGE
    try:
        raws = [cfgmod.load(p) for p in paths]
        cfgs = [cfgmod.resolve(r, seed) for r in raws]
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ids = [c["id"] for c in cfgs]
    if len(set(ids)) != len(ids):
        print("error: duplicate experiment ids in suite", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(out or "results")

    def one(cfg):
        outcome = cfgmod.execute(cfg)
        atomic_write(out_dir / f"{cfg['id']}.json", cfgmod.dumps(cfgmod.report_document(cfg, outcome)))
        return outcome

    try:
        if jobs == 1:
            outcomes = [one(c) for c in cfgs]
        else:
            with ThreadPoolExecutor(max_workers=jobs if jobs > 0 else None) as pool:
                outcomes = list(pool.map(one, cfgs))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    rows = [csv_row(c, o) for c, o in zip(cfgs, outcomes)]
    atomic_write(out_dir / "summary.csv", render_csv(rows))
    for c, o in zip(cfgs, outcomes):
        flag = "ok" if o.exit_code == 0 else "UNEXPECTED"
        print(f"{c['id']:40s} {o.verdict:12s} expected {o.expected:10s} {flag}")
    return EXIT_OK if all(o.exit_code == 0 for o in outcomes) else EXIT_UNEXPECTED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coverhart", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--out", help="report path (default: config 'output' or <id>.report.json)")
    p_run.add_argument("--csv", help="also write a one-row CSV summary here")

    p_suite = sub.add_parser("suite", help="run every *.json config in a directory")
    p_suite.add_argument("directory")
    p_suite.add_argument("--seed", type=int, help="override every config seed")
    p_suite.add_argument("--out", help="results directory (default: ./results)")
    p_suite.add_argument("--jobs", type=int, default=1, help="experiments run concurrently")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "run":
        return run(args.config, args.seed, args.out, args.csv)
    return run_suite(args.directory, args.seed, args.out, args.jobs)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command line: ``adbench gen | run | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .data import save_dataset
from .harness import ConfigError, ExperimentConfig, read_results, run_grid, write_run
from .metrics import IncompleteGridError
from .report import write_report
from .synth import generate_benchmark

log = logging.getLogger("adbench")


def _cmd_gen(args) -> int:
    ds = generate_benchmark(args.n_per_class, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    log.info("wrote %d profiles to %s", len(ds), out)
    return 0


def _cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    except (ConfigError, TypeError, OSError) as exc:
        log.error("bad config: %s", exc)
        return 2
    out = Path(args.out or cfg.output_dir)
    t0 = time.perf_counter()

    def progress(i, n):
        log.info("split %d/%d done (%.0f s)", i, n, time.perf_counter() - t0)

    records = run_grid(cfg, args.grid, workers=args.workers, progress=progress)
    manifest = write_run(cfg, args.grid, records, out, time.perf_counter() - t0)
    if manifest["n_failed"]:
        log.error("%d of %d cells failed; see %s", manifest["n_failed"], manifest["n_cells"], out / "manifest.json")
    else:
        try:
            manifest["artifacts"].update(write_report(read_results(out / "results.csv"), out, not args.no_figures))
        except IncompleteGridError as exc:
            log.error("report skipped: %s", exc)
            return 1
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    log.info("finished %d cells in %.1f s", manifest["n_cells"], manifest["wall_seconds"])
    return 0 if manifest["n_failed"] == 0 else 1


def _cmd_report(args) -> int:
    results = Path(args.results)
    if results.is_dir():
        results = results / "results.csv"
    out = Path(args.out) if args.out else results.parent
    try:
        paths = write_report(read_results(results), out, not args.no_figures)
    except IncompleteGridError as exc:
        log.error("incomplete grid: %s", exc)
        for key in exc.missing:
            print("missing", key, file=sys.stderr)
        return 1
    for name, path in paths.items():
        log.info("%s: %s", name, path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adbench", description="Anomaly-detection benchmark on 1-D range profiles.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic dataset CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--n-per-class", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=_cmd_gen)

    r = sub.add_parser("run", help="run an experiment grid")
    r.add_argument("--config", help="YAML config; defaults are used when omitted")
    r.add_argument("--grid", choices=("unsup", "sad"), default="unsup")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("report", help="summarize a results.csv")
    s.add_argument("results", help="results.csv or a run directory")
    s.add_argument("--out", help="output directory (default: next to results)")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

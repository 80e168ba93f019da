"""Command-line entry point: ``secure-rsma --config cfg.yaml --sweep n_t=2,4,8``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, Scheme, load_config, default_config, parse_sweep
from .experiments import DESK_TRIALS, FULL_TRIALS, emit_results, run_sweep, summarize

log = logging.getLogger("secure_rsma")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secure-rsma", description=__doc__.split(":")[0])
    ap.add_argument("--config", type=Path, help="YAML config (defaults to the built-in setup)")
    ap.add_argument("--scheme", action="append", choices=[s.value for s in Scheme], type=str.upper,
                    help="scheme to run; repeat for several (default: all three)")
    ap.add_argument("--sweep", action="append", default=[], metavar="FIELD=V1,V2",
                    help="sweep a config field; at most two --sweep options")
    ap.add_argument("--trials", type=int, help=f"channel draws per sweep point (default {DESK_TRIALS})")
    ap.add_argument("--seed", type=int, help="override master_seed")
    ap.add_argument("--out", type=Path, default=Path("results.csv"), help="CSV path; summary JSON goes next to it")
    ap.add_argument("--trace-dir", type=Path, help="write per-trial convergence traces (JSON lines)")
    ap.add_argument("--full-scale", action="store_true",
                    help=f"{FULL_TRIALS} trials by default and no cap on RIS size")
    ap.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            cfg = cfg.replace(master_seed=args.seed)
        sweep = parse_sweep(args.sweep)
        trials = args.trials if args.trials is not None else (FULL_TRIALS if args.full_scale else DESK_TRIALS)
        if trials < 1:
            raise ConfigError("--trials must be >= 1")
        schemes = args.scheme or [s.value for s in Scheme]
        reports = run_sweep(cfg, sweep, trials, schemes, workers=args.workers,
                            trace_dir=args.trace_dir, full_scale=args.full_scale)
        csv_path, summary_path = emit_results(reports, args.out)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for group in summarize(reports)["groups"]:
        point = " ".join(f"{k}={v}" for k, v in group["point"].items()) or "-"
        median = group.get("see_median", float("nan"))
        log.info("%-22s %-5s median SEE %.4f  (%d/%d ok)", point, group["scheme"], median,
                 group["ok"], group["trials"])
    log.info("wrote %s and %s", csv_path, summary_path)
    crashed = [r for r in reports if r.reason.startswith("error:")]
    return 1 if crashed else 0


if __name__ == "__main__":
    sys.exit(main())

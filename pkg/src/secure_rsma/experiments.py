"""Monte-Carlo sweeps: paired trials across schemes, CSV/JSON output."""
from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channels import generate_channels
from .config import ConfigError, Scheme, SystemConfig, dbm_to_watt, derive_trial_seed
from .optim import baseline_configure, optimize_design

logger = logging.getLogger(__name__)

DESK_TRIALS = 20
FULL_TRIALS = 100
DESK_MAX_RIS = 32

#: Fixed CSV columns; sweep fields are inserted after ``scheme``.
CSV_COLUMNS = ("trial", "seed", "scheme", "status", "see", "r_sec_min", "harvested_w",
               "power_w", "iterations", "reason")


@dataclass(frozen=True)
class TrialReport:
    """Outcome of one (sweep point, trial, scheme) run.

    ``see`` is in bits/J/Hz, ``harvested_w`` is the summed RF power at the
    UEHRs. Failed trials carry NaN metrics and a reason.
    """

    trial: int
    seed: int
    scheme: str
    point: tuple[tuple[str, float], ...]
    status: str
    see: float
    r_sec_min: float
    harvested_w: float
    power_w: float
    iterations: int
    wall_time_s: float
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def params(self) -> dict[str, float]:
        return dict(self.point)


def apply_point(cfg: SystemConfig, point: Mapping[str, float]) -> SystemConfig:
    """Config with the sweep values substituted (``p_max_dbm`` maps to watts)."""
    changes = {}
    fields = {f.name for f in dataclasses.fields(SystemConfig)}
    for name, value in point.items():
        if name == "p_max_dbm":
            changes["p_max_w"] = dbm_to_watt(float(value))
        elif name in fields:
            changes[name] = value
        else:
            raise ConfigError(f"unknown sweep field: {name}")
    return cfg.replace(**changes)


def sweep_points(sweep: Mapping[str, Sequence]) -> list[tuple[tuple[str, float], ...]]:
    """Full factorial of the sweep values, in declaration order."""
    if not sweep:
        return [()]
    if len(sweep) > 2:
        raise ConfigError("a sweep names at most two fields")
    names = list(sweep)
    return [tuple(zip(names, combo)) for combo in itertools.product(*(sweep[n] for n in names))]


def _failed(trial, seed, scheme, point, reason, wall=0.0) -> TrialReport:
    nan = float("nan")
    return TrialReport(trial, seed, scheme, point, "failed", nan, nan, nan, nan, 0, wall, reason)


def run_trial(cfg: SystemConfig, trial: int, schemes: Sequence[Scheme | str],
              point: tuple = (), trace_dir: str | Path | None = None) -> list[TrialReport]:
    """Run every scheme on one channel draw (paired comparison)."""
    seed = derive_trial_seed(cfg.master_seed, trial)
    ch = generate_channels(cfg, seed)
    out = []
    for scheme in schemes:
        scheme = Scheme(scheme)
        t0 = time.perf_counter()
        try:
            variant = baseline_configure(cfg, scheme, ch)
            res = optimize_design(ch, cfg, variant, seed=seed)
        except Exception as exc:  # report, never drop
            logger.exception("trial %d %s crashed", trial, scheme.value)
            out.append(_failed(trial, seed, scheme.value, point, f"error: {exc!r}", time.perf_counter() - t0))
            continue
        wall = time.perf_counter() - t0
        if trace_dir is not None:
            _write_trace(trace_dir, point, trial, scheme.value, res.trace)
        if res.status != "ok":
            out.append(_failed(trial, seed, scheme.value, point, res.reason, wall))
            continue
        out.append(TrialReport(trial, seed, scheme.value, point, "ok", float(res.report.see),
                               float(res.report.r_sec_min), float(res.eh.p_eh_sum),
                               float(res.state.prec.total_power), res.iterations, wall))
    return out


def _write_trace(trace_dir, point, trial, scheme, records):
    tag = "_".join(f"{k}={v}" for k, v in point) or "base"
    path = Path(trace_dir) / f"{tag}_trial{trial:03d}_{scheme}.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps({k: _jsonable(v) for k, v in rec.items()}) + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


def _job(args):
    cfg, trial, schemes, point, trace_dir = args
    return run_trial(cfg, trial, schemes, point, trace_dir)


def run_sweep(cfg: SystemConfig, sweep: Mapping[str, Sequence] | None = None, trials: int = DESK_TRIALS,
              schemes: Sequence[Scheme | str] = tuple(Scheme), *, workers: int | None = None,
              trace_dir: str | Path | None = None, full_scale: bool = False) -> list[TrialReport]:
    """Factorial sweep x trials x schemes, ordered by (point, trial, scheme)."""
    sweep = dict(sweep or {})
    points = sweep_points(sweep)
    jobs = []
    for point in points:
        pcfg = apply_point(cfg, dict(point))
        if not full_scale and pcfg.m_ris > DESK_MAX_RIS:
            raise ConfigError(f"m_ris={pcfg.m_ris} exceeds the desk-scale cap {DESK_MAX_RIS}; use full scale")
        jobs.extend((pcfg, t, tuple(schemes), point, trace_dir) for t in range(trials))
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(jobs) <= 1:
        batches = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_job, jobs))  # map preserves submission order
    return [r for batch in batches for r in batch]


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if np.isnan(v) else f"{v:.17g}"
    return str(v)


def emit_results(reports: Sequence[TrialReport], path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>`` (CSV, one row per report) and ``<stem>.summary.json``.

    The CSV excludes wall time so that reruns with the same seed are
    byte-identical; timings go to the summary.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory for {path}: {exc}") from exc
    sweep_fields = list(dict.fromkeys(k for r in reports for k, _ in r.point))
    header = list(CSV_COLUMNS[:3]) + sweep_fields + list(CSV_COLUMNS[3:])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in reports:
            params = r.params()
            row = [r.trial, r.seed, r.scheme] + [_fmt(params.get(f, "")) for f in sweep_fields]
            row += [r.status, _fmt(r.see), _fmt(r.r_sec_min), _fmt(r.harvested_w), _fmt(r.power_w),
                    r.iterations, r.reason]
            writer.writerow(row)
    summary_path = path.with_suffix(".summary.json")
    summary_path.write_text(json.dumps(summarize(reports), indent=2, sort_keys=False) + "\n")
    return path, summary_path


def summarize(reports: Iterable[TrialReport]) -> dict:
    """Medians and quartiles of SEE per (sweep point, scheme)."""
    groups: dict[tuple, list[TrialReport]] = {}
    for r in reports:
        groups.setdefault((r.point, r.scheme), []).append(r)
    rows = []
    for (point, scheme), members in groups.items():
        see = np.array([r.see for r in members if r.ok])
        rmin = np.array([r.r_sec_min for r in members if r.ok])
        entry = {"point": dict(point), "scheme": scheme, "trials": len(members),
                 "ok": int(see.size), "failed": len(members) - int(see.size)}
        if see.size:
            q1, med, q3 = np.percentile(see, [25, 50, 75])
            entry.update(see_median=float(med), see_q1=float(q1), see_q3=float(q3),
                         r_sec_min_median=float(np.median(rmin)))
        entry["wall_time_s"] = float(sum(r.wall_time_s for r in members))
        rows.append(entry)
    return {"groups": rows}


def median_see(reports: Iterable[TrialReport], scheme: str | Scheme, **point) -> float:
    """Median SEE over ok trials matching ``scheme`` and the given sweep values."""
    scheme = Scheme(scheme).value
    vals = [r.see for r in reports
            if r.scheme == scheme and r.ok and all(r.params().get(k) == v for k, v in point.items())]
    return float(np.median(vals)) if vals else float("nan")

"""Run every (policy, instance, seed) combination of a config and merge the results.

Anytime policies run once at the largest horizon and are read off at the
smaller ones; fixed-horizon policies get a fresh run for every horizon. Runs
are independent, so they may execute in a process pool; the merge sorts by
run key, which keeps the summary independent of completion order.
"""
from __future__ import annotations

import csv
import json
import os
import re
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .. import __version__
from ..environment import RNG_ALGORITHM
from ..metrics import CSV_HEADER, FitError, downsample, fit_scaling, geometric_grid, summarize
from .config import ConfigError, ExperimentConfig

WORKERS_ENV = "MNLSWITCH_WORKERS"
SUMMARY_NAME = "summary.json"
METRICS = ("regret", "asst_switches", "item_switches")


@dataclass(frozen=True)
class RunTask:
    policy: int
    n_items: Optional[int]
    seed: int
    horizons: Tuple[int, ...]


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {n}")
    return n


def plan(cfg: ExperimentConfig) -> List[RunTask]:
    tasks = []
    for j, spec in enumerate(cfg.policies):
        anytime = spec.build().anytime
        for n in cfg.item_counts():
            for seed in cfg.seeds:
                if anytime:
                    tasks.append(RunTask(j, n, seed, cfg.horizons))
                else:
                    tasks.extend(RunTask(j, n, seed, (T,)) for T in cfg.horizons)
    return tasks


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "-", text).strip("-")


def trace_path(cfg: ExperimentConfig, task: RunTask, n_items: int) -> Path:
    label = _slug(cfg.policies[task.policy].label)
    return Path(cfg.output_dir) / "traces" / f"{label}__n{n_items}__T{max(task.horizons)}__seed{task.seed}.csv"


def _write_trace(cfg: ExperimentConfig, task: RunTask, trace) -> str:
    path = trace_path(cfg, task, trace.header.n_items)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        if cfg.grid is None:
            w.writerows(trace.rows())
        else:
            grid = geometric_grid(trace.t) if cfg.grid == "geometric" else cfg.grid
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                compact = downsample(trace, grid)
            h = trace.header
            for t, r, a, i in compact.rows:
                w.writerow([t, h.policy, h.seed, repr(r), a, i, "", ""])
    return path.relative_to(cfg.output_dir).as_posix()


def execute(cfg: ExperimentConfig, task: RunTask) -> dict:
    """One seeded run; exceptions become a failure record instead of propagating."""
    spec = cfg.policies[task.policy]
    out = {"task": task, "finals": {}, "warnings": [], "error": None, "trace": None}
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            inst = cfg.make_instance(task.n_items, task.seed)
            policy = spec.build()
            policy.fit(inst, max(task.horizons), random_state=task.seed, trace_mode=cfg.trace_mode)
        out["warnings"] = sorted({str(w.message) for w in caught})
        trace = policy.trace_
        out["n_items"] = inst.n_items
        out["instance_digest"] = inst.digest()
        out["theta_star"] = trace.header.theta_star
        out["switch_relation"] = trace.switch_relation_holds()
        out["finals"] = {T: trace.value_at(T) for T in task.horizons}
        if cfg.trace_mode != "summary":
            out["trace"] = _write_trace(cfg, task, trace)
    except Exception as exc:  # isolate the failure, keep the run set going
        out["error"] = f"{type(exc).__name__}: {exc}"
        out["traceback"] = traceback.format_exc()
    return out


def _execute_packed(args):
    return execute(*args)


def run_all(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[dict]:
    tasks = plan(cfg)
    workers = worker_count() if workers is None else workers
    if workers == 1 or len(tasks) == 1:
        return [execute(cfg, t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_packed, [(cfg, t) for t in tasks], chunksize=1))


def _n_items(cfg: ExperimentConfig, n: Optional[int]) -> int:
    return n if n is not None else cfg.make_instance(None, cfg.seeds[0]).n_items


def aggregate(cfg: ExperimentConfig, outcomes: List[dict], sweep: bool = False) -> dict:
    by_key: Dict[tuple, dict] = {}
    failures = []
    for out in outcomes:
        task = out["task"]
        if out["error"] is not None:
            for T in task.horizons:
                failures.append({"policy": cfg.policies[task.policy].label, "n_items": _n_items(cfg, task.n_items),
                                 "horizon": T, "seed": task.seed, "error": out["error"]})
            continue
        for T, values in out["finals"].items():
            by_key[(task.policy, task.n_items, T, task.seed)] = {
                "values": values, "warnings": out["warnings"], "digest": out["instance_digest"],
                "theta_star": out["theta_star"], "trace": out["trace"],
                "switch_relation": out["switch_relation"]}

    results = []
    for j, spec in enumerate(cfg.policies):
        for n in cfg.item_counts():
            for T in cfg.horizons:
                runs = [by_key.get((j, n, T, s)) for s in cfg.seeds]
                ok = [r for r in runs if r is not None]
                entry = {
                    "policy": spec.label,
                    "n_items": _n_items(cfg, n),
                    "horizon": T,
                    "seeds": list(cfg.seeds),
                    "instance_digests": [None if r is None else r["digest"] for r in runs],
                    "theta_star": [None if r is None else r["theta_star"] for r in runs],
                    "traces": [None if r is None else r["trace"] for r in runs],
                    "switch_relation_holds": all(r["switch_relation"] for r in ok),
                    "warnings": sorted({w for r in ok for w in r["warnings"]}),
                    "n_failed": len(runs) - len(ok),
                }
                for m, name in enumerate(METRICS):
                    entry[name] = [None if r is None else r["values"][m] for r in runs]
                    entry[f"{name}_summary"] = summarize([r["values"][m] for r in ok]) if ok else None
                results.append(entry)

    summary = {
        "provenance": {
            "config": cfg.to_dict(),
            "config_hash": cfg.digest(),
            "rng_algorithm": RNG_ALGORITHM,
            "build_id": f"mnlswitch-{__version__}",
            "command": "sweep" if sweep else "simulate",
        },
        "results": results,
        "failures": sorted(failures, key=lambda f: (f["policy"], f["n_items"], f["horizon"], f["seed"])),
    }
    if sweep:
        summary["fits"] = scaling_fits(results)
    return summary


def scaling_fits(results: List[dict]) -> List[dict]:
    groups: Dict[tuple, List[dict]] = {}
    for entry in results:
        groups.setdefault((entry["policy"], entry["n_items"]), []).append(entry)
    fits = []
    for (policy, n), entries in groups.items():
        entries.sort(key=lambda e: e["horizon"])
        record = {"policy": policy, "n_items": n}
        for name in METRICS:
            pts = [(e["horizon"], e[f"{name}_summary"]["mean"]) for e in entries if e[f"{name}_summary"]]
            try:
                record[name] = fit_scaling(pts).to_dict()
            except FitError as exc:
                record[name] = {"error": str(exc)}
        fits.append(record)
    return fits


def write_summary(cfg: ExperimentConfig, summary: dict) -> Path:
    path = Path(cfg.output_dir) / SUMMARY_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return path


def run_experiment(cfg: ExperimentConfig, sweep: bool = False, workers: Optional[int] = None) -> dict:
    summary = aggregate(cfg, run_all(cfg, workers), sweep=sweep)
    write_summary(cfg, summary)
    return summary

"""
Sweeps over the parameter grid, single runs, and the files they write.
"""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .bff import BffResult, EventSchedule
from .cache import DemandCache, cached_demand
from .demand import DemandMatrix, generate_demand, read_demand
from .eclipse import EclipseResult, Schedule, SearchStrategy, SystemParams
from .evaluate import RunResult, runs_to_csv, summarize, validate
from .runner import ALGORITHMS, run_algorithm, run_jobs
from .twohop import BookingLedger, TwoHopResult
from .utils import ArgumentError, ParseError

logger = logging.getLogger(__name__)

RUNS_FILE = "runs.csv"
SUMMARY_FILE = "summary.json"


def _scheduler_options(config, algorithm):
    if algorithm == "bff":
        return {"initial": config.bff_initial, "charge_initial_delay": config.charge_initial_delay}
    return {}


def _run_job(job):
    """Generate one demand matrix and run every configured algorithm on it."""
    config, cell_index, cell, seed = job
    cache = DemandCache(config.cache_dir) if config.cache_dir else None
    demand = cached_demand(cache)(generate_demand)(config.traffic_for(cell, seed))
    params = config.params_for(cell)
    strategy = config.strategy_for(cell)

    rows = []
    for algorithm in config.algorithms:
        result, wall = run_algorithm(
            algorithm, demand, params, strategy, **_scheduler_options(config, algorithm)
        )
        report = validate(demand, result, params)
        if not report.ok:
            logger.warning(
                "[SWEEP] %s seed=%d cell=%d failed validation: %s",
                algorithm, seed, cell_index, "; ".join(report.messages()[:3]),
            )
        rows.append(
            (
                cell_index,
                RunResult(
                    algorithm=algorithm,
                    seed=seed,
                    delta=cell.delta,
                    rp_ratio=cell.rp_ratio,
                    transmission_time=result.transmission_time,
                    configurations=result.configurations,
                    wall_time=wall if config.timing else None,
                    n=config.n,
                    n_large=cell.n_large,
                    n_small=cell.n_small,
                    c_small=cell.c_small,
                    search=cell.search,
                    violations=len(report.violations),
                ),
            )
        )
    return rows


@dataclass
class SweepOutcome:
    runs_path: Path
    summary_path: Path
    runs: list
    summary: list

    @property
    def violations(self):
        return sum(run.violations for run in self.runs)


def summarize_cells(config, indexed_runs):
    """Per-cell statistics of T and wall time, plus reductions relative to Eclipse."""
    grouped = defaultdict(lambda: defaultdict(list))
    for cell_index, run in indexed_runs:
        grouped[cell_index][run.algorithm].append(run)

    summary = []
    for cell_index, cell in enumerate(config.cells()):
        algorithms = {}
        for algorithm in config.algorithms:
            runs = grouped[cell_index][algorithm]
            stats = summarize(run.transmission_time for run in runs)
            walls = [run.wall_time * 1000 for run in runs if run.wall_time is not None]
            algorithms[algorithm] = {
                "T": stats.to_dict(),
                "K_mean": sum(run.configurations for run in runs) / len(runs),
                "wall_time_ms_median": summarize(walls).median if walls else None,
            }
        if "eclipse" in algorithms:
            baseline = algorithms["eclipse"]["T"]["mean"]
            for entry in algorithms.values():
                entry["reduction_vs_eclipse"] = (
                    (baseline - entry["T"]["mean"]) / baseline if baseline > 0 else 0.0
                )
        summary.append({"cell": cell.to_dict(), "algorithms": algorithms})
    return summary


def run_sweep(config):
    """
    Run every algorithm on every (cell, seed) pair and write the results.

    Writes runs.csv and summary.json under config.output. Rows are sorted
    by (cell, seed, algorithm order) whatever order the workers finish in.

    Returns:
        A SweepOutcome
    """
    config.validate()
    output = Path(config.output)
    try:
        output.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArgumentError(f"cannot create output directory {output}: {e}") from e

    jobs = [
        (config, cell_index, cell, seed)
        for cell_index, cell in enumerate(config.cells())
        for seed in config.seeds()
    ]
    logger.info(
        "[SWEEP] %d cells x %d runs x %d algorithms on %d workers",
        len(config.cells()), config.runs, len(config.algorithms), config.workers,
    )
    results = run_jobs(_run_job, jobs, config.workers)

    order = {name: k for k, name in enumerate(config.algorithms)}
    indexed = sorted(
        (row for rows in results for row in rows),
        key=lambda row: (row[0], row[1].seed, order[row[1].algorithm]),
    )
    runs = [run for _, run in indexed]
    summary = summarize_cells(config, indexed)

    runs_path = output / RUNS_FILE
    summary_path = output / SUMMARY_FILE
    runs_path.write_text(runs_to_csv(runs))
    summary_path.write_text(
        json.dumps({"config": config.to_dict(), "cells": summary}, indent=2, sort_keys=True)
    )
    outcome = SweepOutcome(runs_path, summary_path, runs, summary)
    logger.info("[SWEEP] wrote %d rows to %s (%d violations)", len(runs), runs_path, outcome.violations)
    return outcome


def write_run_artifact(path, algorithm, params, result):
    """Write a schedule file, plus a ledger .jsonl next to it for 2-hop runs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "algorithm": algorithm,
        "params": params.to_dict(),
        "schedule": result.schedule.to_dict(),
        "remaining": result.remaining.entries.tolist(),
        "transmission_time": result.transmission_time,
    }
    if algorithm == "twohop":
        ledger_path = path.with_suffix(".ledger.jsonl")
        ledger_path.write_text(result.ledger.to_jsonl())
        document["ledger_file"] = ledger_path.name
    path.write_text(json.dumps(document, indent=2))
    return path


def read_run_artifact(path):
    """
    Load a schedule file written by write_run_artifact.

    Returns:
        (params, result)
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text())
        algorithm = document["algorithm"]
        params = SystemParams.from_dict(document["params"])
        remaining = DemandMatrix(document["remaining"])
        total = float(document["transmission_time"])
    except OSError as e:
        raise ParseError(f"cannot read schedule file {path}: {e}") from e
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"bad schedule file {path}: {e}") from e

    if algorithm == "bff":
        return params, BffResult(EventSchedule.from_dict(document["schedule"]), remaining, total)
    schedule = Schedule.from_dict(document["schedule"], params.n)
    if algorithm == "eclipse":
        return params, EclipseResult(schedule, remaining, total)
    if algorithm == "twohop":
        ledger_path = path.parent / document.get("ledger_file", path.with_suffix(".ledger.jsonl").name)
        try:
            ledger = BookingLedger.from_jsonl(ledger_path.read_text())
        except OSError as e:
            raise ParseError(f"cannot read ledger {ledger_path}: {e}") from e
        return params, TwoHopResult(schedule, remaining, total, ledger=ledger)
    raise ParseError(f"unknown algorithm {algorithm!r} in {path}")


def run_single(algorithm, demand, params, strategy=None, out_path=None, **options):
    """
    Schedule one demand with one algorithm.

    demand is a DemandMatrix or the path of a demand file.

    Returns:
        (result, wall_time_seconds, artifact path or None)
    """
    if algorithm not in ALGORITHMS:
        raise ArgumentError(f"unknown algorithm {algorithm!r}")
    if not isinstance(demand, DemandMatrix):
        demand = read_demand(demand)
    if demand.n != params.n:
        params = SystemParams(demand.n, params.delta, params.r_p)
    result, wall = run_algorithm(algorithm, demand, params, strategy or SearchStrategy(), **options)
    written = write_run_artifact(out_path, algorithm, params, result) if out_path else None
    return result, wall, written

import argparse
import logging
import sys
from pathlib import Path

from rich.console import Console
from rich.table import Table

from .bff import INITIAL_LPT, INITIAL_MWM
from .config import load_config
from .demand import TrafficGenConfig, generate_demand, read_demand, write_demand
from .eclipse import SearchStrategy, SystemParams
from .evaluate import validate
from .experiments import read_run_artifact, run_single, run_sweep
from .report import write_report
from .runner import ALGORITHMS
from .utils import (
    DEFAULT_C_SMALL,
    DEFAULT_N_LARGE,
    DEFAULT_N_SMALL,
    HybridSchedError,
    configure_logging,
    default_output_dir,
)

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ERROR = 2


def cmd_gen(args):
    cfg = TrafficGenConfig(
        n=args.n,
        n_large=args.n_large,
        n_small=args.n_small,
        c_large=1.0 - args.c_small,
        c_small=args.c_small,
        enable_n1=not args.no_noise,
        enable_n2=not args.no_noise,
        seed=args.seed,
    )
    out = args.out or Path(default_output_dir()) / f"demand_n{args.n}_s{args.seed}.csv"
    path = write_demand(generate_demand(cfg), out)
    console.print(f"wrote {path}")
    return EXIT_OK


def _params(args, n):
    if args.rp is not None:
        return SystemParams(n, args.delta, args.rp)
    return SystemParams.from_ratio(n, args.delta, args.rp_ratio)


def cmd_run(args):
    demand = read_demand(args.demand)
    params = _params(args, demand.n)
    options = {}
    if args.algorithm == "bff":
        options = {"initial": args.bff_initial, "charge_initial_delay": not args.no_initial_delay}
    out = args.out or Path(default_output_dir()) / f"{args.algorithm}.json"
    result, wall, path = run_single(
        args.algorithm, demand, params, SearchStrategy.parse(args.search, demand.n), out, **options
    )

    table = Table(title=f"{args.algorithm} on {args.demand}")
    table.add_column("T", justify="right")
    table.add_column("K", justify="right")
    table.add_column("wall time (ms)", justify="right")
    table.add_row(f"{result.transmission_time:.6g}", str(result.configurations), f"{wall * 1000:.3f}")
    console.print(table)
    console.print(f"schedule written to {path}")
    return EXIT_OK


def cmd_sweep(args):
    overrides = {
        "n": args.n,
        "runs": args.runs,
        "base_seed": args.seed,
        "output": args.out,
        "workers": args.workers,
        "cache_dir": args.cache_dir,
        "algorithms": args.algorithms.split(",") if args.algorithms else None,
        "timing": False if args.no_timing else None,
    }
    config = load_config(args.config, overrides)
    outcome = run_sweep(config)

    table = Table(title=f"sweep: {outcome.runs_path}")
    for column in ("cell", "algorithm", "mean T", "median T", "vs eclipse", "median wall (ms)"):
        table.add_column(column, justify="right")
    for index, entry in enumerate(outcome.summary):
        for name, stats in entry["algorithms"].items():
            reduction = stats.get("reduction_vs_eclipse")
            wall = stats["wall_time_ms_median"]
            table.add_row(
                str(index),
                name,
                f"{stats['T']['mean']:.4f}",
                f"{stats['T']['median']:.4f}",
                "-" if reduction is None else f"{100 * reduction:.1f}%",
                "-" if wall is None else f"{wall:.2f}",
            )
    console.print(table)
    if outcome.violations:
        console.print(f"[red]{outcome.violations} validation violations[/red]")
        return EXIT_INVALID
    return EXIT_OK


def cmd_validate(args):
    demand = read_demand(args.demand)
    params, result = read_run_artifact(args.schedule)
    report = validate(demand, result, params)
    console.print_json(report.to_json())
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_report(args):
    path = write_report(args.summary, args.out)
    console.print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hybridsched",
        description="Eclipse, 2-hop Eclipse and BFF schedules for hybrid circuit/packet switches",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="emit a synthetic demand matrix")
    gen.add_argument("--n", type=int, default=32)
    gen.add_argument("--n-large", type=int, default=DEFAULT_N_LARGE)
    gen.add_argument("--n-small", type=int, default=DEFAULT_N_SMALL)
    gen.add_argument("--c-small", type=float, default=DEFAULT_C_SMALL)
    gen.add_argument("--no-noise", action="store_true")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, help="CSV (default) or .json")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="schedule one demand file")
    run.add_argument("algorithm", choices=ALGORITHMS)
    run.add_argument("demand", type=Path)
    run.add_argument("--delta", type=float, default=0.01)
    rate = run.add_mutually_exclusive_group()
    rate.add_argument("--rp-ratio", type=float, default=10.0, help="r_c/r_p")
    rate.add_argument("--rp", type=float, help="packet rate r_p directly")
    run.add_argument("--search", default="binary", help="full | binary | sample:<m> (e.g. sample:4n)")
    run.add_argument("--bff-initial", choices=(INITIAL_MWM, INITIAL_LPT), default=INITIAL_MWM)
    run.add_argument("--no-initial-delay", action="store_true", help="BFF: first configuration is free")
    run.add_argument("--out", type=Path, help="schedule JSON path")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a parameter grid")
    sweep.add_argument("--config", type=Path, help="JSON experiment config")
    sweep.add_argument("--n", type=int)
    sweep.add_argument("--runs", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--algorithms", help="comma separated subset of " + ",".join(ALGORITHMS))
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--cache-dir")
    sweep.add_argument("--no-timing", action="store_true", help="leave wall times empty (reproducible CSV)")
    sweep.add_argument("--out", help="output directory")
    sweep.set_defaults(func=cmd_sweep)

    check = sub.add_parser("validate", help="audit a schedule file")
    check.add_argument("schedule", type=Path)
    check.add_argument("--demand", type=Path, required=True)
    check.set_defaults(func=cmd_validate)

    report = sub.add_parser("report", help="render a sweep summary to HTML")
    report.add_argument("summary", type=Path)
    report.add_argument("--out", type=Path)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except (HybridSchedError, OSError) as e:
        logger.error("%s", e)
        console.print(f"[red]error:[/red] {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

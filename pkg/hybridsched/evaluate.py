"""
Transmission-time accounting, schedule audits and run statistics.
"""

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .utils import EPS, ArgumentError, ParseError, line_sums_max


def transmission_time(t_c, remaining, r_p):
    """
    Time for the circuit and packet switches together to clear the demand.

    The packet switch drains the residual concurrently with the circuit
    schedule, so T = max(t_c, W(D_rem) / r_p).
    """
    if r_p <= 0:
        raise ArgumentError("r_p must be positive")
    entries = getattr(remaining, "entries", remaining)
    return max(float(t_c), line_sums_max(np.asarray(entries, dtype=float)) / r_p)


@dataclass
class Violation:
    check: str
    location: str
    message: str


@dataclass
class ValidationReport:
    """Every failed check found while auditing one schedule."""

    algorithm: str
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, check, location, message):
        self.violations.append(Violation(check, location, message))

    def messages(self):
        return [v.message for v in self.violations]

    def to_dict(self):
        return {"algorithm": self.algorithm, "ok": self.ok, "violations": [asdict(v) for v in self.violations]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def validate(demand, result, params):
    """
    Audit a schedule produced for demand.

    Checks matching legality, conservation, the 2-hop ledger replay and the
    BFF timeline rules as they apply to result.algorithm. Problems are
    collected in the report, never raised.
    """
    report = ValidationReport(result.algorithm)
    original = demand.entries
    remaining = result.remaining.entries

    if remaining.shape != original.shape:
        report.add("shape", "remaining", "residual demand has the wrong shape")
        return report
    if np.any(remaining < -EPS):
        report.add("nonnegative", "remaining", "residual demand has negative entries")

    if result.algorithm == "bff":
        _check_timeline(report, original, result, params)
        limit = params.r_p * result.transmission_time
    else:
        _check_steps(report, result.schedule, params)
        if result.algorithm == "twohop":
            _check_ledger(report, original, result)
        else:
            _check_replay(report, original, result)
        limit = params.r_p * result.schedule.t_c
        expected = transmission_time(result.schedule.t_c, remaining, params.r_p)
        if not math.isclose(expected, result.transmission_time, rel_tol=EPS, abs_tol=EPS):
            report.add("transmission_time", "T", f"reported T={result.transmission_time} but schedule gives {expected}")

    load = line_sums_max(remaining)
    if load > limit + EPS:
        report.add("packet_bound", "remaining", f"residual load {load:.6g} exceeds packet capacity {limit:.6g}")
    return report


def _check_steps(report, schedule, params):
    t_c = 0.0
    for k, step in enumerate(schedule.steps):
        if not step.matching.is_legal():
            report.add("matching", f"step {k}", f"illegal matching at step {k}")
        if step.duration <= 0:
            report.add("duration", f"step {k}", f"non-positive duration at step {k}")
        t_c += params.delta + step.duration
    if not math.isclose(t_c, schedule.t_c, rel_tol=EPS, abs_tol=EPS):
        report.add("t_c", "schedule", f"t_c={schedule.t_c} but steps add up to {t_c}")


def _check_conservation(report, original, served, remaining):
    gap = original - served - remaining
    for i, j in zip(*np.nonzero(np.abs(gap) > EPS)):
        report.add("conservation", f"({i},{j})", f"conservation broken at ({i},{j}) by {gap[i, j]:.3e}")


def _check_replay(report, original, result):
    remaining = original.copy()
    for step in result.schedule.steps:
        if not step.matching.is_legal():
            continue
        rows, cols = step.matching.inputs, step.matching.outputs
        if rows.size:
            remaining[rows, cols] -= np.minimum(step.duration, remaining[rows, cols])
    _check_conservation(report, original, original - remaining, result.remaining.entries)


def _check_ledger(report, original, result):
    schedule, ledger = result.schedule, result.ledger
    n = original.shape[0]
    served = np.zeros_like(original)
    by_step = defaultdict(list)
    for booking in ledger:
        if booking.amount <= 0:
            report.add("booking", f"step {booking.step}", f"non-positive booking at step {booking.step}")
        if not 0 <= booking.step < len(schedule):
            report.add("booking", f"step {booking.step}", f"booking refers to missing step {booking.step}")
            continue
        by_step[booking.step].append(booking)
        served[booking.origin, booking.dest] += booking.amount
    _check_conservation(report, original, served, result.remaining.entries)

    residue = np.zeros((n, n))
    for k, step in enumerate(schedule.steps):
        edges = set(step.matching.pairs)
        used = defaultdict(float)
        for booking in by_step.get(k, []):
            if booking.relay is None:
                edge = (booking.origin, booking.dest)
            else:
                edge = (booking.relay, booking.dest)
                l, i = booking.origin, booking.relay
                if residue[l, i] + EPS < booking.amount:
                    report.add(
                        "residue",
                        f"({l},{i})",
                        f"residue overdraft at ({l},{i}) in step {k}: "
                        f"needs {booking.amount:.6g}, has {residue[l, i]:.6g}",
                    )
                residue[l, i] = max(residue[l, i] - booking.amount, 0.0)
            if edge not in edges:
                report.add("booking", f"step {k}", f"booking on {edge} which step {k} does not connect")
            used[edge] += booking.amount
        for i, j in step.matching.pairs:
            if used[(i, j)] > step.duration + EPS:
                report.add("capacity", f"({i},{j})", f"capacity exceeded on ({i},{j}) at step {k}")
            if i != j:
                residue[i, j] += max(step.duration - used[(i, j)], 0.0)


def _check_timeline(report, original, result, params):
    schedule = result.schedule
    served = np.zeros_like(original)
    by_input = defaultdict(list)

    for c in schedule.connections:
        where = f"({c.i},{c.j})@{c.start:.6g}"
        if c.end < c.start - EPS:
            report.add("interval", where, f"connection {where} ends before it starts")
        if c.amount > c.end - c.start + EPS:
            report.add("rate", where, f"connection {where} serves more than its duration")
        if c.end < schedule.stop_time - EPS and abs(c.amount - (c.end - c.start)) > EPS:
            report.add("preemption", where, f"connection {where} ended early without a stop")
        served[c.i, c.j] += c.amount
        by_input[c.i].append(c)
    _check_conservation(report, original, served, result.remaining.entries)
    over = served - original
    for i, j in zip(*np.nonzero(over > EPS)):
        report.add("amount", f"({i},{j})", f"served more than D at ({i},{j})")

    for i, connections in by_input.items():
        connections.sort(key=lambda c: c.start)
        for prev, nxt in zip(connections, connections[1:]):
            if nxt.start - prev.end < params.delta - EPS:
                report.add("gap", f"input {i}", f"reconfiguration gap violated at input {i} at t={nxt.start:.6g}")

    # Sweep all boundaries; ends before starts at equal times (half-open intervals)
    boundaries = []
    for c in schedule.connections:
        if c.end - c.start <= EPS:
            continue
        boundaries.append((c.start + EPS, 1, c))
        boundaries.append((c.end - EPS, 0, c))
    boundaries.sort(key=lambda b: (b[0], b[1]))
    busy_in, busy_out = set(), set()
    for _, opening, c in boundaries:
        if not opening:
            busy_in.discard(c.i)
            busy_out.discard(c.j)
            continue
        if c.i in busy_in:
            report.add("overlap", f"input {c.i}", f"input overlap at {c.i} at t={c.start:.6g}")
        if c.j in busy_out:
            report.add("overlap", f"output {c.j}", f"output overlap at {c.j} at t={c.start:.6g}")
        busy_in.add(c.i)
        busy_out.add(c.j)


@dataclass
class SummaryStats:
    mean: float
    median: float
    p25: float
    p75: float
    notch: float
    runs: int

    def to_dict(self):
        return asdict(self)


def summarize(values):
    """
    Boxplot statistics with linearly interpolated percentiles.

    notch is the half-width of the median's 95% interval, 1.57*IQR/sqrt(runs).
    """
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        raise ArgumentError("cannot summarize an empty list")
    p25, median, p75 = np.percentile(values, [25, 50, 75])
    return SummaryStats(
        mean=float(values.mean()),
        median=float(median),
        p25=float(p25),
        p75=float(p75),
        notch=float(1.57 * (p75 - p25) / math.sqrt(values.size)),
        runs=int(values.size),
    )


RUN_CSV_FIELDS = [
    "algorithm", "seed", "delta", "rp_ratio", "T", "K", "wall_time_ms",
    "n", "n_L", "n_S", "c_S", "search", "violations",
]


@dataclass
class RunResult:
    """One scheduler run on one demand matrix."""

    algorithm: str
    seed: int
    delta: float
    rp_ratio: float
    transmission_time: float
    configurations: int
    wall_time: float = None
    n: int = 0
    n_large: int = 0
    n_small: int = 0
    c_small: float = 0.0
    search: str = ""
    violations: int = 0

    def to_row(self):
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "delta": repr(self.delta),
            "rp_ratio": repr(self.rp_ratio),
            "T": repr(self.transmission_time),
            "K": self.configurations,
            "wall_time_ms": "" if self.wall_time is None else f"{self.wall_time * 1000:.3f}",
            "n": self.n,
            "n_L": self.n_large,
            "n_S": self.n_small,
            "c_S": repr(self.c_small),
            "search": self.search,
            "violations": self.violations,
        }

    @classmethod
    def from_row(cls, row):
        try:
            wall = row["wall_time_ms"]
            return cls(
                algorithm=row["algorithm"],
                seed=int(row["seed"]),
                delta=float(row["delta"]),
                rp_ratio=float(row["rp_ratio"]),
                transmission_time=float(row["T"]),
                configurations=int(row["K"]),
                wall_time=float(wall) / 1000 if wall else None,
                n=int(row["n"]),
                n_large=int(row["n_L"]),
                n_small=int(row["n_S"]),
                c_small=float(row["c_S"]),
                search=row["search"],
                violations=int(row["violations"]),
            )
        except (KeyError, ValueError) as e:
            raise ParseError(f"bad run row {row!r}: {e}") from e


def runs_to_csv(runs):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=RUN_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for run in runs:
        writer.writerow(run.to_row())
    return buffer.getvalue()


def runs_from_csv(text):
    return [RunResult.from_row(row) for row in csv.DictReader(io.StringIO(text))]

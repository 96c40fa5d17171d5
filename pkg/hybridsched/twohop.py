"""
2-hop Eclipse: Eclipse with indirect routing over residue capacity.

Circuit time left unused on an earlier connection l->i is residue. Traffic
from l to j can ride that residue to relay i and reach j later when the
circuit i->j is scheduled. Each greedy step maximizes utility over
D_rem + I_rem, where I_rem(i, j) counts demand that could be relayed
through i to j, and then books direct and indirect traffic per edge.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .demand import DemandMatrix
from .eclipse import EclipseResult, Schedule, SearchStrategy, best_configuration, default_max_steps
from .evaluate import transmission_time
from .utils import EPS, LEDGER_MIN_AMOUNT, ConsistencyError, ParseError, clamp_small_negatives, line_sums_max

logger = logging.getLogger(__name__)


@dataclass
class ResidueState:
    """Cumulative residue capacity R and residual direct demand D_rem."""

    residue: np.ndarray
    remaining: np.ndarray

    @classmethod
    def start(cls, demand):
        return cls(np.zeros((demand.n, demand.n)), demand.copy_entries())

    @property
    def n(self):
        return self.remaining.shape[0]


@dataclass
class IndirectDemand:
    """
    I_rem and its per-origin breakdown.

    per_origin[k, i, j] is the amount of D_rem(origins[k], j) that could be
    relayed through i: min(D_rem(l, j), R(l, i)).
    """

    totals: np.ndarray
    origins: np.ndarray
    per_origin: np.ndarray

    def breakdown(self, i, j):
        """Map origin -> relayable amount for edge (i, j), positive values only."""
        shares = self.per_origin[:, i, j]
        return {int(l): float(v) for l, v in zip(self.origins, shares) if v > 0}


@dataclass(frozen=True)
class Booking:
    """One ledger line. relay is None for direct traffic."""

    step: int
    origin: int
    dest: int
    amount: float
    relay: int = None

    @property
    def kind(self):
        return "direct" if self.relay is None else "indirect"

    def to_dict(self):
        record = {"step": self.step, "kind": self.kind, "origin": self.origin}
        if self.relay is not None:
            record["relay"] = self.relay
        record["dest"] = self.dest
        record["amount"] = self.amount
        return record

    @classmethod
    def from_dict(cls, record):
        try:
            relay = record.get("relay")
            if (record["kind"] == "indirect") != (relay is not None):
                raise ValueError("kind does not agree with relay")
            return cls(
                int(record["step"]),
                int(record["origin"]),
                int(record["dest"]),
                float(record["amount"]),
                None if relay is None else int(relay),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad ledger record {record!r}: {e}") from e


@dataclass
class BookingLedger:
    """Every direct and indirect booking, in the order they were made."""

    bookings: list = field(default_factory=list)

    def __len__(self):
        return len(self.bookings)

    def __iter__(self):
        return iter(self.bookings)

    @property
    def direct(self):
        return [b for b in self.bookings if b.relay is None]

    @property
    def indirect(self):
        return [b for b in self.bookings if b.relay is not None]

    def extend(self, bookings):
        self.bookings.extend(bookings)

    def to_jsonl(self):
        return "".join(json.dumps(b.to_dict()) + "\n" for b in self.bookings)

    @classmethod
    def from_jsonl(cls, text):
        bookings = []
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"ledger line {number}: {e}") from e
            bookings.append(Booking.from_dict(record))
        return cls(bookings)


def build_irem(state):
    """
    Construct I_rem from (D_rem, R).

    Only origins with some residue contribute, so the work is proportional
    to the number of nonzero rows of R.
    """
    n = state.n
    origins = np.flatnonzero(state.residue.any(axis=1))
    if origins.size == 0:
        return IndirectDemand(np.zeros((n, n)), origins, np.zeros((0, n, n)))

    # per_origin[k, i, j] = min(D_rem(l, j), R(l, i)) for l = origins[k]
    per_origin = np.minimum(
        state.remaining[origins][:, None, :], state.residue[origins][:, :, None]
    )
    diagonal = np.arange(n)
    per_origin[:, diagonal, diagonal] = 0.0
    # l == i and l == j vanish because R(l, l) and D_rem(l, l) are excluded
    per_origin[np.arange(origins.size), origins, :] = 0.0
    per_origin[np.arange(origins.size), :, origins] = 0.0
    return IndirectDemand(per_origin.sum(axis=0), origins, per_origin)


def apply_configuration(state, irem, matching, alpha, step):
    """
    Book traffic on every edge of matching held for alpha.

    Per edge (i, j) with d = D_rem(i, j) and r = I_rem(i, j):
      alpha <= d:       direct alpha, no residue change
      alpha >= d + r:   all of d and every relayable share, R(i, j) gains
                        alpha - (d + r)
      otherwise:        all of d, each share scaled by (alpha - d) / r

    Residue gained in this step is applied after all edges, so it cannot
    carry traffic of the same step.

    Returns:
        (state, list of Booking) with state updated in place
    """
    remaining, residue = state.remaining, state.residue
    bookings = []
    gained = []
    written = set()

    for i, j in sorted(matching.pairs):
        direct = remaining[i, j]
        relayable = irem.totals[i, j]

        if alpha <= direct:
            remaining[i, j] -= alpha
            bookings.append(Booking(step, i, j, alpha))
            _mark(written, ("D", i, j))
            continue

        if direct > 0:
            bookings.append(Booking(step, i, j, float(direct)))
        remaining[i, j] = 0.0
        _mark(written, ("D", i, j))

        if alpha >= direct + relayable:
            scale = 1.0
            slack = alpha - (direct + relayable)
            if i != j and slack > 0:
                gained.append((i, j, slack))
        else:
            scale = (alpha - direct) / relayable

        if relayable <= 0:
            continue
        shares = irem.per_origin[:, i, j] * scale
        for origin, amount in zip(irem.origins, shares):
            if amount <= 0:
                continue
            origin = int(origin)
            remaining[origin, j] -= amount
            residue[origin, i] -= amount
            _mark(written, ("D", origin, j))
            _mark(written, ("R", origin, i))
            if amount >= LEDGER_MIN_AMOUNT:
                bookings.append(Booking(step, origin, j, float(amount), relay=i))

    clamp_small_negatives(remaining, "D_rem")
    clamp_small_negatives(residue, "R")
    for i, j, slack in gained:
        residue[i, j] += slack
    return state, bookings


def _mark(written, key):
    if key in written:
        raise ConsistencyError(f"entry {key} written twice in one configuration")
    written.add(key)


@dataclass
class TwoHopResult(EclipseResult):
    ledger: BookingLedger = field(default_factory=BookingLedger)
    algorithm: str = "twohop"


def two_hop_schedule(demand, params, strategy=None, max_steps=None):
    """
    Run 2-hop Eclipse on a demand matrix.

    Returns a TwoHopResult with the schedule, the booking ledger, the
    residual direct demand and the transmission time.
    """
    strategy = strategy or SearchStrategy()
    max_steps = max_steps or default_max_steps(demand.n)
    state = ResidueState.start(demand)
    schedule = Schedule()
    ledger = BookingLedger()

    while line_sums_max(state.remaining) > params.r_p * schedule.t_c:
        if len(schedule) >= max_steps:
            raise ConsistencyError(f"2-hop eclipse exceeded {max_steps} configurations")
        irem = build_irem(state)
        config = best_configuration(state.remaining + irem.totals, params, strategy)
        _, bookings = apply_configuration(state, irem, config.matching, config.alpha, len(schedule))
        ledger.extend(bookings)
        schedule.append(config.matching, config.alpha, params.delta)
        logger.debug(
            "[TWOHOP] step %d alpha=%.5f bookings=%d indirect=%.5f",
            len(schedule), config.alpha, len(bookings),
            sum(b.amount for b in bookings if b.relay is not None),
        )

    total = transmission_time(schedule.t_c, state.remaining, params.r_p)
    logger.info(
        "[TWOHOP] %d configurations, %d indirect bookings, T=%.4f",
        len(schedule), len(ledger.indirect), total,
    )
    return TwoHopResult(schedule, DemandMatrix(state.remaining), total, ledger=ledger)

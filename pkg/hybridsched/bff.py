"""
Best First Fit (BFF) for a partially reconfigurable circuit switch.

BFF is a longest-processing-time list scheduler run as an event-driven
simulation. Only inputs pay the reconfiguration delay. When input i
finishes draining VOQ(i, j) at time tau, output j immediately looks for
the available input with the most traffic for it, and input i looks for
the available output with the most traffic from it once it has
reconfigured at tau + delta. Connections are non-preemptive: each one
drains its VOQ completely at rate 1 unless the run stops first.
"""

import heapq
import logging
from dataclasses import dataclass, field

import numpy as np

from .demand import DemandMatrix
from .evaluate import transmission_time
from .matching import max_weight_matching
from .utils import EPS, ArgumentError, ParseError, line_sums_max

logger = logging.getLogger(__name__)

# Event kinds, in processing order for equal timestamps
COMPLETION = 0
INPUT_READY = 1

INITIAL_MWM = "mwm"
INITIAL_LPT = "lpt"


@dataclass
class Connection:
    """One circuit connection i -> j over [start, end]."""

    i: int
    j: int
    start: float
    end: float
    amount: float

    def to_dict(self):
        return {"i": self.i, "j": self.j, "start": self.start, "end": self.end, "amount": self.amount}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["i"]), int(data["j"]), float(data["start"]), float(data["end"]), float(data["amount"]))


@dataclass
class EventSchedule:
    """Per-port connection timeline, the matrix process S(t) as intervals."""

    connections: list = field(default_factory=list)
    stop_time: float = 0.0

    def __len__(self):
        return len(self.connections)

    def active_at(self, t):
        """Pairs (i, j) transmitting at instant t (intervals are half-open)."""
        return [(c.i, c.j) for c in self.connections if c.start <= t < c.end]

    def to_dict(self):
        return {"connections": [c.to_dict() for c in self.connections], "stop_time": self.stop_time}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls([Connection.from_dict(c) for c in data["connections"]], float(data["stop_time"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad event schedule document: {e}") from e


class BffState:
    """
    Mutable simulation state.

    remaining holds D_rem for idle VOQs; for a VOQ being drained it keeps
    the value from when its connection started. An input is in exactly one
    of: transmitting, reconfiguring, available (I_a). An output is either
    transmitting or available (O_a).
    """

    def __init__(self, entries, delta):
        n = entries.shape[0]
        self.remaining = np.array(entries, dtype=float)
        self.delta = delta
        self.input_free = np.zeros(n, dtype=bool)
        self.output_free = np.zeros(n, dtype=bool)
        self.active_output = np.full(n, -1)
        self.active_start = np.zeros(n)
        self.active_amount = np.zeros(n)
        self.active_connection = [None] * n
        self.row_sums = self.remaining.sum(axis=1)
        self.col_sums = self.remaining.sum(axis=0)
        self.queue = []
        self.next_check = 0.0
        self.schedule = EventSchedule()

    @property
    def n(self):
        return self.remaining.shape[0]

    @property
    def available_inputs(self):
        return set(np.flatnonzero(self.input_free).tolist())

    @property
    def available_outputs(self):
        return set(np.flatnonzero(self.output_free).tolist())

    def release_input(self, i):
        self.input_free[i] = True

    def release_output(self, j):
        self.output_free[j] = True

    def push(self, time, kind, port):
        heapq.heappush(self.queue, (time, kind, port))

    def connect(self, i, j, t):
        """Start draining VOQ(i, j) at t; it completes after D_rem(i, j)."""
        amount = float(self.remaining[i, j])
        connection = Connection(i, j, t, t + amount, amount)
        self.input_free[i] = False
        self.output_free[j] = False
        self.active_output[i] = j
        self.active_start[i] = t
        self.active_amount[i] = amount
        self.active_connection[i] = connection
        self.schedule.connections.append(connection)
        self.push(connection.end, COMPLETION, i)
        return connection

    def complete(self, i, t):
        """Finish input i's connection at t and queue its reconfiguration; returns it."""
        connection = self.active_connection[i]
        self.remaining[connection.i, connection.j] = 0.0
        self.row_sums[connection.i] -= connection.amount
        self.col_sums[connection.j] -= connection.amount
        self.active_output[i] = -1
        self.active_connection[i] = None
        self.push(t + self.delta, INPUT_READY, i)
        return connection

    def _served(self, t):
        active = self.active_output >= 0
        served = np.where(active, np.minimum(t - self.active_start, self.active_amount), 0.0)
        return active, np.maximum(served, 0.0)

    def remaining_at(self, t):
        """D_rem with all service delivered until t."""
        active, served = self._served(t)
        current = self.remaining.copy()
        rows = np.flatnonzero(active)
        current[rows, self.active_output[rows]] = self.active_amount[rows] - served[rows]
        return current

    def packet_can_finish(self, t, r_p):
        """
        True once every row and column sum of D_rem at t is at most r_p * t.

        Every line drains at rate at most 1, so a failed check at t0 with
        largest line sum L rules out any stop before (L + t0) / (1 + r_p).
        Checks before that horizon return False without touching the matrix.
        """
        if t < self.next_check:
            return False
        active, served = self._served(t)
        col_served = np.zeros(self.n)
        col_served[self.active_output[active]] = served[active]
        rough = max((self.row_sums - served).max(), (self.col_sums - col_served).max())
        if rough > r_p * t + EPS:
            self.next_check = (rough - 2 * EPS + t) / (1.0 + r_p)
            return False
        # Running sums drift by rounding, so confirm on the exact matrix
        return line_sums_max(self.remaining_at(t)) <= r_p * t

    def stop(self, t):
        """Truncate every active connection at t."""
        self.remaining = self.remaining_at(t)
        _, served = self._served(t)
        for i in np.flatnonzero(self.active_output >= 0):
            connection = self.active_connection[i]
            connection.end = t
            connection.amount = float(served[i])
            self.active_output[i] = -1
            self.active_connection[i] = None
        self.schedule.stop_time = t


@dataclass
class BffResult:
    schedule: EventSchedule
    remaining: DemandMatrix
    transmission_time: float
    algorithm: str = "bff"

    @property
    def configurations(self):
        return len(self.schedule)


def output_seek_pairing(state, j, t):
    """
    Pair idle output j with the available input holding the most traffic for it.

    Ties go to the lowest input index. Without a candidate, j becomes available.
    """
    candidates = np.where(state.input_free, state.remaining[:, j], 0.0)
    l = int(np.argmax(candidates))
    if candidates[l] <= 0:
        state.release_output(j)
        return None
    return state.connect(l, j, t)


def input_seek_pairing(state, i, t):
    """
    Pair reconfigured input i with the available output it has the most traffic for.

    Ties go to the lowest output index. Without a candidate, i becomes available.
    """
    candidates = np.where(state.output_free, state.remaining[i, :], 0.0)
    j = int(np.argmax(candidates))
    if candidates[j] <= 0:
        state.release_input(i)
        return None
    return state.connect(i, j, t)


def _initialize(state, demand, start, initial):
    n = demand.n
    if initial == INITIAL_MWM:
        paired = np.zeros(n, dtype=bool)
        taken = np.zeros(n, dtype=bool)
        for i, j in max_weight_matching(demand.entries):
            if demand.entries[i, j] > 0:
                state.connect(i, j, start)
                paired[i] = taken[j] = True
        state.output_free |= ~taken
        # Leftover inputs look for work like any freshly reconfigured input
        for i in np.flatnonzero(~paired):
            input_seek_pairing(state, int(i), start)
    elif initial == INITIAL_LPT:
        state.input_free[:] = True
        for j in range(n):
            output_seek_pairing(state, j, start)
    else:
        raise ArgumentError(f"unknown BFF initialization {initial!r}")


def bff_schedule(demand, params, initial=INITIAL_MWM, charge_initial_delay=True):
    """
    Run BFF on a demand matrix.

    The switch pays one reconfiguration delay before the initial matching
    starts (unless charge_initial_delay is False). At every event time the
    run stops as soon as the packet switch can clear what remains by then.

    Args:
        demand: DemandMatrix
        params: SystemParams
        initial: 'mwm' (maximum-weight initial matching) or 'lpt'
        charge_initial_delay: Charge delta before the first connections

    Returns:
        A BffResult
    """
    state = BffState(demand.entries, params.delta)
    if demand.total == 0:
        return BffResult(state.schedule, DemandMatrix(state.remaining), 0.0)

    start = params.delta if charge_initial_delay else 0.0
    if state.packet_can_finish(start, params.r_p):
        state.stop(start)
        return BffResult(state.schedule, DemandMatrix(state.remaining), start)

    _initialize(state, demand, start, initial)

    last_completion = start
    while state.queue:
        t = state.queue[0][0]
        if state.packet_can_finish(t, params.r_p):
            state.stop(t)
            logger.info("[BFF] stopped at t=%.4f after %d connections", t, len(state.schedule))
            return BffResult(state.schedule, DemandMatrix(state.remaining), t)

        freed_outputs = []
        while state.queue and state.queue[0][0] == t and state.queue[0][1] == COMPLETION:
            i = heapq.heappop(state.queue)[2]
            freed_outputs.append(state.complete(i, t).j)
            last_completion = t

        for j in sorted(freed_outputs):
            output_seek_pairing(state, j, t)

        ready_inputs = []
        while state.queue and state.queue[0][0] == t and state.queue[0][1] == INPUT_READY:
            ready_inputs.append(heapq.heappop(state.queue)[2])
        for i in sorted(ready_inputs):
            input_seek_pairing(state, i, t)

    state.schedule.stop_time = last_completion
    total = transmission_time(last_completion, state.remaining, params.r_p)
    logger.info("[BFF] ran to completion at t=%.4f, T=%.4f", last_completion, total)
    return BffResult(state.schedule, DemandMatrix(state.remaining), total)

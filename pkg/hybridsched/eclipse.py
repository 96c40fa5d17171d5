"""
Eclipse: greedy circuit scheduling by cost-adjusted utility.

Each step picks the configuration (M, alpha) that serves the most traffic
per unit of circuit time, ||min(alpha*M, D_rem)||_1 / (delta + alpha), and
keeps going until the packet switch can absorb what is left within the
circuit time spent so far.
"""

import enum
import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .demand import DemandMatrix
from .evaluate import transmission_time
from .matching import Matching, max_weight_matching
from .utils import (
    ArgumentError,
    ConfigurationError,
    ConsistencyError,
    NoConfigurationError,
    ParseError,
    line_sums_max,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemParams:
    """Switch parameters. The circuit rate r_c is fixed at 1."""

    n: int
    delta: float
    r_p: float

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError("n must be positive")
        if self.delta < 0:
            raise ArgumentError("delta must be nonnegative")
        if self.r_p <= 0:
            raise ArgumentError("r_p must be positive")

    @classmethod
    def from_ratio(cls, n, delta, rc_rp_ratio):
        """Build params from the circuit/packet rate ratio r_c/r_p."""
        if rc_rp_ratio <= 0:
            raise ArgumentError("r_c/r_p must be positive")
        return cls(n, delta, 1.0 / rc_rp_ratio)

    @property
    def rc_rp_ratio(self):
        return 1.0 / self.r_p

    def to_dict(self):
        return {"n": self.n, "delta": self.delta, "r_p": self.r_p}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["n"]), float(data["delta"]), float(data["r_p"]))


@dataclass(frozen=True)
class ScheduleStep:
    matching: Matching
    duration: float


@dataclass
class Schedule:
    """Ordered (matching, duration) steps plus accumulated circuit time."""

    steps: list = field(default_factory=list)
    t_c: float = 0.0

    def append(self, matching, duration, delta):
        self.steps.append(ScheduleStep(matching, duration))
        self.t_c += delta + duration

    def __len__(self):
        return len(self.steps)

    def to_dict(self):
        return {
            "steps": [
                {"duration": step.duration, "pairs": step.matching.to_list()}
                for step in self.steps
            ],
            "t_c": self.t_c,
        }

    @classmethod
    def from_dict(cls, data, n):
        try:
            steps = [
                ScheduleStep(Matching.from_pairs(n, step["pairs"]), float(step["duration"]))
                for step in data["steps"]
            ]
            return cls(steps, float(data["t_c"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad schedule document: {e}") from e


class SearchMode(enum.Enum):
    FULL = "full"
    BINARY = "binary"
    SAMPLED = "sample"


_SAMPLE_SPEC = re.compile(r"^sample:(\d*)(n?)$")


@dataclass(frozen=True)
class SearchStrategy:
    """How candidate durations alpha are examined in each greedy step."""

    mode: SearchMode = SearchMode.BINARY
    m: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError("sampling factor m must be at least 1")

    @classmethod
    def full_scan(cls):
        return cls(SearchMode.FULL)

    @classmethod
    def bitonic_binary(cls):
        return cls(SearchMode.BINARY)

    @classmethod
    def sampled(cls, m):
        return cls(SearchMode.SAMPLED, int(m))

    @classmethod
    def parse(cls, spec, n):
        """
        Parse 'full', 'binary' or 'sample:<m>'.

        <m> may be an integer or a multiple of n such as '4n'.
        """
        spec = str(spec).strip().lower()
        if spec == "full":
            return cls.full_scan()
        if spec == "binary":
            return cls.bitonic_binary()
        match = _SAMPLE_SPEC.match(spec)
        if not match or not (match.group(1) or match.group(2)):
            raise ConfigurationError(f"unknown search strategy {spec!r}")
        factor = int(match.group(1)) if match.group(1) else 1
        return cls.sampled(factor * n if match.group(2) else factor)

    @property
    def label(self):
        if self.mode is SearchMode.SAMPLED:
            return f"sample:{self.m}"
        return self.mode.value

    def sample_values(self, d_eff):
        """
        Durations a sampled search visits.

        Takes the order statistics v_(m), v_(2m), ... of all n^2 entries of
        d_eff (zeros and repeats included) and keeps the distinct positive
        ones. When every sample lands on a zero the largest entry is used.
        """
        ordered = np.sort(np.asarray(d_eff, dtype=float), axis=None)
        picked = np.unique(ordered[self.m - 1 :: self.m])
        picked = picked[picked > 0]
        if picked.size == 0 and ordered.size and ordered[-1] > 0:
            picked = ordered[-1:]
        return picked


@dataclass(frozen=True)
class Configuration:
    matching: Matching
    alpha: float
    ratio: float


def utility(matching, alpha, d_eff):
    """Traffic served by holding matching for alpha: sum of min(alpha, D_eff(i, j))."""
    if alpha <= 0 or not len(matching):
        return 0.0
    d_eff = np.asarray(d_eff, dtype=float)
    return float(np.minimum(alpha, d_eff[matching.inputs, matching.outputs]).sum())


def _evaluate(d_eff, alpha, delta):
    matching = max_weight_matching(np.minimum(d_eff, alpha))
    return utility(matching, alpha, d_eff) / (delta + alpha), matching


def best_configuration(d_eff, params, strategy=None):
    """
    Find the configuration with the largest cost-adjusted utility.

    Candidate durations are the distinct positive entries of d_eff, or for
    a sampled search the values SearchStrategy.sample_values picks. For
    each examined candidate the matching is the maximum-weight matching of
    min(alpha, d_eff); ties go to the smaller alpha.

    Args:
        d_eff: n×n nonnegative effective demand
        params: SystemParams (only delta is used)
        strategy: SearchStrategy, bitonic binary search by default

    Returns:
        A Configuration (matching, alpha, ratio)
    """
    strategy = strategy or SearchStrategy()
    d_eff = np.asarray(d_eff, dtype=float)
    if strategy.mode is SearchMode.SAMPLED:
        values = strategy.sample_values(d_eff)
    else:
        values = np.unique(d_eff[d_eff > 0])
    if values.size == 0:
        raise NoConfigurationError("effective demand is all zero")

    cache = {}

    def score(index):
        if index not in cache:
            cache[index] = _evaluate(d_eff, float(values[index]), params.delta)
        return cache[index][0]

    if strategy.mode is SearchMode.BINARY:
        # Discrete peak search over the sorted candidates
        lo, hi = 0, values.size - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if score(mid) < score(mid + 1):
                lo = mid + 1
            else:
                hi = mid
        best = lo
    else:
        best = None
        for index in range(values.size):
            if best is None or score(index) > score(best):
                best = int(index)

    score(best)
    ratio, matching = cache[best]
    return Configuration(matching, float(values[best]), ratio)


@dataclass
class EclipseResult:
    """Outcome of an Eclipse-family run."""

    schedule: Schedule
    remaining: DemandMatrix
    transmission_time: float
    algorithm: str = "eclipse"

    @property
    def configurations(self):
        return len(self.schedule)


def default_max_steps(n):
    return 10 * n * n + 100


def eclipse_schedule(demand, params, strategy=None, max_steps=None):
    """
    Run Eclipse on a demand matrix.

    Returns an EclipseResult holding the schedule, the residual demand left
    to the packet switch and the transmission time.
    """
    strategy = strategy or SearchStrategy()
    max_steps = max_steps or default_max_steps(demand.n)
    remaining = demand.copy_entries()
    schedule = Schedule()

    while line_sums_max(remaining) > params.r_p * schedule.t_c:
        if len(schedule) >= max_steps:
            raise ConsistencyError(f"eclipse exceeded {max_steps} configurations")
        config = best_configuration(remaining, params, strategy)
        rows, cols = config.matching.inputs, config.matching.outputs
        served = np.minimum(config.alpha, remaining[rows, cols])
        remaining[rows, cols] -= served
        schedule.append(config.matching, config.alpha, params.delta)
        logger.debug(
            "[ECLIPSE] step %d alpha=%.5f served=%.5f ratio=%.4f",
            len(schedule), config.alpha, served.sum(), config.ratio,
        )

    total = transmission_time(schedule.t_c, remaining, params.r_p)
    logger.info("[ECLIPSE] %d configurations, t_c=%.4f, T=%.4f", len(schedule), schedule.t_c, total)
    return EclipseResult(schedule, DemandMatrix(remaining), total)

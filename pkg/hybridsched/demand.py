"""
Synthetic traffic demand matrices for hybrid switch experiments.

A demand matrix D holds, for every (input, output) pair, the amount of
traffic queued in VOQ(i, j), measured in units of circuit-switch time.
The generator mixes a few large flows and more medium flows per port as
sums of random permutation matrices, optionally perturbed by two noise
terms: multiplicative noise on the flows and small "mice" flows on a
fraction of the empty entries.
"""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .utils import (
    DEFAULT_C_LARGE,
    DEFAULT_C_SMALL,
    DEFAULT_N1_REL_SIGMA,
    DEFAULT_N2_FRACTION,
    DEFAULT_N2_SIGMA,
    DEFAULT_N_LARGE,
    DEFAULT_N_SMALL,
    DEMAND_SCALE,
    ConfigurationError,
    ParseError,
    as_square_matrix,
    line_sums_max,
    make_rng,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DemandMatrix:
    """An n×n nonnegative traffic demand matrix."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", as_square_matrix(self.entries, "demand"))

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n, n)))

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def peak(self):
        """B: the largest single entry."""
        return float(self.entries.max()) if self.entries.size else 0.0

    @property
    def total(self):
        return float(self.entries.sum())

    def copy_entries(self):
        return self.entries.copy()

    def to_dict(self):
        return {"n": self.n, "entries": self.entries.tolist()}

    @classmethod
    def from_dict(cls, data):
        try:
            n = int(data["n"])
            entries = np.array(data["entries"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad demand document: {e}") from e
        if entries.shape != (n, n):
            raise ParseError(f"demand document declares n={n} but has shape {entries.shape}")
        return cls(entries)

    def to_csv(self):
        lines = [f"n={self.n}"]
        for row in self.entries:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text):
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines or not lines[0].startswith("n="):
            raise ParseError("demand CSV must start with a 'n=<n>' header")
        try:
            n = int(lines[0][2:])
            rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
        except ValueError as e:
            raise ParseError(f"bad demand CSV: {e}") from e
        if len(rows) != n or any(len(row) != n for row in rows):
            raise ParseError(f"demand CSV header says n={n} but body is not {n}x{n}")
        return cls(np.array(rows, dtype=float).reshape(n, n))


@dataclass(frozen=True)
class TrafficGenConfig:
    """Parameters of the synthetic demand generator."""

    n: int
    n_large: int = DEFAULT_N_LARGE
    n_small: int = DEFAULT_N_SMALL
    c_large: float = DEFAULT_C_LARGE
    c_small: float = DEFAULT_C_SMALL
    enable_n1: bool = True
    enable_n2: bool = True
    n2_fraction: float = DEFAULT_N2_FRACTION
    n2_sigma: float = DEFAULT_N2_SIGMA
    n1_rel_sigma: float = DEFAULT_N1_REL_SIGMA
    seed: int = 0

    def validate(self):
        """Raise ConfigurationError unless the config is usable."""
        if self.n < 2:
            raise ConfigurationError("n must be at least 2 (permutations have no fixed points)")
        if self.n_large < 0 or self.n_small < 0:
            raise ConfigurationError("flow counts must be nonnegative")
        if self.n_large + self.n_small == 0:
            raise ConfigurationError("at least one large or medium flow per row is required")
        if self.n_large + self.n_small > self.n - 1:
            raise ConfigurationError(
                f"n_large + n_small = {self.n_large + self.n_small} exceeds n - 1 = {self.n - 1}"
            )
        for name in ("c_large", "c_small", "n2_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        if abs(self.c_large + self.c_small - 1.0) > 1e-9:
            raise ConfigurationError("c_large + c_small must equal 1")
        if self.n_large == 0 and self.c_large > 0 or self.n_small == 0 and self.c_small > 0:
            raise ConfigurationError("a load fraction is assigned to an empty flow class")
        if self.n2_sigma < 0 or self.n1_rel_sigma < 0:
            raise ConfigurationError("noise deviations must be nonnegative")
        return self

    def to_dict(self):
        return asdict(self)


def random_derangement(rng, n):
    """Uniformly random permutation of range(n) with no fixed points."""
    identity = np.arange(n)
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == identity):
            return perm


def generate_demand(cfg):
    """
    Generate a demand matrix.

    D = (sum of c_L/n_L-weighted large permutations + c_S/n_S-weighted
    medium permutations + N1) * 0.9 + N2, all randomness drawn from
    cfg.seed.

    Args:
        cfg: A TrafficGenConfig

    Returns:
        A DemandMatrix
    """
    cfg.validate()
    rng = make_rng(cfg.seed)
    n = cfg.n
    rows = np.arange(n)

    base = np.zeros((n, n))
    for count, load in ((cfg.n_large, cfg.c_large), (cfg.n_small, cfg.c_small)):
        for _ in range(count):
            # Overlapping permutations simply add up
            base[rows, random_derangement(rng, n)] += load / count

    support = base > 0
    entries = base.copy()
    if cfg.enable_n1:
        noise = rng.normal(0.0, 1.0, size=(n, n)) * cfg.n1_rel_sigma * base
        entries = np.where(support, np.maximum(base + noise, 0.0), 0.0)

    entries *= DEMAND_SCALE

    if cfg.enable_n2:
        # Mice flows land on off-diagonal entries outside the flow support
        empty = ~support
        np.fill_diagonal(empty, False)
        candidates = np.flatnonzero(empty)
        picked = rng.choice(
            candidates, size=int(round(cfg.n2_fraction * candidates.size)), replace=False
        )
        entries.flat[picked] += np.abs(rng.normal(0.0, cfg.n2_sigma, size=picked.size))

    logger.debug("[DEMAND] generated n=%d seed=%d total=%.4f", n, cfg.seed, entries.sum())
    return DemandMatrix(entries)


def max_load(demand):
    """
    W: the maximum over all row sums and column sums.

    Accepts a DemandMatrix or a plain square array.
    """
    entries = demand.entries if isinstance(demand, DemandMatrix) else np.asarray(demand, dtype=float)
    return line_sums_max(entries)


def read_demand(path):
    """Read a demand matrix from a .json or CSV file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read demand file {path}: {e}") from e
    if path.suffix.lower() == ".json":
        try:
            return DemandMatrix.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ParseError(f"bad demand JSON in {path}: {e}") from e
    return DemandMatrix.from_csv(text)


def write_demand(demand, path):
    """Write a demand matrix; the format follows the file suffix."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(demand.to_dict()))
    else:
        path.write_text(demand.to_csv())
    return path

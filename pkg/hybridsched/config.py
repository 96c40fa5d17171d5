"""
Experiment configuration.

A sweep is described by one JSON document:

    {
      "algorithms": ["eclipse", "twohop", "bff"],
      "n": 100, "runs": 100, "seed": 0, "output": "results/default",
      "grid": {
        "delta": [0.01, 0.04], "rp_ratio": [10, 20],
        "flows": [[4, 12]], "c_S": [0.3], "search": ["binary"]
      },
      "noise": true, "timing": true, "workers": 4, "cache_dir": null,
      "bff": {"initial": "mwm", "charge_initial_delay": true}
    }

Values given on the command line override the file, and the file
overrides the defaults below.
"""

import itertools
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .bff import INITIAL_LPT, INITIAL_MWM
from .demand import TrafficGenConfig
from .eclipse import SearchStrategy, SystemParams
from .runner import ALGORITHMS
from .utils import DEFAULT_N_LARGE, DEFAULT_N_SMALL, DEFAULT_C_SMALL, ConfigurationError, ParseError, default_output_dir


@dataclass(frozen=True)
class Cell:
    """One point of the parameter grid."""

    delta: float
    rp_ratio: float
    n_large: int
    n_small: int
    c_small: float
    search: str

    def to_dict(self):
        return {
            "delta": self.delta,
            "rp_ratio": self.rp_ratio,
            "n_L": self.n_large,
            "n_S": self.n_small,
            "c_S": self.c_small,
            "search": self.search,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    algorithms: tuple = ALGORITHMS
    n: int = 32
    runs: int = 10
    base_seed: int = 0
    output: str = field(default_factory=lambda: str(Path(default_output_dir()) / "sweep"))
    deltas: tuple = (0.01,)
    rp_ratios: tuple = (10.0,)
    flows: tuple = ((DEFAULT_N_LARGE, DEFAULT_N_SMALL),)
    c_smalls: tuple = (DEFAULT_C_SMALL,)
    searches: tuple = ("binary",)
    noise: bool = True
    timing: bool = True
    workers: int = 1
    cache_dir: str = None
    bff_initial: str = INITIAL_MWM
    charge_initial_delay: bool = True

    def validate(self):
        if not self.algorithms:
            raise ConfigurationError("at least one algorithm is required")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ConfigurationError(f"unknown algorithms: {', '.join(sorted(unknown))}")
        if self.runs < 1:
            raise ConfigurationError("runs must be at least 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if self.bff_initial not in (INITIAL_MWM, INITIAL_LPT):
            raise ConfigurationError(f"unknown BFF initialization {self.bff_initial!r}")
        grid = (self.deltas, self.rp_ratios, self.flows, self.c_smalls, self.searches)
        if any(len(axis) == 0 for axis in grid):
            raise ConfigurationError("every grid axis needs at least one value")
        for cell in self.cells():
            self.params_for(cell)
            self.traffic_for(cell, self.base_seed).validate()
            self.strategy_for(cell)
        return self

    def cells(self):
        """Grid cells in a fixed order."""
        return [
            Cell(float(delta), float(ratio), int(n_l), int(n_s), float(c_s), str(search))
            for delta, ratio, (n_l, n_s), c_s, search in itertools.product(
                self.deltas, self.rp_ratios, self.flows, self.c_smalls, self.searches
            )
        ]

    def seeds(self):
        """Seeds are base_seed + run index, shared by every cell and algorithm."""
        return [self.base_seed + run for run in range(self.runs)]

    def params_for(self, cell):
        try:
            return SystemParams.from_ratio(self.n, cell.delta, cell.rp_ratio)
        except ValueError as e:
            raise ConfigurationError(str(e)) from e

    def strategy_for(self, cell):
        return SearchStrategy.parse(cell.search, self.n)

    def traffic_for(self, cell, seed):
        return TrafficGenConfig(
            n=self.n,
            n_large=cell.n_large,
            n_small=cell.n_small,
            c_large=1.0 - cell.c_small,
            c_small=cell.c_small,
            enable_n1=self.noise,
            enable_n2=self.noise,
            seed=seed,
        )

    def to_dict(self):
        return {
            "algorithms": list(self.algorithms),
            "n": self.n,
            "runs": self.runs,
            "seed": self.base_seed,
            "output": self.output,
            "grid": {
                "delta": list(self.deltas),
                "rp_ratio": list(self.rp_ratios),
                "flows": [list(f) for f in self.flows],
                "c_S": list(self.c_smalls),
                "search": list(self.searches),
            },
            "noise": self.noise,
            "timing": self.timing,
            "workers": self.workers,
            "cache_dir": self.cache_dir,
            "bff": {"initial": self.bff_initial, "charge_initial_delay": self.charge_initial_delay},
        }


# document key -> ExperimentConfig field
_TOP_LEVEL = {
    "algorithms": "algorithms",
    "n": "n",
    "runs": "runs",
    "seed": "base_seed",
    "output": "output",
    "noise": "noise",
    "timing": "timing",
    "workers": "workers",
    "cache_dir": "cache_dir",
}
_GRID = {
    "delta": "deltas",
    "rp_ratio": "rp_ratios",
    "flows": "flows",
    "c_S": "c_smalls",
    "search": "searches",
}
_BFF = {"initial": "bff_initial", "charge_initial_delay": "charge_initial_delay"}


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def config_from_dict(data, base=None):
    """Overlay a config document on base (the defaults when omitted)."""
    base = base or ExperimentConfig()
    if not isinstance(data, dict):
        raise ParseError("experiment config must be a JSON object")
    known = set(_TOP_LEVEL) | {"grid", "bff"}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")

    updates = {}
    for key, name in _TOP_LEVEL.items():
        if key in data:
            updates[name] = _freeze(data[key])
    for section, mapping in (("grid", _GRID), ("bff", _BFF)):
        values = data.get(section) or {}
        for key in set(values) - set(mapping):
            raise ConfigurationError(f"unknown {section} key {key!r}")
        for key, name in mapping.items():
            if key in values:
                value = values[key]
                if section == "grid" and not isinstance(value, list):
                    value = [value]
                updates[name] = _freeze(value)
    return replace(base, **updates)


def load_config(path=None, overrides=None):
    """
    Build an ExperimentConfig with precedence overrides > file > defaults.

    Args:
        path: Optional JSON config file
        overrides: Mapping of ExperimentConfig field name -> value; None values are ignored

    Returns:
        A validated ExperimentConfig
    """
    config = ExperimentConfig()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as e:
            raise ParseError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ParseError(f"bad config JSON in {path}: {e}") from e
        config = config_from_dict(data, config)

    names = {f.name for f in fields(ExperimentConfig)}
    updates = {}
    for name, value in (overrides or {}).items():
        if name not in names:
            raise ConfigurationError(f"unknown override {name!r}")
        if value is not None:
            updates[name] = _freeze(value)
    return replace(config, **updates).validate()

"""
Common utilities, constants and error types used throughout the package.
"""

import logging
import os

import numpy as np
from rich.logging import RichHandler

# Numeric tolerances
EPS = 1e-9
LEDGER_MIN_AMOUNT = 1e-12

# Traffic generator defaults
DEFAULT_N_LARGE = 4
DEFAULT_N_SMALL = 12
DEFAULT_C_LARGE = 0.7
DEFAULT_C_SMALL = 0.3
DEFAULT_N1_REL_SIGMA = 0.2
DEFAULT_N2_FRACTION = 0.5
DEFAULT_N2_SIGMA = 0.003
DEMAND_SCALE = 0.9

# Brute force matching enumerates n! permutations
BRUTE_FORCE_MAX_N = 9

# Output location
OUTPUT_DIR_ENV = "HYBRIDSCHED_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"


class HybridSchedError(Exception):
    """Base class for every error raised by hybridsched."""


class ConfigurationError(HybridSchedError, ValueError):
    """An invalid generator or experiment configuration."""


class ArgumentError(HybridSchedError, ValueError):
    """An invalid argument handed to a library operation."""


class NoConfigurationError(HybridSchedError):
    """No circuit configuration exists (the effective demand is all zero)."""


class ConsistencyError(HybridSchedError, AssertionError):
    """An internal invariant was broken."""


class ParseError(HybridSchedError, ValueError):
    """A file could not be parsed."""


def default_output_dir():
    """Return the output directory from the environment, or the default."""
    return os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)


def configure_logging(verbose=False):
    """
    Install a rich log handler on the root logger.

    Only the command line calls this; library modules just log.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )


def make_rng(seed):
    """Create the package's seedable generator (PCG64)."""
    return np.random.default_rng(seed)


def as_square_matrix(values, name="matrix"):
    """
    Convert values to a float n×n array and check it is nonnegative.

    Args:
        values: Anything numpy can turn into a 2-D array
        name: Used in error messages

    Returns:
        A new float64 array
    """
    matrix = np.array(values, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ArgumentError(f"{name} must be square, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ArgumentError(f"{name} has non-finite entries")
    if np.any(matrix < 0):
        raise ArgumentError(f"{name} has negative entries")
    return matrix


def line_sums_max(matrix):
    """Largest row or column sum of a square array (0 for an empty one)."""
    if matrix.size == 0:
        return 0.0
    return float(max(matrix.sum(axis=1).max(), matrix.sum(axis=0).max()))


def clamp_small_negatives(matrix, where):
    """
    Snap entries in [-EPS, 0) to zero in place.

    Raises ConsistencyError for anything more negative.
    """
    low = matrix.min() if matrix.size else 0.0
    if low < -EPS:
        raise ConsistencyError(f"negative entry {low:.3e} in {where}")
    np.maximum(matrix, 0.0, out=matrix)
    return matrix

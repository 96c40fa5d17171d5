import numpy as np
import pytest

from hybridsched.demand import DemandMatrix, TrafficGenConfig, generate_demand
from hybridsched.eclipse import SystemParams


@pytest.fixture
def diag10():
    return DemandMatrix([[10.0, 0.0], [0.0, 10.0]])


@pytest.fixture
def diag10_params():
    return SystemParams(2, 1.0, 0.1)


def small_flows(n):
    """Default flow counts, with fewer medium flows when n is too small for 4 + 12."""
    return {"n_large": 4, "n_small": min(12, n - 5)}


def random_instance(rng, n, seed):
    """A noisy default workload with randomly drawn delta and r_c/r_p."""
    demand = generate_demand(TrafficGenConfig(n=n, seed=seed, **small_flows(n)))
    delta = float(rng.uniform(0.005, 0.05))
    ratio = float(rng.uniform(8.0, 40.0))
    return demand, SystemParams.from_ratio(n, delta, ratio)


@pytest.fixture
def instances():
    """Factory of (demand, params) pairs for n in sizes, count per size."""

    def make(sizes, count, base_seed=0):
        rng = np.random.default_rng(base_seed)
        return [
            random_instance(rng, n, base_seed + 1000 * n + k)
            for n in sizes
            for k in range(count)
        ]

    return make

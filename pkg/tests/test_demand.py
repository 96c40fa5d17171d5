import itertools

import numpy as np
import pytest

from hybridsched.demand import (
    DemandMatrix,
    TrafficGenConfig,
    generate_demand,
    max_load,
    random_derangement,
    read_demand,
    write_demand,
)
from hybridsched.utils import ArgumentError, ConfigurationError, ParseError, make_rng


def quiet(**kwargs):
    return TrafficGenConfig(enable_n1=False, enable_n2=False, **kwargs)


def test_single_permutation():
    demand = generate_demand(quiet(n=4, n_large=1, n_small=0, c_large=1.0, c_small=0.0, seed=3))
    entries = demand.entries
    assert np.count_nonzero(entries) == 4
    assert np.all(np.diag(entries) == 0)
    assert np.allclose(entries[entries > 0], 0.9)
    assert np.allclose(entries.sum(axis=1), 0.9)
    assert np.allclose(entries.sum(axis=0), 0.9)


def test_noise_free_sums_are_exact():
    demand = generate_demand(quiet(n=100, seed=7))
    assert np.allclose(demand.entries.sum(axis=1), 0.9, rtol=0, atol=1e-12)
    assert np.allclose(demand.entries.sum(axis=0), 0.9, rtol=0, atol=1e-12)


def test_noise_free_entries_are_flow_combinations():
    demand = generate_demand(quiet(n=100, seed=11))
    combos = np.array(
        [a * 0.1575 + b * 0.0225 for a, b in itertools.product(range(5), range(13)) if a + b]
    )
    values = demand.entries[demand.entries > 0]
    distance = np.abs(values[:, None] - combos[None, :]).min(axis=1)
    assert distance.max() < 1e-12


def test_same_seed_same_matrix():
    a = generate_demand(TrafficGenConfig(n=32, seed=5))
    b = generate_demand(TrafficGenConfig(n=32, seed=5))
    c = generate_demand(TrafficGenConfig(n=32, seed=6))
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, c.entries)


def test_noisy_demand_is_nonnegative_with_empty_diagonal():
    demand = generate_demand(TrafficGenConfig(n=50, seed=2))
    assert np.all(demand.entries >= 0)
    assert np.all(np.diag(demand.entries) == 0)


def test_noisy_row_sums_normalized():
    means = [generate_demand(TrafficGenConfig(n=100, seed=s)).entries.sum(axis=1).mean() for s in range(100)]
    assert 0.95 <= np.mean(means) <= 1.05


def test_mice_land_outside_flow_support():
    base = generate_demand(TrafficGenConfig(n=20, enable_n2=False, seed=4)).entries
    noisy = generate_demand(TrafficGenConfig(n=20, seed=4)).entries
    # N1 is drawn before N2, so the flow entries agree
    support = base > 0
    assert np.array_equal(noisy[support], base[support])
    empty = ~support
    np.fill_diagonal(empty, False)
    assert np.count_nonzero(noisy[empty]) == round(0.5 * empty.sum())


def test_derangement_has_no_fixed_points():
    rng = make_rng(0)
    for _ in range(50):
        perm = random_derangement(rng, 5)
        assert sorted(perm.tolist()) == list(range(5))
        assert not np.any(perm == np.arange(5))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n": 1},
        {"n": 8, "n_large": 4, "n_small": 4},
        {"n": 8, "n_large": 0, "n_small": 0},
        {"n": 32, "c_large": 0.6, "c_small": 0.3},
        {"n": 32, "c_large": 1.5, "c_small": -0.5},
        {"n": 32, "n2_fraction": 1.2},
        {"n": 32, "n_small": 0},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ConfigurationError):
        generate_demand(TrafficGenConfig(**kwargs))


def test_max_load_examples():
    assert max_load(DemandMatrix.zeros(3)) == 0
    assert max_load(DemandMatrix([[0, 3], [2, 0]])) == 3
    perm = np.eye(4)[[1, 2, 3, 0]] * 0.9
    assert max_load(DemandMatrix(perm)) == pytest.approx(0.9)


def test_demand_matrix_rejects_bad_input():
    with pytest.raises(ArgumentError):
        DemandMatrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(ArgumentError):
        DemandMatrix([[0, -1], [1, 0]])
    with pytest.raises(ArgumentError):
        DemandMatrix([[0, float("nan")], [1, 0]])


def test_peak_and_total():
    demand = DemandMatrix([[0, 3], [2, 0]])
    assert demand.peak == 3
    assert demand.total == 5


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_demand_file_round_trip(tmp_path, suffix):
    demand = generate_demand(TrafficGenConfig(n=12, n_large=2, n_small=3, seed=9))
    path = write_demand(demand, tmp_path / f"d{suffix}")
    assert np.array_equal(read_demand(path).entries, demand.entries)


def test_csv_header_mismatch():
    with pytest.raises(ParseError):
        DemandMatrix.from_csv("n=3\n0,1\n1,0\n")
    with pytest.raises(ParseError):
        DemandMatrix.from_csv("0,1\n1,0\n")


def test_missing_demand_file(tmp_path):
    with pytest.raises(ParseError):
        read_demand(tmp_path / "missing.csv")

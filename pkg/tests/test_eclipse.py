import numpy as np
import pytest

from hybridsched.demand import DemandMatrix, TrafficGenConfig, generate_demand, max_load
from hybridsched.eclipse import (
    Schedule,
    SearchMode,
    SearchStrategy,
    SystemParams,
    best_configuration,
    eclipse_schedule,
    utility,
)
from hybridsched.evaluate import validate
from hybridsched.matching import Matching, brute_force_mwm
from hybridsched.utils import ArgumentError, ConfigurationError, ConsistencyError, NoConfigurationError


def test_utility_examples():
    identity = Matching.from_pairs(2, [(0, 0), (1, 1)])
    assert utility(identity, 5, [[3, 9], [0, 7]]) == 8
    assert utility(identity, 0, [[3, 9], [0, 7]]) == 0
    assert utility(identity, 5, np.zeros((2, 2))) == 0


def test_best_configuration_full_scan():
    config = best_configuration(np.array([[10.0, 0], [0, 10.0]]), SystemParams(2, 1.0, 0.1), SearchStrategy.full_scan())
    assert config.matching.pairs == ((0, 0), (1, 1))
    assert config.alpha == 10
    assert config.ratio == pytest.approx(20 / 11)


def test_best_configuration_single_candidate():
    config = best_configuration(np.array([[4.0]]), SystemParams(1, 2.0, 0.1))
    assert config.alpha == 4
    assert config.ratio == pytest.approx(4 / 6)


def test_best_configuration_all_zero():
    with pytest.raises(NoConfigurationError):
        best_configuration(np.zeros((3, 3)), SystemParams(3, 1.0, 0.1))


def test_full_scan_dominates_other_strategies():
    rng = np.random.default_rng(0)
    params = SystemParams(10, 0.02, 0.1)
    for _ in range(20):
        d_eff = rng.random((10, 10)) * (rng.random((10, 10)) < 0.4)
        full = best_configuration(d_eff, params, SearchStrategy.full_scan())
        for strategy in (SearchStrategy.bitonic_binary(), SearchStrategy.sampled(3)):
            assert full.ratio >= best_configuration(d_eff, params, strategy).ratio - 1e-12


def test_sampling_every_candidate_matches_full_scan():
    rng = np.random.default_rng(1)
    d_eff = rng.random((8, 8))
    params = SystemParams(8, 0.05, 0.1)
    full = best_configuration(d_eff, params, SearchStrategy.full_scan())
    sampled = best_configuration(d_eff, params, SearchStrategy.sampled(1))
    assert (sampled.alpha, sampled.ratio) == (full.alpha, full.ratio)


def test_configuration_is_optimal_for_its_alpha():
    rng = np.random.default_rng(2)
    params = SystemParams(6, 0.1, 0.1)
    for _ in range(20):
        d_eff = rng.random((6, 6))
        config = best_configuration(d_eff, params, SearchStrategy.full_scan())
        capped = np.minimum(d_eff, config.alpha)
        best = brute_force_mwm(capped).weight(capped)
        assert utility(config.matching, config.alpha, d_eff) == pytest.approx(best, rel=1e-9)


@pytest.mark.parametrize(
    "spec, mode, m",
    [
        ("full", SearchMode.FULL, 1),
        ("binary", SearchMode.BINARY, 1),
        ("sample:7", SearchMode.SAMPLED, 7),
        ("sample:4n", SearchMode.SAMPLED, 128),
        ("sample:n", SearchMode.SAMPLED, 32),
    ],
)
def test_parse_search_strategy(spec, mode, m):
    strategy = SearchStrategy.parse(spec, 32)
    assert strategy.mode is mode
    assert strategy.m == m


@pytest.mark.parametrize("spec", ["", "sample:", "sample:0", "linear", "sample:xn"])
def test_parse_rejects_unknown(spec):
    with pytest.raises(ConfigurationError):
        SearchStrategy.parse(spec, 32)


def test_sample_values_use_all_entries():
    d_eff = np.arange(9.0).reshape(3, 3)
    assert SearchStrategy.sampled(3).sample_values(d_eff).tolist() == [2, 5, 8]
    assert SearchStrategy.sampled(1).sample_values(d_eff).tolist() == list(range(1, 9))
    assert SearchStrategy.sampled(20).sample_values(d_eff).tolist() == [8]


def test_sample_values_count_zeros_and_repeats():
    d_eff = np.array([[0.0, 0.0, 4.0], [4.0, 0.0, 4.0], [0.0, 2.0, 7.0]])
    # sorted: 0 0 0 0 2 4 4 4 7
    assert SearchStrategy.sampled(2).sample_values(d_eff).tolist() == [4]
    assert SearchStrategy.sampled(4).sample_values(d_eff).tolist() == [4]
    assert SearchStrategy.sampled(3).sample_values(d_eff).tolist() == [4, 7]
    assert SearchStrategy.sampled(5).sample_values(d_eff).tolist() == [2]
    assert SearchStrategy.sampled(2).sample_values(np.zeros((2, 2))).size == 0
    assert SearchStrategy.sampled(9).sample_values(np.diag([0.0, 3.0])).tolist() == [3]


def test_system_params_validation():
    assert SystemParams.from_ratio(4, 0.01, 10).r_p == pytest.approx(0.1)
    with pytest.raises(ArgumentError):
        SystemParams(4, -1.0, 0.1)
    with pytest.raises(ArgumentError):
        SystemParams(4, 0.01, 0.0)
    with pytest.raises(ArgumentError):
        SystemParams.from_ratio(4, 0.01, 0)


def test_zero_demand(diag10_params):
    result = eclipse_schedule(DemandMatrix.zeros(2), diag10_params)
    assert len(result.schedule) == 0
    assert result.transmission_time == 0


def test_diagonal_demand(diag10, diag10_params):
    result = eclipse_schedule(diag10, diag10_params)
    assert len(result.schedule) == 1
    step = result.schedule.steps[0]
    assert step.matching.pairs == ((0, 0), (1, 1))
    assert step.duration == 10
    assert result.schedule.t_c == 11
    assert result.remaining.total == 0
    assert result.transmission_time == 11


def test_loop_enters_with_tiny_demand():
    result = eclipse_schedule(DemandMatrix([[0.1]]), SystemParams(1, 1.0, 0.1))
    assert len(result.schedule) == 1
    assert result.schedule.steps[0].duration == pytest.approx(0.1)
    assert result.schedule.t_c == pytest.approx(1.1)
    assert result.transmission_time == pytest.approx(1.1)


def test_loop_exit_invariant(instances):
    for demand, params in instances((16, 32), 50):
        result = eclipse_schedule(demand, params)
        assert max_load(result.remaining) <= params.r_p * result.schedule.t_c
        assert np.all(result.remaining.entries >= 0)
        report = validate(demand, result, params)
        assert report.ok, report.messages()


def test_steps_are_greedy_optimal_and_conserve_demand():
    demand = generate_demand(TrafficGenConfig(n=6, n_large=2, n_small=2, c_large=0.7, c_small=0.3, seed=3))
    params = SystemParams(6, 0.01, 0.1)
    result = eclipse_schedule(demand, params, SearchStrategy.full_scan())

    remaining = demand.copy_entries()
    served = 0.0
    for step in result.schedule.steps:
        before = remaining.copy()
        capped = np.minimum(remaining, step.duration)
        assert utility(step.matching, step.duration, remaining) == pytest.approx(
            brute_force_mwm(capped).weight(capped), rel=1e-9
        )
        rows, cols = step.matching.inputs, step.matching.outputs
        amount = np.minimum(step.duration, remaining[rows, cols])
        remaining[rows, cols] -= amount
        served += amount.sum()
        assert np.all(remaining <= before)
    assert np.allclose(remaining, result.remaining.entries)
    assert demand.total == pytest.approx(served + result.remaining.total, abs=1e-9)


def test_strategies_all_satisfy_exit_invariant(instances):
    for demand, params in instances((16,), 5, base_seed=7):
        for strategy in (SearchStrategy.full_scan(), SearchStrategy.sampled(16)):
            result = eclipse_schedule(demand, params, strategy)
            assert max_load(result.remaining) <= params.r_p * result.schedule.t_c


def test_step_guard():
    demand = DemandMatrix([[5.0, 5.0], [5.0, 5.0]])
    with pytest.raises(ConsistencyError):
        eclipse_schedule(demand, SystemParams(2, 0.1, 0.001), max_steps=1)


def test_schedule_document_round_trip(diag10, diag10_params):
    schedule = eclipse_schedule(diag10, diag10_params).schedule
    restored = Schedule.from_dict(schedule.to_dict(), 2)
    assert restored.t_c == schedule.t_c
    assert [(s.matching.pairs, s.duration) for s in restored.steps] == [
        (s.matching.pairs, s.duration) for s in schedule.steps
    ]

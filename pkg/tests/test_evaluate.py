import json

import numpy as np
import pytest

from hybridsched.bff import BffResult, Connection, EventSchedule
from hybridsched.demand import DemandMatrix
from hybridsched.eclipse import EclipseResult, Schedule, SystemParams, eclipse_schedule
from hybridsched.evaluate import RunResult, runs_from_csv, runs_to_csv, summarize, transmission_time, validate
from hybridsched.matching import Matching
from hybridsched.runner import ALGORITHMS, run_algorithm
from hybridsched.twohop import Booking, BookingLedger, TwoHopResult
from hybridsched.utils import ArgumentError


def test_transmission_time_examples():
    assert transmission_time(7.5, np.zeros((3, 3)), 0.1) == 7.5
    remaining = np.zeros((2, 2))
    remaining[0, 1] = 4.0
    assert transmission_time(38.0, remaining, 0.1) == pytest.approx(40.0)
    remaining[0, 1] = 5.0
    assert transmission_time(10.0, remaining, 0.5) == 10.0


def test_transmission_time_is_monotone():
    rng = np.random.default_rng(0)
    remaining = rng.random((5, 5))
    base = transmission_time(1.0, remaining, 0.2)
    assert transmission_time(2.0, remaining, 0.2) >= base
    assert transmission_time(1.0, remaining * 2, 0.2) >= base
    assert transmission_time(1.0, remaining, 0.4) <= base


def test_transmission_time_needs_packet_rate():
    with pytest.raises(ArgumentError):
        transmission_time(1.0, np.zeros((2, 2)), 0.0)


def test_summarize_examples():
    stats = summarize([1, 2, 3])
    assert (stats.mean, stats.median) == (2, 2)
    single = summarize([5])
    assert (single.mean, single.median, single.p25, single.p75, single.notch) == (5, 5, 5, 5, 0)
    quartiles = summarize([1, 2, 3, 4])
    assert (quartiles.p25, quartiles.p75) == (1.75, 3.25)
    assert quartiles.notch == pytest.approx(1.57 * 1.5 / 2)


def test_summarize_ignores_order():
    assert summarize([4, 1, 3, 2]) == summarize([1, 2, 3, 4])


def test_summarize_empty():
    with pytest.raises(ArgumentError):
        summarize([])


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_produced_schedules_validate(instances, algorithm):
    for demand, params in instances((16,), 5, base_seed=21):
        result, _ = run_algorithm(algorithm, demand, params)
        report = validate(demand, result, params)
        assert report.ok, report.messages()
        assert report.to_dict()["ok"] is True


def test_illegal_matching_is_reported():
    demand = DemandMatrix([[1.0, 0.0], [1.0, 0.0]])
    params = SystemParams(2, 1.0, 0.1)
    schedule = Schedule()
    schedule.append(Matching.from_pairs(2, [(0, 0), (1, 0)]), 1.0, params.delta)
    result = EclipseResult(schedule, DemandMatrix.zeros(2), 2.0)
    messages = validate(demand, result, params).messages()
    assert "illegal matching at step 0" in messages


def test_tampered_remaining_breaks_conservation(diag10, diag10_params):
    result = eclipse_schedule(diag10, diag10_params)
    result.remaining = DemandMatrix([[0.5, 0.0], [0.0, 0.0]])
    report = validate(diag10, result, diag10_params)
    assert any(v.check == "conservation" for v in report.violations)


def relay_case(indirect_amount):
    # step 0 leaves residue 3 on 0->1, step 1 carries 0->1->2 through it
    demand = DemandMatrix([[0.0, 1.0, 3.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    params = SystemParams(3, 0.0, 0.1)
    schedule = Schedule()
    schedule.append(Matching.from_pairs(3, [(0, 1)]), 4.0, params.delta)
    schedule.append(Matching.from_pairs(3, [(1, 2)]), 3.0, params.delta)
    ledger = BookingLedger([Booking(0, 0, 1, 1.0), Booking(1, 0, 2, indirect_amount, relay=1)])
    result = TwoHopResult(schedule, DemandMatrix.zeros(3), 7.0, ledger=ledger)
    return demand, result, params


def test_ledger_replay_accepts_valid_relay():
    demand, result, params = relay_case(3.0)
    report = validate(demand, result, params)
    assert report.ok, report.messages()


def test_ledger_replay_detects_overdraft():
    demand, result, params = relay_case(4.0)
    messages = validate(demand, result, params).messages()
    assert any(m.startswith("residue overdraft at (0,1)") for m in messages)


def test_residue_from_same_step_cannot_be_spent():
    demand = DemandMatrix([[0.0, 1.0, 3.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    params = SystemParams(3, 0.0, 0.1)
    schedule = Schedule()
    schedule.append(Matching.from_pairs(3, [(0, 1), (1, 2)]), 4.0, params.delta)
    ledger = BookingLedger([Booking(0, 0, 1, 1.0), Booking(0, 0, 2, 3.0, relay=1)])
    result = TwoHopResult(schedule, DemandMatrix.zeros(3), 4.0, ledger=ledger)
    messages = validate(demand, result, params).messages()
    assert any(m.startswith("residue overdraft at (0,1)") for m in messages)


def test_timeline_gap_violation():
    demand = DemandMatrix([[5.0, 3.0], [0.0, 0.0]])
    params = SystemParams(2, 1.0, 0.1)
    schedule = EventSchedule([Connection(0, 0, 1.0, 6.0, 5.0), Connection(0, 1, 6.5, 9.5, 3.0)], 9.5)
    result = BffResult(schedule, DemandMatrix.zeros(2), 9.5)
    messages = validate(demand, result, params).messages()
    assert any(m.startswith("reconfiguration gap violated at input 0") for m in messages)


def test_timeline_output_overlap():
    demand = DemandMatrix([[5.0, 0.0], [5.0, 0.0]])
    params = SystemParams(2, 1.0, 0.1)
    schedule = EventSchedule([Connection(0, 0, 1.0, 6.0, 5.0), Connection(1, 0, 3.0, 8.0, 5.0)], 8.0)
    result = BffResult(schedule, DemandMatrix.zeros(2), 8.0)
    messages = validate(demand, result, params).messages()
    assert any(m.startswith("output overlap at 0") for m in messages)


def test_report_json():
    demand, result, params = relay_case(4.0)
    document = json.loads(validate(demand, result, params).to_json())
    assert document["algorithm"] == "twohop"
    assert document["ok"] is False
    assert {"check", "location", "message"} <= set(document["violations"][0])


def test_run_rows_round_trip():
    runs = [
        RunResult("eclipse", 0, 0.01, 10.0, 1.2345678901234, 42, 0.5, 32, 4, 12, 0.3, "binary", 0),
        RunResult("bff", 1, 0.04, 20.0, 0.98, 310, None, 32, 4, 12, 0.3, "binary", 0),
    ]
    text = runs_to_csv(runs)
    assert text.splitlines()[0].startswith("algorithm,seed,delta,rp_ratio,T,K,wall_time_ms")
    restored = runs_from_csv(text)
    assert restored[1] == runs[1]
    assert restored[0].transmission_time == runs[0].transmission_time
    assert restored[0].wall_time == pytest.approx(0.5)

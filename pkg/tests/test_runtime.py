import json
import math
from importlib import resources

import numpy as np
import pytest

from uavrel.components import ProcessorParams, PropulsionParams, processor_failure_probability
from uavrel.errors import ReliabilityError
from uavrel.faulttree import parse_fault_tree
from uavrel.runtime import (
    RESULT_COLUMNS,
    MissionConfig,
    MissionMonitor,
    Recommendation,
    TelemetrySample,
    decide,
    evaluate_sample,
    load_config,
    read_telemetry,
    replay,
    write_results_csv,
    write_results_jsonl,
)

DATA = resources.files("uavrel").joinpath("data")


def sample(t, level=100.0, temp=29.0, motors="OOOO", config="PNPN", active=True):
    return TelemetrySample(t, level, temp, motors, config, active)


def test_decide_is_strict():
    assert decide(0.9, 0.9) is Recommendation.CONTINUE
    assert decide(0.9000001, 0.9) is Recommendation.EMERGENCY_LANDING
    assert decide(0.0, MissionConfig()) is Recommendation.CONTINUE
    with pytest.raises(ReliabilityError, match="INVALID_PROBABILITY"):
        decide(1.5, 0.9)


def test_first_sample_at_reference_conditions():
    res = MissionMonitor().evaluate(sample(0.0))
    assert set(res.components) == {"battery", "propulsion", "processor"}
    H = MissionConfig().evaluation_horizon_h
    assert res.components["processor"].probability == pytest.approx(1 - math.exp(-H / 1000.0))
    assert res.components["processor"].mttf == pytest.approx(1000.0)
    assert res.components["propulsion"].probability == pytest.approx(1 - math.exp(-4e-3 * H))
    assert res.components["propulsion"].mttf == pytest.approx(250.0)
    expected = 1 - math.prod(1 - c.probability for c in res.components.values())
    assert res.system_probability == pytest.approx(expected, abs=1e-15)
    assert 0 < res.system_mttf < 250.0


def test_processor_hazard_accumulates_at_last_temperature():
    mon = MissionMonitor()
    mon.evaluate(sample(0.0, temp=39.0))
    mon.evaluate(sample(3600.0, temp=29.0))
    expected = processor_failure_probability([(1.0, 39.0)], ProcessorParams())
    assert 1 - math.exp(-mon.processor_hazard) == pytest.approx(expected, rel=1e-12)


def test_out_of_order_sample():
    mon = MissionMonitor()
    mon.evaluate(sample(5.0))
    with pytest.raises(ReliabilityError, match="OUT_OF_ORDER_SAMPLE"):
        evaluate_sample(mon, sample(5.0))


def test_motor_loss_latches_propulsion():
    mon = MissionMonitor()
    assert mon.evaluate(sample(0.0)).components["propulsion"].probability < 1
    assert mon.evaluate(sample(1.0, motors="OFOO")).components["propulsion"].probability == 1.0
    after = mon.evaluate(sample(2.0, motors="OOOO"))
    assert after.components["propulsion"].probability == 1.0
    assert after.recommendation is Recommendation.EMERGENCY_LANDING


def test_empty_battery_latches():
    mon = MissionMonitor()
    mon.evaluate(sample(0.0, level=0.0))
    assert mon.evaluate(sample(1.0, level=90.0)).components["battery"].probability == 1.0


def test_tolerable_motor_loss_raises_probability_without_abort():
    cfg = MissionConfig(propulsion=PropulsionParams("PNPNPN", 0.001))
    mon = MissionMonitor(cfg)
    ok = mon.evaluate(sample(0.0, motors="OOOOOO", config="PNPNPN"))
    one = mon.evaluate(sample(1.0, motors="OOOFOO", config="PNPNPN"))
    assert one.components["propulsion"].probability > ok.components["propulsion"].probability
    assert one.components["propulsion"].probability < 1.0


def test_inactive_battery_uses_inactivity_rate():
    a = MissionMonitor().evaluate(sample(0.0, active=True)).components["battery"].probability
    b = MissionMonitor().evaluate(sample(0.0, active=False)).components["battery"].probability
    assert b < a


def test_basic_events_and_custom_tree():
    tree = parse_fault_tree(
        "top t\ngate t AND children=cpu,spare\ncbe cpu model=processor\nevent spare rate=0.01\n"
    )
    res = MissionMonitor(tree=tree).evaluate(sample(0.0))
    H = MissionConfig().evaluation_horizon_h
    spare = 1 - math.exp(-0.01 * H)
    assert res.leaves["spare"].probability == pytest.approx(spare)
    assert res.system_probability == pytest.approx(spare * res.components["processor"].probability)
    assert set(res.components) == {"processor"}


def test_replay_latches_recommendation():
    stream = [sample(0.0), sample(1.0, motors="FOOO"), sample(2.0)]
    out = replay(stream)
    assert str(out.verdict) == "ABORTED_AT 1s"
    assert [r.recommendation for r in out.results] == [
        Recommendation.CONTINUE,
        Recommendation.EMERGENCY_LANDING,
        Recommendation.EMERGENCY_LANDING,
    ]


def test_replay_empty_stream():
    with pytest.raises(ReliabilityError, match="EMPTY_STREAM"):
        replay([])


def test_replay_is_deterministic():
    stream = read_telemetry(DATA.joinpath("scenarios").joinpath("faulty.csv"))[::25]
    a = [r.to_row() for r in replay(stream).results]
    b = [r.to_row() for r in replay(stream).results]
    assert a == b


def test_shipped_config_matches_defaults():
    with resources.as_file(DATA.joinpath("default_config.json")) as path:
        cfg = load_config(path)
    base = MissionConfig()
    assert cfg.threshold == base.threshold
    assert cfg.evaluation_horizon_h == base.evaluation_horizon_h
    assert cfg.battery == base.battery and cfg.processor == base.processor
    assert cfg.load_tree().root == "uav_failure"


def test_config_rejects_bad_values(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"threshold": 1.5}))
    with pytest.raises(ReliabilityError, match="BAD_CONFIG"):
        load_config(p)
    p.write_text(json.dumps({"thresh": 0.5}))
    with pytest.raises(ReliabilityError, match="BAD_CONFIG"):
        load_config(p)
    p.write_text("{not json")
    with pytest.raises(ReliabilityError, match="BAD_CONFIG"):
        load_config(p)


def test_config_round_trip():
    cfg = MissionConfig(threshold=0.8, evaluation_horizon_h=200.0)
    assert MissionConfig.from_dict(cfg.to_dict()) == cfg


def test_results_writers(tmp_path):
    stream = [sample(float(t), level=100 - t) for t in range(5)]
    results = replay(stream).results
    csv_path = tmp_path / "out.csv"
    write_results_csv(results, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].split(",") == list(RESULT_COLUMNS)
    assert len(lines) == 1 + len(stream)
    jl = tmp_path / "out.jsonl"
    write_results_jsonl(results, jl)
    rows = [json.loads(line) for line in jl.read_text().splitlines()]
    assert len(rows) == len(stream)
    assert rows[0]["recommendation"] == "CONTINUE"
    assert set(rows[0]["leaves"]) == {"battery_failure", "propulsion_failure", "processor_failure"}


def test_bad_telemetry_rows(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("time_s,battery_pct,temp_c,motor_status,config,activity\n0,abc,30,OOOO,PNPN,active\n")
    with pytest.raises(ReliabilityError, match="BAD_TELEMETRY"):
        read_telemetry(p)
    p.write_text("t,level\n0,1\n")
    with pytest.raises(ReliabilityError, match="BAD_TELEMETRY"):
        read_telemetry(p)


def test_sample_validation():
    with pytest.raises(ReliabilityError, match="OUT_OF_RANGE"):
        sample(0.0, level=120.0)
    with pytest.raises(ReliabilityError, match="LENGTH_MISMATCH"):
        sample(0.0, motors="OOO")


def test_system_probability_in_unit_interval_on_golden_streams():
    for name in ("fault_free.csv", "faulty.csv"):
        stream = read_telemetry(DATA.joinpath("scenarios").joinpath(name))[::50]
        probs = np.array([r.system_probability for r in replay(stream).results])
        assert np.all((probs >= 0) & (probs <= 1))

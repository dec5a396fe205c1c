import math

import numpy as np
import pytest

from uavrel.components import (
    BATTERY_FAILED,
    BatteryParams,
    ProcessorParams,
    PropulsionParams,
    SymptomReading,
    arrhenius_acceleration,
    battery_state_from_level,
    build_battery_model,
    build_propulsion_model,
    failure_probability_from,
    format_motor_status,
    markov_mttf,
    parse_motor_status,
    processor_failure_probability,
    processor_hazard,
    processor_mttf,
    propulsion_state_from_symptom,
    propulsion_structure_from_dict,
)
from uavrel.errors import ReliabilityError

# 50-digit mpmath evaluations, frozen.
AF_39 = 1.4464754872680824749809560546606
MTTF_39 = 691.33560077721873
P_500_29_500_39 = 0.70572416689171395

LAM = 0.001


# --- propulsion ----------------------------------------------------------------


def test_quadcopter_mttf():
    m = build_propulsion_model(PropulsionParams("PNPN", LAM))
    assert markov_mttf(m, "AllOk") == pytest.approx(1 / (4 * LAM), rel=1e-12)


def test_hexacopter_mttf():
    m = build_propulsion_model(PropulsionParams("PNPNPN", LAM))
    assert markov_mttf(m, "AllOk") == pytest.approx(1 / (6 * LAM) + 1 / (5 * LAM), rel=1e-12)
    assert markov_mttf(m, "OneOut") == pytest.approx(1 / (5 * LAM), rel=1e-12)


def test_ppnnpn_between_the_others():
    quad, mixed, hexa = (
        markov_mttf(build_propulsion_model(PropulsionParams(c, LAM)), 0) for c in ("PNPN", "PPNNPN", "PNPNPN")
    )
    assert quad < mixed < hexa
    assert mixed == pytest.approx(1 / (6 * LAM) + 0.5 / (5 * LAM), rel=1e-12)


@pytest.mark.parametrize(
    "config, status, state",
    [
        ("PNPN", "OOOO", "AllOk"),
        ("PNPN", "OOFO", "Failure"),
        ("PNPNPN", "OOOOOO", "AllOk"),
        ("PNPNPN", "OOFOOO", "OneOut"),
        ("PNPNPN", "FOFOOO", "Failure"),
        ("PPNNPN", "FOOOOO", "TolerableOneOut"),
        ("PPNNPN", "OFOOOO", "Failure"),
    ],
)
def test_symptom_mapping(config, status, state):
    m = build_propulsion_model(PropulsionParams(config, LAM))
    idx = propulsion_state_from_symptom(SymptomReading(status, configuration=config))
    assert m.states[idx] == state


def test_motor_status_length_mismatch():
    with pytest.raises(ReliabilityError, match="LENGTH_MISMATCH"):
        propulsion_state_from_symptom(SymptomReading("OOO", configuration="PNPN"))


def test_unknown_configuration():
    with pytest.raises(ReliabilityError, match="UNKNOWN_CONFIGURATION"):
        build_propulsion_model(PropulsionParams("PNPNPNPN", LAM))
    with pytest.raises(ReliabilityError, match="UNKNOWN_CONFIGURATION"):
        PropulsionParams("PXPN", LAM)


def test_custom_propulsion_catalog():
    octo = propulsion_structure_from_dict(
        {
            "states": ["AllOk", "OneOut", "Failure"],
            "transitions": [["AllOk", "OneOut", 8], ["OneOut", "Failure", 7]],
            "failure_state": "Failure",
            "symptoms": {"": "AllOk", **{str(i): "OneOut" for i in range(8)}},
        }
    )
    catalog = {"PNPNPNPN": octo}
    m = build_propulsion_model(PropulsionParams("PNPNPNPN", LAM), catalog)
    assert markov_mttf(m, "AllOk") == pytest.approx(1 / (8 * LAM) + 1 / (7 * LAM))
    reading = SymptomReading("OOOFOOOO", configuration="PNPNPNPN")
    assert propulsion_state_from_symptom(reading, catalog) == 1


def test_motor_status_round_trip():
    assert parse_motor_status("OOFO") == (True, True, False, True)
    assert format_motor_status((True, False)) == "OF"
    with pytest.raises(ReliabilityError, match="BAD_MOTOR_STATUS"):
        parse_motor_status("OOXO")


# --- battery -------------------------------------------------------------------


@pytest.mark.parametrize(
    "level, band",
    [(100, 0), (75, 0), (74.999, 1), (50, 1), (49.9, 2), (25, 2), (24.9, 3), (0.1, 3), (0, BATTERY_FAILED)],
)
def test_battery_bands(level, band):
    assert battery_state_from_level(level) == band


@pytest.mark.parametrize("level", [-1, 100.5])
def test_battery_level_out_of_range(level):
    with pytest.raises(ReliabilityError, match="OUT_OF_RANGE"):
        battery_state_from_level(level)


def test_battery_generator_rates():
    p = BatteryParams()
    G = build_battery_model(p).generator
    step = p.degradation_rate + p.usage_rate
    assert G[0, 1] == pytest.approx(step)
    assert G[0, 4] == pytest.approx(p.failure_rate)
    assert G[3, 4] == pytest.approx(step + p.failure_rate)
    G_idle = build_battery_model(p, active=False).generator
    assert G_idle[0, 1] == pytest.approx(p.degradation_rate + p.inactivity_rate)


def test_battery_mttf_from_each_band(battery_model):
    # Closed form for the series chain: sum over remaining bands of the
    # probability of reaching the band times its mean holding time.
    p = BatteryParams()
    s = p.degradation_rate + p.usage_rate
    out = p.failure_rate + s
    expected = [sum((s / out) ** j / out for j in range(4 - k)) for k in range(4)]
    for k, e in enumerate(expected):
        assert markov_mttf(battery_model, k) == pytest.approx(e, rel=1e-10)
    assert markov_mttf(battery_model, BATTERY_FAILED) == 0.0


def test_battery_probability_steps_up_with_band(battery_model):
    probs = [failure_probability_from(battery_model, k, 150.0) for k in range(5)]
    assert all(a < b for a, b in zip(probs, probs[1:]))
    assert probs[-1] == 1.0


def test_zero_rates_are_dropped():
    m = build_battery_model(BatteryParams(0.0001, 0.0, 0.0, 0.0))
    assert markov_mttf(m, "B100") == pytest.approx(1 / 0.0001)


# --- processor -----------------------------------------------------------------


def test_arrhenius_reference_point():
    p = ProcessorParams()
    assert arrhenius_acceleration(29.0, p) == 1.0
    assert processor_mttf(p, 29.0) == 1000.0


def test_arrhenius_at_39c():
    p = ProcessorParams()
    assert arrhenius_acceleration(39.0, p) == pytest.approx(AF_39, rel=1e-12)
    assert processor_mttf(p, 39.0) == pytest.approx(MTTF_39, rel=1e-12)


def test_piecewise_history():
    p = ProcessorParams()
    assert processor_failure_probability([(500.0, 29.0), (500.0, 39.0)], p) == pytest.approx(
        P_500_29_500_39, rel=1e-12
    )


def test_constant_history_is_exponential():
    p = ProcessorParams()
    assert processor_failure_probability([(1000.0, 29.0)], p) == pytest.approx(1 - math.exp(-1), rel=1e-14)
    assert processor_failure_probability([], p) == 0.0


def test_nonphysical_temperature():
    with pytest.raises(ReliabilityError, match="NONPHYSICAL_TEMPERATURE"):
        arrhenius_acceleration(-300.0, ProcessorParams())


def test_negative_duration():
    with pytest.raises(ReliabilityError, match="NEGATIVE_DURATION"):
        processor_hazard([(-1.0, 30.0)], ProcessorParams())


def test_hotter_means_shorter_life():
    p = ProcessorParams()
    temps = np.linspace(-20, 120, 50)
    mttfs = [processor_mttf(p, t) for t in temps]
    assert all(a > b for a, b in zip(mttfs, mttfs[1:]))

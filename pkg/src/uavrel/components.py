"""Component reliability models: propulsion, battery and processor.

Each model maps an observed symptom (motor status, battery level,
processor temperature) onto either a state of a Markov chain or a hazard
rate, so failure probability and MTTF can be recomputed mid-mission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ReliabilityError
from .markov import (
    MarkovModel,
    build_markov_model,
    mttf_from_state,
    transient_distribution,
)

BOLTZMANN_EV = 8.617e-5
KELVIN_OFFSET = 273.15


# ---------------------------------------------------------------------------
# Parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropulsionParams:
    configuration: str = "PNPN"
    motor_failure_rate: float = 0.001

    def __post_init__(self):
        if not self.motor_failure_rate > 0:
            raise ReliabilityError("NEGATIVE_RATE", "motor failure rate must be > 0")
        # Custom catalogs may add frames; the catalog check happens at build time.
        if not self.configuration or set(self.configuration) - set("PN"):
            raise ReliabilityError(
                "UNKNOWN_CONFIGURATION", f"{self.configuration!r} is not a P/N rotor pattern"
            )


@dataclass(frozen=True)
class BatteryParams:
    failure_rate: float = 0.0001
    degradation_rate: float = 0.0064
    usage_rate: float = 0.008
    inactivity_rate: float = 0.007

    def __post_init__(self):
        if not self.failure_rate > 0:
            raise ReliabilityError("NEGATIVE_RATE", "battery failure rate must be > 0")
        for name in ("degradation_rate", "usage_rate", "inactivity_rate"):
            if getattr(self, name) < 0:
                raise ReliabilityError("NEGATIVE_RATE", f"battery {name} must be >= 0")


@dataclass(frozen=True)
class ProcessorParams:
    mttf_ref: float = 1000.0
    activation_energy: float = 0.3
    boltzmann: float = BOLTZMANN_EV
    ref_temperature: float = 29.0
    # Carried for completeness; no equation uses it.
    utilization: float = 1.0

    def __post_init__(self):
        if not self.mttf_ref > 0:
            raise ReliabilityError("BAD_PARAMETER", "reference MTTF must be > 0")
        if not (self.activation_energy > 0 and self.boltzmann > 0):
            raise ReliabilityError("BAD_PARAMETER", "activation energy and Boltzmann constant must be > 0")
        if not self.ref_temperature > -KELVIN_OFFSET:
            raise ReliabilityError("NONPHYSICAL_TEMPERATURE", "reference temperature below absolute zero")
        if not 0 <= self.utilization <= 1:
            raise ReliabilityError("BAD_PARAMETER", "utilization must be in [0, 1]")


@dataclass(frozen=True)
class SymptomReading:
    motor_status: tuple[bool, ...] = ()  # True = motor OK
    battery_level: float = 100.0
    processor_temp: float = 29.0
    configuration: str = "PNPN"

    def __post_init__(self):
        status = self.motor_status
        if isinstance(status, str):
            status = parse_motor_status(status)
        object.__setattr__(self, "motor_status", tuple(bool(s) for s in status))
        if not 0 <= self.battery_level <= 100:
            raise ReliabilityError("OUT_OF_RANGE", f"battery level {self.battery_level} outside [0, 100]")


def parse_motor_status(text: str) -> tuple[bool, ...]:
    """``"OOFO"`` -> ``(True, True, False, True)``."""
    out = []
    for ch in text.strip().upper():
        if ch not in "OF":
            raise ReliabilityError("BAD_MOTOR_STATUS", f"motor status must use O/F, got {text!r}")
        out.append(ch == "O")
    return tuple(out)


def format_motor_status(status: Sequence[bool]) -> str:
    return "".join("O" if ok else "F" for ok in status)


# ---------------------------------------------------------------------------
# Propulsion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropulsionStructure:
    """State structure of one propulsion configuration.

    ``transitions`` are ``(src, dst, multiplier)``: the rate is
    multiplier * motor failure rate.  ``symptoms`` maps a sorted tuple of
    failed motor indices to a state; unlisted patterns are beyond
    tolerance and map to ``failure_state``.
    """

    states: tuple[str, ...]
    transitions: tuple[tuple[str, str, float], ...]
    failure_state: str
    symptoms: Mapping[tuple[int, ...], str] = field(default_factory=dict)


def _singletons(n, state):
    return {(i,): state for i in range(n)}


PROPULSION_CATALOG: dict[str, PropulsionStructure] = {
    # Quadcopter: losing any motor is unrecoverable.
    "PNPN": PropulsionStructure(
        states=("AllOk", "Failure"),
        transitions=(("AllOk", "Failure", 4.0),),
        failure_state="Failure",
        symptoms={(): "AllOk"},
    ),
    # Hexacopter: any single loss is tolerable, a second one is not.
    "PNPNPN": PropulsionStructure(
        states=("AllOk", "OneOut", "Failure"),
        transitions=(("AllOk", "OneOut", 6.0), ("OneOut", "Failure", 5.0)),
        failure_state="Failure",
        symptoms={(): "AllOk", **_singletons(6, "OneOut")},
    ),
    # Hexacopter with adjacent same-direction pairs: half of the single
    # losses stay controllable. Which three is a default, not data.
    "PPNNPN": PropulsionStructure(
        states=("AllOk", "TolerableOneOut", "Failure"),
        transitions=(
            ("AllOk", "TolerableOneOut", 3.0),
            ("AllOk", "Failure", 3.0),
            ("TolerableOneOut", "Failure", 5.0),
        ),
        failure_state="Failure",
        symptoms={(): "AllOk", (0,): "TolerableOneOut", (2,): "TolerableOneOut", (4,): "TolerableOneOut"},
    ),
}


def propulsion_structure_from_dict(data: Mapping) -> PropulsionStructure:
    """Build a structure from config JSON.

    ``symptoms`` keys are comma-separated failed-motor indices (``""`` for
    all motors OK).
    """
    try:
        symptoms = {}
        for key, state in data.get("symptoms", {}).items():
            idx = tuple(sorted(int(k) for k in str(key).split(",") if k.strip()))
            symptoms[idx] = state
        return PropulsionStructure(
            states=tuple(data["states"]),
            transitions=tuple((a, b, float(m)) for a, b, m in data["transitions"]),
            failure_state=data["failure_state"],
            symptoms=symptoms,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReliabilityError("BAD_CONFIG", f"invalid propulsion structure: {exc}") from None


def build_propulsion_model(params: PropulsionParams, catalog=None) -> MarkovModel:
    """Absorbing CTMC for the configured propulsion system."""
    catalog = PROPULSION_CATALOG if catalog is None else catalog
    try:
        structure = catalog[params.configuration]
    except KeyError:
        raise ReliabilityError(
            "UNKNOWN_CONFIGURATION", f"no propulsion structure for {params.configuration!r}"
        ) from None
    lam = params.motor_failure_rate
    return build_markov_model(
        structure.states,
        [(a, b, mult * lam) for a, b, mult in structure.transitions],
        [structure.failure_state],
    )


def propulsion_state_from_symptom(reading: SymptomReading, catalog=None) -> int:
    catalog = PROPULSION_CATALOG if catalog is None else catalog
    config = reading.configuration
    if config not in catalog:
        raise ReliabilityError("UNKNOWN_CONFIGURATION", f"no propulsion structure for {config!r}")
    if len(reading.motor_status) != len(config):
        raise ReliabilityError(
            "LENGTH_MISMATCH",
            f"{len(reading.motor_status)} motor readings for a {len(config)}-motor {config} frame",
        )
    structure = catalog[config]
    failed = tuple(i for i, ok in enumerate(reading.motor_status) if not ok)
    state = structure.symptoms.get(failed, structure.failure_state)
    return structure.states.index(state)


# ---------------------------------------------------------------------------
# Battery
# ---------------------------------------------------------------------------

BATTERY_STATES = ("B100", "B75", "B50", "B25", "BFailed")
BATTERY_FAILED = len(BATTERY_STATES) - 1


def build_battery_model(params: BatteryParams, active: bool = True) -> MarkovModel:
    """Five-state degradation chain B100 -> B75 -> B50 -> B25 -> BFailed.

    Adjacent levels are linked at D + alpha while flying (D + beta when the
    sample is flagged inactive), and every operational level can fail
    outright at lambda_b.  From B25 both routes lead to BFailed.
    """
    step = params.degradation_rate + (params.usage_rate if active else params.inactivity_rate)
    rates = {}
    for i in range(BATTERY_FAILED):
        if i < BATTERY_FAILED - 1 and step > 0:
            rates[(BATTERY_STATES[i], BATTERY_STATES[i + 1])] = step
        to_fail = params.failure_rate + (step if i == BATTERY_FAILED - 1 else 0.0)
        rates[(BATTERY_STATES[i], "BFailed")] = to_fail
    return build_markov_model(BATTERY_STATES, rates, ["BFailed"])


def battery_state_from_level(battery_level: float) -> int:
    """Band index for a battery percentage; lower band bounds are inclusive."""
    if not 0 <= battery_level <= 100:
        raise ReliabilityError("OUT_OF_RANGE", f"battery level {battery_level} outside [0, 100]")
    if battery_level >= 75:
        return 0
    if battery_level >= 50:
        return 1
    if battery_level >= 25:
        return 2
    if battery_level > 0:
        return 3
    return BATTERY_FAILED


# ---------------------------------------------------------------------------
# Processor (Arrhenius)
# ---------------------------------------------------------------------------


def _kelvin(celsius):
    if not celsius > -KELVIN_OFFSET:
        raise ReliabilityError("NONPHYSICAL_TEMPERATURE", f"{celsius} °C is below absolute zero")
    return celsius + KELVIN_OFFSET


def arrhenius_acceleration(Ta: float, params: ProcessorParams) -> float:
    """MTTF acceleration factor at ``Ta`` °C relative to the reference temperature."""
    ta = _kelvin(Ta)
    tr = _kelvin(params.ref_temperature)
    return math.exp(params.activation_energy / params.boltzmann * (1.0 / tr - 1.0 / ta))


def processor_mttf(params: ProcessorParams, Ta: float) -> float:
    return params.mttf_ref / arrhenius_acceleration(Ta, params)


def processor_hazard(temperature_history, params: ProcessorParams) -> float:
    """Cumulative hazard of ``(duration_h, Ta)`` segments."""
    H = 0.0
    for duration, Ta in temperature_history:
        if duration < 0:
            raise ReliabilityError("NEGATIVE_DURATION", f"segment duration {duration} < 0")
        if duration:
            H += duration / processor_mttf(params, Ta)
    return H


def processor_failure_probability(temperature_history, params: ProcessorParams) -> float:
    """1 - exp(-H) for a piecewise-constant temperature history."""
    return -math.expm1(-processor_hazard(temperature_history, params))


# ---------------------------------------------------------------------------
# Convenience queries
# ---------------------------------------------------------------------------


def failure_probability_from(model: MarkovModel, state, horizon: float) -> float:
    """Probability of absorption within ``horizon`` hours starting in ``state``."""
    i = model.index(state)
    if i in model.absorbing:
        return 1.0
    return model.failure_probability(transient_distribution(model, model.point_mass(i), horizon))


def markov_mttf(model: MarkovModel, state) -> float:
    i = model.index(state)
    return 0.0 if i in model.absorbing else mttf_from_state(model, i)

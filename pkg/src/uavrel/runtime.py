"""Runtime monitor: telemetry in, failure probabilities and advice out.

Each telemetry sample is mapped onto the fault tree's complex basic events
(battery level -> battery band, motor status -> propulsion state,
processor temperature -> Arrhenius hazard).  Every leaf is then quantified
as the probability of failing within the evaluation horizon from the
current symptom-derived state, the tree combines them, and the system
probability is compared with the threshold.

Telemetry time is in seconds; the models work in hours.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .components import (
    BATTERY_FAILED,
    BatteryParams,
    ProcessorParams,
    PropulsionParams,
    SymptomReading,
    battery_state_from_level,
    build_battery_model,
    build_propulsion_model,
    failure_probability_from,
    format_motor_status,
    markov_mttf,
    parse_motor_status,
    processor_mttf,
    propulsion_state_from_symptom,
    propulsion_structure_from_dict,
    PROPULSION_CATALOG,
)
from .errors import ReliabilityError
from .faulttree import (
    BasicEvent,
    ComplexBasicEvent,
    ComponentProbability,
    FaultTree,
    default_tree,
    evaluate_top,
    exponential_reliability,
    load_fault_tree,
    markov_reliability,
    system_mttf,
)

log = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0
COMPONENTS = ("battery", "propulsion", "processor")

TELEMETRY_COLUMNS = ("time_s", "battery_pct", "temp_c", "motor_status", "config", "activity")
RESULT_COLUMNS = (
    "t_s",
    "battery_prob",
    "battery_mttf_h",
    "propulsion_prob",
    "propulsion_mttf_h",
    "processor_prob",
    "processor_mttf_h",
    "system_prob",
    "system_mttf_h",
    "recommendation",
)


class Recommendation(str, enum.Enum):
    CONTINUE = "CONTINUE"
    EMERGENCY_LANDING = "EMERGENCY_LANDING"
    # Reserved for frame reconfiguration advice; decide() never issues it.
    RECONFIGURE = "RECONFIGURE"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MissionConfig:
    threshold: float = 0.9
    sample_period_s: float = 1.0
    evaluation_horizon_h: float = 150.0
    tree_path: str | None = None
    propulsion: PropulsionParams = field(default_factory=PropulsionParams)
    battery: BatteryParams = field(default_factory=BatteryParams)
    processor: ProcessorParams = field(default_factory=ProcessorParams)
    propulsion_catalog: Mapping | None = None
    mttf_step_h: float = 1.0
    mttf_initial_horizon_h: float = 1000.0

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ReliabilityError("BAD_CONFIG", f"threshold must be in (0, 1), got {self.threshold}")
        if not self.sample_period_s > 0:
            raise ReliabilityError("BAD_CONFIG", "sample period must be > 0")
        if not self.evaluation_horizon_h > 0:
            raise ReliabilityError("BAD_CONFIG", "evaluation horizon must be > 0")
        if not (self.mttf_step_h > 0 and self.mttf_initial_horizon_h > 0):
            raise ReliabilityError("BAD_CONFIG", "MTTF grid parameters must be > 0")

    def catalog(self):
        if not self.propulsion_catalog:
            return PROPULSION_CATALOG
        merged = dict(PROPULSION_CATALOG)
        for name, data in self.propulsion_catalog.items():
            merged[name] = propulsion_structure_from_dict(data)
        return merged

    def load_tree(self) -> FaultTree:
        return default_tree() if self.tree_path is None else load_fault_tree(self.tree_path)

    @classmethod
    def from_dict(cls, data: Mapping, base_dir=None) -> "MissionConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ReliabilityError("BAD_CONFIG", f"unknown config keys: {sorted(unknown)}")
        try:
            for key, record in (
                ("propulsion", PropulsionParams),
                ("battery", BatteryParams),
                ("processor", ProcessorParams),
            ):
                if key in data:
                    data[key] = record(**data[key])
        except TypeError as exc:
            raise ReliabilityError("BAD_CONFIG", str(exc)) from None
        tree = data.get("tree_path")
        if tree is not None and base_dir is not None and not os.path.isabs(tree):
            data["tree_path"] = str(Path(base_dir) / tree)
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> MissionConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ReliabilityError("BAD_CONFIG", f"{path}: {exc}") from None
    return MissionConfig.from_dict(data, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Samples and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TelemetrySample:
    t: float
    battery_level: float
    processor_temp: float
    motor_status: tuple[bool, ...]
    configuration: str = "PNPN"
    active: bool = True

    def __post_init__(self):
        status = self.motor_status
        if isinstance(status, str):
            status = parse_motor_status(status)
        object.__setattr__(self, "motor_status", tuple(bool(s) for s in status))
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ReliabilityError("BAD_SAMPLE", f"sample time must be >= 0, got {self.t}")
        if not 0 <= self.battery_level <= 100:
            raise ReliabilityError("OUT_OF_RANGE", f"battery level {self.battery_level} outside [0, 100]")
        if not self.processor_temp > -273.15:
            raise ReliabilityError("NONPHYSICAL_TEMPERATURE", f"{self.processor_temp} °C")
        if len(self.motor_status) != len(self.configuration):
            raise ReliabilityError(
                "LENGTH_MISMATCH",
                f"{len(self.motor_status)} motor flags for configuration {self.configuration}",
            )

    def symptoms(self) -> SymptomReading:
        return SymptomReading(self.motor_status, self.battery_level, self.processor_temp, self.configuration)


@dataclass(frozen=True)
class ComponentStatus:
    probability: float
    mttf: float


@dataclass(frozen=True)
class EvaluationResult:
    t: float
    components: Mapping[str, ComponentStatus]
    system_probability: float
    system_mttf: float
    recommendation: Recommendation
    leaves: Mapping[str, ComponentProbability] = field(default_factory=dict)

    def to_row(self) -> dict:
        row = {"t_s": self.t}
        for name in COMPONENTS:
            status = self.components.get(name)
            row[f"{name}_prob"] = status.probability if status else ""
            row[f"{name}_mttf_h"] = status.mttf if status else ""
        row["system_prob"] = self.system_probability
        row["system_mttf_h"] = self.system_mttf
        row["recommendation"] = self.recommendation.value
        return row


@dataclass(frozen=True)
class Verdict:
    status: str  # "COMPLETED" | "ABORTED"
    t: float | None = None

    @property
    def aborted(self):
        return self.status == "ABORTED"

    def __str__(self):
        if not self.aborted:
            return "COMPLETED"
        t = int(self.t) if float(self.t).is_integer() else self.t
        return f"ABORTED_AT {t}s"


@dataclass(frozen=True)
class ReplayResult:
    results: tuple[EvaluationResult, ...]
    verdict: Verdict


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


def decide(probability: float, config) -> Recommendation:
    """EMERGENCY_LANDING iff ``probability`` is strictly above the threshold."""
    threshold = config.threshold if isinstance(config, MissionConfig) else float(config)
    if not 0 <= probability <= 1:
        raise ReliabilityError("INVALID_PROBABILITY", f"{probability} not in [0, 1]")
    return Recommendation.EMERGENCY_LANDING if probability > threshold else Recommendation.CONTINUE


class _CurveCache:
    """Memoizes reliability curves on the grids system_mttf asks for."""

    def __init__(self):
        self._store = {}

    def wrap(self, key, fn):
        def cached(t):
            t = np.asarray(t)
            grid = (len(t), float(t[1] - t[0]) if len(t) > 1 else 0.0)
            k = (key, grid)
            if k not in self._store:
                self._store[k] = np.asarray(fn(t), dtype=float)
            return self._store[k]

        return cached


class MissionMonitor:
    """Stateful evaluator for one UAV mission.

    Feed samples in time order through :meth:`evaluate`.  Absorbing
    symptoms (a motor loss the frame cannot tolerate, an empty battery)
    latch: that component stays failed for the rest of the mission.
    """

    def __init__(self, config: MissionConfig | None = None, tree: FaultTree | None = None):
        self.config = config or MissionConfig()
        self.tree = tree if tree is not None else self.config.load_tree()
        self._catalog = self.config.catalog()
        self._battery_models = {}
        self._propulsion_models = {}
        self._static = {}
        self._curves = _CurveCache()
        self._last = None
        self._hazard = 0.0
        self._battery_failed = False
        self._propulsion_failed = False

    @property
    def processor_hazard(self):
        """Cumulative processor hazard over the observed history."""
        return self._hazard

    def _battery_model(self, active):
        if active not in self._battery_models:
            self._battery_models[active] = build_battery_model(self.config.battery, active)
        return self._battery_models[active]

    def _propulsion_model(self, configuration):
        if configuration not in self._propulsion_models:
            params = PropulsionParams(configuration, self.config.propulsion.motor_failure_rate)
            self._propulsion_models[configuration] = build_propulsion_model(params, self._catalog)
        return self._propulsion_models[configuration]

    def _markov_component(self, key, model, state):
        """(probability within horizon, MTTF, reliability fn) from ``state``, memoized."""
        if key not in self._static:
            H = self.config.evaluation_horizon_h
            if state in model.absorbing:
                fn = lambda t: np.zeros(len(np.asarray(t)))  # noqa: E731
            else:
                fn = markov_reliability(model, state)
            self._static[key] = (
                failure_probability_from(model, state, H),
                markov_mttf(model, state),
                self._curves.wrap(key, fn),
            )
        return self._static[key]

    def _quantify_leaf(self, leaf, sample):
        H = self.config.evaluation_horizon_h
        if isinstance(leaf, BasicEvent):
            if leaf.rate == 0:
                return 0.0, math.inf, lambda t: np.ones(len(np.asarray(t)))
            key = ("event", leaf.id)
            return (
                -math.expm1(-leaf.rate * H),
                1.0 / leaf.rate,
                self._curves.wrap(key, exponential_reliability(leaf.rate)),
            )
        if leaf.model == "battery":
            band = BATTERY_FAILED if self._battery_failed else battery_state_from_level(sample.battery_level)
            if band == BATTERY_FAILED:
                self._battery_failed = True
            return self._markov_component(("battery", sample.active, band), self._battery_model(sample.active), band)
        if leaf.model == "propulsion":
            model = self._propulsion_model(sample.configuration)
            if self._propulsion_failed:
                state = max(model.absorbing)
            else:
                state = propulsion_state_from_symptom(sample.symptoms(), self._catalog)
                if state in model.absorbing:
                    self._propulsion_failed = True
            return self._markov_component(("propulsion", sample.configuration, state), model, state)
        if leaf.model == "processor":
            mttf = processor_mttf(self.config.processor, sample.processor_temp)
            # Observed history plus the horizon at the current temperature.
            p = -math.expm1(-(self._hazard + H / mttf))
            return p, mttf, self._curves.wrap(("processor", mttf), exponential_reliability(1.0 / mttf))
        if leaf.model == "markov":
            state = leaf.chain.index(leaf.start)
            return self._markov_component(("markov", leaf.id), leaf.chain, state)
        raise ReliabilityError("UNRESOLVED_BINDING", f"no evaluator for model {leaf.model!r}")

    def evaluate(self, sample: TelemetrySample) -> EvaluationResult:
        if self._last is not None:
            if not sample.t > self._last.t:
                raise ReliabilityError(
                    "OUT_OF_ORDER_SAMPLE", f"sample at {sample.t}s does not follow {self._last.t}s"
                )
            dt = sample.t - self._last.t
            if dt > 2 * self.config.sample_period_s:
                log.debug("bridging %.3g s telemetry gap at %.3g °C", dt, self._last.processor_temp)
            # Piecewise constant: the interval runs at the last observed temperature.
            self._hazard += (dt / SECONDS_PER_HOUR) / processor_mttf(
                self.config.processor, self._last.processor_temp
            )
        self._last = sample

        leaves, reliability, components = {}, {}, {}
        for leaf in self.tree.leaves:
            p, mttf, fn = self._quantify_leaf(leaf, sample)
            p = min(max(p, 0.0), 1.0)
            leaves[leaf.id] = ComponentProbability(leaf.id, p, mttf)
            reliability[leaf.id] = fn
            if isinstance(leaf, ComplexBasicEvent) and leaf.model in COMPONENTS:
                components.setdefault(leaf.model, ComponentStatus(p, mttf))

        system_p = evaluate_top(self.tree, {k: v.probability for k, v in leaves.items()})
        system_t = system_mttf(
            self.tree,
            reliability,
            horizon=self.config.mttf_initial_horizon_h,
            step=self.config.mttf_step_h,
        )
        return EvaluationResult(
            t=sample.t,
            components=components,
            system_probability=system_p,
            system_mttf=system_t,
            recommendation=decide(system_p, self.config),
            leaves=leaves,
        )


def evaluate_sample(monitor: MissionMonitor, sample: TelemetrySample) -> EvaluationResult:
    return monitor.evaluate(sample)


def replay(stream: Iterable[TelemetrySample], config: MissionConfig | None = None, tree=None) -> ReplayResult:
    """Evaluate a whole stream and decide the mission verdict.

    The first EMERGENCY_LANDING aborts the mission; later ticks are still
    quantified but the recommendation stays latched at the abort.
    """
    monitor = MissionMonitor(config, tree)
    results = []
    abort_t = None
    for sample in stream:
        res = monitor.evaluate(sample)
        if abort_t is None and res.recommendation is Recommendation.EMERGENCY_LANDING:
            abort_t = res.t
        elif abort_t is not None:
            res = EvaluationResult(
                res.t, res.components, res.system_probability, res.system_mttf,
                Recommendation.EMERGENCY_LANDING, res.leaves,
            )
        results.append(res)
    if not results:
        raise ReliabilityError("EMPTY_STREAM", "telemetry stream has no samples")
    verdict = Verdict("COMPLETED") if abort_t is None else Verdict("ABORTED", abort_t)
    return ReplayResult(tuple(results), verdict)


# ---------------------------------------------------------------------------
# CSV / JSON-lines
# ---------------------------------------------------------------------------


def _fmt(x):
    return repr(float(x)) if not isinstance(x, str) else x


def write_telemetry(samples: Sequence[TelemetrySample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TELEMETRY_COLUMNS)
        for s in samples:
            writer.writerow(
                [
                    _fmt(s.t),
                    _fmt(s.battery_level),
                    _fmt(s.processor_temp),
                    format_motor_status(s.motor_status),
                    s.configuration,
                    "active" if s.active else "inactive",
                ]
            )


def read_telemetry(path) -> list[TelemetrySample]:
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TELEMETRY_COLUMNS:
            raise ReliabilityError(
                "BAD_TELEMETRY", f"expected header {','.join(TELEMETRY_COLUMNS)}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                activity = row["activity"].strip().lower()
                if activity not in ("active", "inactive"):
                    raise ValueError(f"activity must be active or inactive, got {row['activity']!r}")
                samples.append(
                    TelemetrySample(
                        t=float(row["time_s"]),
                        battery_level=float(row["battery_pct"]),
                        processor_temp=float(row["temp_c"]),
                        motor_status=row["motor_status"].strip(),
                        configuration=row["config"].strip(),
                        active=activity == "active",
                    )
                )
            except (ValueError, TypeError, AttributeError) as exc:
                raise ReliabilityError("BAD_TELEMETRY", f"line {lineno}: {exc}") from None
    return samples


def write_results_csv(results: Sequence[EvaluationResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for res in results:
            writer.writerow({k: _fmt(v) if v != "" else "" for k, v in res.to_row().items()})


def write_results_jsonl(results: Sequence[EvaluationResult], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for res in results:
            row = res.to_row()
            row["leaves"] = {
                k: {"probability": v.probability, "mttf_h": v.mttf if math.isfinite(v.mttf) else None}
                for k, v in res.leaves.items()
            }
            fh.write(json.dumps(row) + "\n")

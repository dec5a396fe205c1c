"""Runtime reliability evaluation for UAVs.

Fault trees whose complex basic events are backed by Markov, semi-Markov,
Arrhenius and constant-rate models, re-initialized from telemetry
symptoms while the mission runs.
"""

from .components import (
    BatteryParams,
    ProcessorParams,
    PropulsionParams,
    SymptomReading,
    arrhenius_acceleration,
    battery_state_from_level,
    build_battery_model,
    build_propulsion_model,
    processor_failure_probability,
    processor_mttf,
    propulsion_state_from_symptom,
)
from .errors import ParseError, ReliabilityError
from .faulttree import FaultTree, evaluate_top, parse_fault_tree, system_mttf
from .markov import (
    MarkovModel,
    StateDistribution,
    build_markov_model,
    canonical_form,
    mttf_from_state,
    simulate_paths,
    solve_markov_renewal,
    transient_distribution,
)
from .runtime import (
    EvaluationResult,
    MissionConfig,
    MissionMonitor,
    Recommendation,
    TelemetrySample,
    decide,
    evaluate_sample,
    replay,
)
from .scenario import ScenarioSpec, generate_scenario

__version__ = "0.1.0"

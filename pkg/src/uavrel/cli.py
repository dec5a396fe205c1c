"""Command-line entry points: ``scenario``, ``replay`` and ``query``.

Exit codes: 0 success / mission completed, 2 mission aborted (replay only),
1 any error.
"""

from __future__ import annotations

import argparse
import sys

from .components import (
    BatteryParams,
    ProcessorParams,
    PropulsionParams,
    SymptomReading,
    battery_state_from_level,
    build_battery_model,
    build_propulsion_model,
    failure_probability_from,
    markov_mttf,
    parse_motor_status,
    processor_failure_probability,
    processor_mttf,
    propulsion_state_from_symptom,
)
from .errors import ReliabilityError
from .runtime import (
    MissionConfig,
    load_config,
    read_telemetry,
    replay,
    write_results_csv,
    write_results_jsonl,
    write_telemetry,
)
from .scenario import ScenarioSpec, generate_scenario

EXIT_OK, EXIT_ERROR, EXIT_ABORTED = 0, 1, 2
QUERY_MODELS = ("propulsion", "battery", "processor")


class _Parser(argparse.ArgumentParser):
    # Usage errors must not collide with the "mission aborted" exit code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="uavrel", description="Runtime UAV reliability evaluation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sc = sub.add_parser("scenario", help="generate a synthetic telemetry CSV")
    sc.add_argument("kind", choices=("fault-free", "faulty"))
    sc.add_argument("-o", "--out", required=True, help="telemetry CSV to write")
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--duration", type=int, default=750, help="seconds (default 750)")
    sc.add_argument("--battery-fault-at", type=float, default=250.0, help="X, seconds")
    sc.add_argument("--overheat-at", type=float, default=400.0, help="Y, seconds")
    sc.add_argument("--drop-from", type=float, default=80.0)
    sc.add_argument("--drop-to", type=float, default=40.0)
    sc.add_argument("--configuration", default="PNPN")

    rp = sub.add_parser("replay", help="evaluate a telemetry CSV and print the verdict")
    rp.add_argument("telemetry")
    rp.add_argument("-c", "--config", help="mission config JSON (built-in defaults otherwise)")
    rp.add_argument("-o", "--out", help="per-tick results file")
    rp.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    rp.add_argument("--threshold", type=float, help="override the config threshold")

    q = sub.add_parser("query", help="one-shot MTTF or failure probability")
    q.add_argument("quantity", choices=("mttf", "prob"))
    q.add_argument("model", help="propulsion | battery | processor")
    q.add_argument("--config", dest="configuration", default="PNPN", help="propulsion frame")
    q.add_argument("--lambda", dest="motor_rate", type=float, default=0.001, help="motor failure rate 1/h")
    q.add_argument("--motors", help="motor status string, e.g. OOFO (default all OK)")
    q.add_argument("--level", type=float, help="battery level, percent")
    q.add_argument("--inactive", action="store_true", help="battery idle (uses the inactivity rate)")
    q.add_argument("--ta", type=float, help="processor temperature, °C")
    q.add_argument("--ref", type=float, default=1000.0, help="reference MTTF, hours")
    q.add_argument("--tr", type=float, default=29.0, help="reference temperature, °C")
    q.add_argument("--ea", type=float, default=0.3, help="activation energy, eV")
    q.add_argument("--horizon", type=float, default=MissionConfig.evaluation_horizon_h, help="hours")
    return parser


def _cmd_scenario(args):
    spec = ScenarioSpec(
        kind=args.kind,
        duration_s=args.duration,
        battery_fault_at=args.battery_fault_at,
        overheat_at=args.overheat_at,
        drop_from=args.drop_from,
        drop_to=args.drop_to,
        configuration=args.configuration,
    )
    samples = generate_scenario(spec, args.seed)
    write_telemetry(samples, args.out)
    print(f"samples={len(samples)}")
    print(f"path={args.out}")
    return EXIT_OK


def _cmd_replay(args):
    config = load_config(args.config) if args.config else MissionConfig()
    if args.threshold is not None:
        data = config.to_dict()
        data["threshold"] = args.threshold
        config = MissionConfig.from_dict(data)
    outcome = replay(read_telemetry(args.telemetry), config)
    if args.out:
        writer = write_results_jsonl if args.format == "jsonl" else write_results_csv
        writer(outcome.results, args.out)
    peak = max(r.system_probability for r in outcome.results)
    print(f"samples={len(outcome.results)} peak_system_prob={peak!r}", file=sys.stderr)
    print(outcome.verdict)
    return EXIT_ABORTED if outcome.verdict.aborted else EXIT_OK


def _require(value, name):
    if value is None:
        raise ReliabilityError("MISSING_PARAMETER", f"--{name} is required for this query")
    return value


def _cmd_query(args):
    if args.model not in QUERY_MODELS:
        raise ReliabilityError("UNKNOWN_MODEL", f"{args.model!r}; choose from {', '.join(QUERY_MODELS)}")
    if args.model == "battery":
        _require(args.level, "level")
    elif args.model == "processor":
        _require(args.ta, "ta")
    print(f"model={args.model}")
    if args.model == "propulsion":
        params = PropulsionParams(args.configuration, args.motor_rate)
        model = build_propulsion_model(params)
        motors = parse_motor_status(args.motors) if args.motors else (True,) * len(params.configuration)
        state = propulsion_state_from_symptom(SymptomReading(motors, configuration=params.configuration))
        print(f"state={model.states[state]}")
    elif args.model == "battery":
        model = build_battery_model(BatteryParams(), active=not args.inactive)
        state = battery_state_from_level(args.level)
        print(f"state={model.states[state]}")
    else:
        params = ProcessorParams(mttf_ref=args.ref, activation_energy=args.ea, ref_temperature=args.tr)
        ta = args.ta
        mttf = processor_mttf(params, ta)
        if args.quantity == "mttf":
            print(f"mttf_h={mttf!r}")
        else:
            p = processor_failure_probability([(args.horizon, ta)], params)
            print(f"horizon_h={args.horizon!r}")
            print(f"prob={p!r}")
        return EXIT_OK
    if args.quantity == "mttf":
        print(f"mttf_h={markov_mttf(model, state)!r}")
    else:
        print(f"horizon_h={args.horizon!r}")
        print(f"prob={failure_probability_from(model, state, args.horizon)!r}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"scenario": _cmd_scenario, "replay": _cmd_replay, "query": _cmd_query}[args.command]
    try:
        return handler(args)
    except ReliabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

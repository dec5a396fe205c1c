"""Synthetic 1 Hz telemetry for the fault-free and faulty inspection missions.

Both kinds share the same seeded temperature noise, so a faulty stream
differs from its fault-free twin only where a fault is injected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ReliabilityError
from .runtime import TelemetrySample


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "fault-free"  # "fault-free" | "faulty"
    duration_s: int = 750
    battery_fault_at: float = 250.0
    overheat_at: float = 400.0
    drop_from: float = 80.0
    drop_to: float = 40.0
    drain_rate: float = 0.08  # %/s in normal flight
    nominal_temp: float = 32.0
    temp_noise: float = 1.5  # noise stays within +/- this many °C
    temp_noise_step: float = 0.05  # max noise change per second
    overheat_rate: float = 0.15  # °C/s once overheating
    configuration: str = "PNPN"

    def __post_init__(self):
        if self.kind not in ("fault-free", "faulty"):
            raise ReliabilityError("INVALID_SPEC", f"kind must be fault-free or faulty, got {self.kind!r}")
        if self.duration_s < 1:
            raise ReliabilityError("INVALID_SPEC", "duration must be at least one second")
        if self.drain_rate < 0 or self.temp_noise < 0 or self.temp_noise_step < 0:
            raise ReliabilityError("INVALID_SPEC", "rates and noise bounds must be >= 0")
        if self.kind == "faulty":
            X, Y = self.battery_fault_at, self.overheat_at
            if not 0 < X < Y < self.duration_s:
                raise ReliabilityError(
                    "INVALID_SPEC", f"need 0 < battery fault ({X}) < overheat ({Y}) < duration ({self.duration_s})"
                )
            if not 0 <= self.drop_to < self.drop_from <= 100:
                raise ReliabilityError("INVALID_SPEC", "battery drop must go downward within [0, 100]")
            if self.overheat_rate <= self.temp_noise_step:
                # Otherwise noise could make the overheat ramp non-monotone.
                raise ReliabilityError("INVALID_SPEC", "overheat rate must exceed the noise step")


def _temperature_noise(n, bound, step, rng):
    noise = np.empty(n)
    level = 0.0
    for k in range(n):
        level = float(np.clip(level + rng.uniform(-step, step), -bound, bound))
        noise[k] = level
    return noise


def generate_scenario(spec: ScenarioSpec, seed: int = 0) -> list[TelemetrySample]:
    """One sample per second for ``t = 0 .. duration - 1``.

    Fault-free: battery drains linearly at ``drain_rate`` and the processor
    sits near ``nominal_temp``.  Faulty: the pre-fault drain is set so the
    level reaches ``drop_from`` at the fault time, where it steps down to
    ``drop_to`` and keeps draining at the same rate; from ``overheat_at``
    the temperature ramps up at ``overheat_rate``.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(spec.duration_s, dtype=float)
    temp = spec.nominal_temp + _temperature_noise(len(t), spec.temp_noise, spec.temp_noise_step, rng)
    if spec.kind == "fault-free":
        battery = 100.0 - spec.drain_rate * t
    else:
        X, Y = spec.battery_fault_at, spec.overheat_at
        rate = (100.0 - spec.drop_from) / X
        battery = np.where(t < X, 100.0 - rate * t, spec.drop_to - rate * (t - X))
        temp = np.where(t > Y, temp + spec.overheat_rate * (t - Y), temp)
    battery = np.clip(battery, 0.0, 100.0)
    motors = (True,) * len(spec.configuration)
    return [
        TelemetrySample(
            t=float(t[k]),
            battery_level=round(float(battery[k]), 6),
            processor_temp=round(float(temp[k]), 6),
            motor_status=motors,
            configuration=spec.configuration,
        )
        for k in range(len(t))
    ]

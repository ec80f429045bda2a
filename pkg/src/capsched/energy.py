"""Capacitor energy model for intermittently-powered devices.

All capacitor arithmetic lives here: energy/voltage conversion, charge and
discharge integration, per-task charging demand and admission threshold
voltage, required harvesting time, and minimum capacitor sizing.

Conventions:
  * stored state is energy in joules; voltage is always derived as
    sqrt(2E/C).  Energy is linear in power and time, so repeated
    integration does not accumulate sqrt round-trip error.
  * harvester saturation is a hard clamp at v_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Effective harvesting rate used to realize the "ideal" harvesting mode:
# large enough that the capacitor pins at v_max after any single step.
IDEAL_RATE_W = 1.0e9


class ChargingStarvedError(ValueError):
    """Raised when a computation needs a positive harvesting rate but got none."""


# ---------------------------------------------------------------------------
# Capacitor configuration and state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CapacitorConfig:
    """Capacitance plus the four voltage thresholds of the device.

    v_off <= v_min < v_on <= v_max.  The v_min - v_off gap is the energy
    reserve that lets the checkpoint service finish after the low-voltage
    trigger fires.
    """

    capacitance_f: float
    v_min: float
    v_off: float
    v_on: float
    v_max: float

    def __post_init__(self):
        if self.capacitance_f <= 0:
            raise ValueError(f"capacitance must be > 0, got {self.capacitance_f}")
        if not (self.v_off <= self.v_min < self.v_on <= self.v_max):
            raise ValueError(
                "thresholds must satisfy v_off <= v_min < v_on <= v_max, got "
                f"v_off={self.v_off} v_min={self.v_min} v_on={self.v_on} v_max={self.v_max}"
            )

    def energy_at(self, v: float) -> float:
        return 0.5 * self.capacitance_f * v * v

    @property
    def e_min(self) -> float:
        return self.energy_at(self.v_min)

    @property
    def e_off(self) -> float:
        return self.energy_at(self.v_off)

    @property
    def e_on(self) -> float:
        return self.energy_at(self.v_on)

    @property
    def e_max(self) -> float:
        return self.energy_at(self.v_max)


@dataclass(frozen=True)
class CapacitorState:
    """A capacitor plus its stored energy.  Voltage is derived, never stored."""

    config: CapacitorConfig
    energy_j: float

    def __post_init__(self):
        if not (0.0 <= self.energy_j <= self.config.e_max * (1 + 1e-12)):
            raise ValueError(f"energy {self.energy_j} outside [0, {self.config.e_max}]")

    @property
    def voltage(self) -> float:
        return math.sqrt(2.0 * self.energy_j / self.config.capacitance_f)

    @classmethod
    def at_voltage(cls, config: CapacitorConfig, v: float) -> "CapacitorState":
        return cls(config, energy_of_voltage(config, v))


# ---------------------------------------------------------------------------
# Core conversions and integration
# ---------------------------------------------------------------------------

def energy_of_voltage(config: CapacitorConfig, v: float) -> float:
    """Stored energy E = C*v^2/2 for a voltage in [0, v_max]."""
    if not (0.0 <= v <= config.v_max * (1 + 1e-12)):
        raise ValueError(f"voltage {v} outside [0, {config.v_max}]")
    return config.energy_at(v)


def voltage_of_energy(config: CapacitorConfig, energy_j: float) -> float:
    if energy_j < 0:
        raise ValueError(f"energy must be >= 0, got {energy_j}")
    return math.sqrt(2.0 * energy_j / config.capacitance_f)


def integrate(state: CapacitorState, net_power_w: float, dt_s: float) -> CapacitorState:
    """Advance the capacitor by dt under a constant net power (may be negative).

    The result is clamped to [0, E(v_max)]; the upper clamp models harvester
    saturation at the panel's open-circuit voltage.
    """
    if dt_s < 0:
        raise ValueError(f"dt must be >= 0, got {dt_s}")
    e = state.energy_j + net_power_w * dt_s
    e = min(max(e, 0.0), state.config.e_max)
    return CapacitorState(state.config, e)


# ---------------------------------------------------------------------------
# Charging demand, admission threshold, harvesting time
# ---------------------------------------------------------------------------

def charging_demand(c_exec_s: float, w_task_w: float, w_s: float) -> float:
    """Extra harvesting time needed to fund one job of a task.

    Q = (W - W_S) * C / W_S.  Negative when the task draws less than the
    harvester supplies; callers decide whether to clamp (the analysis keeps
    the raw value by default, the per-task admission threshold clamps at 0).
    """
    if w_s <= 0:
        raise ChargingStarvedError(f"charging starved: harvesting rate {w_s} W")
    if c_exec_s < 0:
        raise ValueError(f"execution time must be >= 0, got {c_exec_s}")
    return (w_task_w - w_s) * c_exec_s / w_s


def threshold_voltage(q_s: float, w_s: float, config: CapacitorConfig) -> float:
    """Minimum voltage required before dispatching work with charging demand q.

    Starting at this voltage, consuming q*w_s joules beyond concurrent
    harvesting lands exactly on v_min.  Capped at v_max so long-running
    preemptible work can be spread over several power cycles.
    """
    if w_s <= 0:
        raise ChargingStarvedError(f"charging starved: harvesting rate {w_s} W")
    q = max(q_s, 0.0)
    c = config.capacitance_f
    v = math.sqrt((2.0 * q * w_s + c * config.v_min ** 2) / c)
    return min(v, config.v_max)


def harvesting_time(state: CapacitorState, v_target: float, w_s: float) -> float:
    """Time to charge from the current voltage up to v_target at rate w_s."""
    if v_target > state.config.v_max * (1 + 1e-12):
        raise ValueError(f"target {v_target} V above v_max {state.config.v_max} V")
    needed = state.config.energy_at(v_target) - state.energy_j
    if needed <= 0:
        return 0.0
    if w_s <= 0:
        raise ChargingStarvedError(
            f"never reaches {v_target} V: harvesting rate {w_s} W")
    return needed / w_s


def min_capacitor(tasks, v_max: float, v_min: float) -> float:
    """Smallest capacitance that lets every atomic task run start-to-finish
    on the charge between v_max and v_min.

    `tasks` is any iterable with .wcet_s, .power_w and .atomic attributes.
    Returns 0 when no task is atomic (no atomicity constraint to satisfy).
    """
    worst = 0.0
    for t in tasks:
        if t.atomic:
            worst = max(worst, t.wcet_s * t.power_w)
    if worst == 0.0:
        return 0.0
    return worst / (0.5 * (v_max ** 2 - v_min ** 2))


# ---------------------------------------------------------------------------
# Harvesting profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarvestProfile:
    """Piecewise-constant harvesting rate over time.

    mode "ideal" pins the capacitor at v_max regardless of consumption
    (realized as a rate far above any task draw, plus the v_max clamp);
    "constant" is a single fixed rate; "trace" is an arbitrary step function.
    """

    mode: str
    segments: tuple  # ((start_s, rate_w), ...) start times strictly increasing from 0

    def __post_init__(self):
        if self.mode not in ("ideal", "constant", "trace"):
            raise ValueError(f"unknown harvest mode {self.mode!r}")
        if not self.segments:
            raise ValueError("profile needs at least one segment")
        prev = None
        for start, rate in self.segments:
            if rate < 0:
                raise ValueError(f"negative harvesting rate {rate}")
            if prev is None and start != 0.0:
                raise ValueError("first segment must start at t=0")
            if prev is not None and start <= prev:
                raise ValueError("segment start times must be strictly increasing")
            prev = start

    @classmethod
    def ideal(cls) -> "HarvestProfile":
        return cls("ideal", ((0.0, IDEAL_RATE_W),))

    @classmethod
    def constant(cls, rate_w: float) -> "HarvestProfile":
        return cls("constant", ((0.0, rate_w),))

    @classmethod
    def trace(cls, segments) -> "HarvestProfile":
        return cls("trace", tuple((float(t), float(r)) for t, r in segments))

    def rate_at(self, t_s: float) -> float:
        rate = self.segments[0][1]
        for start, r in self.segments:
            if start <= t_s:
                rate = r
            else:
                break
        return rate

    def energy_between(self, t1_s: float, t2_s: float) -> float:
        """Integral of the rate over [t1, t2], joules."""
        if t2_s < t1_s:
            raise ValueError("t2 must be >= t1")
        total = 0.0
        starts = [s for s, _ in self.segments]
        rates = [r for _, r in self.segments]
        for k, start in enumerate(starts):
            end = starts[k + 1] if k + 1 < len(starts) else math.inf
            lo = max(t1_s, start)
            hi = min(t2_s, end)
            if hi > lo:
                total += rates[k] * (hi - lo)
        return total


# ---------------------------------------------------------------------------
# Charging-rate estimator
# ---------------------------------------------------------------------------

@dataclass
class ChargeEstimator:
    """Windowed-mean estimate of the harvesting rate.

    Stand-in for a learned predictor: the arithmetic mean of the samples
    observed inside the trailing window, or a configured prior when the
    window is empty.  For a constant-rate profile the estimate is exact,
    which is what the response-time analysis assumes.
    """

    window_s: float = 1800.0
    prior_w: float = 0.0
    samples: list = field(default_factory=list)  # [(time_s, rate_w)]

    def add_sample(self, time_s: float, rate_w: float) -> None:
        if self.samples and time_s < self.samples[-1][0]:
            raise ValueError("samples must arrive in time order")
        self.samples.append((time_s, rate_w))

    def estimate(self, now_s: float) -> float:
        lo = now_s - self.window_s
        window = [r for (t, r) in self.samples if lo <= t <= now_s]
        if not window:
            return self.prior_w
        return sum(window) / len(window)


def estimate_rate(estimator: ChargeEstimator, now_s: float) -> float:
    return estimator.estimate(now_s)

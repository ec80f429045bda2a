"""Bundled reference workload and board parameters.

A seven-application benchmark mix measured on a Cortex-M4 class board:
five preemptible compute kernels (MiBench-style) plus two non-preemptible
peripheral operations (environmental sensor read, camera capture).  Used by
the experiment presets and as the default demo taskset.
"""

from __future__ import annotations

from .energy import CapacitorConfig, HarvestProfile
from .workload import ChainSpec, TaskSpec, Taskset

# Board thresholds: power-on / power-off from the regulator datasheet,
# low-voltage checkpoint trigger just above power-off, panel open-circuit max.
V_ON = 4.04
V_OFF = 2.9
V_MIN = 3.0
V_MAX = 5.8

# Harvest rates delivered by the panel under the two lamp settings.
RATE_MODERATE_W = 0.015
RATE_SCARCE_W = 0.008

# Checkpoint service costs: persisting control blocks plus task data, and
# the restore on reboot.
CHECKPOINT_STORE_S = 0.00111 + 0.00146
CHECKPOINT_RESTORE_S = 0.00013

# name, wcet_s, period_s, power_w, priority, atomic
_DEMO_ROWS = (
    ("crc", 0.076, 5, 0.00949, 7, False),
    ("sensor", 0.301, 6, 0.05754, 6, True),
    ("sha", 0.416, 8, 0.0098, 5, False),
    ("fft", 1.680, 10, 0.01002, 4, False),
    ("string_search", 3.235, 15, 0.01013, 3, False),
    ("camera", 3.997, 60, 0.09388, 2, True),
    ("basic_math", 12.870, 120, 0.00959, 1, False),
)


def demo_taskset() -> Taskset:
    """The measured seven-task reference workload as single-task chains."""
    chains = []
    for i, (name, c, t, w, prio, atomic) in enumerate(_DEMO_ROWS):
        chains.append(ChainSpec(
            id=i + 1, priority=prio, period_s=float(t), deadline_s=float(t),
            tasks=(TaskSpec(id=name, wcet_s=c, power_w=w, atomic=atomic),),
        ))
    return Taskset(tuple(chains))


def board_capacitor(capacitance_f: float) -> CapacitorConfig:
    return CapacitorConfig(capacitance_f=capacitance_f, v_min=V_MIN,
                           v_off=V_OFF, v_on=V_ON, v_max=V_MAX)


def harvest_mode(name: str) -> HarvestProfile:
    """'ideal', 'moderate' (15 mW) or 'scarce' (8 mW)."""
    if name == "ideal":
        return HarvestProfile.ideal()
    if name == "moderate":
        return HarvestProfile.constant(RATE_MODERATE_W)
    if name == "scarce":
        return HarvestProfile.constant(RATE_SCARCE_W)
    raise ValueError(f"unknown harvest mode {name!r}")

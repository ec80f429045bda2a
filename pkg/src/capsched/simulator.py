"""Discrete-time simulator of a capacitor-powered device running task
chains under one of five scheduling policies.

Policies:
  * mixed          - charging-aware mixed preemption: preemptible tasks are
                     checkpointed just-in-time at the low-voltage threshold,
                     non-preemptible (peripheral) tasks are admitted only
                     with enough banked charge and then run uninterrupted;
                     proactive standby wakes at min(required harvesting
                     time, earliest higher-priority release).
  * best_effort    - run from power-on down to low-voltage, fully
                     preemptively; checkpoint preemptible progress, lose
                     atomic progress, then power off until power-on.
  * atomic_restart - every task non-preemptive, no checkpointing; whatever
                     runs when the power-off threshold hits restarts from
                     scratch next cycle.
  * atomic_charge  - every task non-preemptive with per-job charge
                     admission; charges in standby when short.
  * event_first    - peripheral (atomic) tasks outrank all computation
                     regardless of priority; computation is JIT-checkpointed.

The heavy lifting happens in `kernel` (numba-compiled); this module owns
configuration, validation, result objects and CSV output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel as K
from .energy import CapacitorConfig, HarvestProfile, IDEAL_RATE_W
from .workload import Taskset, validate

POLICIES = ("mixed", "best_effort", "atomic_restart", "atomic_charge", "event_first")
_POLICY_IDS = {
    "mixed": K.POL_MIXED,
    "best_effort": K.POL_BEST_EFFORT,
    "atomic_restart": K.POL_ATOMIC_RESTART,
    "atomic_charge": K.POL_ATOMIC_CHARGE,
    "event_first": K.POL_EVENT_FIRST,
}

DEFAULT_STORE_S = 0.00257    # persist control blocks + task data
DEFAULT_RESTORE_S = 0.00013  # reload on wake


# ---------------------------------------------------------------------------
# Configuration and result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    capacitor: CapacitorConfig
    harvest: HarvestProfile
    policy: str = "mixed"
    horizon_s: float = 480.0
    tick_s: float = 0.001
    checkpoint_store_s: float = DEFAULT_STORE_S
    checkpoint_restore_s: float = DEFAULT_RESTORE_S
    checkpoint_power_w: float | None = None  # None: max task draw (conservative)
    initial_voltage: float | None = None     # None: power-on threshold
    estimator_window_s: float = 1800.0
    estimator_prior_w: float | None = None   # None: profile rate at t=0
    record_trace: bool = True

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; choose from {POLICIES}")
        if self.tick_s <= 0:
            raise ValueError("tick must be > 0")
        if self.horizon_s < 0:
            raise ValueError("horizon must be >= 0")
        if self.checkpoint_store_s < 0 or self.checkpoint_restore_s < 0:
            raise ValueError("checkpoint costs must be >= 0")


@dataclass(frozen=True)
class TraceEvent:
    time_s: float
    kind: str
    chain: int   # chain id, -1 when not applicable
    task: int    # index within the chain (1-based), -1 when not applicable
    voltage_v: float
    detail: float


@dataclass
class ChainMetrics:
    chain_id: int
    priority: int
    released: int
    completed_by_deadline: int
    completed_late: int
    aborted: int

    @property
    def success_ratio(self) -> float:
        if self.released == 0:
            return 1.0
        return self.completed_by_deadline / self.released

    @property
    def missed(self) -> int:
        return self.released - self.completed_by_deadline


@dataclass
class SimMetrics:
    chains: list
    power_cycles: int
    checkpoint_stores: int
    checkpoint_restores: int
    checkpoint_time_s: float
    scheduler_time_s: float
    uptime_s: float
    final_energy_j: float
    harvested_j: float
    consumed_j: float
    clamp_loss_j: float
    floor_gain_j: float
    executed_s: dict = field(default_factory=dict)  # (chain_id, task_idx) -> seconds
    unservable: list = field(default_factory=list)  # (chain_id, task_idx) diagnostics

    def chain(self, chain_id: int) -> ChainMetrics:
        for c in self.chains:
            if c.chain_id == chain_id:
                return c
        raise KeyError(chain_id)

    @property
    def all_success(self) -> bool:
        return all(c.missed == 0 for c in self.chains)


@dataclass
class SimResult:
    trace: list      # list[TraceEvent]
    metrics: SimMetrics


# Phase/job state names used by the kernel, exposed for consumers of traces.
PHASES = ("PowerOff", "Operation", "Standby")
JOB_STATES = ("Waiting", "Ready", "Running", "ChargingWait", "Done", "Missed", "Aborted")


@dataclass(frozen=True)
class CheckpointImage:
    """Snapshot persisted by the JIT service: progress of preemptible tasks
    plus clock and pending timer events.  Atomic tasks are never imaged."""

    time_s: float
    progress: dict          # (chain_id, task_idx) -> executed seconds
    pending_releases: dict  # chain_id -> next release time

    def __post_init__(self):
        for (_, _), sec in self.progress.items():
            if sec < 0:
                raise ValueError("negative progress in checkpoint image")


# ---------------------------------------------------------------------------
# Array marshalling
# ---------------------------------------------------------------------------

def _to_u(seconds: float) -> int:
    return int(round(seconds * K.U_PER_S))


def _build_arrays(taskset: Taskset, cfg: SimConfig):
    chains = list(taskset.chains)
    n = len(chains)
    tick_u = _to_u(cfg.tick_s)
    if tick_u <= 0:
        raise ValueError("tick below the 10 us clock resolution")

    def tick_aligned(seconds, what):
        u = _to_u(seconds)
        if abs(seconds * K.U_PER_S - u) > 1e-6:
            raise ValueError(f"{what} ({seconds}s) below the 10 us clock resolution")
        if u % tick_u != 0:
            raise ValueError(f"{what} ({seconds}s) is not a multiple of the tick")
        return u

    ch_period = np.zeros(n, np.int64)
    ch_deadline = np.zeros(n, np.int64)
    ch_offset = np.zeros(n, np.int64)
    ch_prio = np.zeros(n, np.int64)
    ch_first = np.zeros(n, np.int64)
    ch_ntasks = np.zeros(n, np.int64)
    wcets, powers, atomics = [], [], []
    for i, ch in enumerate(chains):
        ch_period[i] = tick_aligned(ch.period_s, f"chain {ch.id} period")
        ch_deadline[i] = tick_aligned(ch.deadline_s, f"chain {ch.id} deadline")
        ch_offset[i] = tick_aligned(ch.release_offset_s, f"chain {ch.id} offset")
        ch_prio[i] = ch.priority
        ch_first[i] = len(wcets)
        ch_ntasks[i] = len(ch.tasks)
        for t in ch.tasks:
            wcets.append(tick_aligned(t.wcet_s, f"task {t.id} wcet"))
            powers.append(t.power_w)
            atomics.append(t.atomic)
    tk_wcet = np.array(wcets, np.int64) if wcets else np.zeros(0, np.int64)
    tk_power = np.array(powers, np.float64) if powers else np.zeros(0, np.float64)
    tk_atomic = np.array(atomics, np.bool_) if atomics else np.zeros(0, np.bool_)

    ch_order = np.argsort(-ch_prio, kind="stable").astype(np.int64)
    all_atomic = cfg.policy in ("atomic_restart", "atomic_charge")
    ch_head_atomic = np.zeros(n, np.bool_)
    for i in range(n):
        ch_head_atomic[i] = all_atomic or (ch_ntasks[i] > 0 and tk_atomic[ch_first[i]])

    return (ch_period, ch_deadline, ch_offset, ch_prio, ch_first, ch_ntasks,
            ch_order, ch_head_atomic, tk_wcet, tk_power, tk_atomic, tick_u)


def _profile_arrays(profile: HarvestProfile):
    starts = np.array([_to_u(s) for s, _ in profile.segments], np.int64)
    rates = np.array([r for _, r in profile.segments], np.float64)
    cum = np.zeros(len(starts), np.float64)
    for k in range(1, len(starts)):
        cum[k] = cum[k - 1] + rates[k - 1] * (starts[k] - starts[k - 1]) / K.U_PER_S
    return starts, rates, cum


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run(taskset: Taskset, cfg: SimConfig) -> SimResult:
    """Simulate the taskset over [0, horizon) and return trace plus metrics.

    Deterministic: identical inputs produce identical traces, on both the
    numba and the pure-Python kernel path.
    """
    problems = validate(taskset)
    if problems:
        raise ValueError("invalid taskset: " + "; ".join(problems))

    (ch_period, ch_deadline, ch_offset, ch_prio, ch_first, ch_ntasks,
     ch_order, ch_head_atomic, tk_wcet, tk_power, tk_atomic, tick_u) = \
        _build_arrays(taskset, cfg)

    horizon_u = _to_u(cfg.horizon_s)
    if horizon_u % tick_u != 0:
        raise ValueError("horizon is not a multiple of the tick")
    store_u = _to_u(cfg.checkpoint_store_s)
    restore_u = _to_u(cfg.checkpoint_restore_s)

    cap = cfg.capacitor
    cp_power = cfg.checkpoint_power_w
    if cp_power is None:
        cp_power = float(tk_power.max()) if len(tk_power) else 0.0
    v0 = cfg.initial_voltage if cfg.initial_voltage is not None else cap.v_on
    if not (0.0 <= v0 <= cap.v_max * (1 + 1e-12)):
        raise ValueError(f"initial voltage {v0} outside [0, {cap.v_max}]")
    e0 = cap.energy_at(v0)

    pf_t, pf_r, pf_cum = _profile_arrays(cfg.harvest)
    prior = cfg.estimator_prior_w
    if prior is None:
        prior = cfg.harvest.rate_at(0.0)

    n = len(taskset.chains)
    m = len(tk_wcet)
    released = np.zeros(n, np.int64)
    cbd = np.zeros(n, np.int64)
    late = np.zeros(n, np.int64)
    aborted = np.zeros(n, np.int64)
    exec_total = np.zeros(m, np.int64)
    unserv = np.zeros(m, np.bool_)

    cap_ev = 1 << 16
    while True:
        tr_t = np.zeros(cap_ev, np.int64)
        tr_kind = np.zeros(cap_ev, np.int8)
        tr_chain = np.zeros(cap_ev, np.int16)
        tr_task = np.zeros(cap_ev, np.int16)
        tr_volt = np.zeros(cap_ev, np.float64)
        tr_detail = np.zeros(cap_ev, np.float64)
        st_i = np.zeros(K.N_SI, np.int64)
        st_f = np.zeros(K.N_SF, np.float64)
        for arr in (released, cbd, late, aborted, exec_total):
            arr[:] = 0
        unserv[:] = False

        K.KERNEL(
            ch_period, ch_deadline, ch_offset, ch_prio, ch_first, ch_ntasks,
            ch_order, ch_head_atomic, tk_wcet, tk_power, tk_atomic,
            cap.e_min, cap.e_off, cap.e_on, cap.e_max, cap.capacitance_f,
            np.int64(tick_u), np.int64(horizon_u), np.int64(store_u),
            np.int64(restore_u), float(cp_power),
            pf_t, pf_r, pf_cum, np.int64(_to_u(cfg.estimator_window_s)),
            float(prior), _POLICY_IDS[cfg.policy], float(e0), cfg.record_trace,
            released, cbd, late, aborted, exec_total, unserv,
            tr_t, tr_kind, tr_chain, tr_task, tr_volt, tr_detail,
            st_i, st_f,
        )
        if not (cfg.record_trace and st_i[K.SI_OVF]):
            break
        cap_ev *= 4  # trace did not fit; rerun with a larger buffer

    chains = list(taskset.chains)
    trace = []
    if cfg.record_trace:
        for k in range(int(st_i[K.SI_EVN])):
            ci = int(tr_chain[k])
            chain_id = chains[ci].id if ci >= 0 else -1
            task_idx = -1
            if ci >= 0 and tr_task[k] >= 0:
                task_idx = int(tr_task[k]) - int(ch_first[ci]) + 1
            trace.append(TraceEvent(
                time_s=tr_t[k] / K.U_PER_S,
                kind=K.EVENT_NAMES[tr_kind[k]],
                chain=chain_id,
                task=task_idx,
                voltage_v=float(tr_volt[k]),
                detail=float(tr_detail[k]),
            ))

    cm = [
        ChainMetrics(ch.id, ch.priority, int(released[i]), int(cbd[i]),
                     int(late[i]), int(aborted[i]))
        for i, ch in enumerate(chains)
    ]
    executed = {}
    unservable = []
    for i, ch in enumerate(chains):
        for j in range(int(ch_ntasks[i])):
            a = int(ch_first[i]) + j
            executed[(ch.id, j + 1)] = exec_total[a] / K.U_PER_S
            if unserv[a]:
                unservable.append((ch.id, j + 1))

    metrics = SimMetrics(
        chains=cm,
        power_cycles=int(st_i[K.SI_CYCLES]),
        checkpoint_stores=int(st_i[K.SI_STORES]),
        checkpoint_restores=int(st_i[K.SI_RESTORES]),
        checkpoint_time_s=st_i[K.SI_CKPT] / K.U_PER_S,
        scheduler_time_s=0.0,  # scheduler cost is not modeled
        uptime_s=st_i[K.SI_UPTIME] / K.U_PER_S,
        final_energy_j=float(st_f[K.SF_E]),
        harvested_j=float(st_f[K.SF_HARV]),
        consumed_j=float(st_f[K.SF_CONS]),
        clamp_loss_j=float(st_f[K.SF_CLAMP]),
        floor_gain_j=float(st_f[K.SF_FLOOR]),
        executed_s=executed,
        unservable=unservable,
    )
    return SimResult(trace=trace, metrics=metrics)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def trace_to_csv(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "event", "chain", "task", "voltage_v", "detail"])
        for ev in trace:
            w.writerow([
                f"{ev.time_s:.3f}", ev.kind,
                ev.chain if ev.chain >= 0 else "",
                ev.task if ev.task >= 0 else "",
                f"{ev.voltage_v:.4f}", f"{ev.detail:.6g}",
            ])


def metrics_to_csv(metrics: SimMetrics, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chain", "released", "completed_by_deadline", "completed_late",
                    "aborted", "success_ratio", "power_cycles", "checkpoint_time_s",
                    "total_uptime_s"])
        for c in metrics.chains:
            w.writerow([c.chain_id, c.released, c.completed_by_deadline,
                        c.completed_late, c.aborted, f"{c.success_ratio:.6f}",
                        "", "", ""])
        w.writerow(["summary", "", "", "", "", "", metrics.power_cycles,
                    f"{metrics.checkpoint_time_s:.6f}", f"{metrics.uptime_s:.3f}"])

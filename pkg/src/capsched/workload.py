"""Task, chain and taskset model: validation, priorities, aggregation,
random generation, and lossless file I/O.

Chains are linear sequences of tasks sharing one period, one priority and
one constrained deadline (D <= T).  Priorities are unique across chains;
larger means higher.  All times are seconds; the internal quantum is 1 ms
so hyperperiods are exact integer LCMs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import charging_demand

# Internal time quantum for exact hyperperiod arithmetic.
QUANTUM_S = 0.001


def to_ms(seconds: float) -> int:
    """Quantize a time to integer milliseconds (round to nearest)."""
    return int(round(seconds / QUANTUM_S))


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TaskSpec:
    """One task of a chain: WCET, average draw while executing, atomicity."""

    id: str
    wcet_s: float
    power_w: float
    atomic: bool = False


@dataclass(frozen=True)
class ChainSpec:
    id: int
    priority: int  # larger = higher
    period_s: float
    deadline_s: float
    tasks: tuple  # tuple[TaskSpec, ...], execution order
    release_offset_s: float = 0.0

    @property
    def wcet_s(self) -> float:
        return sum(t.wcet_s for t in self.tasks)


@dataclass(frozen=True)
class Taskset:
    chains: tuple  # tuple[ChainSpec, ...]

    def __iter__(self):
        return iter(self.chains)

    def __len__(self):
        return len(self.chains)

    @property
    def hyperperiod_s(self) -> float:
        if not self.chains:
            return 0.0
        periods_ms = [to_ms(c.period_s) for c in self.chains]
        return math.lcm(*periods_ms) * QUANTUM_S

    def by_priority(self):
        """Chains ordered from highest to lowest priority."""
        return sorted(self.chains, key=lambda c: -c.priority)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(taskset: Taskset) -> list:
    """Return a list of human-readable violations; empty means valid."""
    problems = []
    seen_prio = {}
    seen_id = set()
    for ch in taskset.chains:
        where = f"chain {ch.id}"
        if ch.id in seen_id:
            problems.append(f"{where}: duplicate chain id")
        seen_id.add(ch.id)
        if not ch.tasks:
            problems.append(f"{where}: empty chain")
        if ch.period_s <= 0:
            problems.append(f"{where}: period must be > 0")
        if ch.deadline_s <= 0:
            problems.append(f"{where}: deadline must be > 0")
        if ch.deadline_s > ch.period_s * (1 + 1e-12):
            problems.append(f"{where}: constrained deadline violated (D > T)")
        if ch.release_offset_s < 0:
            problems.append(f"{where}: negative release offset")
        if ch.priority in seen_prio:
            problems.append(
                f"{where}: duplicate priority {ch.priority} (also chain {seen_prio[ch.priority]})")
        else:
            seen_prio[ch.priority] = ch.id
        for t in ch.tasks:
            if t.wcet_s <= 0:
                problems.append(f"{where} task {t.id}: wcet must be > 0")
            if t.power_w < 0:
                problems.append(f"{where} task {t.id}: negative power draw")
    return problems


# ---------------------------------------------------------------------------
# Priorities and aggregates
# ---------------------------------------------------------------------------

def rm_priorities(taskset: Taskset) -> Taskset:
    """Reassign rate-monotonic priorities: shorter period -> higher priority.

    Ties break toward the lower chain id.  Idempotent.
    """
    order = sorted(taskset.chains, key=lambda c: (c.period_s, c.id))
    n = len(order)
    prio = {ch.id: n - k for k, ch in enumerate(order)}
    return Taskset(tuple(replace(ch, priority=prio[ch.id]) for ch in taskset.chains))


def chain_aggregates(chain: ChainSpec, w_s: float, clamp: bool = True):
    """Cumulative execution time and charging demand of one chain job.

    With clamp=True each task's demand is floored at zero (tasks that draw
    less than the harvester supplies contribute no demand); with clamp=False
    the raw, possibly negative, per-task demands are summed.
    """
    c_total = sum(t.wcet_s for t in chain.tasks)
    q_total = 0.0
    for t in chain.tasks:
        q = charging_demand(t.wcet_s, t.power_w, w_s)
        q_total += max(q, 0.0) if clamp else q
    return c_total, q_total


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenConfig:
    """Parameters for random single-task-chain generation.

    Power draws are abstract units (only their ratio to the harvesting rate
    matters); periods are integer seconds; execution times come from the
    utilization rounded to one decimal and floored at 0.1 s.
    """

    n_tasks: tuple = (5, 5)            # inclusive range
    utilization: tuple = (0.1, 0.9)    # inclusive range; fixed when equal
    period_s: tuple = (1, 60)          # integer seconds, inclusive
    demand_low: tuple = (1.0, 3.0)     # draw range for low-demand tasks
    demand_high: tuple = (8.0, 10.0)   # draw range for high-demand tasks
    low_demand_ratio: float = 0.5      # probability a task is low-demand
    atomic_prob: float = 0.5

    def __post_init__(self):
        for name in ("n_tasks", "utilization", "period_s", "demand_low", "demand_high"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name}: empty range ({lo}, {hi})")
        if self.n_tasks[0] < 1:
            raise ValueError("need at least one task")
        if self.utilization[0] <= 0:
            raise ValueError("utilization must be > 0")
        if not (0.0 <= self.low_demand_ratio <= 1.0):
            raise ValueError("low_demand_ratio must be in [0, 1]")
        if not (0.0 <= self.atomic_prob <= 1.0):
            raise ValueError("atomic_prob must be in [0, 1]")


def uunifast(n: int, total_u: float, rng: np.random.Generator) -> list:
    """Unbiased random split of total_u into n positive utilizations."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if total_u <= 0:
        raise ValueError("total utilization must be > 0")
    utils = []
    remaining = total_u
    for i in range(1, n):
        nxt = remaining * rng.random() ** (1.0 / (n - i))
        utils.append(remaining - nxt)
        remaining = nxt
    utils.append(remaining)
    return utils


def _round_wcet(period_s: float, util: float) -> float:
    # nearest 0.1 s (round-half-to-even), floored at 0.1 s
    return max(round(10.0 * period_s * util) / 10.0, 0.1)


def generate_taskset(cfg: GenConfig, rng) -> Taskset:
    """Generate single-task chains per cfg with RM priorities applied.

    `rng` is a numpy Generator or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = int(rng.integers(cfg.n_tasks[0], cfg.n_tasks[1] + 1))
    if cfg.utilization[0] == cfg.utilization[1]:
        total_u = cfg.utilization[0]
    else:
        total_u = float(rng.uniform(cfg.utilization[0], cfg.utilization[1]))
    utils = uunifast(n, total_u, rng)
    chains = []
    for i, u in enumerate(utils):
        period = int(rng.integers(cfg.period_s[0], cfg.period_s[1] + 1))
        wcet = _round_wcet(period, u)
        lo, hi = cfg.demand_low if rng.random() < cfg.low_demand_ratio else cfg.demand_high
        power = float(rng.uniform(lo, hi))
        atomic = bool(rng.random() < cfg.atomic_prob)
        chains.append(ChainSpec(
            id=i + 1, priority=0, period_s=float(period), deadline_s=float(period),
            tasks=(TaskSpec(id=f"t{i + 1}", wcet_s=wcet, power_w=power, atomic=atomic),),
        ))
    return rm_priorities(Taskset(tuple(chains)))


# ---------------------------------------------------------------------------
# File format (JSON, lossless round-trip)
# ---------------------------------------------------------------------------

def taskset_to_dict(taskset: Taskset) -> dict:
    return {
        "chains": [
            {
                "id": ch.id,
                "priority": ch.priority,
                "period_s": ch.period_s,
                "deadline_s": ch.deadline_s,
                "release_offset_s": ch.release_offset_s,
                "tasks": [
                    {"id": t.id, "wcet_s": t.wcet_s, "power_w": t.power_w,
                     "atomic": t.atomic}
                    for t in ch.tasks
                ],
            }
            for ch in taskset.chains
        ]
    }


def taskset_from_dict(doc: dict) -> Taskset:
    chains = []
    for c in doc["chains"]:
        tasks = tuple(
            TaskSpec(id=str(t.get("id", "")), wcet_s=float(t["wcet_s"]),
                     power_w=float(t["power_w"]), atomic=bool(t["atomic"]))
            for t in c["tasks"]
        )
        chains.append(ChainSpec(
            id=int(c["id"]), priority=int(c["priority"]),
            period_s=float(c["period_s"]), deadline_s=float(c["deadline_s"]),
            release_offset_s=float(c.get("release_offset_s", 0.0)), tasks=tasks,
        ))
    return Taskset(tuple(chains))


def save_taskset(taskset: Taskset, path) -> None:
    with open(path, "w") as fh:
        json.dump(taskset_to_dict(taskset), fh, indent=2)
        fh.write("\n")


def load_taskset(path) -> Taskset:
    with open(path) as fh:
        return taskset_from_dict(json.load(fh))

"""Worst-case response-time analysis for mixed-preemption chains with
charging demand, plus the charging-inclusive utilization metric.

The recurrences are evaluated in exact integer milliseconds so the fixed
points are exact; inputs are quantized to 1 ms (demands are ceiled, which
can only make the analysis more pessimistic).

Per-chain demand aggregation is configurable:
  * q_mode="raw" (default) sums per-task demands with their sign.  A task
    drawing less than the harvester supplies banks charge that other work
    in the same busy window can spend, and the stored-energy budget is
    fungible, so the credit is sound for busy-window accounting.  This mode
    reproduces the published schedulability behavior of the reference
    workload at moderate harvest rates.
  * q_mode="clamped" floors every per-task demand at zero; strictly more
    pessimistic.
Start times are floored at the job's release time so that demand credits
can never pull a start before the job exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .energy import charging_demand
from .workload import Taskset, to_ms

# Safety net on fixed-point iterations; the hyperperiod bound is the real
# divergence test.
MAX_ITERATIONS = 10 ** 6


@dataclass(frozen=True)
class AnalyzedChain:
    chain_id: int
    priority: int
    blocking_s: float        # B: longest lower-priority atomic task
    active_period_s: float   # L: level-i active period (hyperperiod cap on failure)
    jobs_in_period: int      # K = ceil(L / T)
    wcrt_s: float            # R; inf when not converged
    deadline_s: float
    converged: bool
    schedulable: bool


class _Ctx:
    """Integer-millisecond view of a taskset at a fixed harvesting rate."""

    def __init__(self, taskset: Taskset, w_s: float, q_mode: str):
        if q_mode not in ("raw", "clamped"):
            raise ValueError(f"unknown q_mode {q_mode!r}")
        self.chains = list(taskset.chains)
        self.n = len(self.chains)
        self.prio = [c.priority for c in self.chains]
        self.T = [to_ms(c.period_s) for c in self.chains]
        self.D = [to_ms(c.deadline_s) for c in self.chains]
        self.C_tasks = [[to_ms(t.wcet_s) for t in c.tasks] for c in self.chains]
        self.C = [sum(cs) for cs in self.C_tasks]
        self.atomic = [[t.atomic for t in c.tasks] for c in self.chains]
        q_tasks = []
        for c in self.chains:
            qs = []
            for t in c.tasks:
                q = charging_demand(t.wcet_s, t.power_w, w_s)
                if q_mode == "clamped":
                    q = max(q, 0.0)
                qs.append(math.ceil(q / 0.001))  # ceil toward pessimism, ms
            q_tasks.append(qs)
        self.Q = [sum(qs) for qs in q_tasks]
        self.hyper = math.lcm(*self.T) if self.T else 0

    def higher(self, i):
        return [h for h in range(self.n) if self.prio[h] > self.prio[i]]


def _fixed_point(seed: int, step, bound: int):
    """Iterate x -> step(x) from seed until stable or x >= bound.

    Returns (value, converged).  step must be monotone in its argument for
    the usual least-fixed-point reading.
    """
    x = seed
    for _ in range(MAX_ITERATIONS):
        if x >= bound:
            return x, False
        nxt = step(x)
        if nxt == x:
            return x, True
        x = nxt
    return x, False


# ---------------------------------------------------------------------------
# The recurrences
# ---------------------------------------------------------------------------

def blocking(ctx: _Ctx, i: int) -> int:
    """Longest atomic task of any strictly-lower-priority chain, ms."""
    worst = 0
    for l in range(ctx.n):
        if ctx.prio[l] >= ctx.prio[i]:
            continue
        for c_ms, is_atomic in zip(ctx.C_tasks[l], ctx.atomic[l]):
            if is_atomic:
                worst = max(worst, c_ms)
    return worst


def active_period(ctx: _Ctx, i: int):
    """Level-i active period: processor plus charging demand at priority >= i."""
    b = blocking(ctx, i)
    own_and_higher = [h for h in range(ctx.n) if ctx.prio[h] >= ctx.prio[i]]

    def step(l):
        return b + sum(
            -(-l // ctx.T[h]) * (ctx.C[h] + ctx.Q[h]) for h in own_and_higher)

    return _fixed_point(b + ctx.C[i], step, ctx.hyper)


def start_time(ctx: _Ctx, i: int, k: int):
    """Latest start of the last task of job k (1-based) of chain i."""
    b = blocking(ctx, i)
    hp = ctx.higher(i)
    prior_tasks = sum(ctx.C_tasks[i][:-1])
    release = (k - 1) * ctx.T[i]
    floor_at = release + prior_tasks  # cannot start before the job exists

    def step(s):
        nu = k * ctx.Q[i] + sum((s // ctx.T[h] + 1) * ctx.Q[h] for h in hp)
        val = (b + (k - 1) * ctx.C[i] + prior_tasks
               + sum((s // ctx.T[h] + 1) * ctx.C[h] for h in hp) + nu)
        return max(val, floor_at)

    return _fixed_point(release + b + prior_tasks, step, ctx.hyper)


def finish_time(ctx: _Ctx, i: int, k: int, s: int):
    """Finish of job k's last task given its start time s."""
    last_c = ctx.C_tasks[i][-1]
    if ctx.atomic[i][-1]:
        f = s + last_c
        return f, f < ctx.hyper
    hp = ctx.higher(i)

    def step(f):
        extra = sum(
            (-(-f // ctx.T[h]) - (s // ctx.T[h] + 1)) * (ctx.C[h] + ctx.Q[h])
            for h in hp)
        return s + last_c + extra

    return _fixed_point(s + last_c, step, ctx.hyper)


def wcrt(ctx: _Ctx, i: int) -> AnalyzedChain:
    """Worst-case response time of chain i: max over the jobs in its
    level-i active period of finish minus release."""
    ch = ctx.chains[i]
    b = blocking(ctx, i)
    l, conv = active_period(ctx, i)
    if not conv:
        return AnalyzedChain(ch.id, ch.priority, b * 0.001, min(l, ctx.hyper) * 0.001,
                             -(-l // ctx.T[i]), math.inf, ch.deadline_s, False, False)
    k_max = -(-l // ctx.T[i])
    worst = 0
    for k in range(1, k_max + 1):
        s, s_conv = start_time(ctx, i, k)
        if not s_conv:
            return AnalyzedChain(ch.id, ch.priority, b * 0.001, l * 0.001, k_max,
                                 math.inf, ch.deadline_s, False, False)
        f, f_conv = finish_time(ctx, i, k, s)
        if not f_conv:
            return AnalyzedChain(ch.id, ch.priority, b * 0.001, l * 0.001, k_max,
                                 math.inf, ch.deadline_s, False, False)
        worst = max(worst, f - (k - 1) * ctx.T[i])
    return AnalyzedChain(ch.id, ch.priority, b * 0.001, l * 0.001, k_max,
                         worst * 0.001, ch.deadline_s, True, worst <= ctx.D[i])


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

def analyze_taskset(taskset: Taskset, w_s: float, q_mode: str = "raw"):
    """Per-chain response-time report for a fixed harvesting rate."""
    ctx = _Ctx(taskset, w_s, q_mode)
    report = []
    for i in range(ctx.n):
        # Fast divergence test: level-i demand density >= 1 cannot converge.
        dens = sum((ctx.C[h] + ctx.Q[h]) / ctx.T[h]
                   for h in range(ctx.n) if ctx.prio[h] >= ctx.prio[i])
        if dens >= 1.0:
            ch = ctx.chains[i]
            report.append(AnalyzedChain(
                ch.id, ch.priority, blocking(ctx, i) * 0.001, ctx.hyper * 0.001,
                -(-ctx.hyper // ctx.T[i]), math.inf, ch.deadline_s, False, False))
        else:
            report.append(wcrt(ctx, i))
    return report


def taskset_schedulable(taskset: Taskset, w_s: float, q_mode: str = "raw"):
    """(all chains meet their deadlines, per-chain report)."""
    report = analyze_taskset(taskset, w_s, q_mode)
    return all(r.schedulable for r in report), report


def charging_utilization(taskset: Taskset, w_s: float, clamp: bool = False) -> float:
    """Sum over chains of (C_i + Q_i) / T_i.

    clamp=False keeps raw (possibly negative) per-task demands, the
    convention behind the headline utilization percentages; clamp=True
    floors each demand at zero, the convention of the analysis context.
    """
    total = 0.0
    for ch in taskset.chains:
        for t in ch.tasks:
            q = charging_demand(t.wcet_s, t.power_w, w_s)
            if clamp:
                q = max(q, 0.0)
            total += (t.wcet_s + q) / ch.period_s
    return total


def report_to_csv(report, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["chain", "B_s", "L_s", "K", "R_s", "D_s", "schedulable", "converged"])
        for r in report:
            w.writerow([
                r.chain_id, f"{r.blocking_s:.3f}", f"{r.active_period_s:.3f}",
                r.jobs_in_period,
                "inf" if math.isinf(r.wcrt_s) else f"{r.wcrt_s:.3f}",
                f"{r.deadline_s:.3f}", str(r.schedulable).lower(),
                str(r.converged).lower(),
            ])

"""Brute-force oracle for the response-time analysis.

Simulates the critical instant of one chain at 1 ms granularity under the
same accounting model the analysis uses: a single fungible charge bank
(zero at the critical instant, i.e. the capacitor sits at the low-voltage
threshold) that grows one tick per idle or napping tick and drains at each
task's demand rate (W - W_S)/W_S per executing tick.  Preemptible work naps
at the bank floor until the bank covers its remaining demand;
non-preemptible work is admitted only once the bank covers its whole
demand, then runs without preemption.

The construction under test: the longest lower-priority atomic task starts
just before t=0; the chain under analysis and everything of higher priority
release synchronously at t=0 and then periodically, with jobs queuing FIFO
per chain.  One level-i busy window is simulated and the response time is
the maximum over the target's jobs inside it.

Deliberately independent of the fixed-point recurrences: plain forward
time stepping, no ceilings, no iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .energy import charging_demand
from .workload import Taskset, to_ms


@dataclass
class OracleResult:
    busy_len_ms: int     # level-i busy window length (hyperperiod cap if open)
    window_closed: bool  # busy window ended within one hyperperiod
    starts_ms: list      # last-task start time of target job k (0-based index k-1)
    finishes_ms: list    # finish time of target job k
    response_ms: int     # max over target jobs of finish - release; -1 if none

    @property
    def response_s(self) -> float:
        return self.response_ms * 0.001


class _Job:
    __slots__ = ("release", "task_idx", "exec_ms", "in_block")

    def __init__(self, release):
        self.release = release
        self.task_idx = 0
        self.exec_ms = 0
        self.in_block = False


def critical_instant_response(taskset: Taskset, target_id: int, w_s: float,
                              clamp: bool = True) -> OracleResult:
    """Simulate the critical instant of chain `target_id` tick by tick."""
    chains = sorted(taskset.chains, key=lambda c: -c.priority)
    target = next(c for c in chains if c.id == target_id)

    # Blocking construction: largest atomic task below the target's priority.
    # The blocker was admitted with its own charge, so it neither grows nor
    # drains the shared bank while it runs.
    block_ms = 0
    for c in chains:
        if c.priority < target.priority:
            for t in c.tasks:
                if t.atomic:
                    block_ms = max(block_ms, to_ms(t.wcet_s))

    active = [c for c in chains if c.priority >= target.priority]
    periods = [to_ms(c.period_s) for c in taskset.chains]
    hyper = math.lcm(*periods) if periods else 0

    def demand_rate(task):
        rate = charging_demand(task.wcet_s, task.power_w, w_s) / task.wcet_s
        return max(rate, 0.0) if clamp else rate

    queues = {c.id: [] for c in active}
    bank = 0.0
    starts, finishes, responses = [], [], []
    window_end = None

    t = 0
    while t < hyper:
        # busy window closes at the first instant with nothing pending
        if t > 0 and t >= block_ms and all(not q for q in queues.values()):
            window_end = t
            break

        for c in active:
            if t % to_ms(c.period_s) == 0:
                queues[c.id].append(_Job(t))

        if t < block_ms:
            t += 1
            continue

        # a non-preemptive region in progress wins over everything
        run = None
        for c in active:
            if queues[c.id] and queues[c.id][0].in_block:
                run = (c, queues[c.id][0])
                break
        if run is None:
            for c in active:  # ordered high to low priority
                if queues[c.id]:
                    run = (c, queues[c.id][0])
                    break
        if run is None:  # only possible before the first release processes
            t += 1
            continue

        chain, job = run
        task = chain.tasks[job.task_idx]
        c_ms = to_ms(task.wcet_s)
        rate = demand_rate(task)
        remaining = c_ms - job.exec_ms

        if task.atomic and not job.in_block:
            if bank + 1e-9 < rate * c_ms:
                bank += 1.0  # everyone waits while the peripheral task charges
                t += 1
                continue
            job.in_block = True
        elif not task.atomic and rate > 0.0 and bank <= 1e-9 \
                and bank + 1e-9 < rate * remaining:
            bank += 1.0  # low-voltage nap until the remaining work is funded
            t += 1
            continue

        if chain.id == target.id and job.task_idx == len(chain.tasks) - 1 \
                and job.exec_ms == 0:
            starts.append(t)
        job.exec_ms += 1
        bank -= rate
        t += 1

        if job.exec_ms >= c_ms:
            job.task_idx += 1
            job.exec_ms = 0
            job.in_block = False
            if job.task_idx >= len(chain.tasks):
                queues[chain.id].pop(0)
                if chain.id == target.id:
                    finishes.append(t)
                    responses.append(t - job.release)

    closed = window_end is not None
    return OracleResult(
        busy_len_ms=window_end if closed else hyper,
        window_closed=closed,
        starts_ms=starts,
        finishes_ms=finishes,
        response_ms=max(responses) if responses else -1,
    )

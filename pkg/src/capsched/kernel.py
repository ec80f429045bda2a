"""Event-compressed simulation kernel for the device phase machine.

Semantics are those of a fixed-tick scheduler loop (default 1 ms): releases,
dispatch/preemption decisions and the low-voltage test all happen at tick
boundaries.  Instead of iterating every tick, the kernel jumps between the
instants where a tick-loop decision could change: releases, completions,
threshold crossings of the (piecewise-linear) stored energy, profile steps
and standby wake-ups.  Stored energy is integrated in closed form between
those points, so results match the naive per-tick loop exactly while
running orders of magnitude faster on hyperperiod-length horizons.

The hot functions are compiled with numba when available; setting the
environment variable CAPSCHED_NO_NUMBA=1 selects the pure-Python/numpy
fallback (same code paths, same results, slower).
"""

from __future__ import annotations

import os

import numpy as np

# Internal time unit: 10 microseconds.  Checkpoint costs are sub-tick, so the
# clock is finer than the scheduling tick; all *scheduling* happens on tick
# multiples regardless.
U_PER_S = 100_000


def _numba_disabled() -> bool:
    return os.environ.get("CAPSCHED_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


NUMBA_ENABLED = False
if not _numba_disabled():
    try:
        import numba

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


# --------------------------------------------------------------------------
# Policy and event codes
# --------------------------------------------------------------------------

POL_MIXED = 0          # charging-aware mixed preemption (admission + JIT service)
POL_BEST_EFFORT = 1    # run v_on..v_min fully preemptively; atomic progress lost
POL_ATOMIC_RESTART = 2  # everything non-preemptive, no checkpoints, dies at v_off
POL_ATOMIC_CHARGE = 3  # everything non-preemptive, per-job charge admission
POL_EVENT_FIRST = 4    # atomic band outranks all computation; JIT for the rest

EV_RELEASE = 0
EV_DISPATCH = 1
EV_PREEMPT = 2
EV_COMPLETE = 3
EV_DEADLINE_MISS = 4
EV_CHECKPOINT = 5
EV_RESTORE = 6
EV_ENTER_STANDBY = 7
EV_WAKE = 8
EV_POWER_OFF = 9
EV_POWER_ON = 10
EV_CHARGE_WAIT = 11

EVENT_NAMES = (
    "Release", "Dispatch", "Preempt", "Complete", "DeadlineMiss", "Checkpoint",
    "Restore", "EnterStandby", "Wake", "PowerOff", "PowerOn", "ChargeWait",
)

# mutable scalar state, packed into arrays so nested helpers can update it
SI_T = 0          # clock, 10 us units
SI_RUN = 1        # chain currently holding the processor (-1 none)
SI_CYCLES = 2     # power cycles (standby or power-off entries)
SI_STORES = 3
SI_RESTORES = 4
SI_EVN = 5        # events recorded
SI_OVF = 6        # trace buffer overflowed
SI_UPTIME = 7     # time powered on, 10 us units
SI_CKPT = 8       # checkpoint store+restore time, 10 us units
SI_CKVALID = 9    # a checkpoint image exists
N_SI = 10

SF_E = 0          # stored energy, J
SF_HARV = 1       # offered harvest, J
SF_CONS = 2       # consumed by execution/checkpointing, J
SF_CLAMP = 3      # harvest rejected at the v_max clamp, J
SF_FLOOR = 4      # shortfall absorbed at the 0 J floor
N_SF = 5

_NEVER = np.int64(2 ** 62)


# --------------------------------------------------------------------------
# Profile arithmetic (piecewise-constant rate)
# --------------------------------------------------------------------------

def _pf_cum_at(pf_t, pf_r, pf_cum, t):
    """Harvested joules offered from 0 to t (10 us units)."""
    k = np.searchsorted(pf_t, t, side="right") - 1
    if k < 0:
        k = 0
    return pf_cum[k] + pf_r[k] * (t - pf_t[k]) / U_PER_S


def _pf_energy(pf_t, pf_r, pf_cum, t1, t2):
    return _pf_cum_at(pf_t, pf_r, pf_cum, t2) - _pf_cum_at(pf_t, pf_r, pf_cum, t1)


def _est_rate(pf_t, pf_r, pf_cum, win_u, prior, t):
    """Windowed mean of the observed harvesting rate over [t-win, t]."""
    if t <= 0:
        return prior
    lo = t - win_u
    if lo < 0:
        lo = np.int64(0)
    return _pf_energy(pf_t, pf_r, pf_cum, lo, t) / ((t - lo) / U_PER_S)


def _advance_energy(st_f, pf_t, pf_r, pf_cum, t1, t2, draw, e_max):
    """Integrate energy from t1 to t2 under constant draw, clamped to [0, e_max]."""
    if t2 <= t1:
        return
    e = st_f[SF_E]
    nseg = len(pf_t)
    k = np.searchsorted(pf_t, t1, side="right") - 1
    if k < 0:
        k = 0
    a = t1
    while a < t2:
        b = t2
        if k + 1 < nseg and pf_t[k + 1] < b:
            b = pf_t[k + 1]
        dt_s = (b - a) / U_PER_S
        rate = pf_r[k]
        st_f[SF_HARV] += rate * dt_s
        st_f[SF_CONS] += draw * dt_s
        e2 = e + (rate - draw) * dt_s
        if e2 > e_max:
            st_f[SF_CLAMP] += e2 - e_max
            e2 = e_max
        elif e2 < 0.0:
            st_f[SF_FLOOR] += -e2
            e2 = 0.0
        e = e2
        a = b
        k += 1
    st_f[SF_E] = e


def _cross_below(pf_t, pf_r, pf_cum, t, e0, draw, thr, t_hi, step_u):
    """First step_u-aligned instant in (t, t_hi] where energy <= thr.

    Caller guarantees energy(t) > thr; energy is piecewise linear on a
    falling trajectory (no clamp interplay).  Returns -1 when no such
    instant exists.
    """
    nseg = len(pf_t)
    k = np.searchsorted(pf_t, t, side="right") - 1
    if k < 0:
        k = 0
    a = t
    e_a = e0
    while a < t_hi:
        b = t_hi
        if k + 1 < nseg and pf_t[k + 1] < b:
            b = pf_t[k + 1]
        slope = (pf_r[k] - draw) / U_PER_S  # J per 10 us
        if e_a <= thr:
            # crossed mid-step earlier; first aligned instant still at/below
            tk = ((a // step_u) + 1) * step_u
            while tk <= b and tk <= t_hi:
                if e_a + slope * (tk - a) <= thr:
                    return tk
                if slope >= 0:
                    break  # recovering: later instants in this piece are higher
                tk += step_u
        elif slope < 0.0:
            exact = a + (e_a - thr) / (-slope)
            tk = np.int64(exact / step_u) * step_u
            if tk <= a:
                tk = ((a // step_u) + 1) * step_u
            while e_a + slope * (tk - a) > thr:
                tk += step_u
            if tk <= b and tk <= t_hi:
                return tk
        e_a = e_a + slope * (b - a)
        if e_a < 0.0:
            e_a = 0.0
        if e_a > thr and slope > 0.0:
            pass  # recovered above threshold; scanning continues naturally
        a = b
        k += 1
    return np.int64(-1)


def _cross_above(pf_t, pf_r, pf_cum, t, e0, thr, t_hi, step_u, e_max):
    """First step_u-aligned instant in (t, t_hi] where energy >= thr under
    zero draw (pure charging).  Returns -1 when not reached by t_hi."""
    if thr > e_max:
        thr = e_max
    nseg = len(pf_t)
    k = np.searchsorted(pf_t, t, side="right") - 1
    if k < 0:
        k = 0
    a = t
    e_a = e0
    while a < t_hi:
        b = t_hi
        if k + 1 < nseg and pf_t[k + 1] < b:
            b = pf_t[k + 1]
        slope = pf_r[k] / U_PER_S
        if e_a >= thr:
            tk = ((a // step_u) + 1) * step_u
            if tk <= t_hi:
                return tk  # charge only rises: stays above
        elif slope > 0.0:
            exact = a + (thr - e_a) / slope
            tk = np.int64(exact / step_u) * step_u
            if tk <= a:
                tk = ((a // step_u) + 1) * step_u
            while e_a + slope * (tk - a) < thr:
                tk += step_u
            if tk <= b and tk <= t_hi:
                return tk
        e_a = e_a + slope * (b - a)
        if e_a > e_max:
            e_a = e_max
        a = b
        k += 1
    return np.int64(-1)


# --------------------------------------------------------------------------
# The kernel
# --------------------------------------------------------------------------

def _kernel(
    # chains
    ch_period, ch_deadline, ch_offset, ch_prio, ch_first, ch_ntasks,
    ch_order,            # chain indices in descending priority
    ch_head_atomic,      # first task of the chain is atomic (policy-effective)
    # tasks (flattened, chain order)
    tk_wcet, tk_power, tk_atomic,
    # capacitor / thresholds (J)
    e_min, e_off, e_on, e_max, cap_f,
    # timing (10 us units)
    tick_u, horizon_u, store_u, restore_u, cp_power,
    # harvest profile + rate estimator
    pf_t, pf_r, pf_cum, est_win_u, est_prior,
    # run setup
    policy, e0, record,
    # outputs
    released, cbd, late, aborted, exec_total, unserv,
    tr_t, tr_kind, tr_chain, tr_task, tr_volt, tr_detail,
    st_i, st_f,
):
    n = len(ch_period)
    nev_cap = len(tr_t)

    nx_rel = ch_offset.copy()
    act = np.zeros(n, np.bool_)
    rel = np.zeros(n, np.int64)
    dl = np.zeros(n, np.int64)
    cur = np.zeros(n, np.int64)     # absolute task index
    ex = np.zeros(n, np.int64)      # progress on current task, 10 us units
    dl_hit = np.zeros(n, np.bool_)  # deadline-miss event already emitted
    # last checkpoint image: job identity and saved progress per chain
    ck_rel = np.full(n, -1, np.int64)
    ck_task = np.full(n, -1, np.int64)
    ck_ex = np.zeros(n, np.int64)

    st_i[SI_T] = 0
    st_i[SI_RUN] = -1
    st_f[SF_E] = e0

    has_jit = policy == POL_MIXED or policy == POL_BEST_EFFORT or policy == POL_EVENT_FIRST
    all_atomic = policy == POL_ATOMIC_RESTART or policy == POL_ATOMIC_CHARGE
    admission = policy == POL_MIXED or policy == POL_ATOMIC_CHARGE or policy == POL_EVENT_FIRST

    def emit(kind, chain, task, detail):
        if not record:
            return
        i = st_i[SI_EVN]
        if i >= nev_cap:
            st_i[SI_OVF] = 1
            return
        tr_t[i] = st_i[SI_T]
        tr_kind[i] = kind
        tr_chain[i] = chain
        tr_task[i] = task
        tr_volt[i] = np.sqrt(2.0 * st_f[SF_E] / cap_f)
        tr_detail[i] = detail
        st_i[SI_EVN] = i + 1

    def timeline():
        """Releases and (when tracing) deadline misses due exactly now."""
        t = st_i[SI_T]
        for i in range(n):
            if record and act[i] and not dl_hit[i] and dl[i] == t:
                dl_hit[i] = True
                emit(EV_DEADLINE_MISS, i, cur[i], (t - rel[i]) / U_PER_S)
            if nx_rel[i] == t and t < horizon_u:
                if act[i]:  # one job per chain: an unfinished job is dropped
                    aborted[i] += 1
                    if st_i[SI_RUN] == i:
                        st_i[SI_RUN] = -1
                act[i] = True
                rel[i] = t
                dl[i] = t + ch_deadline[i]
                cur[i] = ch_first[i]
                ex[i] = 0
                dl_hit[i] = False
                released[i] += 1
                nx_rel[i] = t + ch_period[i]
                emit(EV_RELEASE, i, cur[i], float(released[i]))

    def next_release_any():
        lo = _NEVER
        for i in range(n):
            if nx_rel[i] < lo:
                lo = nx_rel[i]
        return lo

    def next_release_above(prio, atomic_heads_only):
        lo = _NEVER
        for i in range(n):
            if ch_prio[i] > prio and (not atomic_heads_only or ch_head_atomic[i]):
                if nx_rel[i] < lo:
                    lo = nx_rel[i]
        return lo

    def next_deadline():
        lo = _NEVER
        if record:
            for i in range(n):
                if act[i] and not dl_hit[i] and dl[i] < lo:
                    lo = dl[i]
        return lo

    def ceil_tick(x):
        return ((x + tick_u - 1) // tick_u) * tick_u

    def advance_to(t2, draw, is_uptime):
        t1 = st_i[SI_T]
        _advance_energy(st_f, pf_t, pf_r, pf_cum, t1, t2, draw, e_max)
        if is_uptime:
            st_i[SI_UPTIME] += t2 - t1
        st_i[SI_T] = t2

    def fast_forward(to, draw, is_uptime):
        """Advance to `to`, honoring releases (and traced deadlines) en route."""
        while st_i[SI_T] < to:
            nt = to
            nr = next_release_any()
            if nr > st_i[SI_T] and nr < nt:
                nt = nr
            nd = next_deadline()
            if nd > st_i[SI_T] and nd < nt:
                nt = nd
            advance_to(nt, draw, is_uptime)
            timeline()

    def effective_atomic(task):
        return all_atomic or tk_atomic[task]

    def select():
        """Next chain to serve; unservable atomic heads starve.  -1 if none."""
        if policy == POL_EVENT_FIRST:
            for band in range(2):
                for oi in range(n):
                    i = ch_order[oi]
                    if not act[i]:
                        continue
                    a = effective_atomic(cur[i])
                    if (band == 0) != a:
                        continue
                    if a and unserv[cur[i]]:
                        continue
                    return i
            return -1
        for oi in range(n):
            i = ch_order[oi]
            if not act[i]:
                continue
            if admission and effective_atomic(cur[i]) and unserv[cur[i]]:
                continue
            return i
        return -1

    def admission_target(task, rem_u, est):
        """Energy needed before running rem_u of `task` so it ends at e_min."""
        w = tk_power[task]
        rem_s = rem_u / U_PER_S
        q_s = (w - est) * rem_s / est
        if q_s < 0.0:
            q_s = 0.0
        return e_min + q_s * est

    def restore_margin(est):
        """Net energy the reboot will burn; naps charge past the target by
        this much so the post-restore admission re-check passes."""
        if restore_u == 0:
            return 0.0
        drain = (cp_power - est) * (restore_u / U_PER_S)
        return drain if drain > 0.0 else 0.0

    def do_store(subject, detail):
        """JIT checkpoint: persist progress of preemptible in-flight jobs.

        Returns False when the store ran the capacitor down to the power-off
        threshold (misconfigured v_min - v_off gap): the image is invalid and
        non-checkpointed progress is lost.
        """
        emit(EV_CHECKPOINT, subject, cur[subject] if subject >= 0 else -1, detail)
        advance_to(st_i[SI_T] + store_u, cp_power, True)
        st_i[SI_STORES] += 1
        st_i[SI_CKPT] += store_u
        if st_f[SF_E] <= e_off:
            st_i[SI_CKVALID] = 0
            return False
        for i in range(n):
            if act[i] and not effective_atomic(cur[i]):
                ck_rel[i] = rel[i]
                ck_task[i] = cur[i]
                ck_ex[i] = ex[i]
            else:
                ck_rel[i] = -1
        st_i[SI_CKVALID] = 1
        return True

    def do_restore():
        if restore_u > 0:
            advance_to(st_i[SI_T] + restore_u, cp_power, True)
            st_i[SI_RESTORES] += 1
            st_i[SI_CKPT] += restore_u
        emit(EV_RESTORE, -1, -1, 0.0)
        nt = ceil_tick(st_i[SI_T])  # scheduling resumes on the next tick edge
        if nt > st_i[SI_T]:
            fast_forward(nt, 0.0, True)

    def lose_volatile_progress():
        """Power loss without a fresh checkpoint: atomic progress is gone;
        preemptible jobs fall back to the last valid image, if it is theirs."""
        for i in range(n):
            if not act[i]:
                continue
            if effective_atomic(cur[i]):
                ex[i] = 0
            elif st_i[SI_CKVALID] == 1 and ck_rel[i] == rel[i] and ck_task[i] == cur[i]:
                if ck_ex[i] < ex[i]:
                    ex[i] = ck_ex[i]
            else:
                ex[i] = 0

    def power_off_to_on(detail):
        """Dark phase: harvest with zero draw until the power-on threshold."""
        emit(EV_POWER_OFF, st_i[SI_RUN], -1, detail)
        st_i[SI_CYCLES] += 1
        st_i[SI_RUN] = -1
        t = st_i[SI_T]
        wake = _cross_above(pf_t, pf_r, pf_cum, t, st_f[SF_E], e_on, horizon_u,
                            tick_u, e_max)
        if wake < 0:
            wake = horizon_u
        if wake <= t:
            wake = ceil_tick(t + 1)
            if wake > horizon_u:
                wake = horizon_u
        fast_forward(wake, 0.0, False)
        emit(EV_POWER_ON, -1, -1, 0.0)
        if st_i[SI_T] >= horizon_u:
            return
        if has_jit and st_i[SI_CKVALID] == 1:
            do_restore()
        else:
            nt = ceil_tick(st_i[SI_T])
            if nt > st_i[SI_T]:
                fast_forward(nt, 0.0, True)

    def enter_standby(subject, target, rel_bound):
        """Sleep until min(charge-to-target time, release bound).

        A target above e_max means "no charge target" (sleep to the bound).
        """
        t = st_i[SI_T]
        wake = _NEVER
        if target <= st_f[SF_E]:
            wake = t  # already charged; wake on the next tick edge below
        elif target <= e_max:
            c = _cross_above(pf_t, pf_r, pf_cum, t, st_f[SF_E], target,
                             min(rel_bound, horizon_u), tick_u, e_max)
            if c >= 0:
                wake = c
        if rel_bound < wake:
            wake = rel_bound
        if wake > horizon_u:
            wake = horizon_u
        mn = ceil_tick(t + 1)
        if wake < mn:
            wake = mn
        emit(EV_ENTER_STANDBY, subject, cur[subject] if subject >= 0 else -1,
             wake / U_PER_S)
        st_i[SI_CYCLES] += 1
        st_i[SI_RUN] = -1
        fast_forward(wake, 0.0, False)
        emit(EV_WAKE, subject, -1, 0.0)

    def standby_bound(subject):
        """Earliest future release that must cut a standby short."""
        if policy == POL_EVENT_FIRST:
            if effective_atomic(cur[subject]):
                return next_release_above(ch_prio[subject], True)
            lo = _NEVER
            for i in range(n):
                if ch_head_atomic[i] or ch_prio[i] > ch_prio[subject]:
                    if nx_rel[i] < lo:
                        lo = nx_rel[i]
            return lo
        return next_release_above(ch_prio[subject], False)

    def jit_standby():
        """Low-voltage service: checkpoint, then sleep until the remaining
        work of the would-be-running job is funded or a release that outranks
        it arrives."""
        subject = select()
        detail = 0.0
        if subject >= 0:
            detail = (tk_wcet[cur[subject]] - ex[subject]) / U_PER_S
        if not do_store(subject, detail):
            lose_volatile_progress()
            power_off_to_on(0.0)
            return
        est = _est_rate(pf_t, pf_r, pf_cum, est_win_u, est_prior, st_i[SI_T])
        if subject < 0:
            enter_standby(-1, e_max * 4.0, next_release_any())
        elif est <= 0.0:
            enter_standby(subject, e_max * 4.0, standby_bound(subject))
        else:
            rem = tk_wcet[cur[subject]] - ex[subject]
            target = admission_target(cur[subject], rem, est)
            if target > e_max:
                target = e_max  # long work spreads over several power cycles
            target = target + restore_margin(est)
            if target > e_max:
                target = e_max
            enter_standby(subject, target, standby_bound(subject))
        if st_i[SI_T] >= horizon_u:
            return
        do_restore()

    def charge_standby(i, target_raw):
        """Admission failed for a non-preemptive job: proactive power cycle."""
        est = _est_rate(pf_t, pf_r, pf_cum, est_win_u, est_prior, st_i[SI_T])
        dt_est = (target_raw - st_f[SF_E]) / est if est > 0.0 else 0.0
        emit(EV_CHARGE_WAIT, i, cur[i], dt_est)
        stored = False
        if has_jit:  # checkpoint service persists state before any power-down
            if not do_store(i, dt_est):
                lose_volatile_progress()
                power_off_to_on(0.0)
                return
            stored = True
            est = _est_rate(pf_t, pf_r, pf_cum, est_win_u, est_prior, st_i[SI_T])
        target = target_raw + (restore_margin(est) if stored else 0.0)
        if target > e_max:
            target = e_max
        enter_standby(i, target, standby_bound(i))
        if st_i[SI_T] >= horizon_u:
            return
        if stored:
            do_restore()

    def complete_task(i):
        t = st_i[SI_T]
        emit(EV_COMPLETE, i, cur[i], (t - rel[i]) / U_PER_S)
        cur[i] += 1
        ex[i] = 0
        if cur[i] - ch_first[i] >= ch_ntasks[i]:
            act[i] = False
            if t <= dl[i]:
                cbd[i] += 1
            else:
                late[i] += 1
        st_i[SI_RUN] = -1

    def dispatch_events(i):
        old = st_i[SI_RUN]
        if old == i:
            return
        if old >= 0 and act[old]:
            emit(EV_PREEMPT, old, cur[old], ex[old] / U_PER_S)
        emit(EV_DISPATCH, i, cur[i], ex[i] / U_PER_S)
        st_i[SI_RUN] = i

    def run_block(i):
        """Non-preemptive execution of the current task of chain i."""
        dispatch_events(i)
        task = cur[i]
        w = tk_power[task]
        death = e_off if policy == POL_ATOMIC_RESTART else 0.0
        my_rel = rel[i]
        t_end = st_i[SI_T] + (tk_wcet[task] - ex[i])
        while st_i[SI_T] < t_end:
            nt = t_end
            nr = next_release_any()
            if nr > st_i[SI_T] and nr < nt:
                nt = nr
            nd = next_deadline()
            if nd > st_i[SI_T] and nd < nt:
                nt = nd
            if st_f[SF_E] > death:
                # the hardware cutoff is level-triggered, not tick-sampled
                dcross = _cross_below(pf_t, pf_r, pf_cum, st_i[SI_T], st_f[SF_E],
                                      w, death, nt, np.int64(1))
            else:
                dcross = st_i[SI_T] + 1
            if 0 <= dcross <= nt:
                burned = dcross - st_i[SI_T]
                advance_to(dcross, w, True)
                exec_total[task] += burned
                ex[i] = 0  # atomic progress is all-or-nothing
                lose_volatile_progress()
                power_off_to_on(0.0 if policy == POL_ATOMIC_RESTART else 1.0)
                return
            burned = nt - st_i[SI_T]
            advance_to(nt, w, True)
            exec_total[task] += burned
            ex[i] += burned
            timeline()
            if rel[i] != my_rel:
                return  # job replaced by its own next release mid-block
        complete_task(i)

    def run_segment(i):
        """Preemptible execution until the next decision point."""
        dispatch_events(i)
        task = cur[i]
        w = tk_power[task]
        t = st_i[SI_T]
        end = t + (tk_wcet[task] - ex[i])
        if end > horizon_u:
            end = horizon_u
        nr = next_release_any()
        if t < nr < end:
            end = nr
        nd = next_deadline()
        if t < nd < end:
            end = nd
        if has_jit and st_f[SF_E] > e_min:
            c = _cross_below(pf_t, pf_r, pf_cum, t, st_f[SF_E], w, e_min, end, tick_u)
            if 0 <= c < end:
                end = c
        ran = end - t
        advance_to(end, w, True)
        exec_total[task] += ran
        ex[i] += ran
        if ex[i] >= tk_wcet[task]:
            complete_task(i)

    # ---- main loop ------------------------------------------------------
    timeline()
    while st_i[SI_T] < horizon_u:
        if has_jit and st_f[SF_E] <= e_min:
            if policy == POL_BEST_EFFORT:
                subject = select()
                detail = 0.0
                if subject >= 0:
                    detail = (tk_wcet[cur[subject]] - ex[subject]) / U_PER_S
                if not do_store(subject, detail):
                    lose_volatile_progress()
                else:
                    for i in range(n):  # atomic progress never survives a cycle
                        if act[i] and tk_atomic[cur[i]] and ex[i] > 0:
                            ex[i] = 0
                power_off_to_on(0.0)
            else:
                jit_standby()
            timeline()
            continue
        if policy == POL_ATOMIC_RESTART and st_f[SF_E] <= e_off:
            lose_volatile_progress()
            power_off_to_on(0.0)
            timeline()
            continue

        i = select()
        if i < 0:
            nt = next_release_any()
            if nt > horizon_u:
                nt = horizon_u
            nd = next_deadline()
            if st_i[SI_T] < nd < nt:
                nt = nd
            if nt <= st_i[SI_T]:
                nt = min(st_i[SI_T] + tick_u, horizon_u)
            fast_forward(nt, 0.0, True)
            continue

        task = cur[i]
        nonpreemptive = effective_atomic(task) and policy != POL_BEST_EFFORT
        if nonpreemptive and admission:
            est = _est_rate(pf_t, pf_r, pf_cum, est_win_u, est_prior, st_i[SI_T])
            if est <= 0.0:
                charge_standby(i, e_max)  # dark: wait for energy or a release
                timeline()
                continue
            target = admission_target(task, tk_wcet[task], est)
            if target > e_max * (1.0 + 1e-9):
                unserv[task] = True  # can never bank enough charge: starves
                continue
            if st_f[SF_E] < target:
                charge_standby(i, target)
                timeline()
                continue
            run_block(i)
        elif nonpreemptive:
            run_block(i)  # restart policy: non-preemptive, admission-free
        else:
            run_segment(i)
        timeline()

    st_i[SI_T] = horizon_u
    return 0


# --------------------------------------------------------------------------
# Compilation
# --------------------------------------------------------------------------

if NUMBA_ENABLED:
    _pf_cum_at = numba.njit(cache=True)(_pf_cum_at)
    _pf_energy = numba.njit(cache=True)(_pf_energy)
    _est_rate = numba.njit(cache=True)(_est_rate)
    _advance_energy = numba.njit(cache=True)(_advance_energy)
    _cross_below = numba.njit(cache=True)(_cross_below)
    _cross_above = numba.njit(cache=True)(_cross_above)
    KERNEL = numba.njit(cache=True)(_kernel)
else:
    KERNEL = _kernel

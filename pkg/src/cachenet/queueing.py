"""Prediction-window queues: FIFO fully-efficient service and the backlog
update law between consecutive slots.

State per user is an (F, D+1) matrix of sub-queue sizes in Mbits: column 0
is the actual arrived-but-unserved backlog (depth -1), column d+1 holds the
(possibly mis-predicted) request that will arrive d slots ahead. A separate
per-type priority bucket carries shortfalls from size mis-predictions and is
drained before anything else.

Service targets the cached type(s) of largest total backlog, spreading the
rate evenly across exact ties, and drains each type chronologically
(actual backlog first, then window entries in arrival order), so a deeper
sub-queue is touched only once every shallower one is exhausted.

The update law applied at the end of slot t:
  * the deepest window slot is refilled with the next predicted arrival,
  * every other window slot inherits its successor's unserved remainder,
  * the actual backlog keeps its own remainder plus the remainder of the
    request whose arrival slot just elapsed (subject to reconciliation when
    that request was mis-predicted).

This module holds the readable single-user reference plus the vectorized
all-user versions used as the pure-python engine backend; the compiled
kernels mirror the vectorized arithmetic.
"""

from __future__ import annotations

import numpy as np

from .traffic import ContractError, ReconcileOutcome, Request, reconcile_on_arrival

_TIE_EPS = 0.0  # ties are exact float equality, matching the even-split rule


# ---------------------------------------------------------------------------
# single-user reference implementations
# ---------------------------------------------------------------------------

def _drain_fifo(q_row: np.ndarray, amount: float, served_row: np.ndarray) -> float:
    """Drain one type's sub-queues chronologically; returns volume served."""
    got = 0.0
    for j in range(q_row.shape[0]):
        if amount <= 0.0:
            break
        a = min(q_row[j], amount)
        if a > 0.0:
            q_row[j] -= a
            served_row[j] += a
            amount -= a
            got += a
    return got


def serve_user(qsub, prio, rate, cached):
    """Spend one user's service rate on its queues (reference implementation).

    qsub: (F, D+1) sub-queues, mutated; prio: (F,) priority residuals,
    mutated; cached: (F,) boolean, types available on the assigned AP.
    Returns (served (F, D+1), prio_served (F,), consumed, unused).
    """
    if rate < 0:
        raise ContractError("service rate must be non-negative")
    F, Dp1 = qsub.shape
    served = np.zeros((F, Dp1))
    prio_served = np.zeros(F)
    rem = float(rate)

    for f in range(F):
        if rem <= 0.0:
            break
        if cached[f] and prio[f] > 0.0:
            a = min(prio[f], rem)
            prio[f] -= a
            prio_served[f] = a
            rem -= a

    totals = qsub.sum(axis=1)
    while rem > 0.0:
        qmax = 0.0
        for f in range(F):
            if cached[f] and totals[f] > qmax:
                qmax = totals[f]
        if qmax <= 0.0:
            break
        ties = [f for f in range(F) if cached[f] and totals[f] == qmax]
        below = [totals[f] for f in range(F) if cached[f] and 0.0 < totals[f] < qmax]
        q2 = max(below) if below else 0.0
        room = (qmax - q2) * len(ties)
        if room >= rem:
            share = rem / len(ties)
            for f in ties:
                got = _drain_fifo(qsub[f], share, served[f])
                totals[f] -= got
            rem = 0.0
        else:
            for f in ties:
                got = _drain_fifo(qsub[f], qmax - q2, served[f])
                totals[f] -= got
                rem -= got

    consumed = float(prio_served.sum() + served.sum())
    return served, prio_served, consumed, float(rate) - consumed


def advance_user(qsub, prio, arriving: Request | None, pre_served: float,
                 slot: int, new_request: Request | None):
    """Apply the end-of-slot backlog update for one user (reference).

    qsub must already have this slot's service subtracted. For a window of
    size D >= 1, `arriving` is the request whose true arrival slot is
    `slot` (prediction attached) and `new_request` the one entering the far
    edge of the window (prediction attached). With D == 0 the window is
    absent and `arriving` carries only true fields.
    Returns (arrived_size, ReconcileOutcome).
    """
    F, Dp1 = qsub.shape
    D = Dp1 - 1
    if D == 0:
        if arriving is None:
            return 0.0, ReconcileOutcome()
        qsub[arriving.true_type, 0] += arriving.true_size
        return arriving.true_size, ReconcileOutcome(enqueued=arriving.true_size)

    if arriving is None:
        raise ContractError("window of size D >= 1 always has an arriving request")
    out = reconcile_on_arrival(arriving, qsub, prio, pre_served, slot)
    # any remaining mass at depth 0 (none in engine-generated states) merges
    # into the actual backlog
    qsub[:, 0] += qsub[:, 1]
    # window slides one slot
    qsub[:, 1:D] = qsub[:, 2:]
    qsub[:, D] = 0.0
    if new_request is not None:
        if new_request.predicted_type is None:
            raise ContractError("window entry must carry a prediction")
        qsub[new_request.predicted_type, D] = new_request.predicted_size
    return arriving.true_size, out


# ---------------------------------------------------------------------------
# vectorized all-user versions (pure-python engine backend)
# ---------------------------------------------------------------------------

def serve_all(qsub, prio, assign, rates, placement, served_out, prio_served_out):
    """Serve every user for one slot; arrays are mutated in place.

    qsub (U,F,D+1), prio (U,F), assign (U,) int with -1 for unassigned,
    rates (U,), placement (H,F). served_out/prio_served_out are overwritten.
    Returns consumed (U,).
    """
    U, F, Dp1 = qsub.shape
    served_out[:] = 0.0
    prio_served_out[:] = 0.0
    active = (assign >= 0) & (rates > 0.0)
    cached = np.zeros((U, F))
    if active.any():
        cached[active] = placement[assign[active]].astype(np.float64)

    # head-of-line shortfalls first, in type order
    avail = prio * cached
    cum = np.cumsum(avail, axis=1)
    capped = np.minimum(cum, rates[:, None])
    sp = np.diff(capped, axis=1, prepend=0.0)
    np.maximum(sp, 0.0, out=sp)
    prio -= sp
    np.maximum(prio, 0.0, out=prio)
    prio_served_out[:] = sp
    rem = rates - capped[:, -1]

    # even-split waterfill across cached type totals
    L = qsub.sum(axis=2) * cached
    order = np.argsort(-L, axis=1, kind="stable")
    Ls = np.take_along_axis(L, order, axis=1)
    Lnext = np.concatenate([Ls[:, 1:], np.zeros((U, 1))], axis=1)
    caps_k = np.arange(1, F + 1)[None, :] * (Ls - Lnext)
    cumcap = np.cumsum(caps_k, axis=1)
    reached = cumcap >= rem[:, None]
    has_level = reached.any(axis=1)
    kidx = np.argmax(reached, axis=1)
    prev = np.where(kidx > 0, np.take_along_axis(cumcap, np.maximum(kidx - 1, 0)[:, None], 1)[:, 0], 0.0)
    lk = np.take_along_axis(Ls, kidx[:, None], 1)[:, 0]
    x = np.where(has_level, lk - (rem - prev) / (kidx + 1.0), 0.0)
    x = np.maximum(x, 0.0)
    target = np.maximum(L - x[:, None], 0.0) * cached

    # guard float overshoot: cap cumulative targets at the remaining rate,
    # visiting types in the same sorted order the waterfill used
    tgt_sorted = np.take_along_axis(target, order, axis=1)
    cums = np.cumsum(tgt_sorted, axis=1)
    capped2 = np.minimum(cums, rem[:, None])
    amt_sorted = np.diff(capped2, axis=1, prepend=0.0)
    np.maximum(amt_sorted, 0.0, out=amt_sorted)
    amt = np.zeros_like(target)
    np.put_along_axis(amt, order, amt_sorted, axis=1)

    # chronological drain inside each type
    cum3 = np.cumsum(qsub, axis=2)
    capped3 = np.minimum(cum3, amt[:, :, None])
    sv = np.diff(capped3, axis=2, prepend=0.0)
    np.maximum(sv, 0.0, out=sv)
    qsub -= sv
    np.maximum(qsub, 0.0, out=qsub)
    served_out += sv
    return sp.sum(axis=1) + sv.sum(axis=(1, 2))


def advance_all_d0(qsub, arr_type, arr_size):
    """Degenerate no-window update: append true arrivals to the backlog."""
    U = qsub.shape[0]
    qsub[np.arange(U), arr_type, 0] += arr_size
    return arr_size.copy(), 0.0


def advance_all(qsub, prio, wtype, wsize, ptype, psize, down,
                arr_type, arr_size, entry_draws, rev_draws,
                e_type, e_size, tv, err_c):
    """End-of-slot update for every user (window size D >= 1).

    wtype/wsize hold the true type/size of the in-window requests, ptype/
    psize their current predictions, down the volume already pre-served;
    all are (U, D) aligned so column k is the request arriving k slots
    ahead. entry_draws (U,3) predicts the request entering the window;
    rev_draws (U, D-1, 3) re-predicts surviving window entries when the
    error schedule is time-varying. Returns (arrived (U,), waste).
    """
    U, F, Dp1 = qsub.shape
    D = Dp1 - 1
    iu = np.arange(U)
    waste = 0.0

    # --- reconcile the request whose arrival slot just elapsed -----------
    tt = wtype[:, 0]
    ts = wsize[:, 0]
    pf = ptype[:, 0]
    ps = psize[:, 0]
    w = down[:, 0]
    residual = qsub[iu, pf, 1].copy()
    qsub[iu, pf, 1] = 0.0

    type_err = pf != tt
    size_err = (~type_err) & (ps != ts)
    perfect = ~(type_err | size_err)

    if type_err.any():
        waste += float(w[type_err].sum())
        qsub[iu[type_err], tt[type_err], 0] += ts[type_err]
    if size_err.any():
        not_pre = size_err & (w <= 0.0)
        partial = size_err & (w > 0.0) & (w < ts)
        over = size_err & (w >= ts) & (w > 0.0)
        qsub[iu[not_pre], tt[not_pre], 0] += ts[not_pre]
        prio[iu[partial], tt[partial]] += (ts - w)[partial]
        waste += float((w - ts)[over].sum())
    qsub[iu[perfect], tt[perfect], 0] += residual[perfect]
    arrived = ts.copy()

    # --- slide the window -------------------------------------------------
    qsub[:, :, 1:D] = qsub[:, :, 2:]
    qsub[:, :, D] = 0.0
    for buf in (wtype, wsize, ptype, psize, down):
        buf[:, : D - 1] = buf[:, 1:]

    # --- new request enters at the far edge -------------------------------
    if tv:
        depth = D - 1
        e_entry = depth / (depth + err_c)
        et, es = e_entry, e_entry
    else:
        et, es = e_type, e_size
    u1 = entry_draws[:, 0]
    u2 = entry_draws[:, 1]
    u3 = entry_draws[:, 2]
    if F > 1:
        k = (u2 * (F - 1)).astype(np.int64)
        np.minimum(k, F - 2, out=k)
        wrong = np.where(k < arr_type, k, k + 1)
        pt_new = np.where(u1 < et, wrong, arr_type)
    else:
        pt_new = arr_type.copy()
    ps_new = arr_size * (1.0 - es + 2.0 * es * u3)
    wtype[:, D - 1] = arr_type
    wsize[:, D - 1] = arr_size
    ptype[:, D - 1] = pt_new
    psize[:, D - 1] = ps_new
    down[:, D - 1] = 0.0
    qsub[iu, pt_new, D] = ps_new

    # --- per-slot re-prediction under the time-varying schedule -----------
    if tv and D >= 2:
        depths = np.arange(D - 1, dtype=np.float64)
        e_d = depths / (depths + err_c)
        t2 = wtype[:, : D - 1]
        s2 = wsize[:, : D - 1]
        old_pf = ptype[:, : D - 1].copy()
        w2 = down[:, : D - 1]
        r1 = rev_draws[:, :, 0]
        r2 = rev_draws[:, :, 1]
        r3 = rev_draws[:, :, 2]
        if F > 1:
            kk = (r2 * (F - 1)).astype(np.int64)
            np.minimum(kk, F - 2, out=kk)
            wrong = np.where(kk < t2, kk, kk + 1)
            new_pf = np.where(r1 < e_d[None, :], wrong, t2)
        else:
            new_pf = t2.copy()
        new_ps = s2 * (1.0 - e_d[None, :] + 2.0 * e_d[None, :] * r3)
        changed = new_pf != old_pf
        waste += float(w2[changed].sum())
        uu, cc = np.nonzero(changed)
        qsub[uu, old_pf[uu, cc], cc + 1] = 0.0
        w2[changed] = 0.0
        new_val = np.maximum(new_ps - w2, 0.0)
        uu, cc = np.nonzero(np.ones_like(changed))
        qsub[uu, new_pf[uu, cc], cc + 1] = new_val[uu, cc]
        ptype[:, : D - 1] = new_pf
        psize[:, : D - 1] = new_ps

    return arrived, waste

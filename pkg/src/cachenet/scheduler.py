"""Per-slot association weights, greedy matroid-constrained assignment, the
exact small-instance oracle, and service-rate allocation.

The per-slot objective sum_{(u,h)} w_uh X_uh is modular, and the two
feasibility constraints (each user on at most one AP, each AP hosting at
most M users) are partition matroids, so adding candidate pairs in global
weight order while feasible is exactly the repeated-argmax greedy and
carries the 1/2 approximation guarantee of greedy over two matroids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BRUTE_FORCE_MAX_USERS = 8
BRUTE_FORCE_MAX_APS = 4


@dataclass
class Association:
    assignment: dict[int, int] = field(default_factory=dict)  # user -> AP
    rates: np.ndarray | None = None                           # (U,) Mbits/slot

    def objective(self, weights: np.ndarray) -> float:
        return float(sum(weights[u, h] for u, h in self.assignment.items()))


def compute_weights(Q, capacities, placement, V):
    """w_uh = C_uh * sum_f (V + Q_uf) Y_hf for every potential link.

    Q: (U, F) backlog snapshot at the start of the slot; capacities already
    carry zeros off the potential-link set, which keeps non-links at weight
    zero.
    """
    Q = np.asarray(Q, dtype=np.float64)
    Y = np.asarray(placement, dtype=np.float64)
    load = (Q + V) @ Y.T          # (U, H): sum over cached types of V + Q_uf
    return np.asarray(capacities, dtype=np.float64) * load


def greedy_assign_array(weights, link_mask, M):
    """Greedy assignment as an int array (h per user, -1 if unassigned).

    Candidate pairs are visited in decreasing weight, ties broken by lowest
    (user, AP); zero-weight pairs are never added.
    """
    U, H = weights.shape
    w = weights * link_mask if link_mask is not None else weights
    flat = w.reshape(-1)
    order = np.argsort(-flat, kind="stable")
    assign = np.full(U, -1, dtype=np.int64)
    ap_load = np.zeros(H, dtype=np.int64)
    placed = 0
    for idx in order:
        val = flat[idx]
        if val <= 0.0:
            break
        u, h = divmod(int(idx), H)
        if assign[u] >= 0 or ap_load[h] >= M:
            continue
        assign[u] = h
        ap_load[h] += 1
        placed += 1
        if placed == U:
            break
    return assign


def greedy_associate(weights, link_mask, M) -> Association:
    assign = greedy_assign_array(np.asarray(weights, dtype=np.float64), link_mask, M)
    return Association(assignment={u: int(h) for u, h in enumerate(assign) if h >= 0})


def brute_force_associate(weights, link_mask, M) -> Association:
    """Exhaustive optimum over both matroid constraints (desk-scale only).

    Depth-first over users in index order, APs in index order with
    "unassigned" last, keeping the first strictly-better solution; this
    yields a deterministic argmax. Guarded to tiny instances.
    """
    weights = np.asarray(weights, dtype=np.float64)
    U, H = weights.shape
    if U > BRUTE_FORCE_MAX_USERS or H > BRUTE_FORCE_MAX_APS:
        raise ValueError(
            f"instance {U}x{H} exceeds oracle guard "
            f"({BRUTE_FORCE_MAX_USERS}x{BRUTE_FORCE_MAX_APS})"
        )
    allowed = [
        [h for h in range(H) if (link_mask is None or link_mask[u, h])]
        for u in range(U)
    ]
    best_val = 0.0
    best = {}
    cur = {}
    load = [0] * H

    def dfs(u, val):
        nonlocal best_val, best
        if u == U:
            if val > best_val:
                best_val = val
                best = dict(cur)
            return
        for h in allowed[u]:
            if load[h] < M:
                load[h] += 1
                cur[u] = h
                dfs(u + 1, val + weights[u, h])
                del cur[u]
                load[h] -= 1
        dfs(u + 1, val)  # leave u unassigned

    dfs(0, 0.0)
    return Association(assignment=best)


def allocate_rates(assignment, capacities, cfg) -> np.ndarray:
    """Per-user service rates for one slot.

    full-rate: every associated user gets the full link rate C_uh.
    shared: each AP splits its rate evenly over its associated users, which
    satisfies the unit-sum bandwidth-share constraint by construction; the
    config invariant M <= floor(1/xi) keeps every share above xi.
    """
    U = capacities.shape[0]
    rates = np.zeros(U, dtype=np.float64)
    if cfg.rate_mode == "shared":
        counts = {}
        for u, h in assignment.items():
            counts[h] = counts.get(h, 0) + 1
        for u, h in assignment.items():
            rates[u] = capacities[u, h] / counts[h]
    else:
        for u, h in assignment.items():
            rates[u] = capacities[u, h]
    return rates


def rates_from_assign_array(assign, capacities, rate_mode):
    """Vectorized allocate_rates for the engine's int-array assignment."""
    U, H = capacities.shape
    rates = np.zeros(U, dtype=np.float64)
    mask = assign >= 0
    if not mask.any():
        return rates
    rates[mask] = capacities[mask, assign[mask]]
    if rate_mode == "shared":
        counts = np.bincount(assign[mask], minlength=H).astype(np.float64)
        rates[mask] /= counts[assign[mask]]
    return rates


def association_objective(pairs, weights) -> float:
    """Modular objective: sum of selected pair weights."""
    return float(sum(weights[u, h] for u, h in pairs))

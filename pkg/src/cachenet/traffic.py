"""Request arrivals, the predicted-information stream, and mis-prediction
reconciliation rules.

Each user issues exactly one request per slot: a Zipf-distributed file type
and a size uniform on (0, A_max]. A request becomes visible (possibly
mis-predicted) once it enters the lookahead window and is reconciled against
its true type/size during the end-of-slot update of its actual arrival slot.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import SimConfig


class ContractError(RuntimeError):
    """An operation was invoked outside its declared contract."""


@dataclass(frozen=True)
class Request:
    user: int
    arrival_slot: int
    true_type: int
    true_size: float
    predicted_type: int | None = None
    predicted_size: float | None = None


@dataclass(frozen=True)
class PredictionErrorModel:
    e_type: float = 0.0
    e_size: float = 0.0
    schedule: str = "fixed"          # "fixed" | "time-varying"
    constant: float = 60.0           # C in d / (d + C)

    def rates(self, depth: int) -> tuple[float, float]:
        """Effective (type, size) error rates for a request `depth` slots out."""
        if self.schedule == "time-varying":
            r = depth / (depth + self.constant)
            return r, r
        return self.e_type, self.e_size

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "PredictionErrorModel":
        return cls(cfg.e_type, cfg.e_size, cfg.error_schedule, cfg.error_constant)


def sample_arrival(user, slot, probs, cfg: SimConfig, rng: np.random.Generator) -> Request:
    """Draw the true fields of one request."""
    cum = np.cumsum(probs)
    t = int(np.searchsorted(cum, rng.random(), side="right"))
    t = min(t, len(probs) - 1)
    size = cfg.A_max * (1.0 - rng.random())  # uniform on (0, A_max]
    return Request(user=user, arrival_slot=slot, true_type=t, true_size=size)


def predict_from_uniforms(true_type, true_size, e_type, e_size, u1, u2, u3, F):
    """Deterministic prediction from three uniform draws.

    u1 gates the type error, u2 picks one of the other F-1 types, u3 places
    the predicted size uniformly on [s(1-e_size), s(1+e_size)]. The size
    perturbation is not gated: with e_size = 0 it degenerates to the exact
    true size.
    """
    if u1 < e_type and F > 1:
        k = int(u2 * (F - 1))
        if k >= F - 1:
            k = F - 2
        ptype = k if k < true_type else k + 1
    else:
        ptype = true_type
    psize = true_size * (1.0 - e_size + 2.0 * e_size * u3)
    return ptype, psize


def predict(request: Request, depth: int, model: PredictionErrorModel,
            rng: np.random.Generator, F: int) -> Request:
    """Fill the predicted fields of a request seen `depth` slots ahead."""
    if depth < 0:
        raise ContractError("depth must be >= 0")
    et, es = model.rates(depth)
    u1, u2, u3 = rng.random(3)
    ptype, psize = predict_from_uniforms(
        request.true_type, request.true_size, et, es, u1, u2, u3, F
    )
    return replace(request, predicted_type=ptype, predicted_size=psize)


@dataclass
class ReconcileOutcome:
    waste: float = 0.0            # discarded pre-served volume (Mbits)
    enqueued: float = 0.0         # volume added to the actual backlog
    priority_added: float = 0.0   # head-of-line shortfall from size error


def reconcile_on_arrival(request: Request, qsub: np.ndarray, prio: np.ndarray,
                         pre_served: float, slot: int) -> ReconcileOutcome:
    """Apply the mis-prediction handling rules at the request's arrival slot.

    qsub is this user's (F, D+1) sub-queue matrix after serving, with column
    0 holding the actual backlog and column 1 the arriving request's
    predicted residual. Mutates qsub/prio in place.

    Rule for a mis-predicted type: the wrong-queue residual is dropped, any
    pre-downloaded volume is wasted, and the true request enters in full.
    Rule for a mis-predicted size: the residual is dropped and either the
    true size enters (nothing pre-served), the shortfall enters with head-of-
    line priority (partially pre-served), or the surplus is wasted (over-
    served).
    """
    if slot != request.arrival_slot:
        raise ContractError(
            f"reconcile at slot {slot} but request arrives at {request.arrival_slot}"
        )
    if request.predicted_type is None or request.predicted_size is None:
        raise ContractError("request has no prediction attached")
    out = ReconcileOutcome()
    pf, ps = request.predicted_type, request.predicted_size
    tt, ts = request.true_type, request.true_size
    residual = qsub[pf, 1]
    if pf != tt:
        out.waste += pre_served
        qsub[pf, 1] = 0.0
        qsub[tt, 0] += ts
        out.enqueued += ts
    elif ps != ts:
        qsub[pf, 1] = 0.0
        if pre_served <= 0.0:
            qsub[tt, 0] += ts
            out.enqueued += ts
        elif pre_served < ts:
            prio[tt] += ts - pre_served
            out.priority_added += ts - pre_served
        else:
            out.waste += pre_served - ts
    else:
        qsub[tt, 0] += residual
        qsub[tt, 1] = 0.0
        out.enqueued += residual
    return out

"""Hot-loop kernels: compiled core with a pure-numpy fallback.

The per-slot simulation cost is dominated by four operations: Monte Carlo
rate estimation, greedy assignment, queue service, and the backlog update.
Both backends implement the same array contracts; the compiled one is built
from kernels/_ckern.pyx at install time and is selected automatically when
importable. Set CACHENET_BACKEND=python (or compiled) to force a choice.
"""

from __future__ import annotations

import os

import numpy as np

from .. import channel, queueing, scheduler

try:
    from . import _ckern

    HAVE_COMPILED = True
except ImportError:  # extension not built; numpy path still works
    _ckern = None
    HAVE_COMPILED = False


class PythonBackend:
    name = "python"

    @staticmethod
    def capacities(gains, fade, P, scale, link_mask, log_base):
        return channel.capacities_from_samples(gains, fade, P, scale, link_mask, log_base)

    @staticmethod
    def greedy(weights, M):
        return scheduler.greedy_assign_array(weights, None, M)

    @staticmethod
    def serve(qsub, prio, assign, rates, placement, served_out, prio_served_out):
        return queueing.serve_all(qsub, prio, assign, rates, placement,
                                  served_out, prio_served_out)

    @staticmethod
    def advance(qsub, prio, wtype, wsize, ptype, psize, down, arr_type, arr_size,
                entry_draws, rev_draws, e_type, e_size, tv, err_c):
        return queueing.advance_all(qsub, prio, wtype, wsize, ptype, psize, down,
                                    arr_type, arr_size, entry_draws, rev_draws,
                                    e_type, e_size, tv, err_c)

    @staticmethod
    def advance_d0(qsub, arr_type, arr_size):
        return queueing.advance_all_d0(qsub, arr_type, arr_size)


class CompiledBackend:
    name = "compiled"

    @staticmethod
    def capacities(gains, fade, P, scale, link_mask, log_base):
        out = np.zeros_like(gains)
        _ckern.capacities(gains, fade, float(P), float(scale),
                          np.ascontiguousarray(link_mask, dtype=np.float64),
                          float(log_base), out)
        return out

    @staticmethod
    def greedy(weights, M):
        order = np.argsort(-weights.reshape(-1), kind="stable")
        assign = np.full(weights.shape[0], -1, dtype=np.int64)
        _ckern.greedy_scan(weights, order, int(M), assign)
        return assign

    @staticmethod
    def serve(qsub, prio, assign, rates, placement, served_out, prio_served_out):
        consumed = np.zeros(qsub.shape[0])
        _ckern.serve(qsub, prio, assign, rates,
                     np.ascontiguousarray(placement, dtype=np.float64),
                     served_out, prio_served_out, consumed)
        return consumed

    @staticmethod
    def advance(qsub, prio, wtype, wsize, ptype, psize, down, arr_type, arr_size,
                entry_draws, rev_draws, e_type, e_size, tv, err_c):
        arrived = np.zeros(qsub.shape[0])
        if rev_draws is None:
            rev_draws = np.zeros((qsub.shape[0], 0, 3))
        waste = _ckern.advance(qsub, prio, wtype, wsize, ptype, psize, down,
                               arr_type, arr_size, entry_draws, rev_draws,
                               float(e_type), float(e_size), bool(tv),
                               float(err_c), arrived)
        return arrived, waste

    @staticmethod
    def advance_d0(qsub, arr_type, arr_size):
        U = qsub.shape[0]
        qsub[np.arange(U), arr_type, 0] += arr_size
        return arr_size.copy(), 0.0


def get_backend(name: str | None = None):
    """Resolve a backend by name; None follows CACHENET_BACKEND then best."""
    if name is None:
        name = os.environ.get("CACHENET_BACKEND", "").strip() or None
    if name is None:
        return CompiledBackend if HAVE_COMPILED else PythonBackend
    if name == "python":
        return PythonBackend
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernels are not available (extension not built)")
        return CompiledBackend
    raise ValueError(f"unknown backend {name!r}")

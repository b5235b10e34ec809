"""Small-cell path loss, LOS/NLOS mixing, and per-link rate estimation.

Path loss follows the WINNER II small-cell parameterization: two coefficient
sets selected per link by a distance-dependent LOS probability, log-normal
shadowing on top, and Rayleigh small-scale fading handled by Monte Carlo
when estimating the expected log-SINR in the rate formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

F0_GHZ = 2.4

# (C1, C2, C3, shadowing variance dB^2)
LOS_PARAMS = (18.7, 46.8, 20.0, 9.0)
NLOS_PARAMS = (36.8, 43.8, 20.0, 16.0)


@dataclass(frozen=True)
class PathLossParams:
    C1: float
    C2: float
    C3: float
    sigma_dB_sq: float
    f0: float = F0_GHZ

    @property
    def sigma_dB(self) -> float:
        return math.sqrt(self.sigma_dB_sq)


LOS = PathLossParams(*LOS_PARAMS)
NLOS = PathLossParams(*NLOS_PARAMS)


@dataclass(frozen=True)
class ChannelSlot:
    gains: np.ndarray       # (U, H) path-loss coefficients
    capacities: np.ndarray  # (U, H) Mbits per slot, zero off the link set


def los_probability(d: float) -> float:
    """Probability that a link of length d meters is line-of-sight."""
    if d < 0:
        raise ValueError("distance must be non-negative")
    if d <= 3.0:
        return 1.0
    base = 1.0 - (1.24 - 0.6 * math.log10(d)) ** 3
    # base > 0 for all d > 3; it exceeds 1 at large d, where the cube root
    # pushes the raw expression below 0 and the clamp takes over
    p = 1.0 - 0.9 * base ** (1.0 / 3.0)
    return min(1.0, max(0.0, p))


def path_loss_db(d: float, params: PathLossParams, x_db: float) -> float:
    d = max(d, 1.0)  # antenna near field; also guards the log singularity
    return (
        params.C1 * math.log10(d)
        + params.C2
        + params.C3 * math.log10(params.f0 / 5.0)
        + x_db
    )


def path_loss_gain(d: float, rng: np.random.Generator) -> float:
    """Draw one link gain: LOS/NLOS Bernoulli, shadowing normal, 10^(-PL/10)."""
    params = LOS if rng.random() < los_probability(d) else NLOS
    x_db = rng.standard_normal() * params.sigma_dB
    return 10.0 ** (-path_loss_db(d, params, x_db) / 10.0)


def gain_matrix(dist, los_uniform, shadow_normal):
    """Vectorized per-link gains from pre-drawn uniforms and unit normals.

    dist, los_uniform, shadow_normal: (U, H) arrays. The LOS condition is
    drawn independently per link; shadowing std depends on the drawn
    condition.
    """
    d = np.maximum(dist, 1.0)
    logd = np.log10(d)
    inner = 1.0 - (1.24 - 0.6 * logd) ** 3
    p = 1.0 - 0.9 * np.cbrt(inner)
    p = np.clip(p, 0.0, 1.0)
    p[dist <= 3.0] = 1.0
    is_los = los_uniform < p
    c1 = np.where(is_los, LOS.C1, NLOS.C1)
    c2 = np.where(is_los, LOS.C2, NLOS.C2)
    sig = np.where(is_los, LOS.sigma_dB, NLOS.sigma_dB)
    const3 = 20.0 * math.log10(F0_GHZ / 5.0)
    pl = c1 * logd + c2 + const3 + sig * shadow_normal
    return 10.0 ** (-pl / 10.0)


def capacities_from_samples(gains, fade, P, scale, link_mask, log_base=2.0):
    """Per-link max achievable rate (Mbits/slot) from fading power samples.

    gains: (U, H); fade: (n, H) exponential(1) samples of |s|^2, one stream
    per AP shared across users; scale = tau * B / 1e6. For each link the
    SINR uses the drawn own-signal power against the sum of all other APs'
    received powers on top of unit noise.
    """
    gains = np.asarray(gains, dtype=np.float64)
    fade = np.asarray(fade, dtype=np.float64)
    U, H = gains.shape
    G = P * gains
    tot = np.zeros((U, fade.shape[0]))
    for h in range(H):
        tot += G[:, h : h + 1] * fade[:, h][None, :]
    C = np.zeros((U, H))
    for h in range(H):
        num = G[:, h : h + 1] * fade[:, h][None, :]
        den = 1.0 + tot - num
        snr = num / den
        if log_base == 2.0:
            se = np.log2(1.0 + snr)
        else:
            se = np.log(1.0 + snr) / math.log(log_base)
        C[:, h] = se.mean(axis=1) * scale
    if link_mask is not None:
        C = C * link_mask
    return C


def estimate_capacities(topology, gains, cfg, rng: np.random.Generator) -> ChannelSlot:
    """Monte Carlo estimate of every potential link's rate for one slot."""
    fade = rng.exponential(1.0, size=(cfg.n_fading_samples, cfg.H))
    caps = capacities_from_samples(
        gains,
        fade,
        cfg.P,
        cfg.capacity_scale,
        topology.link_mask,
        cfg.capacity_log_base,
    )
    return ChannelSlot(gains=np.asarray(gains), capacities=caps)

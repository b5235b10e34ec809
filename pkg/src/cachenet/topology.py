"""Network layout: user/AP positions, potential links, cache placement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SimConfig


class TopologyError(ValueError):
    """Raised when the requested layout leaves the network unusable."""


@dataclass(frozen=True)
class Topology:
    """Immutable layout shared by every slot of a run.

    placement is an H x F 0/1 matrix with exactly N ones per row; an AP can
    serve a file type only when its placement entry is 1.
    """

    user_positions: np.ndarray   # (U, 2) meters
    ap_positions: np.ndarray     # (H, 2) meters
    link_mask: np.ndarray        # (U, H) uint8, 1 where a potential link exists
    placement: np.ndarray        # (H, F) uint8

    @property
    def potential_links(self):
        us, hs = np.nonzero(self.link_mask)
        return set(zip(us.tolist(), hs.tolist()))

    @property
    def distances(self) -> np.ndarray:
        diff = self.user_positions[:, None, :] - self.ap_positions[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2))


def zipf_probabilities(F: int, eta_r: float) -> np.ndarray:
    """Zipf popularity p_f = f^-eta / sum_i i^-eta over ranks f = 1..F."""
    if F < 1:
        raise ValueError("F >= 1")
    if eta_r < 0:
        raise ValueError("eta_r >= 0")
    ranks = np.arange(1, F + 1, dtype=np.float64)
    w = ranks ** (-float(eta_r))
    return w / w.sum()


def ap_grid(H: int, area_side: float) -> np.ndarray:
    """Place H APs on the first H cells of a centered ceil(sqrt(H))-grid."""
    g = math.ceil(math.sqrt(H))
    pitch = area_side / g
    pts = []
    for i in range(H):
        row, col = divmod(i, g)
        pts.append(((col + 0.5) * pitch, (row + 0.5) * pitch))
    return np.asarray(pts, dtype=np.float64)


def generate_topology(cfg: SimConfig, rng: np.random.Generator) -> Topology:
    cfg.validate()
    users = rng.random((cfg.U, 2)) * cfg.area_side
    aps = ap_grid(cfg.H, cfg.area_side)

    if cfg.link_mode == "complete":
        mask = np.ones((cfg.U, cfg.H), dtype=np.uint8)
    else:
        diff = users[:, None, :] - aps[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        mask = (dist <= cfg.link_radius).astype(np.uint8)
        orphans = np.nonzero(mask.sum(axis=1) == 0)[0]
        if orphans.size:
            raise TopologyError(
                f"link radius {cfg.link_radius} m leaves users "
                f"{orphans.tolist()} with no potential link"
            )

    placement = np.zeros((cfg.H, cfg.F), dtype=np.uint8)
    if cfg.placement_mode == "top-popularity":
        # Zipf popularity is non-increasing in the type rank, so the N most
        # popular types are always types 0..N-1; identical for every AP.
        placement[:, : cfg.N] = 1
    else:
        for h in range(cfg.H):
            chosen = rng.choice(cfg.F, size=cfg.N, replace=False)
            placement[h, chosen] = 1

    return Topology(
        user_positions=users,
        ap_positions=aps,
        link_mask=mask,
        placement=placement,
    )

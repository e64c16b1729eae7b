"""Sewing chains: lightcone-linked node ladders joining the two boundary
segments, whose union forms the integration grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChainEscaped, RootNotBracketed
from .lightcone import ADVANCED, RETARDED, find_root
from .trajectory import BoundaryData

__all__ = ["SewingChain", "SewingGrid", "build_forward_chain", "build_backward_chain", "build_grid"]

FORWARD = "forward"
BACKWARD = "backward"

DEDUP_TOL = 1e-10


@dataclass(frozen=True)
class SewingChain:
    direction: str
    points: tuple  # ((particle, t), ...) alternating, consecutive in lightcone

    def times_on(self, particle):
        return np.array([t for p, t in self.points if p == particle])

    def __len__(self):
        return len(self.points)


def _hop(pair, particle, t, side):
    """Lightcone hop from (particle, t) to the partner trajectory."""
    tr = pair[particle - 1]
    partner = pair[2 - particle]
    x, _, _ = tr.state4(t)
    root = find_root(partner, x[0], side)
    return root.t_other


def build_forward_chain(pair, bd: BoundaryData, start) -> SewingChain:
    """Future-lightcone hops from a point on the (O-, O+) history-2 segment,
    alternating trajectories until landing on the (L-, L+) segment of 1."""
    if not bd.lambda2_minus <= start <= bd.lambda2_plus:
        raise ChainEscaped(f"forward seed {start:.6g} outside the history-2 segment")
    pts = [(2, float(start))]
    max_hops = 4 * len(pair[0].times) + 16
    for _ in range(max_hops):
        particle, t = pts[-1]
        try:
            t_next = _hop(pair, particle, t, ADVANCED)
        except RootNotBracketed:
            # hop beyond the far boundary: clip to the segment end
            if particle == 2:
                pts.append((1, float(bd.lambda1_plus)))
                return SewingChain(FORWARD, tuple(pts))
            raise ChainEscaped(f"forward hop from traj {particle} t={t:.6g} escaped")
        pts.append((2 if particle == 1 else 1, float(t_next)))
        if particle == 2 and t_next >= bd.t1_end - 1e-12 * max(1.0, bd.t1_end):
            return SewingChain(FORWARD, tuple(pts))
    raise ChainEscaped("forward chain exceeded the hop budget")


def build_backward_chain(pair, bd: BoundaryData, start) -> SewingChain:
    """Past-lightcone hops from a point on the (L-, L+) history-1 segment,
    ending on the (O-, O+) segment of trajectory 2."""
    if not bd.t1_end <= start <= bd.lambda1_plus:
        raise ChainEscaped(f"backward seed {start:.6g} outside the history-1 segment")
    pts = [(1, float(start))]
    max_hops = 4 * len(pair[0].times) + 16
    for _ in range(max_hops):
        particle, t = pts[-1]
        try:
            t_next = _hop(pair, particle, t, RETARDED)
        except RootNotBracketed:
            if particle == 1:
                pts.append((2, float(bd.lambda2_minus)))
                return SewingChain(BACKWARD, tuple(pts))
            raise ChainEscaped(f"backward hop from traj {particle} t={t:.6g} escaped")
        pts.append((2 if particle == 1 else 1, float(t_next)))
        if particle == 1 and t_next <= bd.lambda2_plus + 1e-12 * max(1.0, abs(bd.lambda2_plus)):
            return SewingChain(BACKWARD, tuple(pts))
    raise ChainEscaped("backward chain exceeded the hop budget")


@dataclass(frozen=True)
class SewingGrid:
    chains: tuple
    nodes1: np.ndarray
    nodes2: np.ndarray

    def nodes(self, particle):
        return self.nodes1 if particle == 1 else self.nodes2

    def cells(self, particle):
        n = self.nodes(particle)
        return np.stack([n[:-1], n[1:]], axis=1)

    def interior_nodes(self, bd: BoundaryData, particle):
        a, b = bd.variable_window(particle)
        n = self.nodes(particle)
        tol = 1e-9 * max(1.0, b - a)
        return n[(n > a + tol) & (n < b - tol)]


def build_grid(pair, bd: BoundaryData, n_chains=2) -> SewingGrid:
    """Union of n_chains forward seeds on (O-, O+) and n_chains backward seeds
    on (L-, L+); seed spacing is uniform and the endpoint seeds reproduce the
    mandatory O_A and L_B chains."""
    if n_chains < 2:
        raise ValueError("n_chains must be at least 2")
    chains = []
    for s in np.linspace(bd.lambda2_minus, bd.lambda2_plus, n_chains):
        chains.append(build_forward_chain(pair, bd, s))
    for s in np.linspace(bd.t1_end, bd.lambda1_plus, n_chains):
        chains.append(build_backward_chain(pair, bd, s))
    merged = {1: [], 2: []}
    for ch in chains:
        for p, t in ch.points:
            merged[p].append(t)
    out = {}
    for p in (1, 2):
        lo, hi = bd.full_window(p)
        ts = np.sort(np.asarray(merged[p] + [lo, hi]))
        scale = max(1.0, hi - lo)
        keep = [ts[0]]
        for t in ts[1:]:
            if t - keep[-1] > DEDUP_TOL * scale:
                keep.append(t)
        out[p] = np.asarray(keep)
    return SewingGrid(tuple(chains), out[1], out[2])

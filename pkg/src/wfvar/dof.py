"""Degrees of freedom for optimization and spectral analysis: spatial
positions of interior grid nodes, with node velocities slaved to positions by
4th-order finite differences (time components are the parameter)."""

from __future__ import annotations

import numpy as np

from ._mesh import fd_weights, hermite_shapes
from .trajectory import BoundaryData, Perturbation, Trajectory

__all__ = ["DofMap"]

STENCIL = 5


class _TrajDofs:
    def __init__(self, tr: Trajectory, bd: BoundaryData, col0):
        self.particle = tr.particle
        self.times = tr.times
        self.base_pos = tr.values.copy()
        self.base_vel = tr.slopes.copy()
        self.mask = bd.interior_mask(tr)
        self.node_index = np.nonzero(self.mask)[0]
        self.n_int = len(self.node_index)
        self.col0 = col0
        n = len(tr.times)
        # full slaving stencils: velocity of interior node j from the 5
        # nearest node positions (frozen neighbors enter the affine part)
        self.stencil_idx = np.zeros((self.n_int, STENCIL), dtype=int)
        self.stencil_w = np.zeros((self.n_int, STENCIL))
        for r, j in enumerate(self.node_index):
            lo = min(max(j - STENCIL // 2, 0), n - STENCIL)
            idx = np.arange(lo, lo + STENCIL)
            self.stencil_idx[r] = idx
            self.stencil_w[r] = fd_weights(tr.times[idx], tr.times[j], 1)
        # dense linear map node -> interior columns: row j gives the b-field
        # position delta at node j per dof; V gives the velocity delta
        self.node_rank = -np.ones(n, dtype=int)
        self.node_rank[self.node_index] = np.arange(self.n_int)
        self.P = np.zeros((n, self.n_int))
        self.P[self.node_index, np.arange(self.n_int)] = 1.0
        self.V = np.zeros((n, self.n_int))
        for r, j in enumerate(self.node_index):
            for sj, swt in zip(self.stencil_idx[r], self.stencil_w[r]):
                rr = self.node_rank[sj]
                if rr >= 0:
                    self.V[j, rr] += swt

    def slaved_velocities(self, positions):
        vel = self.base_vel.copy()
        for r, j in enumerate(self.node_index):
            vel[j] = self.stencil_w[r] @ positions[self.stencil_idx[r]]
        return vel


class DofMap:
    """Flat vector layout: [traj1 interior nodes x (x,y,z), traj2 ...].

    apply() composes absolute interior positions into a trajectory pair with
    slaved interior velocities; perturbations() linearizes the same map, so
    quadratic models built on the perturbation fields match finite
    differences of apply() exactly.
    """

    def __init__(self, pair, bd: BoundaryData):
        self.bd = bd
        t1 = _TrajDofs(pair[0], bd, 0)
        t2 = _TrajDofs(pair[1], bd, 3 * t1.n_int)
        self.traj = (t1, t2)
        self.n_dof = 3 * (t1.n_int + t2.n_int)
        self._template = pair

    def columns(self, particle):
        td = self.traj[particle - 1]
        return td.col0, td.col0 + 3 * td.n_int

    def positions(self, pair=None):
        pair = self._template if pair is None else pair
        return np.concatenate(
            [pair[k].values[self.traj[k].node_index].ravel() for k in (0, 1)]
        )

    def _split(self, u):
        t1, t2 = self.traj
        a = u[: 3 * t1.n_int].reshape(t1.n_int, 3)
        b = u[3 * t1.n_int:].reshape(t2.n_int, 3)
        return a, b

    def apply(self, R):
        """Trajectory pair with interior positions R and slaved velocities."""
        parts = self._split(np.asarray(R, dtype=float))
        out = []
        for td, tr0, part in zip(self.traj, self._template, parts):
            pos = td.base_pos.copy()
            pos[td.node_index] = part
            vel = td.slaved_velocities(pos)
            out.append(tr0.with_nodes(pos, vel))
        return tuple(out)

    def perturbations(self, du):
        """Node-level perturbation fields induced by a dof displacement."""
        parts = self._split(np.asarray(du, dtype=float))
        out = []
        for td, part in zip(self.traj, parts):
            dpos = td.P @ part
            dvel = td.V @ part
            out.append(Perturbation(td.times, dpos, dvel, require_endpoints=False))
        return tuple(out)

    def pull_back(self, grad_results):
        """Chain rule: node-data gradients -> dof gradient (dS/dR)."""
        g = np.zeros(self.n_dof)
        for gr in grad_results:
            td = self.traj[gr.particle - 1]
            block = td.P[gr.node_index].T @ gr.pos + td.V[gr.node_index].T @ gr.vel
            g[td.col0: td.col0 + 3 * td.n_int] += block.ravel()
        return g

    def shape_matrix(self, particle, ts, order):
        """(len(ts), n_int) scalar rows of the b-field derivative of `order`
        at parameters ts, one column per interior node of the trajectory."""
        td = self.traj[particle - 1]
        ts = np.asarray(ts, dtype=float)
        times = td.times
        idx = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, len(times) - 2)
        h = times[idx + 1] - times[idx]
        s = (ts - times[idx]) / h
        h00, h10, h01, h11 = hermite_shapes(s, h, order)
        rows = (
            h00[:, None] * td.P[idx]
            + h01[:, None] * td.P[idx + 1]
            + h10[:, None] * td.V[idx]
            + h11[:, None] * td.V[idx + 1]
        )
        return rows

    def min_cell(self, particle):
        td = self.traj[particle - 1]
        return float(np.min(np.diff(td.times)))

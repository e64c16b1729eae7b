"""Noether four-momentum and angular momentum: local particle terms plus the
finite lightcone-tail double integrals with the formal delta derivative."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._mesh import gauss_cells
from .action import charge_factor
from .errors import NearLuminalJacobian
from .lightcone import ADVANCED, EPS_J_REL, RETARDED, find_root, roots_for_events
from .minkowski import mdot
from .trajectory import BoundaryData, Trajectory

__all__ = [
    "particle_momentum",
    "noether_momentum",
    "noether_angular",
    "NoetherState",
    "conservation_drift",
]


def _gamma(tr, t):
    v = tr.velocity(np.atleast_1d(t))
    v2 = np.sum(v * v, axis=-1)
    if np.any(v2 >= 1.0):
        raise NearLuminalJacobian("superluminal point in momentum evaluation")
    return 1.0 / np.sqrt(1.0 - v2)


def particle_momentum(pair, bd: BoundaryData, which, t) -> np.ndarray:
    """m gamma (1, v) minus the branch terms xdot_partner/(2|J|) at the roots."""
    tr = pair[which - 1]
    partner = pair[2 - which]
    cf = charge_factor(pair)
    g = _gamma(tr, t)[0]
    v = tr.velocity(float(t))
    p = tr.mass * g * np.concatenate([[1.0], v])
    x, _, _ = tr.state4(float(t))
    for side in (RETARDED, ADVANCED):
        root = find_root(partner, x[0], side, interval=bd.full_window(partner.particle))
        if abs(root.jacobian) < EPS_J_REL * max(root.r, 1e-300):
            raise NearLuminalJacobian("momentum Jacobian below guard")
        _, v2, _ = partner.state4(root.t_other)
        p -= cf * v2[0] / (2.0 * abs(root.jacobian))
    return p


def _tail_kernel_momentum(ctx_arrays):
    """d/dlam2 of [ (x1-x2)^mu (xdot1.xdot2) / (2 K2) ] at the roots."""
    x12, v1, v2, a2, K2 = ctx_arrays
    P = mdot(v1, v2)
    dP = mdot(v1, a2)
    K2d2 = -mdot(v2, v2) + mdot(x12, a2)
    g = x12 * P[:, None]
    dg = -v2 * P[:, None] + x12 * dP[:, None]
    return (dg * K2[:, None] - g * K2d2[:, None]) / (2.0 * K2**2)[:, None]


def _antisym(A, B):
    return A[:, :, None] * B[:, None, :] - B[:, :, None] * A[:, None, :]


def _tail_kernel_angular(ctx_arrays):
    """d/dlam2 of [ ((x1^a x2^b - x1^b x2^a) P + s (v1^a v2^b - ...)) / (2 K2) ]
    returns the two kernels (position part, velocity part) separately."""
    x1, x2, v1, v2, a2, x12, K2 = ctx_arrays
    P = mdot(v1, v2)
    dP = mdot(v1, a2)
    K2d2 = -mdot(v2, v2) + mdot(x12, a2)
    gx = _antisym(x1, x2) * P[:, None, None]
    dgx = (
        _antisym(x1, v2) * P[:, None, None]
        + _antisym(x1, x2) * dP[:, None, None]
    )
    gv = _antisym(v1, v2)
    dgv = _antisym(v1, a2)
    den = (2.0 * K2**2)[:, None, None]
    kx = (dgx * K2[:, None, None] - gx * K2d2[:, None, None]) / den
    kv = (dgv * K2[:, None, None] - gv * K2d2[:, None, None]) / den
    return kx, kv


def _tail_integral(pair, win1, win2, n_gauss, kernel, extra_edges=()):
    """Outer quadrature over win1 of the Definition-1 root sum of the formal
    delta-derivative kernel, roots restricted to win2 (closed-left, open-right).

    extra_edges split outer cells where a root crosses the win2 boundary (the
    integrand jumps there as a lightcone pair enters the window).
    """
    tr1, tr2 = pair
    a, b = win1
    if b <= a:
        return 0.0
    edges = np.unique(np.concatenate([tr1.times, np.asarray(extra_edges, dtype=float)]))
    t, w = gauss_cells(edges, a, b, n_gauss)
    if len(t) == 0:
        return 0.0
    pos1 = tr1.position(t)
    total = 0.0
    for side in (RETARDED, ADVANCED):
        t2, J, x12, r, ok = roots_for_events(tr2, t, pos1, side, interval=win2)
        if not np.any(ok):
            continue
        if np.any(np.abs(J[ok]) < EPS_J_REL * np.maximum(r[ok], 1e-300)):
            raise NearLuminalJacobian("tail Jacobian below guard")
        x1s, v1s, _ = tr1.state4(t[ok])
        x2s, v2s, a2s = tr2.state4(t2[ok])
        vals = kernel((x1s, x2s, v1s, v2s, a2s, x12[ok], J[ok]))
        weights = w[ok] / (2.0 * np.abs(J[ok]))
        total = total + np.tensordot(weights, vals, axes=(0, 0))
    return total


def _cone_images(pair, bd, t2):
    """Parameters on trajectory 1 whose lightcone pairs cross t2 (outer-cell
    split points for the tail windows)."""
    out = []
    x2, _, _ = pair[1].state4(t2)
    for side in (RETARDED, ADVANCED):
        try:
            out.append(find_root(pair[0], x2[0], side, interval=bd.full_window(1)).t_other)
        except Exception:
            pass
    return out


def noether_momentum(pair, bd: BoundaryData, t1, t2, n_gauss=4) -> np.ndarray:
    """p1 + p2 plus the two tail double integrals over the paper's windows."""
    cf = charge_factor(pair)
    p = particle_momentum(pair, bd, 1, t1) + particle_momentum(pair, bd, 2, t2)

    def kern(arrs):
        x1s, x2s, v1s, v2s, a2s, x12, K2 = arrs
        return _tail_kernel_momentum((x12, v1s, v2s, a2s, K2))

    edges = _cone_images(pair, bd, t2)
    tail_a = _tail_integral(pair, (t1, bd.lambda1_plus), (bd.lambda2_minus, t2),
                            n_gauss, kern, edges)
    tail_b = _tail_integral(pair, (bd.t_oa, t1), (t2, bd.t2_end),
                            n_gauss, kern, edges)
    return p + cf * (-2.0 * tail_a + 2.0 * tail_b)


def noether_angular(pair, bd: BoundaryData, t1, t2, n_gauss=4) -> np.ndarray:
    """Antisymmetric L^{ab}: orbital terms x ^ p plus the four tail integrals."""
    cf = charge_factor(pair)
    L = np.zeros((4, 4))
    for which, tt in ((1, t1), (2, t2)):
        x, _, _ = pair[which - 1].state4(float(tt))
        pw = particle_momentum(pair, bd, which, tt)
        L += np.outer(x[0], pw) - np.outer(pw, x[0])

    def kern_x(arrs):
        kx, _ = _tail_kernel_angular(arrs)
        return kx

    def kern_v(arrs):
        _, kv = _tail_kernel_angular(arrs)
        return kv

    edges = _cone_images(pair, bd, t2)
    wa = ((t1, bd.lambda1_plus), (bd.lambda2_minus, t2))
    wb = ((bd.t_oa, t1), (t2, bd.t2_end))
    L += cf * (-2.0) * _tail_integral(pair, wa[0], wa[1], n_gauss, kern_x, edges)
    L += cf * (+2.0) * _tail_integral(pair, wb[0], wb[1], n_gauss, kern_x, edges)
    L += cf * (+1.0) * _tail_integral(pair, wa[0], wa[1], n_gauss, kern_v, edges)
    L += cf * (-1.0) * _tail_integral(pair, wb[0], wb[1], n_gauss, kern_v, edges)
    return 0.5 * (L - L.T)


@dataclass
class NoetherState:
    t1: float
    t2: float
    p: np.ndarray
    L: np.ndarray

    @property
    def l_xy(self):
        return float(self.L[1, 2])


def conservation_drift(pair, bd: BoundaryData, eval_pairs, n_gauss=4):
    """Noether states at lightcone-paired evaluation points plus the max
    relative drift of p and L_xy across them."""
    states = []
    for t1, t2 in eval_pairs:
        p = noether_momentum(pair, bd, t1, t2, n_gauss)
        L = noether_angular(pair, bd, t1, t2, n_gauss)
        states.append(NoetherState(float(t1), float(t2), p, L))
    ps = np.array([s.p for s in states])
    ls = np.array([s.l_xy for s in states])
    p_scale = max(float(np.max(np.linalg.norm(ps, axis=1))), 1e-300)
    p_drift = float(np.max(np.linalg.norm(ps - ps.mean(axis=0), axis=1))) / p_scale
    l_scale = max(float(np.max(np.abs(ls))), 1e-300)
    l_drift = float(np.max(np.abs(ls - ls.mean()))) / l_scale
    return states, p_drift, l_drift

"""Second variation about a base orbit: analytic quadratic forms from the
formal delta-derivative calculus, the Hessian over grid-node perturbations,
the large-radius closed forms, and the bifurcation scan."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._mesh import gauss_cells
from .action import charge_factor
from .dof import DofMap
from .errors import NearLuminalJacobian, SuperluminalOrbit
from .lightcone import ADVANCED, EPS_J_REL, RETARDED, roots_for_events
from .minkowski import mdot
from .trajectory import BoundaryData, Perturbation, Trajectory, subluminal_margin

__all__ = [
    "QuadraticForm",
    "kinetic_quadratic",
    "interaction_quadratic",
    "assemble_hessian",
    "large_radius_forms",
    "vanish_integral",
    "position_form_lower_bound",
    "fourier_bound_check",
    "bifurcation_scan",
]


# -- pointwise context of base-orbit scalars ---------------------------------

class _Ctx:
    """Base states and scalar derivatives at lightcone-paired points.

    K1 = -(x12.v1) and K2 = +(x12.v2) are the signed half-Jacobians of the
    separation in each parameter; suffixes d1/d2 are partial derivatives.
    """

    def __init__(self, tr1: Trajectory, tr2: Trajectory, t1, t2):
        self.t1, self.t2 = t1, t2
        self.x1 = np.concatenate([t1[:, None], tr1.position(t1)], axis=1)
        self.v1 = np.concatenate([np.ones_like(t1)[:, None], tr1.velocity(t1)], axis=1)
        self.a1 = np.concatenate([np.zeros_like(t1)[:, None], tr1.acceleration(t1)], axis=1)
        self.j1 = np.concatenate([np.zeros_like(t1)[:, None], tr1.jerk(t1)], axis=1)
        self.x2 = np.concatenate([t2[:, None], tr2.position(t2)], axis=1)
        self.v2 = np.concatenate([np.ones_like(t2)[:, None], tr2.velocity(t2)], axis=1)
        self.a2 = np.concatenate([np.zeros_like(t2)[:, None], tr2.acceleration(t2)], axis=1)
        self.j2 = np.concatenate([np.zeros_like(t2)[:, None], tr2.jerk(t2)], axis=1)
        self.x12 = self.x1 - self.x2
        self.P = mdot(self.v1, self.v2)
        self.P1 = mdot(self.a1, self.v2)
        self.P2 = mdot(self.v1, self.a2)
        self.P11 = mdot(self.j1, self.v2)
        self.P22 = mdot(self.v1, self.j2)
        self.P12 = mdot(self.a1, self.a2)
        self.K1 = -mdot(self.x12, self.v1)
        self.K2 = mdot(self.x12, self.v2)
        self.K1d1 = -mdot(self.v1, self.v1) - mdot(self.x12, self.a1)
        self.K1d2 = self.P
        self.K1d11 = -3 * mdot(self.v1, self.a1) - mdot(self.x12, self.j1)
        self.K1d12 = mdot(self.v2, self.a1)
        self.K2d2 = -mdot(self.v2, self.v2) + mdot(self.x12, self.a2)
        self.K2d1 = self.P
        self.K2d22 = -3 * mdot(self.v2, self.a2) + mdot(self.x12, self.j2)


def _emit_interaction_pieces(c: _Ctx, vv, mm):
    """All second-order interaction terms after the integration-by-parts of
    the formal delta derivatives, as bilinear pieces in the perturbation
    fields.  vv(coef, i, oi, A, j, oj, B) accumulates coef*(A.b_i^(oi))(B.b_j^(oj));
    mm(coef, i, oi, j, oj) accumulates coef*(b_i^(oi) . b_j^(oj)) (Minkowski).

    Monomials carrying b_k are integrated by parts in lambda_k so the boundary
    terms vanish under the exchange-of-history conditions; the cross monomials
    use one integration in each variable.
    """
    P, P1, P2, P11, P22, P12 = c.P, c.P1, c.P2, c.P11, c.P22, c.P12
    K1, K2 = c.K1, c.K2
    K1d1, K1d11, K1d12 = c.K1d1, c.K1d11, c.K1d12
    K2d2, K2d22 = c.K2d2, c.K2d22
    x12, v1, v2, a1, a2 = c.x12, c.v1, c.v2, c.a1, c.a2

    # velocity-velocity term (delta_D, no integration by parts)
    mm(np.ones_like(P), 1, 1, 2, 1)

    # |b1 - b2|^2 (xdot1.xdot2) delta'_D, monomial-wise
    mm(P1 / (2 * K1) - P * K1d1 / (2 * K1**2), 1, 0, 1, 0)
    mm(P / K1, 1, 0, 1, 1)
    mm(-2 * (P1 / (2 * K1) - P * K1d1 / (2 * K1**2)), 1, 0, 2, 0)
    mm(-P / K1, 1, 1, 2, 0)
    mm(P2 / (2 * K2) - P * K2d2 / (2 * K2**2), 2, 0, 2, 0)
    mm(P / K2, 2, 0, 2, 1)

    # 2 [x12.(b1-b2)] (xdot2.bdot1 + xdot1.bdot2) delta'_D
    # Dv = (v2.bdot1)+(v1.bdot2); dDv/d1 = (v2.bddot1)+(a1.bdot2); /d2 sym.
    def vv_lin(coef, A, B):
        for ca, ia, oa, va in A:
            for cb, ib, ob, vb in B:
                vv(coef * ca * cb, ia, oa, va, ib, ob, vb)

    one = np.ones_like(P)
    Dv = [(one, 1, 1, v2), (one, 2, 1, v1)]
    Dv_d1 = [(one, 1, 2, v2), (one, 2, 1, a1)]
    Dv_d2 = [(one, 1, 1, a2), (one, 2, 2, v1)]
    c1 = [(one, 1, 0, x12)]
    c1p = [(one, 1, 0, v1), (one, 1, 1, x12)]                       # d c1/d1
    c1pp = [(one, 1, 0, a1), (2 * one, 1, 1, v1), (one, 1, 2, x12)]  # d2 c1/d1d1
    c2 = [(one, 2, 0, x12)]
    c2p = [(-one, 2, 0, v2), (one, 2, 1, x12)]                      # d c2/d2
    c2pp = [(-one, 2, 0, a2), (-2 * one, 2, 1, v2), (one, 2, 2, x12)]
    e1 = [(-one, 1, 0, v2)]    # d c1/d2
    e1p = [(-one, 1, 1, v2)]   # d2 c1/d1d2
    g2 = [(one, 2, 0, v1)]     # d c2/d1
    g2p = [(one, 2, 1, v1)]    # d2 c2/d1d2

    vv_lin(1.0 / K1, c1p, Dv)
    vv_lin(1.0 / K1, c1, Dv_d1)
    vv_lin(-K1d1 / K1**2, c1, Dv)
    vv_lin(-1.0 / K2, c2p, Dv)
    vv_lin(-1.0 / K2, c2, Dv_d2)
    vv_lin(K2d2 / K2**2, c2, Dv)

    # 2 (xdot1.xdot2) [x12.(b1-b2)]^2 delta''_D, two integrations by parts
    a1_ = P / K1
    da1 = P1 / K1 - P * K1d1 / K1**2
    dda1 = P11 / K1 - 2 * P1 * K1d1 / K1**2 - P * K1d11 / K1**2 + 2 * P * K1d1**2 / K1**3
    r_, rr_ = 1.0 / (2 * K1), K1d1 / (2 * K1**2)
    vv_lin(r_ * dda1 - rr_ * da1, c1, c1)
    vv_lin(r_ * 4 * da1 - rr_ * 2 * a1_, c1, c1p)
    vv_lin(r_ * 2 * a1_, c1p, c1p)
    vv_lin(r_ * 2 * a1_, c1, c1pp)

    a2_ = P / K2
    da2 = P2 / K2 - P * K2d2 / K2**2
    dda2 = P22 / K2 - 2 * P2 * K2d2 / K2**2 - P * K2d22 / K2**2 + 2 * P * K2d2**2 / K2**3
    s_, ss_ = 1.0 / (2 * K2), K2d2 / (2 * K2**2)
    vv_lin(s_ * dda2 - ss_ * da2, c2, c2)
    vv_lin(s_ * 4 * da2 - ss_ * 2 * a2_, c2, c2p)
    vv_lin(s_ * 2 * a2_, c2p, c2p)
    vv_lin(s_ * 2 * a2_, c2, c2pp)

    # cross monomial -4 P c1 c2, by parts in lambda1 then lambda2
    am = -2 * P / K1
    dam_1 = -2 * P1 / K1 + 2 * P * K1d1 / K1**2
    dam_2 = -2 * P2 / K1 + 2 * P * c.K1d2 / K1**2
    ddam_12 = (
        -2 * P12 / K1
        + 2 * P1 * c.K1d2 / K1**2
        + 2 * P2 * K1d1 / K1**2
        + 2 * P * K1d12 / K1**2
        - 4 * P * K1d1 * c.K1d2 / K1**3
    )
    q_, qq_ = 1.0 / (2 * K2), K2d2 / (2 * K2**2)
    vv_lin(q_ * ddam_12 - qq_ * dam_1, c1, c2)
    vv_lin(q_ * dam_1, e1, c2)
    vv_lin(q_ * dam_1, c1, c2p)
    vv_lin(q_ * dam_2 - qq_ * am, c1p, c2)
    vv_lin(q_ * dam_2 - qq_ * am, c1, g2)
    vv_lin(q_ * am, e1p, c2)
    vv_lin(q_ * am, c1p, c2p)
    vv_lin(q_ * am, e1, g2)
    vv_lin(q_ * am, c1, g2p)


def _interaction_points(pair, bd: BoundaryData, n_gauss):
    """Outer quadrature points on trajectory 1's full window with both branch
    roots inside trajectory 2's full window; yields (ctx, pref) per branch."""
    tr1, tr2 = pair
    a, b = bd.full_window(1)
    t, w = gauss_cells(tr1.times, a, b, n_gauss)
    x1pos = tr1.position(t)
    win2 = bd.full_window(2)
    cf = charge_factor(pair)
    for side in (RETARDED, ADVANCED):
        t2, J, x12, r, ok = roots_for_events(tr2, t, x1pos, side, interval=win2)
        if not np.any(ok):
            continue
        if np.any(np.abs(J[ok]) < EPS_J_REL * np.maximum(r[ok], 1e-300)):
            raise NearLuminalJacobian("second-variation Jacobian below guard")
        ctx = _Ctx(tr1, tr2, t[ok], t2[ok])
        pref = cf * w[ok] / (2.0 * np.abs(J[ok]))
        yield ctx, pref


def interaction_quadratic(pair, bpair, bd: BoundaryData, n_gauss=4) -> float:
    """Second-order interaction term evaluated on explicit perturbation
    fields; equals the eps^2 coefficient (half the second derivative) of the
    interaction along (b1, b2)."""
    b1, b2 = bpair
    total = 0.0
    for ctx, pref in _interaction_points(pair, bd, n_gauss):
        f1 = b1.b4(ctx.t1)
        f2 = b2.b4(ctx.t2)
        fields = {1: f1, 2: f2}
        acc = np.zeros_like(pref)

        def vv(coef, i, oi, A, j, oj, B):
            acc_local = mdot(A, fields[i][oi]) * mdot(B, fields[j][oj])
            np.add(acc, coef * acc_local, out=acc)

        def mm(coef, i, oi, j, oj):
            np.add(acc, coef * mdot(fields[i][oi], fields[j][oj]), out=acc)

        _emit_interaction_pieces(ctx, vv, mm)
        total += float(np.sum(pref * acc))
    return total


def kinetic_quadratic(tr: Trajectory, b: Perturbation, window=None, n_gauss=4) -> float:
    """m * integral of [(xdot_c.bdot)^2 - xdot_c^2 bdot^2] / (2 (xdot_c.xdot_c)^(3/2));
    nonnegative for subluminal bases."""
    if subluminal_margin(tr) <= 0:
        raise SuperluminalOrbit("kinetic quadratic needs a subluminal base")
    a_, b_ = tr.span if window is None else window
    t, w = gauss_cells(tr.times, a_, b_, n_gauss)
    _, v4, _ = tr.state4(t)
    s = mdot(v4, v4)
    _, bd4, _ = b.b4(t)
    num = mdot(v4, bd4) ** 2 - s * mdot(bd4, bd4)
    return tr.mass * float(np.sum(w * num / (2.0 * s**1.5)))


@dataclass
class QuadraticForm:
    """Dense symmetric second-derivative matrix over interior grid-node
    spatial displacements of both particles; value(u) equals twice the sum of
    the kinetic and interaction quadratic forms of the induced fields."""

    matrix: np.ndarray
    dofmap: DofMap
    base_pair: tuple
    raw_asymmetry: float

    @property
    def n(self):
        return self.matrix.shape[0]

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return float(u @ self.matrix @ u)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def min_eigenvalue(self):
        return float(self.eigenvalues()[0])

    def min_eigenpair(self):
        vals, vecs = np.linalg.eigh(self.matrix)
        return float(vals[0]), vecs[:, 0]

    def symmetry_defect(self):
        d = np.linalg.norm(self.matrix - self.matrix.T)
        return float(d / max(np.linalg.norm(self.matrix), 1e-300))


def assemble_hessian(pair, bd: BoundaryData, n_gauss=4, dofmap=None,
                     batch=192) -> QuadraticForm:
    """Assemble the quadratic form matrix from the analytic piece expansion.

    Pieces are merged per point into 3x3 spatial-axis kernels for each
    (trajectory, derivative-order) signature, then contracted with the dof
    shape rows batchwise; only columns active in a batch participate.
    """
    dof = DofMap(pair, bd) if dofmap is None else dofmap
    n = dof.n_dof
    H = np.zeros((n, n))

    def accumulate_batch(ctx, pref, sl):
        tloc = {1: ctx.t1[sl], 2: ctx.t2[sl]}
        m = len(tloc[1])
        if m == 0:
            return
        kernels = {}

        def vv(coef, i, oi, A, j, oj, B):
            key = (i, oi, j, oj)
            C = kernels.get(key)
            if C is None:
                C = np.zeros((m, 3, 3))
                kernels[key] = C
            C += (coef[sl] * pref[sl])[:, None, None] * (
                A[sl, 1:, None] * B[sl, None, 1:]
            )

        def mm(coef, i, oi, j, oj):
            key = (i, oi, j, oj)
            C = kernels.get(key)
            if C is None:
                C = np.zeros((m, 3, 3))
                kernels[key] = C
            cc = coef if np.ndim(coef) else np.full_like(pref, coef)
            C -= np.einsum("q,ab->qab", cc[sl] * pref[sl], np.eye(3))

        _emit_interaction_pieces(ctx, vv, mm)

        rows = {}
        active = {}
        for (i, oi, j, oj) in kernels:
            for tr_id, o in ((i, oi), (j, oj)):
                if (tr_id, o) not in rows:
                    R = dof.shape_matrix(tr_id, tloc[tr_id], o)
                    rows[(tr_id, o)] = R
        # restrict to active columns per trajectory
        col_sets = {}
        for (tr_id, o), R in rows.items():
            key = tr_id
            nz = np.any(R != 0.0, axis=0)
            col_sets[key] = nz if key not in col_sets else (col_sets[key] | nz)
        col_idx = {k: np.nonzero(v)[0] for k, v in col_sets.items()}
        gidx = {}
        for tr_id, cols in col_idx.items():
            c0, _ = dof.columns(tr_id)
            gidx[tr_id] = (
                c0 + 3 * np.repeat(cols, 3) + np.tile(np.arange(3), len(cols))
            )
        for (i, oi, j, oj), C in kernels.items():
            Ri = rows[(i, oi)][:, col_idx[i]]
            Rj = rows[(j, oj)][:, col_idx[j]]
            block = np.einsum("qn,qab,qm->namb", Ri, C, Rj)
            block = block.reshape(3 * Ri.shape[1], 3 * Rj.shape[1])
            H[np.ix_(gidx[i], gidx[j])] += block

    for ctx, pref in _interaction_points(pair, bd, n_gauss):
        M = len(pref)
        for s0 in range(0, M, batch):
            accumulate_batch(ctx, pref, slice(s0, min(s0 + batch, M)))

    # kinetic parts, local in each trajectory
    for tr in pair:
        a_, b_ = bd.variable_window(tr.particle)
        t, w = gauss_cells(tr.times, a_, b_, n_gauss)
        _, v4, _ = tr.state4(t)
        s = mdot(v4, v4)
        coef = tr.mass * w / (2.0 * s**1.5)
        c0, _ = dof.columns(tr.particle)
        for s0 in range(0, len(t), batch):
            sl = slice(s0, min(s0 + batch, len(t)))
            R = dof.shape_matrix(tr.particle, t[sl], 1)
            nz = np.nonzero(np.any(R != 0.0, axis=0))[0]
            Rl = R[:, nz]
            g = c0 + 3 * np.repeat(nz, 3) + np.tile(np.arange(3), len(nz))
            # (v.bdot)^2 - s*(bdot.bdot):  kernel vv(v,v) + mm(-s)
            C = coef[sl, None, None] * (
                v4[sl, 1:, None] * v4[sl, None, 1:]
                + s[sl, None, None] * np.eye(3)[None, :, :]
            )
            block = np.einsum("qn,qab,qm->namb", Rl, C, Rl)
            H[np.ix_(g, g)] += block.reshape(3 * len(nz), 3 * len(nz))

    raw_asym = float(
        np.linalg.norm(H - H.T) / max(np.linalg.norm(H), 1e-300)
    )
    # H is the genuine second derivative: twice the eps^2 Taylor coefficient
    # that kinetic_quadratic/interaction_quadratic return, so that
    # S(x + b) - S(x) = 0.5 b^T H b + O(b^3) at an extremum
    H = H + H.T
    return QuadraticForm(H, dof, pair, raw_asym)


# -- large-radius closed forms ------------------------------------------------

def _cone_measure(pair, bd: BoundaryData, n_gauss, fn):
    """integral_C of a Cartesian integrand fn(ctx) with the delta weights."""
    total = 0.0
    cf = 1.0  # the closed forms carry the attractive convention already
    for ctx, pref in _interaction_points(pair, bd, n_gauss):
        total += float(np.sum(pref * fn(ctx)))
    return total


def large_radius_forms(pair, bpair, bd: BoundaryData, r12, n_gauss=4):
    """The three dominant quadratic pieces at large separation: velocity-
    velocity, position-position, and position-velocity closed forms."""
    b1, b2 = bpair
    m1, m2 = pair[0].mass, pair[1].mass
    M = m1 + m2

    def cart(v4):
        return v4[:, 1:]

    def d2v(ctx):
        bd1 = b1.bdot(ctx.t1)
        bd2 = b2.bdot(ctx.t2)
        return (
            m1 * r12 * np.sum(bd1 * bd1, axis=1)
            + m2 * r12 * np.sum(bd2 * bd2, axis=1)
            - np.sum(bd1 * bd2, axis=1)
        )

    def d2r(ctx):
        bb1 = b1.b(ctx.t1)
        bb2 = b2.b(ctx.t2)
        nhat = ctx.x12[:, 1:] / np.linalg.norm(ctx.x12[:, 1:], axis=1)[:, None]
        nb1 = np.sum(nhat * bb1, axis=1)
        nb2 = np.sum(nhat * bb2, axis=1)
        v1c = cart(ctx.v1)
        v2c = cart(ctx.v2)
        diff = bb1 - bb2
        return (
            np.sum(diff * diff, axis=1) / (2 * r12**2)
            + 3 * (nb1 - nb2) ** 2 / (2 * r12**2)
            + 2 * nb1 * nb2 / r12**2
            + (np.sum(v2c * bb1, axis=1) * np.sum(v1c * bb2, axis=1)
               + np.sum(v1c * bb1, axis=1) * np.sum(v2c * bb2, axis=1)) / r12**2
        )

    def d2vr(ctx):
        bb1, bd1 = b1.b(ctx.t1), b1.bdot(ctx.t1)
        bb2, bd2 = b2.b(ctx.t2), b2.bdot(ctx.t2)
        nhat = ctx.x12[:, 1:] / np.linalg.norm(ctx.x12[:, 1:], axis=1)[:, None]
        v1c = cart(ctx.v1)
        v2c = cart(ctx.v2)
        dv = np.sum(v1c * bd2, axis=1) + np.sum(v2c * bd1, axis=1)
        term1 = dv * (np.sum(nhat * bb1, axis=1) - np.sum(nhat * bb2, axis=1))
        term2 = dv * (np.sum(v1c * bb1, axis=1) - np.sum(v2c * bb2, axis=1))
        return (term1 - term2) / r12

    return {
        "d2V": _cone_measure(pair, bd, n_gauss, d2v),
        "d2R": _cone_measure(pair, bd, n_gauss, d2r),
        "d2VR": _cone_measure(pair, bd, n_gauss, d2vr),
    }


def vanish_integral(pair, bpair, bd: BoundaryData, r12, n_gauss=4) -> float:
    """Position-velocity combination that reduces to an exact differential
    along the cone; vanishes on circular data with matched windows."""
    b1, b2 = bpair

    def fn(ctx):
        bb1, bd1 = b1.b(ctx.t1), b1.bdot(ctx.t1)
        bb2, bd2 = b2.b(ctx.t2), b2.bdot(ctx.t2)
        return (
            np.sum(bd1 * bb2, axis=1)
            - 2 * np.sum(bd1 * bb1, axis=1)
            + np.sum(bd2 * bb1, axis=1)
            - 2 * np.sum(bd2 * bb2, axis=1)
        ) / (2 * r12)

    return _cone_measure(pair, bd, n_gauss, fn)


def position_form_lower_bound(pair, bpair, bd: BoundaryData, r12, n_gauss=4) -> float:
    """-(m1 m2 / (M r12^3)) * integral_C (||b1||^2 + ||b2||^2)."""
    b1, b2 = bpair
    m1, m2 = pair[0].mass, pair[1].mass

    def fn(ctx):
        bb1 = b1.b(ctx.t1)
        bb2 = b2.b(ctx.t2)
        return np.sum(bb1 * bb1, axis=1) + np.sum(bb2 * bb2, axis=1)

    M = m1 + m2
    return -(m1 * m2 / (M * r12**3)) * _cone_measure(pair, bd, n_gauss, fn)


def fourier_bound_check(b: Perturbation, t_phi=None, n_gauss=6):
    """(integral ||bdot||^2, (pi/T_phi)^2 integral ||b||^2); the first
    dominates, with equality only for the pure first mode."""
    lo = float(b.times[0])
    hi = float(b.times[-1]) if t_phi is None else lo + float(t_phi)
    t, w = gauss_cells(b.times, lo, hi, n_gauss)
    bdot = b.bdot(t)
    bval = b.b(t)
    lhs = float(np.sum(w * np.sum(bdot * bdot, axis=1)))
    rhs = (np.pi / (hi - lo)) ** 2 * float(np.sum(w * np.sum(bval * bval, axis=1)))
    return lhs, rhs


# -- bifurcation scan ----------------------------------------------------------

def _scan_one(r12, m1, m2, arc, nodes_per_turn, n_gauss):
    from .circular import kepler_circular, make_circular_ehbc, refine_circular

    t0 = time.perf_counter()
    try:
        spec, _ = kepler_circular(r12, m1=m1, m2=m2, nodes_per_turn=nodes_per_turn)
        ref = refine_circular(spec)
        pair, bd = make_circular_ehbc(ref, arc=arc, nodes_per_turn=nodes_per_turn)
        qf = assemble_hessian(pair, bd, n_gauss=n_gauss)
        mask = np.ones(qf.n, dtype=bool)
        mask[2::3] = False  # in-plane sub-block (z components dropped)
        min_inplane = float(np.linalg.eigvalsh(qf.matrix[np.ix_(mask, mask)])[0])
        return {
            "r12": r12,
            "min_eig": qf.min_eigenvalue(),
            "min_eig_inplane": min_inplane,
            "n_dof": qf.n,
            "status": "ok",
            "runtime": time.perf_counter() - t0,
        }
    except Exception as exc:  # refinement/Jacobian failures become gaps
        return {
            "r12": r12,
            "min_eig": float("nan"),
            "min_eig_inplane": float("nan"),
            "n_dof": 0,
            "status": f"{type(exc).__name__}: {exc}",
            "runtime": time.perf_counter() - t0,
        }


def bifurcation_scan(radii, m1=1.0, m2=1824.0, arc=2 * np.pi, nodes_per_turn=128,
                     n_gauss=3, threads=None):
    """Smallest Hessian eigenvalue per circular radius; failed radii are
    reported as gaps, with no claim about the crossing location."""
    if threads is None:
        threads = int(os.environ.get("WFVAR_THREADS", "1"))
    radii = list(radii)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futs = [ex.submit(_scan_one, r, m1, m2, arc, nodes_per_turn, n_gauss) for r in radii]
            return [f.result() for f in futs]
    return [_scan_one(r, m1, m2, arc, nodes_per_turn, n_gauss) for r in radii]

"""Lightcone root solving, Jacobians, delay rates, and the delta-composed
integrals with their formal derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._mesh import gauss_cells
from .errors import EndpointPerturbed, NearLuminalJacobian, RootNotBracketed
from .minkowski import mdot
from .trajectory import Trajectory

__all__ = [
    "LightconeRoot",
    "find_root",
    "find_all_roots",
    "jacobian_proper",
    "delay_rate",
    "delta_integral",
    "delta_integral_derivative",
    "vector_potential",
    "roots_for_events",
]

RETARDED = "retarded"
ADVANCED = "advanced"

EPS_J_REL = 1e-8        # NearLuminalJacobian guard, relative to separation
BISECT_WIDTH = 1e-10    # bracket width before Newton polishing
NEWTON_STEPS = 5


@dataclass(frozen=True)
class LightconeRoot:
    """One solution of the lightcone condition for a fixed event.

    jacobian is the half-derivative J = (x_event - x_partner) . xdot_partner in
    the partner's coordinate-time parametrization: positive on the retarded
    branch, negative on the advanced one, for subluminal partners.
    """

    t_other: float
    branch: str
    jacobian: float
    separation: np.ndarray  # x_event - x_partner at the root, shape (4,)
    r: float                # spatial distance in lightcone

    @property
    def half_denominator(self) -> float:
        """|d(separation^2)/dt_partner| / 2 = |J|, the Definition-1 weight."""
        return abs(self.jacobian)


def _jacobian_guard(J, r):
    if np.any(np.abs(J) < EPS_J_REL * np.maximum(r, 1e-300)):
        raise NearLuminalJacobian(
            f"|J| = {np.min(np.abs(J)):.3e} below guard {EPS_J_REL:.0e} * r"
        )


def roots_for_events(partner: Trajectory, te, re, branch, interval=None, guard=True):
    """Vectorized lightcone roots on `partner` for events (te, re).

    Returns (t2, J, x12, r, ok) where ok flags events whose root lies inside
    the requested interval (closed left, open right).  Roots are found by
    bisection of the monotone reduced condition followed by Newton polishing.
    """
    te = np.atleast_1d(np.asarray(te, dtype=float))
    re = np.atleast_2d(np.asarray(re, dtype=float))
    sgn = -1.0 if branch == RETARDED else 1.0
    lo0, hi0 = partner.span if interval is None else (float(interval[0]), float(interval[1]))
    lo0 = max(lo0, partner.span[0])
    hi0 = min(hi0, partner.span[1])

    def g(t2):
        # retarded: g = (te - t2) - ||r2(t2) - re||  (strictly decreasing)
        # advanced: g = (t2 - te) - ||r2(t2) - re||  (strictly increasing)
        d = np.linalg.norm(partner.position(t2) - re, axis=-1)
        return sgn * (t2 - te) - d

    lo = np.full(te.shape, lo0)
    hi = np.full(te.shape, hi0)
    glo, ghi = g(lo), g(hi)
    # monotone g: sign change between span ends iff the root is inside; the
    # tolerance admits roots sitting exactly on a span endpoint
    tol_g = 1e-9 * max(1.0, hi0 - lo0)
    ok = (np.minimum(glo, ghi) <= tol_g) & (np.maximum(glo, ghi) >= -tol_g)
    span = hi0 - lo0
    nbis = max(20, int(np.ceil(np.log2(max(span, 1.0) / BISECT_WIDTH))) + 2)
    increasing = branch == ADVANCED
    for _ in range(nbis):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        up = gm < 0 if increasing else gm > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    t2 = 0.5 * (lo + hi)
    # Newton polish on g; g' = sgn - d||r2 - re||/dt2
    for _ in range(NEWTON_STEPS):
        p2 = partner.position(t2)
        v2 = partner.velocity(t2)
        diff = p2 - re
        d = np.linalg.norm(diff, axis=-1)
        gp = sgn - np.sum(v2 * diff, axis=-1) / np.maximum(d, 1e-300)
        step = (sgn * (t2 - te) - d) / gp
        t2 = np.clip(t2 - step, lo0, hi0)
    p2 = partner.position(t2)
    v2 = partner.velocity(t2)
    x12 = np.concatenate([(te - t2)[:, None], re - p2], axis=1)
    v4 = np.concatenate([np.ones_like(t2)[:, None], v2], axis=1)
    J = mdot(x12, v4)
    r = np.linalg.norm(re - p2, axis=-1)
    if interval is not None:
        tol = 1e-12 * max(1.0, abs(hi0 - lo0))
        ok &= (t2 >= lo0 - tol) & (t2 < hi0 - tol)
    if guard and np.any(ok):
        _jacobian_guard(J[ok], r[ok])
    return t2, J, x12, r, ok


def find_root(partner: Trajectory, event, branch, interval=None) -> LightconeRoot:
    """Solve the lightcone condition t2 = t1 -/+ ||r2(t2) - r1|| for one event."""
    ev = np.asarray(event, dtype=float)
    t2, J, x12, r, ok = roots_for_events(partner, ev[0:1], ev[1:4][None, :], branch, interval)
    if not ok[0]:
        raise RootNotBracketed(
            f"{branch} root of event t={ev[0]:.6g} not inside partner span"
        )
    residual = float(mdot(x12[0], x12[0]))
    cone_tol = 1e-10 * (1.0 + float(x12[0] @ x12[0]))
    if abs(residual) > cone_tol:
        raise RootNotBracketed(f"root residual {residual:.3e} exceeds {cone_tol:.3e}")
    return LightconeRoot(float(t2[0]), branch, float(J[0]), x12[0], float(r[0]))


def find_all_roots(partner: Trajectory, event, interval=None):
    """All zeros of the separation d(.) inside the interval, by scan + bisection.

    Handles superluminal partners (several roots, or none).  Each partner
    node interval is subsampled for the scan; every sign-change bracket is
    bisected.  Root at the right interval endpoint is excluded (closed-left,
    open-right convention).
    """
    ev = np.asarray(event, dtype=float)
    te, re = ev[0], ev[1:4]
    lo, hi = partner.span if interval is None else (float(interval[0]), float(interval[1]))
    lo = max(lo, partner.span[0])
    hi = min(hi, partner.span[1])
    if hi <= lo:
        return []
    edges = partner.times[(partner.times > lo) & (partner.times < hi)]
    cuts = np.unique(np.concatenate([[lo], edges, [hi]]))
    sub = 8
    s = np.linspace(0.0, 1.0, sub, endpoint=False)
    ts = (cuts[:-1][:, None] + np.diff(cuts)[:, None] * s[None, :]).ravel()
    ts = np.concatenate([ts, [hi]])

    def dval(t2):
        p2 = partner.position(t2)
        dt = te - np.atleast_1d(t2)
        dr = re[None, :] - np.atleast_2d(p2)
        return dt * dt - np.sum(dr * dr, axis=-1)

    dv = dval(ts)
    roots = []
    scale = max(1.0, hi - lo)
    for k in range(len(ts) - 1):
        a, b = ts[k], ts[k + 1]
        da, db = dv[k], dv[k + 1]
        if da == 0.0:
            roots.append(a)
            continue
        if da * db < 0:
            x, y = a, b
            for _ in range(80):
                m = 0.5 * (x + y)
                dm = float(dval(m)[0])
                if dm == 0.0:
                    x = y = m
                    break
                if (dm > 0) == (da > 0):
                    x = m
                else:
                    y = m
            roots.append(0.5 * (x + y))
    out = []
    for t2 in roots:
        if t2 >= hi - 1e-12 * scale:
            continue
        p2 = partner.position(t2)
        v2 = partner.velocity(t2)
        x12 = np.concatenate([[te - t2], re - p2])
        v4 = np.concatenate([[1.0], v2])
        J = float(mdot(x12, v4))
        r = float(np.linalg.norm(re - p2))
        branch = RETARDED if t2 < te else ADVANCED
        out.append(LightconeRoot(float(t2), branch, J, x12, r))
    return out


def jacobian_proper(root: LightconeRoot, partner: Trajectory) -> float:
    """Proper-time half-Jacobian J_tau = gamma * J_t at the root."""
    v = partner.velocity(root.t_other)
    v2 = float(v @ v)
    if v2 >= 1.0:
        raise NearLuminalJacobian("partner superluminal at root")
    Jtau = root.jacobian / np.sqrt(1.0 - v2)
    if abs(Jtau) < EPS_J_REL * max(root.r, 1e-300):
        raise NearLuminalJacobian(f"|J_tau| = {abs(Jtau):.3e} below guard")
    return float(Jtau)


def delay_rate(traj_self: Trajectory, partner: Trajectory, t_self, branch) -> float:
    """d(tau_partner)/d(tau_self) along the branch: (x12.xdot_self)/(x12.xdot_partner).

    Evaluated in proper-time kinematics; strictly positive for subluminal pairs.
    """
    x1, v1, _ = traj_self.state4(t_self)
    root = find_root(partner, x1[0], branch)
    x2, v2, _ = partner.state4(root.t_other)
    g1 = 1.0 / np.sqrt(mdot(v1[0], v1[0]))
    g2 = 1.0 / np.sqrt(mdot(v2[0], v2[0]))
    num = mdot(root.separation, v1[0] * g1)
    den = mdot(root.separation, v2[0] * g2)
    if abs(den) < EPS_J_REL * max(root.r, 1e-300):
        raise NearLuminalJacobian("delay-rate denominator below guard")
    return float(num / den)


def _pair_of(pair, over):
    """(integrated trajectory, fixed trajectory) for the chosen inner variable."""
    tr1, tr2 = pair
    return (tr2, tr1) if over == 2 else (tr1, tr2)


def delta_integral(pair, f, at, interval, over=2):
    """Definition-1/2 value: sum over lightcone roots of f / |dd/dlambda|.

    pair = (traj1, traj2); the root variable is trajectory `over`'s parameter,
    the other trajectory's parameter is fixed at `at`.  f(lam1, lam2) samples
    the integrand; |dd/dlambda| = 2|J|.  No root inside -> 0.
    """
    inner, outer = _pair_of(pair, over)
    x, _, _ = outer.state4(at)
    total = None
    for root in find_all_roots(inner, x[0], interval):
        _jacobian_guard(np.array([root.jacobian]), np.array([root.r]))
        args = (at, root.t_other) if over == 2 else (root.t_other, at)
        val = np.asarray(f(*args), dtype=float) / (2.0 * abs(root.jacobian))
        total = val if total is None else total + val
    if total is None:
        return 0.0
    return float(total) if total.ndim == 0 else total


def _central_derivative(fun, t0, h):
    """4th-order five-point derivative of a smooth scalar callable."""
    return (
        fun(t0 - 2 * h) - 8 * fun(t0 - h) + 8 * fun(t0 + h) - fun(t0 + 2 * h)
    ) / (12 * h)


def delta_integral_derivative(pair, f, d_eps, at, interval, over=2):
    """Formal-derivative rule: sum over roots of d/dlam[f*d_eps/(2J)] / |2J|.

    d_eps(lam1, lam2) is the direction field dd/deps; it must vanish at the
    interval endpoints of the integrated variable (roots may not cross the
    boundary).  Equals the eps-derivative of delta_integral to O(eps^2).
    """
    inner, outer = _pair_of(pair, over)
    lo, hi = float(interval[0]), float(interval[1])

    def order(lam):
        return (at, lam) if over == 2 else (lam, at)

    for tend in (lo, hi):
        if abs(float(d_eps(*order(tend)))) > 1e-12:
            raise EndpointPerturbed(
                f"direction field nonzero at interval endpoint t={tend:.6g}"
            )

    x_out, _, _ = outer.state4(at)
    xe = x_out[0]

    def signed_2j(lam):
        x_in, v_in, _ = inner.state4(lam)
        return 2.0 * mdot(xe - x_in[0], v_in[0])

    def kernel(lam):
        return float(f(*order(lam))) * float(d_eps(*order(lam))) / signed_2j(lam)

    total = 0.0
    found = False
    for root in find_all_roots(inner, xe, (lo, hi)):
        _jacobian_guard(np.array([root.jacobian]), np.array([root.r]))
        h = 1e-3 * max(root.r, 1e-3)
        h = min(h, 0.25 * (hi - lo))
        total += _central_derivative(kernel, root.t_other, h) / (2.0 * abs(root.jacobian))
        found = True
    return float(total) if found else 0.0


def vector_potential(partner: Trajectory, event, interval=None):
    """Componentwise delta integral of the partner velocity: sum xdot/(2|J|)."""
    ev = np.asarray(event, dtype=float)
    if interval is None:
        interval = partner.span
    total = np.zeros(4)
    for root in find_all_roots(partner, ev, interval):
        _jacobian_guard(np.array([root.jacobian]), np.array([root.r]))
        _, v4, _ = partner.state4(root.t_other)
        total += v4[0] / (2.0 * abs(root.jacobian))
    return total

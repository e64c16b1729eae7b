"""Circular two-body orbits: the large-radius closed-form family, machine
precision refinement on the analytic ansatz, and matching boundary data."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArcTooShort, NoConvergence
from .gradient import lw_force
from .minkowski import FourVector
from .trajectory import BoundaryData, Trajectory

__all__ = [
    "CircularOrbitSpec",
    "kepler_circular",
    "refine_circular",
    "make_circular_ehbc",
    "sample_circular_pair",
    "analytic_state",
]


@dataclass(frozen=True)
class CircularOrbitSpec:
    """Mass-weighted diametrally-opposed circular pair, constant lightcone
    separation r12.  Particle 1 sits at angle `phase` at t = 0, particle 2 at
    phase + pi."""

    r12: float
    omega: float
    v1: float
    v2: float
    phase: float
    m1: float
    m2: float
    rho1: float
    rho2: float
    refined: bool = False
    charge_product: float = -1.0

    @property
    def period(self):
        return 2 * np.pi / self.omega

    def summary(self):
        return {
            "r12": self.r12,
            "omega": self.omega,
            "period": self.period,
            "v1": self.v1,
            "v2": self.v2,
            "rho1": self.rho1,
            "rho2": self.rho2,
            "m1": self.m1,
            "m2": self.m2,
            "phase": self.phase,
            "refined": self.refined,
        }


def kepler_circular(r12, m1=1.0, m2=1824.0, nodes_per_turn=256):
    """Leading-order circular family: speeds v1 = m2/(M sqrt(r12)),
    v2 = m1/(M sqrt(r12)), period 2 pi sqrt(M/(m1 m2)) r12^(3/2).

    Returns the spec and a trajectory pair sampled over one period.
    """
    if r12 <= 0:
        raise ValueError("r12 must be positive")
    M = m1 + m2
    v1 = m2 / (M * np.sqrt(r12))
    v2 = m1 / (M * np.sqrt(r12))
    period = 2 * np.pi * np.sqrt(M / (m1 * m2)) * r12**1.5
    omega = 2 * np.pi / period
    spec = CircularOrbitSpec(
        r12=float(r12), omega=float(omega), v1=float(v1), v2=float(v2),
        phase=0.0, m1=float(m1), m2=float(m2),
        rho1=float(v1 / omega), rho2=float(v2 / omega),
    )
    times = np.linspace(0.0, period, int(nodes_per_turn) + 1)
    return spec, sample_circular_pair(spec, times, times)


def _circle(rho, omega, phase, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ang = omega * t + phase
    c, s = np.cos(ang), np.sin(ang)
    pos = rho * np.stack([c, s, np.zeros_like(c)], axis=1)
    vel = rho * omega * np.stack([-s, c, np.zeros_like(c)], axis=1)
    return pos, vel


def analytic_state(spec: CircularOrbitSpec, particle, t):
    """Exact (position, velocity, proper velocity, proper acceleration) arrays."""
    rho = spec.rho1 if particle == 1 else spec.rho2
    ph = spec.phase if particle == 1 else spec.phase + np.pi
    pos, vel = _circle(rho, spec.omega, ph, t)
    v2 = np.sum(vel * vel, axis=1)
    g = 1.0 / np.sqrt(1.0 - v2)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x4 = np.concatenate([t[:, None], pos], axis=1)
    u = np.concatenate([g[:, None], g[:, None] * vel], axis=1)
    acc = -spec.omega**2 * pos
    aprop = np.concatenate([np.zeros((len(t), 1)), (g**2)[:, None] * acc], axis=1)
    return x4, vel, u, aprop


def sample_circular_pair(spec: CircularOrbitSpec, times1, times2):
    out = []
    for particle, times in ((1, times1), (2, times2)):
        x4, vel, _, _ = analytic_state(spec, particle, times)
        mass = spec.m1 if particle == 1 else spec.m2
        out.append(
            Trajectory(np.asarray(times, dtype=float), x4[:, 1:], vel,
                       particle=particle, mass=mass,
                       charge=-1.0 if particle == 1 else 1.0)
        )
    return tuple(out)


def _cone_delay(omega, rho1, rho2, guess):
    """Constant lightcone separation of the opposed pair:
    D^2 = rho1^2 + rho2^2 + 2 rho1 rho2 cos(omega D)."""
    D = float(guess)
    for _ in range(200):
        f = D * D - (rho1**2 + rho2**2 + 2 * rho1 * rho2 * np.cos(omega * D))
        fp = 2 * D + 2 * rho1 * rho2 * omega * np.sin(omega * D)
        step = f / fp
        D -= step
        if abs(step) <= 1e-16 * max(1.0, abs(D)):
            break
    return D


def _proper_circle_state(rho, omega, phase, t):
    pos, vel = _circle(rho, omega, phase, t)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    v2 = np.sum(vel * vel, axis=1)
    g = 1.0 / np.sqrt(1.0 - v2)
    x4 = np.concatenate([t[:, None], pos], axis=1)
    u = np.concatenate([g[:, None], g[:, None] * vel], axis=1)
    aprop = np.concatenate([np.zeros((len(t), 1)), -(g**2 * omega**2)[:, None] * pos], axis=1)
    return x4[0], u[0], aprop[0]


def _ansatz_residuals(params, spec: CircularOrbitSpec):
    """(radial balance 1, radial balance 2, lightcone separation mismatch)
    on the exact circular ansatz; tangential balance holds by mirror symmetry."""
    omega, rho1, rho2 = params
    cf = -spec.charge_product
    D = _cone_delay(omega, rho1, rho2, spec.r12)
    res = np.zeros(3)
    for k, (m_self, rho_self, ph_self, rho_oth, ph_oth) in enumerate(
        (
            (spec.m1, rho1, spec.phase, rho2, spec.phase + np.pi),
            (spec.m2, rho2, spec.phase + np.pi, rho1, spec.phase),
        )
    ):
        x1, u1, _ = _proper_circle_state(rho_self, omega, ph_self, 0.0)
        F = np.zeros(4)
        for sgn in (-1.0, 1.0):
            x2, u2, a2 = _proper_circle_state(rho_oth, omega, ph_oth, sgn * D)
            F = F + lw_force(x1 - x2, u1, u2, a2)
        v = omega * rho_self
        gam = 1.0 / np.sqrt(1.0 - v * v)
        rhat = np.array([np.cos(ph_self), np.sin(ph_self), 0.0])
        res[k] = cf * float(F[1:] @ rhat) + m_self * gam**2 * omega**2 * rho_self
    res[2] = D - spec.r12
    return res


def refine_circular(spec: CircularOrbitSpec, tol=1e-13, max_iters=100) -> CircularOrbitSpec:
    """Newton-solve (omega, rho1, rho2) so the radial equations of motion and
    the lightcone separation hold on the circular ansatz to machine precision.

    Idempotent: refining a refined spec moves omega below 1e-12 relative.
    """
    p = np.array([spec.omega, spec.rho1, spec.rho2], dtype=float)
    force_tol = tol * max(1.0, spec.r12**-2 * 1e9)  # absolute, ~1e-13 at r12=100
    done = False
    for it in range(max_iters):
        R = _ansatz_residuals(p, spec)
        if max(abs(R[0]), abs(R[1])) <= force_tol and abs(R[2]) <= tol * max(1.0, spec.r12):
            done = True
            break
        J = np.zeros((3, 3))
        for j in range(3):
            dp = np.zeros(3)
            dp[j] = 1e-7 * max(abs(p[j]), 1e-9)
            J[:, j] = (_ansatz_residuals(p + dp, spec) - _ansatz_residuals(p - dp, spec)) / (2 * dp[j])
        try:
            step = np.linalg.solve(J, R)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian in circular refinement: {exc}")
        p = p - step
        if np.any(~np.isfinite(p)) or p[0] <= 0 or p[1] <= 0 or p[2] <= 0:
            raise NoConvergence("circular refinement left the physical domain")
        if np.max(np.abs(step) / np.abs(p)) < 1e-15:
            done = True  # roundoff floor
            break
    if not done:
        R = _ansatz_residuals(p, spec)
        if max(abs(R[0]), abs(R[1])) > 100 * force_tol:
            raise NoConvergence(
                f"circular refinement: {max_iters} iterations exhausted, residual {np.max(np.abs(R[:2])):.2e}"
            )
    omega, rho1, rho2 = p
    return replace(
        spec,
        omega=float(omega), rho1=float(rho1), rho2=float(rho2),
        v1=float(omega * rho1), v2=float(omega * rho2),
        refined=True,
    )


def _ladder_times(seeds, step, lo, hi):
    """Arithmetic lightcone-ladder times {seed + k*step} clipped to [lo, hi]."""
    out = []
    for s in np.atleast_1d(seeds):
        k_lo = int(np.ceil((lo - s) / step - 1e-12))
        k_hi = int(np.floor((hi - s) / step + 1e-12))
        if k_hi >= k_lo:
            out.append(s + step * np.arange(k_lo, k_hi + 1))
    if not out:
        return np.empty(0)
    return np.concatenate(out)


def _mesh_times(lo, hi, ladder, markers, target):
    """Sorted node times: ladder plus markers, gaps filled to `target`,
    near-duplicates merged (markers win)."""
    cand = np.concatenate([[lo, hi], np.asarray(markers, dtype=float), ladder])
    cand = cand[(cand >= lo - 1e-12 * max(1.0, hi - lo)) & (cand <= hi + 1e-12 * max(1.0, hi - lo))]
    cand = np.unique(np.clip(cand, lo, hi))
    keep = [cand[0]]
    min_gap = 1e-6 * target
    protected = set(float(m) for m in markers) | {float(lo), float(hi)}
    for t in cand[1:]:
        if t - keep[-1] < min_gap:
            if float(t) in protected and float(keep[-1]) not in protected:
                keep[-1] = t
            continue
        keep.append(t)
    mesh = [keep[0]]
    for t in keep[1:]:
        gap = t - mesh[-1]
        n_extra = int(np.ceil(gap / target)) - 1
        if n_extra > 0:
            mesh.extend(np.linspace(mesh[-1], t, n_extra + 2)[1:-1])
        mesh.append(t)
    return np.asarray(mesh)


def make_circular_ehbc(spec: CircularOrbitSpec, arc=2 * np.pi, nodes_per_turn=256,
                       n_chains=None):
    """Trajectory pair plus exchange-of-history boundary data for an arc of the
    circular orbit: O_A at phase 0 on trajectory 1, L_B at phase `arc` on
    trajectory 2, histories cut exactly at the endpoint lightcones.

    Node times include the lightcone ladders seeded on both boundary
    segments (the sewing grid of the O_A / L_B anchor chains and their
    companions), so sewing-grid nodes are trajectory nodes.
    """
    if not 0 < arc <= 2 * np.pi + 1e-12:
        raise ArcTooShort("arc must lie in (0, 2*pi]")
    # actual lightcone separation of this ansatz (equals spec.r12 once refined)
    r12 = _cone_delay(spec.omega, spec.rho1, spec.rho2, spec.r12)
    t2_end = arc / spec.omega
    t_oa = 0.0
    l2m, l2p = -r12, r12
    t1_end = t2_end - r12
    l1p = t2_end + r12
    if t1_end <= t_oa or t2_end <= l2p:
        raise ArcTooShort(
            f"arc {arc:.4g} leaves no interior span (T1={t1_end:.4g}, T2={t2_end:.4g})"
        )
    period = spec.period
    target = period / nodes_per_turn
    if n_chains is None:
        n_chains = max(2, int(np.ceil(r12 / target)))
    seeds_fw = np.linspace(l2m, l2p, n_chains)
    seeds_bw = np.linspace(t1_end, l1p, n_chains)
    lad2 = np.concatenate([
        _ladder_times(seeds_fw, 2 * r12, l2m, t2_end),
        _ladder_times(seeds_bw - r12, 2 * r12, l2m, t2_end),
    ])
    lad1 = np.concatenate([
        _ladder_times(seeds_fw + r12, 2 * r12, t_oa, l1p),
        _ladder_times(seeds_bw, 2 * r12, t_oa, l1p),
    ])
    times1 = _mesh_times(t_oa, l1p, lad1, (t_oa, t1_end, l1p), target)
    times2 = _mesh_times(l2m, t2_end, lad2, (l2m, l2p, t2_end), target)
    pair = sample_circular_pair(spec, times1, times2)
    x_oa, _, _, _ = analytic_state(spec, 1, t_oa)
    x_lb, _, _, _ = analytic_state(spec, 2, t2_end)
    bd = BoundaryData(
        o_a=FourVector.from_array(x_oa[0]),
        l_b=FourVector.from_array(x_lb[0]),
        t_oa=t_oa,
        t1_end=t1_end,
        lambda1_plus=l1p,
        lambda2_minus=l2m,
        lambda2_plus=l2p,
        t2_end=t2_end,
        history1=pair[0].segment(t1_end, l1p),
        history2=pair[1].segment(l2m, l2p),
    )
    return pair, bd

"""Lienard-Wiechert forces, equations-of-motion residuals, and the discrete
gradient of the partial action over trajectory node data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._mesh import gauss_cells, hermite_shapes
from .action import charge_factor
from .errors import InvalidEHBC, NearLuminalJacobian
from .lightcone import ADVANCED, EPS_J_REL, RETARDED, roots_for_events
from .minkowski import mdot
from .trajectory import BoundaryData, Perturbation, Trajectory

__all__ = [
    "lw_force",
    "eom_residual",
    "residual_at",
    "residual_pairing",
    "EomResidual",
    "discrete_action_gradient",
    "GradientResult",
    "proper_states",
]


def lw_force(x12, u_target, u_source, a_source):
    """Half-strength Lienard-Wiechert force of one lightcone branch.

    All inputs are proper-time kinematics at the root: x12 = x_target -
    x_source (null), u = four-velocities, a_source = d(u_source)/dtau.
    rho = |x12 . u_source|^3.  Each line is orthogonal to u_target; the
    branch sum gives the Coulomb 1/r^2 in the static limit (the semi-sum
    convention's one-half lives in the denominators).
    """
    x12 = np.asarray(x12, dtype=float)
    J = mdot(x12, u_source)
    rho = np.abs(J) ** 3
    if np.any(rho < (EPS_J_REL * np.maximum(np.abs(x12[..., 0]), 1e-300)) ** 3):
        raise NearLuminalJacobian("lw_force denominator below guard")
    xu1 = mdot(x12, u_target)[..., None]
    line1 = xu1 * a_source - mdot(u_target, a_source)[..., None] * x12
    line2 = xu1 * u_source - mdot(u_target, u_source)[..., None] * x12
    return (J / (2 * rho))[..., None] * line1 + ((1.0 - mdot(x12, a_source)) / (2 * rho))[
        ..., None
    ] * line2


def proper_states(tr: Trajectory, t):
    """(upsilon, dupsilon/dtau, gamma) from coordinate-time node data."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    v = tr.velocity(t)
    a = tr.acceleration(t)
    v2 = np.sum(v * v, axis=-1)
    if np.any(v2 >= 1.0):
        raise NearLuminalJacobian("superluminal point in proper-state conversion")
    g = 1.0 / np.sqrt(1.0 - v2)
    gdot = g**3 * np.sum(v * a, axis=-1)
    u = np.concatenate([g[:, None], g[:, None] * v], axis=1)
    du = np.concatenate(
        [(g * gdot)[:, None], (g * gdot)[:, None] * v + (g**2)[:, None] * a], axis=1
    )
    return u, du, g


@dataclass
class EomResidual:
    times1: np.ndarray
    g1: np.ndarray
    times2: np.ndarray
    g2: np.ndarray

    @property
    def max_norm(self):
        n = 0.0
        for g in (self.g1, self.g2):
            if len(g):
                n = max(n, float(np.max(np.linalg.norm(g, axis=1))))
        return n

    def norms(self, particle):
        g = self.g1 if particle == 1 else self.g2
        return np.linalg.norm(g, axis=1)


def _branch_force_sum(tr: Trajectory, partner: Trajectory, t, window):
    """Sum of the two branch forces on tr's points, proper-time kinematics."""
    x_self, _, _ = tr.state4(t)
    u1, du1, _ = proper_states(tr, t)
    total = np.zeros((len(t), 4))
    for side in (RETARDED, ADVANCED):
        t2, J, x12, r, ok = roots_for_events(partner, t, x_self[:, 1:], side, interval=window)
        if not np.all(ok):
            raise InvalidEHBC(f"{side} root escapes the partner window")
        u2, du2, g2 = proper_states(partner, t2)
        total += lw_force(x12, u1, u2, du2)
    return total, u1, du1


def residual_at(pair, bd: BoundaryData, which, ts):
    """G for trajectory `which` at parameters ts (see eom_residual)."""
    cf = charge_factor(pair)
    tr = pair[which - 1]
    partner = pair[2 - which]
    ts = np.asarray(ts, dtype=float)
    if len(ts) == 0:
        return np.zeros((0, 4))
    F, u1, du1 = _branch_force_sum(tr, partner, ts, bd.full_window(partner.particle))
    return tr.mass * du1 - cf * F


def eom_residual(pair, bd: BoundaryData, at_nodes=True, times=None) -> EomResidual:
    """G_i = m_i dupsilon_i/dtau - sum of branch forces, at interior nodes.

    Vanishes along extremal orbits in the open variable windows; the static
    pair leaves the bare Coulomb attraction as residual.
    """
    out = []
    for tr in pair:
        if times is not None:
            ts = np.asarray(times[tr.particle - 1], dtype=float)
        elif at_nodes:
            ts = tr.times[bd.interior_mask(tr)]
        else:
            a, b = bd.variable_window(tr.particle)
            ts = np.linspace(a, b, 101)[1:-1]
        out.append((ts, residual_at(pair, bd, tr.particle, ts)))
    return EomResidual(out[0][0], out[0][1], out[1][0], out[1][1])


def residual_pairing(pair, bd: BoundaryData, which, b: Perturbation, n_gauss=4) -> float:
    """integral of mink(G, b) gamma dt over the variable window: the continuum
    form of the directional derivative, to compare with the discrete pairing."""
    tr = pair[which - 1]
    a, b_hi = bd.variable_window(which)
    t, w = gauss_cells(tr.times, a, b_hi, n_gauss)
    G = residual_at(pair, bd, which, t)
    b4, _, _ = b.b4(t)
    v = tr.velocity(t)
    gamma = 1.0 / np.sqrt(1.0 - np.sum(v * v, axis=-1))
    return float(np.sum(w * gamma * mdot(G, b4)))


def lagrangian_gradients(tr: Trajectory, partner: Trajectory, bd: BoundaryData, t, cf):
    """Pointwise Minkowski gradients (dL/dx, dL/dxdot) of the partial
    Lagrangian at parameters t, partner fixed; the delay contribution enters
    through the implicit-root derivative dt2/dx1 = x12/J."""
    x_self, v_self, _ = tr.state4(t)
    s_self = mdot(v_self, v_self)
    if np.any(s_self <= 0):
        raise NearLuminalJacobian("superluminal point in gradient evaluation")
    gx = np.zeros((len(t), 4))
    gv = -tr.mass * v_self / np.sqrt(s_self)[:, None]
    window = bd.full_window(partner.particle)
    for side in (RETARDED, ADVANCED):
        t2, J, x12, r, ok = roots_for_events(partner, t, x_self[:, 1:], side, interval=window)
        if not np.all(ok):
            raise InvalidEHBC(f"{side} root escapes the partner window")
        if np.any(np.abs(J) < EPS_J_REL * np.maximum(r, 1e-300)):
            raise NearLuminalJacobian("gradient Jacobian below guard")
        x2, v2, a2 = partner.state4(t2)
        sgn = np.sign(J)
        v1v2 = mdot(v_self, v2)
        v1a2 = mdot(v_self, a2)
        x12a2 = mdot(x12, a2)
        v2v2 = mdot(v2, v2)
        gx += cf * sgn[:, None] * (
            (v1a2 / (2 * J**2))[:, None] * x12
            - (v1v2 / (2 * J**2))[:, None] * v2
            - (v1v2 * (x12a2 - v2v2) / (2 * J**3))[:, None] * x12
        )
        gv += cf * v2 / (2 * np.abs(J))[:, None]
    return gx, gv


@dataclass
class GradientResult:
    """Partial-action gradient with respect to interior node data.

    pos and vel are plain partial derivatives (Euclidean spatial components);
    time components are not varied under the particle-time parametrization.
    """

    particle: int
    node_index: np.ndarray   # indices into the trajectory's node arrays
    node_times: np.ndarray
    pos: np.ndarray          # (n, 3) dS/d(node position)
    vel: np.ndarray          # (n, 3) dS/d(node velocity)

    def as_four_vectors(self):
        z = np.zeros((len(self.node_times), 1))
        return np.concatenate([z, self.pos], axis=1)

    @property
    def max_norm(self):
        if not len(self.pos):
            return 0.0
        return float(np.max(np.linalg.norm(np.concatenate([self.pos, self.vel], axis=1), axis=1)))

    def pair_with(self, b: Perturbation) -> float:
        """<gradient, b> = directional derivative of the partial action along b."""
        return float(
            np.sum(self.pos * b.values[self.node_index])
            + np.sum(self.vel * b.slopes[self.node_index])
        )


def discrete_action_gradient(pair, bd: BoundaryData, which=1, n_gauss=4) -> GradientResult:
    """Gradient of partial_action(which) over interior node positions and
    velocities of trajectory `which` (boundary nodes carry no perturbation)."""
    tr = pair[which - 1]
    partner = pair[2 - which]
    cf = charge_factor(pair)
    a, b = bd.variable_window(which)
    t, w = gauss_cells(tr.times, a, b, n_gauss)
    gx, gv = lagrangian_gradients(tr, partner, bd, t, cf)
    # Minkowski pairing with spatial-only variations: (g . (0, e)) = -g_spatial
    cx = -w[:, None] * gx[:, 1:]
    cv = -w[:, None] * gv[:, 1:]
    idx = np.clip(np.searchsorted(tr.times, t, side="right") - 1, 0, len(tr.times) - 2)
    h = tr.times[idx + 1] - tr.times[idx]
    s = (t - tr.times[idx]) / h
    pos_acc = np.zeros((len(tr.times), 3))
    vel_acc = np.zeros((len(tr.times), 3))
    for order, coef in ((0, cx), (1, cv)):
        h00, h10, h01, h11 = hermite_shapes(s, h, order)
        np.add.at(pos_acc, idx, coef * h00[:, None])
        np.add.at(pos_acc, idx + 1, coef * h01[:, None])
        np.add.at(vel_acc, idx, coef * h10[:, None])
        np.add.at(vel_acc, idx + 1, coef * h11[:, None])
    mask = bd.interior_mask(tr)
    node_index = np.nonzero(mask)[0]
    return GradientResult(
        particle=which,
        node_index=node_index,
        node_times=tr.times[node_index],
        pos=pos_acc[node_index],
        vel=vel_acc[node_index],
    )

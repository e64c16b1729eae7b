"""Finite Fokker-like action, per-particle partial actions, and the
generalized action with kinetic exponent p."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._mesh import gauss_cells
from .errors import (
    NearLuminalJacobian,
    NonIntegerPowerOfNegative,
    SuperluminalOrbit,
)
from .lightcone import ADVANCED, RETARDED, EPS_J_REL, find_all_roots, roots_for_events
from .minkowski import mdot
from .trajectory import BoundaryData, Trajectory, subluminal_margin

__all__ = [
    "ActionBreakdown",
    "interaction_integral",
    "fokker_action",
    "partial_action",
    "generalized_action",
    "classify_extremal",
    "ExtremalClassification",
    "charge_factor",
]


@dataclass(frozen=True)
class ActionBreakdown:
    kinetic1: float
    kinetic2: float
    interaction: float
    p: float

    @property
    def total(self):
        return self.kinetic1 + self.kinetic2 + self.interaction

    def __str__(self):
        return (
            f"kinetic1    = {self.kinetic1:.12e}\n"
            f"kinetic2    = {self.kinetic2:.12e}\n"
            f"interaction = {self.interaction:.12e}\n"
            f"total       = {self.total:.12e}\n"
            f"p           = {self.p:g}"
        )


def charge_factor(pair):
    """Interaction prefactor (-e1*e2); +1 for the electron-proton convention."""
    return -pair[0].charge * pair[1].charge


def darw_windows(bd: BoundaryData, outer_particle=1):
    """Per-branch outer windows of the finite action's interaction term.

    In the t1 variable the advanced part runs over [O_A, T1] and the retarded
    part over [O_A, L+]; together they cover every lightcone pair of the full
    spans rectangle exactly once.  The t2-variable image covers the same pair
    set: advanced pairs over [O+, T2], retarded pairs over [O-, T2].
    """
    if outer_particle == 1:
        return {ADVANCED: (bd.t_oa, bd.t1_end), RETARDED: (bd.t_oa, bd.lambda1_plus)}
    return {ADVANCED: (bd.lambda2_plus, bd.t2_end), RETARDED: (bd.lambda2_minus, bd.t2_end)}


def _branch_quadrature(tr_out, tr_in, window, in_window, side, n_gauss, numerator):
    """Composite-Gauss integral over `window` of numerator/(2|J_in|) at roots.

    side is the branch relative to the outer event ('retarded': partner in its
    past).  Roots falling outside in_window (closed-left, open-right) drop out.
    """
    a, b = window
    t, w = gauss_cells(tr_out.times, a, b, n_gauss)
    if len(t) == 0:
        return 0.0
    x_out, v_out, _ = tr_out.state4(t)
    t2, J, x12, r, ok = roots_for_events(
        tr_in, t, x_out[:, 1:], side, interval=in_window
    )
    if not np.any(ok):
        return 0.0
    if np.any(np.abs(J[ok]) < EPS_J_REL * np.maximum(r[ok], 1e-300)):
        raise NearLuminalJacobian("interaction Jacobian below guard")
    _, v_in, _ = tr_in.state4(t2[ok])
    vals = numerator(v_out[ok], v_in) / (2.0 * np.abs(J[ok]))
    return float(np.sum(w[ok] * vals))


def interaction_integral(pair, bd: BoundaryData, over=1, windows=None, n_gauss=4):
    """Interaction double integral reduced along the chosen outer variable.

    windows maps branch -> outer interval in the t1 variable (the advanced
    branch pairs t1 with the partner's future cone).  over=2 integrates the
    equivalent form with the windows mapped through the lightcone, so both
    choices integrate the same set of lightcone pairs.
    """
    tr1, tr2 = pair
    if windows is None:
        windows = darw_windows(bd, outer_particle=1)
    total = 0.0
    dot = lambda vo, vi: mdot(vo, vi)
    if over == 1:
        for branch, win in windows.items():
            side = RETARDED if branch == RETARDED else ADVANCED
            total += _branch_quadrature(
                tr1, tr2, win, bd.full_window(2), side, n_gauss, dot
            )
    elif over == 2:
        for branch, win in windows.items():
            side_from_1 = RETARDED if branch == RETARDED else ADVANCED
            t2_lo = _mapped_endpoint(tr1, tr2, win[0], side_from_1, bd)
            t2_hi = _mapped_endpoint(tr1, tr2, win[1], side_from_1, bd)
            side_from_2 = ADVANCED if branch == RETARDED else RETARDED
            total += _branch_quadrature(
                tr2, tr1, (t2_lo, t2_hi), bd.full_window(1), side_from_2, n_gauss, dot
            )
    else:
        raise ValueError("over must be 1 or 2")
    return charge_factor(pair) * total


def _mapped_endpoint(tr1, tr2, t1, side, bd):
    """Image of a t1 window endpoint on trajectory 2 along the branch."""
    x, _, _ = tr1.state4(t1)
    t2, _, _, _, ok = roots_for_events(tr2, x[:1, 0], x[:1, 1:], side, guard=False)
    if not ok[0]:
        # endpoint maps onto the partner span boundary (e.g. L+ -> L_B)
        lo, hi = tr2.span
        return float(np.clip(t2[0], lo, hi))
    return float(t2[0])


def _kinetic(tr, window, n_gauss, p=0.5):
    t, w = gauss_cells(tr.times, window[0], window[1], n_gauss)
    _, v4, _ = tr.state4(t)
    s = mdot(v4, v4)
    if p == 0.5:
        if np.any(s < 0):
            raise SuperluminalOrbit("kinetic integrand undefined on superluminal segment")
        return -tr.mass * float(np.sum(w * np.sqrt(s)))
    if np.any(s < 0) and p != int(p):
        raise NonIntegerPowerOfNegative(
            f"(xdot.xdot)^{p} on a superluminal segment is not real"
        )
    return -(tr.mass / (2.0 * p)) * float(np.sum(w * np.sign(s) * np.abs(s) ** p))


def fokker_action(pair, bd: BoundaryData, n_gauss=4) -> ActionBreakdown:
    """Finite action: kinetic terms over the variable windows plus the
    interaction over the full-span rectangle of lightcone pairs."""
    for tr in pair:
        if subluminal_margin(tr) < 0:
            raise SuperluminalOrbit(f"trajectory {tr.particle} has superluminal content")
    k1 = _kinetic(pair[0], bd.variable_window(1), n_gauss)
    k2 = _kinetic(pair[1], bd.variable_window(2), n_gauss)
    inter = interaction_integral(pair, bd, over=1, n_gauss=n_gauss)
    return ActionBreakdown(k1, k2, inter, p=0.5)


def partial_action(pair, bd: BoundaryData, which=1, n_gauss=4) -> float:
    """Single-particle Lagrangian integral over the variable window: kinetic
    term plus both lightcone interaction terms with the partner fixed."""
    tr = pair[which - 1]
    other = pair[2 - which]
    window = bd.variable_window(which)
    k = _kinetic(tr, window, n_gauss)
    cf = charge_factor(pair)
    inter = 0.0
    for side in (RETARDED, ADVANCED):
        inter += _branch_quadrature(
            tr, other, window, bd.full_window(other.particle), side, n_gauss,
            lambda vo, vi: mdot(vo, vi),
        )
    return k + cf * inter


def generalized_action(pair, bd: BoundaryData, p=1.0, n_gauss=4) -> ActionBreakdown:
    """Action with kinetic exponent p and the all-roots interaction; defined
    for every trajectory class when p is a positive integer."""
    if p == 0:
        raise ValueError("kinetic exponent p must be nonzero")
    k1 = _kinetic(pair[0], bd.variable_window(1), n_gauss, p=p)
    k2 = _kinetic(pair[1], bd.variable_window(2), n_gauss, p=p)
    tr1, tr2 = pair
    a, b = bd.full_window(1)
    t, w = gauss_cells(tr1.times, a, b, n_gauss)
    x_out, v_out, _ = tr1.state4(t)
    in_win = bd.full_window(2)
    total = 0.0
    for tq, wq, xq, vq in zip(t, w, x_out, v_out):
        for root in find_all_roots(tr2, xq, in_win):
            if abs(root.jacobian) < EPS_J_REL * max(root.r, 1e-300):
                raise NearLuminalJacobian("interaction Jacobian below guard")
            _, v_in, _ = tr2.state4(root.t_other)
            total += wq * float(mdot(vq, v_in[0])) / (2.0 * abs(root.jacobian))
    return ActionBreakdown(k1, k2, charge_factor(pair) * total, p=p)


@dataclass(frozen=True)
class ExtremalClassification:
    class1: str
    class2: str
    deviation1: float
    deviation2: float

    def constancy_ok(self, tol=1e-10):
        return max(self.deviation1, self.deviation2) < tol


def classify_extremal(pair) -> ExtremalClassification:
    """Orbit class of each trajectory by the sign of (xdot.xdot) at nodes, and
    the max deviation of (xdot.xdot) from its node mean (constant on p != 1/2
    extremals in proper-time-proportional parametrization)."""
    classes = []
    devs = []
    for tr in pair:
        v2 = np.sum(tr.slopes * tr.slopes, axis=1)
        s = 1.0 - v2
        tol = 1e-12 * max(1.0, float(np.max(np.abs(s))))
        if np.all(s > tol):
            cls = "subluminal"
        elif np.all(s < -tol):
            cls = "superluminal"
        elif np.all(np.abs(s) <= tol):
            cls = "luminal"
        else:
            cls = "mixed"
        classes.append(cls)
        devs.append(float(np.max(np.abs(s - np.mean(s)))))
    return ExtremalClassification(classes[0], classes[1], devs[0], devs[1])

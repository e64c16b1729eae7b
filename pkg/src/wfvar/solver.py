"""Action minimization over interior grid-node positions under fixed
exchange-of-history boundary data."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._mesh import gauss_cells
from .action import classify_extremal, fokker_action
from .dof import DofMap
from .errors import InvalidEHBC, NoConvergence, SuperluminalStep
from .gradient import discrete_action_gradient, eom_residual, residual_pairing
from .invariants import conservation_drift
from .lightcone import RETARDED, find_root
from .trajectory import (
    BoundaryData,
    Perturbation,
    perturbation_norm,
    subluminal_margin,
    validate_ehbc,
)

__all__ = ["SolveOptions", "SolveReport", "solve", "minimize_report_consistency"]


@dataclass
class SolveOptions:
    max_iters: int = 100
    gradient_tol: float = 1e-7
    residual_tol: float = 1e-6
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 30
    optimizer: str = "steepest"      # "steepest" | "quasi-newton"
    lbfgs_memory: int = 10
    lbfgs_switch: float = 1e-2       # activate once grad norm falls below this * start
    rebuild_threshold: float = 0.1   # fraction of the min cell width
    n_gauss: int = 4

    def __post_init__(self):
        if min(self.gradient_tol, self.residual_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.optimizer not in ("steepest", "quasi-newton"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class SolveReport:
    iterations: int = 0
    action_history: list = field(default_factory=list)
    gradient_history: list = field(default_factory=list)
    final_gradient_norm: float = np.inf
    final_max_residual: float = np.inf
    converged: bool = False
    step_cap_active: bool = False
    grid_rebuilds: int = 0
    message: str = ""

    def summary(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_gradient_norm": self.final_gradient_norm,
            "final_max_residual": self.final_max_residual,
            "action_initial": self.action_history[0] if self.action_history else np.nan,
            "action_final": self.action_history[-1] if self.action_history else np.nan,
            "step_cap_active": self.step_cap_active,
            "grid_rebuilds": self.grid_rebuilds,
            "message": self.message,
        }


def _dof_gradient(pair, bd, dof, n_gauss):
    g1 = discrete_action_gradient(pair, bd, which=1, n_gauss=n_gauss)
    g2 = discrete_action_gradient(pair, bd, which=2, n_gauss=n_gauss)
    return dof.pull_back((g1, g2))


def _step_norm_cap(dof, direction, margin):
    """Largest multiplier keeping the step's velocity-field sup norm below a
    quarter of the subluminal margin (the small-neighborhood guarantee)."""
    b1, b2 = dof.perturbations(direction)
    sup = max(perturbation_norm(b1), perturbation_norm(b2))
    if sup == 0.0:
        return np.inf
    return (margin / 4.0) / sup


class _Lbfgs:
    def __init__(self, memory):
        self.memory = memory
        self.s = []
        self.y = []

    def push(self, s, y):
        if float(s @ y) > 1e-300:
            self.s.append(s)
            self.y.append(y)
            if len(self.s) > self.memory:
                self.s.pop(0)
                self.y.pop(0)

    def direction(self, g):
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(self.s), reversed(self.y)):
            rho = 1.0 / float(y @ s)
            a = rho * float(s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        if self.y:
            y, s = self.y[-1], self.s[-1]
            q *= float(s @ y) / float(y @ y)
        for a, rho, s, y in reversed(alphas):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q


def solve(pair, bd: BoundaryData, opts: SolveOptions | None = None):
    """Descent on the finite action over interior node positions.

    Accepted steps decrease the action monotonically (Armijo, with a
    parabolic first guess); step lengths are capped so every iterate stays in
    the subluminal neighborhood of the current one.  Returns the solved pair
    and a SolveReport; NoConvergence carries the partial report.
    """
    opts = opts or SolveOptions()
    rep = validate_ehbc(pair, bd)
    if not rep.all_passed:
        raise InvalidEHBC(f"boundary data invalid:\n{rep}")
    dof = DofMap(pair, bd)
    R = dof.positions(pair)
    work = dof.apply(R)
    report = SolveReport()
    margin = min(subluminal_margin(work[0]), subluminal_margin(work[1]))
    if margin <= 0:
        raise SuperluminalStep("initial guess is not subluminal")

    S = fokker_action(work, bd, n_gauss=opts.n_gauss).total
    report.action_history.append(S)
    lbfgs = _Lbfgs(opts.lbfgs_memory)
    g = _dof_gradient(work, bd, dof, opts.n_gauss)
    g0_norm = float(np.max(np.abs(g))) if dof.n_dof else 0.0
    R_ref = R.copy()

    for it in range(opts.max_iters + 1):
        gnorm = float(np.max(np.abs(g)))
        report.gradient_history.append(gnorm)
        if gnorm < opts.gradient_tol:
            report.converged = True
            break
        if it == opts.max_iters:
            report.message = "max_iters exhausted"
            break
        noise_floor = 8.0 * np.finfo(float).eps * abs(S)
        
        use_lbfgs = (
            opts.optimizer == "quasi-newton" and gnorm < opts.lbfgs_switch * g0_norm
        )
        d = lbfgs.direction(g) if use_lbfgs and lbfgs.s else -g
        gd = float(g @ d)
        if gd >= 0:
            d = -g
            gd = float(g @ d)
        cap = _step_norm_cap(dof, d, margin)
        if cap < 1.0:
            report.step_cap_active = True
        alpha = min(1.0, cap)
        S_probe = fokker_action(dof.apply(R + alpha * d), bd, n_gauss=opts.n_gauss).total
        denom = 2.0 * (S_probe - S - alpha * gd)
        if denom > 0:
            alpha = float(np.clip(-gd * alpha**2 / denom, 1e-6 * alpha, cap))
        accepted = False
        for _ in range(opts.max_backtracks):
            S_new = fokker_action(dof.apply(R + alpha * d), bd, n_gauss=opts.n_gauss).total
            if S_new < S and S_new <= S + opts.armijo_c * alpha * gd:
                accepted = True
                break
            if abs(S_new - S) <= noise_floor and -alpha * gd <= noise_floor:
                break  # decrease below the float resolution of the action
            alpha *= opts.backtrack_factor
        if not accepted:
            # stalled at the action's float noise floor; the pointwise
            # residual decides whether this is a solution
            if eom_residual(work, bd).max_norm < opts.residual_tol:
                report.converged = True
                report.message = "stalled at float noise floor with residual below tolerance"
            else:
                report.message = "line search failed to decrease the action"
            break
        g_prev, R_prev = g, R.copy()
        R = R + alpha * d
        work = dof.apply(R)
        new_margin = min(subluminal_margin(work[0]), subluminal_margin(work[1]))
        if new_margin <= 0:
            raise SuperluminalStep("step cap failed to preserve subluminality")
        margin = new_margin
        S = S_new
        report.action_history.append(S)
        report.iterations = it + 1
        g = _dof_gradient(work, bd, dof, opts.n_gauss)
        lbfgs.push(R - R_prev, g - g_prev)
        # chain positions are state-dependent; with node times frozen a large
        # enough displacement invalidates the cell structure, so re-anchor
        disp = float(np.max(np.abs(R - R_ref)))
        if disp > opts.rebuild_threshold * min(dof.min_cell(1), dof.min_cell(2)):
            report.grid_rebuilds += 1
            R_ref = R.copy()

    report.final_gradient_norm = float(np.max(np.abs(g)))
    report.final_max_residual = eom_residual(work, bd).max_norm
    if not report.converged:
        raise NoConvergence(report.message or "did not converge", report=report)
    return work, report


@dataclass
class ConsistencyReport:
    gradient_residual_gap: float
    noether_p_drift: float
    noether_l_drift: float
    xdot_constancy: tuple
    max_residual: float
    gradient_norm: float

    def all_ok(self, residual_tol=1e-6, drift_tol=1e-6):
        return self.max_residual < residual_tol and self.noether_p_drift < drift_tol


def _sine_direction(tr, bd, k=1):
    a, b = bd.variable_window(tr.particle)
    t = tr.times
    vals = np.zeros((len(t), 3))
    slopes = np.zeros((len(t), 3))
    s = (t - a) / (b - a)
    inside = (t >= a) & (t <= b)
    vals[inside, 0] = np.sin(np.pi * k * s[inside])
    slopes[inside, 0] = (np.pi * k / (b - a)) * np.cos(np.pi * k * s[inside])
    for idx in np.nonzero(~bd.interior_mask(tr))[0]:
        vals[idx] = 0.0
        if t[idx] <= a or t[idx] >= b:
            slopes[idx] = 0.0
    return Perturbation(t, vals, slopes)


def minimize_report_consistency(pair, bd: BoundaryData, n_gauss=4) -> ConsistencyReport:
    """Cross-checks at a solution: the continuum residual pairing against the
    discrete gradient along a smooth direction, Noether drift, and constancy
    of (xdot.xdot)."""
    res = eom_residual(pair, bd, at_nodes=True)
    gap = 0.0
    for which in (1, 2):
        b = _sine_direction(pair[which - 1], bd)
        lhs = residual_pairing(pair, bd, which, b, n_gauss)
        rhs = discrete_action_gradient(pair, bd, which, n_gauss).pair_with(b)
        gap = max(gap, abs(lhs - rhs))
    grad1 = discrete_action_gradient(pair, bd, 1, n_gauss)
    grad2 = discrete_action_gradient(pair, bd, 2, n_gauss)
    t1s = np.linspace(bd.t_oa + 0.2 * (bd.t1_end - bd.t_oa),
                      bd.t_oa + 0.8 * (bd.t1_end - bd.t_oa), 5)
    pairs = []
    for t1 in t1s:
        x, _, _ = pair[0].state4(t1)
        pairs.append((t1, find_root(pair[1], x[0], RETARDED).t_other))
    _, pdrift, ldrift = conservation_drift(pair, bd, pairs, n_gauss)
    cls = classify_extremal(pair)
    return ConsistencyReport(
        gradient_residual_gap=gap,
        noether_p_drift=pdrift,
        noether_l_drift=ldrift,
        xdot_constancy=(cls.deviation1, cls.deviation2),
        max_residual=res.max_norm,
        gradient_norm=max(grad1.max_norm, grad2.max_norm),
    )

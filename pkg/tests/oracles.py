"""Independent finite-difference oracles and perturbation builders.

The action oracles re-evaluate windows and lightcone roots from scratch on
perturbed trajectories (no use of the implicit-delay derivative formulas) and
fuse the differences pointwise so the large kinetic constants cancel
algebraically instead of in floats.
"""

import numpy as np

from wfvar._mesh import gauss_cells
from wfvar.action import charge_factor
from wfvar.lightcone import ADVANCED, RETARDED, roots_for_events
from wfvar.minkowski import mdot
from wfvar.trajectory import Perturbation, apply_perturbation


def sine_perturbation(tr, bd, coeffs):
    """Admissible perturbation sum_k c_k sin(k pi s) on the variable window."""
    a, b = bd.variable_window(tr.particle)
    t = tr.times
    vals = np.zeros((len(t), 3))
    slopes = np.zeros((len(t), 3))
    s = (t - a) / (b - a)
    inside = (t >= a) & (t <= b)
    for k, ck in coeffs:
        ck = np.asarray(ck, dtype=float)
        vals[inside] += ck * np.sin(np.pi * k * s[inside, None])
        slopes[inside] += ck * (np.pi * k / (b - a)) * np.cos(np.pi * k * s[inside, None])
    for idx in np.nonzero(~bd.interior_mask(tr))[0]:
        vals[idx] = 0.0
        if t[idx] <= a or t[idx] >= b:
            slopes[idx] = 0.0
    return Perturbation(t, vals, slopes)


def random_sine_perturbation(tr, bd, rng, amplitude=1.0, modes=(1, 2, 3, 5)):
    return sine_perturbation(
        tr, bd, [(k, amplitude * rng.normal(size=3) / k) for k in modes]
    )


def zero_perturbation(tr):
    n = len(tr.times)
    return Perturbation(tr.times, np.zeros((n, 3)), np.zeros((n, 3)))


def fused_partial_action_difference(pair, bd, which, b, eps, n_gauss=4):
    """(S_which(x + eps b) - S_which(x - eps b)) / (2 eps), stable."""
    tr = pair[which - 1]
    other = pair[2 - which]
    cf = charge_factor(pair)
    trp = apply_perturbation(tr, b, eps)
    trm = apply_perturbation(tr, b, -eps)
    a_, b_ = bd.variable_window(which)
    t, w = gauss_cells(tr.times, a_, b_, n_gauss)
    _, vp, _ = trp.state4(t)
    _, vm, _ = trm.state4(t)
    _, v0, _ = tr.state4(t)
    bd4 = np.concatenate([np.zeros((len(t), 1)), b.bdot(t)], axis=1)
    sp = mdot(vp, vp)
    sm = mdot(vm, vm)
    # sp - sm = 4 eps (v0 . bdot) exactly: Hermite evaluation is linear in nodes
    kin = -tr.mass * np.sum(w * (4 * eps * mdot(v0, bd4)) / (np.sqrt(sp) + np.sqrt(sm)))
    idiff = np.zeros(len(t))
    win = bd.full_window(other.particle)
    for side in (RETARDED, ADVANCED):
        vals = []
        for trx in (trp, trm):
            xs, vs, _ = trx.state4(t)
            t2, J, _, _, ok = roots_for_events(other, t, xs[:, 1:], side, interval=win)
            v4 = np.concatenate([np.ones((len(t2), 1)), other.velocity(t2)], axis=1)
            vals.append(np.where(ok, mdot(vs, v4) / (2 * np.abs(J)), 0.0))
        idiff += vals[0] - vals[1]
    return (kin + cf * np.sum(w * idiff)) / (2 * eps)


def fused_action_second_difference(pair, bd, b1, b2, eps, n_gauss=4):
    """[S(+eps) + S(-eps) - 2 S(0)] / eps^2 of the full action along (b1, b2):
    the finite-difference Hessian quadratic value."""
    cf = charge_factor(pair)
    pert = {}
    for sgn in (1.0, -1.0, 0.0):
        pert[sgn] = (
            apply_perturbation(pair[0], b1, sgn * eps),
            apply_perturbation(pair[1], b2, sgn * eps),
        )
    kin = 0.0
    for tr, b in zip(pair, (b1, b2)):
        a_, b_ = bd.variable_window(tr.particle)
        t, w = gauss_cells(tr.times, a_, b_, n_gauss)
        _, v0, _ = tr.state4(t)
        bd4 = np.concatenate([np.zeros((len(t), 1)), b.bdot(t)], axis=1)
        s0 = mdot(v0, v0)
        dp = 2 * eps * mdot(v0, bd4) + eps**2 * mdot(bd4, bd4)
        dm = -2 * eps * mdot(v0, bd4) + eps**2 * mdot(bd4, bd4)
        sp = s0 + dp
        sm = s0 + dm
        kin += -tr.mass * np.sum(
            w * (dp / (np.sqrt(sp) + np.sqrt(s0)) + dm / (np.sqrt(sm) + np.sqrt(s0)))
        )
    a_, bmax = bd.full_window(1)
    t, w = gauss_cells(pair[0].times, a_, bmax, n_gauss)
    win2 = bd.full_window(2)
    idd = np.zeros(len(t))
    for side in (RETARDED, ADVANCED):
        vals = {}
        for sgn, pr in pert.items():
            xs, vs, _ = pr[0].state4(t)
            t2, J, _, _, ok = roots_for_events(pr[1], t, xs[:, 1:], side, interval=win2)
            v4 = np.concatenate([np.ones((len(t2), 1)), pr[1].velocity(t2)], axis=1)
            vals[sgn] = np.where(ok, mdot(vs, v4) / (2 * np.abs(J)), 0.0)
        idd += vals[1.0] + vals[-1.0] - 2 * vals[0.0]
    return (kin + cf * np.sum(w * idd)) / eps**2

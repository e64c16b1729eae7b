import io

import numpy as np
import pytest

from oracles import sine_perturbation
from wfvar.circular import analytic_state, kepler_circular
from wfvar.errors import EndpointViolation, LayoutMismatch, OutOfRange
from wfvar.trajectory import (
    Perturbation,
    Trajectory,
    apply_perturbation,
    perturbation_norm,
    read_trajectories,
    reconstruct_from_acceleration,
    subluminal_margin,
    sup_bound_check,
    validate_ehbc,
    write_trajectories,
)
from conftest import make_static_pair


def static_trajectory(n=11, span=(0.0, 1.0)):
    ts = np.linspace(*span, n)
    return Trajectory(ts, np.zeros((n, 3)), np.zeros((n, 3)), particle=1, mass=1.0)


def test_eval_static():
    tr = static_trajectory()
    x, v, a = tr.eval(0.5)
    assert x.as_array() == pytest.approx([0.5, 0, 0, 0])
    assert v.as_array() == pytest.approx([1, 0, 0, 0])
    assert a.as_array() == pytest.approx([0, 0, 0, 0])


def test_eval_circular_speed():
    spec, pair = kepler_circular(100.0)
    _, v, _ = pair[0].eval(0.0)
    assert np.linalg.norm(v.spatial) == pytest.approx(0.0999452, abs=1e-7)


def test_eval_reproduces_nodes():
    spec, pair = kepler_circular(50.0, nodes_per_turn=64)
    tr = pair[0]
    k = 17
    x, v, _ = tr.eval(tr.times[k])
    assert x.spatial == pytest.approx(tr.values[k], abs=1e-14)
    assert v.spatial == pytest.approx(tr.slopes[k], abs=1e-14)


def test_eval_out_of_range():
    tr = static_trajectory()
    with pytest.raises(OutOfRange):
        tr.eval(2.0)


def test_hermite_fourth_order_convergence():
    spec, _ = kepler_circular(100.0)
    errs = []
    for n in (64, 128, 256):
        _, pair = kepler_circular(100.0, nodes_per_turn=n)
        tr = pair[0]
        ts = np.linspace(0.1, spec.period * 0.9, 400)
        x4, _, _, _ = analytic_state(spec, 1, ts)
        errs.append(np.max(np.linalg.norm(tr.position(ts) - x4[:, 1:], axis=1)))
    rate1 = np.log2(errs[0] / errs[1])
    rate2 = np.log2(errs[1] / errs[2])
    assert rate1 > 3.5 and rate2 > 3.5


def test_subluminal_margin():
    assert subluminal_margin(static_trajectory()) == 1.0
    spec, pair = kepler_circular(100.0)
    assert subluminal_margin(pair[0]) == pytest.approx(0.990011, abs=1e-5)
    n = 11
    ts = np.linspace(0, 1, n)
    vel = np.zeros((n, 3))
    vel[5] = [1.2, 0, 0]
    tr = Trajectory(ts, np.zeros((n, 3)), vel, particle=1)
    assert subluminal_margin(tr) < 0


def test_perturbation_norm_sine():
    T, a = 7.0, 0.4
    ts = np.linspace(0, T, 400)
    vals = np.zeros((len(ts), 3))
    vals[:, 0] = a * np.sin(np.pi * ts / T)
    slopes = np.zeros((len(ts), 3))
    slopes[:, 0] = a * np.pi / T * np.cos(np.pi * ts / T)
    b = Perturbation(ts, vals, slopes)
    assert perturbation_norm(b) == pytest.approx(a * np.pi / T, rel=1e-6)
    assert perturbation_norm(b.scaled(-2.5)) == pytest.approx(2.5 * a * np.pi / T, rel=1e-6)


def test_perturbation_norm_triangle_and_homogeneity():
    rng = np.random.default_rng(2)
    ts = np.linspace(0, 5, 60)
    for _ in range(20):
        def rand_pert():
            vals = np.zeros((60, 3))
            slopes = rng.normal(size=(60, 3))
            vals[1:-1] = rng.normal(size=(58, 3))
            vals[0] = vals[-1] = 0.0
            return Perturbation(ts, vals, slopes)

        b1, b2 = rand_pert(), rand_pert()
        both = Perturbation(ts, b1.values + b2.values, b1.slopes + b2.slopes)
        assert perturbation_norm(both) <= perturbation_norm(b1) + perturbation_norm(b2) + 1e-12
        c = rng.normal()
        assert perturbation_norm(b1.scaled(c)) == pytest.approx(
            abs(c) * perturbation_norm(b1), rel=1e-12)


def test_perturbation_endpoint_violation():
    ts = np.linspace(0, 1, 5)
    vals = np.zeros((5, 3))
    vals[-1] = [0.1, 0, 0]
    with pytest.raises(EndpointViolation):
        Perturbation(ts, vals, np.zeros((5, 3)))


def test_sup_bound_check():
    T = 9.0
    ts = np.linspace(0, T, 300)
    vals = np.zeros((300, 3))
    slopes = np.zeros((300, 3))
    vals[:, 1] = np.sin(np.pi * ts / T)
    slopes[:, 1] = (np.pi / T) * np.cos(np.pi * ts / T)
    b = Perturbation(ts, vals, slopes)
    sup_b, bound = sup_bound_check(b)
    assert sup_b == pytest.approx(1.0, rel=1e-4)
    assert bound == pytest.approx(np.pi, rel=1e-4)
    assert sup_b <= bound
    rng = np.random.default_rng(4)
    for _ in range(10):
        vals = np.zeros((300, 3))
        vals[1:-1] = rng.normal(size=(298, 3))
        b = Perturbation(ts, vals, rng.normal(size=(300, 3)))
        sup_b, bound = sup_bound_check(b)
        assert sup_b <= bound


def test_apply_perturbation():
    spec, pair = kepler_circular(30.0, nodes_per_turn=64)
    tr = pair[0]
    n = len(tr.times)
    vals = np.zeros((n, 3))
    vals[1:-1] = 0.01
    b = Perturbation(tr.times, vals, np.zeros((n, 3)))
    assert apply_perturbation(tr, b, 0.0).values == pytest.approx(tr.values)
    moved = apply_perturbation(tr, b, 1.0)
    back = apply_perturbation(moved, b, -1.0)
    assert back.values == pytest.approx(tr.values, abs=1e-14)
    short = np.zeros((n - 1, 3))
    with pytest.raises(LayoutMismatch):
        apply_perturbation(tr, Perturbation(tr.times[:-1], short, short.copy()), 1.0)


def test_proposition1_subluminal_neighborhood(refined100):
    _, pair, bd = refined100
    tr = pair[0]
    delta = subluminal_margin(tr)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        b = sine_perturbation(tr, bd, [(k, rng.normal(size=3)) for k in (1, 3, 7)])
        nb = perturbation_norm(b)
        scale = rng.uniform(0.05, 0.999) * (delta / 4) / nb
        perturbed = apply_perturbation(tr, b.scaled(scale), 1.0)
        assert subluminal_margin(perturbed) > 0


def test_reconstruct_constant_acceleration():
    lam_f = 2.0
    ts = np.linspace(0, lam_f, 41)
    c = np.array([0.3, -0.1, 0.7])
    bddot = np.tile(c, (41, 1))
    b = reconstruct_from_acceleration(ts, bddot, boundary_side="end")
    # double integral: b(t) = c (t^2/2 - lam_f t), bdot(lam_f) = 0
    expect = c[None, :] * (ts[:, None] ** 2 / 2 - lam_f * ts[:, None])
    assert b.values == pytest.approx(expect, abs=1e-12)
    assert np.linalg.norm(b.slopes[-1]) < 1e-12
    assert np.linalg.norm(b.values[0]) < 1e-12
    sup_b = np.max(np.linalg.norm(b.values, axis=1))
    sup_bdd = np.max(np.linalg.norm(bddot, axis=1))
    assert sup_b <= lam_f**2 * sup_bdd + 1e-12


def test_reconstruct_zero_and_round_trip():
    ts = np.linspace(0, 3.0, 61)
    zero = reconstruct_from_acceleration(ts, np.zeros((61, 3)))
    assert np.all(zero.values == 0) and np.all(zero.slopes == 0)
    # round trip on a smooth admissible profile with bdot(end) = 0.
    # b = 1 - cos(2 pi s) has b(0)=b(T)=0 but bdot(T) != 0 unless full period;
    # use sin^2 which has vanishing derivative at both ends.
    T = 3.0
    s = ts / T
    prof = np.sin(np.pi * s) ** 2
    dd = ((np.pi / T) ** 2 * 2 * np.cos(2 * np.pi * s))
    bddot = np.zeros((61, 3))
    bddot[:, 0] = dd
    rec = reconstruct_from_acceleration(ts, bddot, boundary_side="end")
    # reconstruction fixes b(0)=0 and bdot(T)=0, matching sin^2 shifted by its
    # endpoint value; compare second differences instead of absolute values
    assert rec.values[:, 0] == pytest.approx(prof - prof[-1] * 0, abs=2e-3)


def test_validate_ehbc(static_system, refined100):
    pair, bd = static_system
    assert validate_ehbc(pair, bd).all_passed
    _, cpair, cbd = refined100
    assert validate_ehbc(cpair, cbd).all_passed


def test_validate_ehbc_detects_bad_history(static_system):
    import dataclasses

    pair, bd = static_system
    bad = dataclasses.replace(bd, lambda2_minus=-2.0)  # truncated history-2
    rep = validate_ehbc(pair, bad)
    assert not rep.all_passed
    names = {c.name for c in rep.checks if not c.passed}
    assert "history2_cone" in names


def test_validate_ehbc_detects_unreachable():
    # endpoints farther apart in space than in time
    pair, bd = make_static_pair(d=3.0, t2_end=33.0)
    n = 61
    ts1 = np.linspace(0.0, 36.0, n)
    far = np.tile([3.0, 0, 0], (n, 1))
    far[-1] = [100.0, 0, 0]
    # manufacture a trajectory ending far away but keep markers: speed check fails
    import dataclasses

    tr1 = pair[0]
    vals = tr1.position(np.linspace(*tr1.span, n)).copy()
    vals[np.searchsorted(np.linspace(*tr1.span, n), 30.0):] += 80.0
    tr_bad = type(tr1)(np.linspace(*tr1.span, n), vals, np.zeros((n, 3)), particle=1)
    rep = validate_ehbc((tr_bad, pair[1]), bd)
    assert not rep.all_passed
    assert any(c.name == "reachable_traj1" and not c.passed for c in rep.checks)


def test_csv_round_trip(refined100):
    _, pair, _ = refined100
    buf = io.StringIO()
    write_trajectories(buf, pair)
    buf.seek(0)
    back = read_trajectories(buf)
    for a, b in zip(pair, back):
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.slopes, b.slopes)

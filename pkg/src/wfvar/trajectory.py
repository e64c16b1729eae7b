"""World lines as piecewise cubic Hermite interpolants, perturbations with the
sup norm, and exchange-of-history boundary data."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._mesh import gauss_cells, hermite_shapes
from .errors import (
    EndpointViolation,
    InvalidEHBC,
    LayoutMismatch,
    OutOfRange,
)
from .minkowski import FourVector

__all__ = [
    "Trajectory",
    "Perturbation",
    "BoundaryData",
    "EhbcCheck",
    "EhbcReport",
    "subluminal_margin",
    "perturbation_norm",
    "apply_perturbation",
    "sup_bound_check",
    "reconstruct_from_acceleration",
    "validate_ehbc",
    "write_trajectories",
    "read_trajectories",
    "boost_trajectory",
    "boost_boundary_data",
]

DEFAULT_CHARGES = {1: -1.0, 2: 1.0}
DEFAULT_MASSES = {1: 1.0, 2: 1824.0}


class _HermiteCurve:
    """Shared Hermite machinery over (times, values, slopes) node data."""

    def __init__(self, times, values, slopes):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("need at least two nodes")
        if np.any(np.diff(times) <= 0):
            raise ValueError("node parameters must be strictly increasing")
        if values.shape != (len(times), 3) or slopes.shape != values.shape:
            raise ValueError("values/slopes must be (N, 3)")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(slopes)) and np.all(np.isfinite(times))):
            raise ValueError("node data must be finite")
        self.times = times
        self.values = values
        self.slopes = slopes

    def _locate(self, t, clip=False):
        t = np.asarray(t, dtype=float)
        times = self.times
        if not clip:
            tol = 1e-9 * max(1.0, abs(times[0]), abs(times[-1]))
            if np.any(t < times[0] - tol) or np.any(t > times[-1] + tol):
                bad = t[(t < times[0] - tol) | (t > times[-1] + tol)]
                raise OutOfRange(
                    f"parameter {np.atleast_1d(bad)[0]:.6g} outside span "
                    f"[{times[0]:.6g}, {times[-1]:.6g}]"
                )
        idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
        h = times[idx + 1] - times[idx]
        s = np.clip((t - times[idx]) / h, 0.0, 1.0) if clip else (t - times[idx]) / h
        return idx, s, h

    def deriv(self, t, order=0):
        idx, s, h = self._locate(t)
        h00, h10, h01, h11 = hermite_shapes(s, h, order)
        return (
            h00[..., None] * self.values[idx]
            + h10[..., None] * self.slopes[idx]
            + h01[..., None] * self.values[idx + 1]
            + h11[..., None] * self.slopes[idx + 1]
        )


class Trajectory(_HermiteCurve):
    """Parametrized world line of one particle in its own coordinate time.

    Nodes store position and velocity; between nodes the curve is the cubic
    Hermite interpolant (C^1, piecewise-linear acceleration).
    """

    def __init__(self, times, positions, velocities, particle=1, mass=None, charge=None):
        super().__init__(times, positions, velocities)
        if particle not in (1, 2):
            raise ValueError("particle must be 1 or 2")
        self.particle = particle
        self.mass = float(DEFAULT_MASSES[particle] if mass is None else mass)
        self.charge = float(DEFAULT_CHARGES[particle] if charge is None else charge)
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])

    def position(self, t):
        return self.deriv(t, 0)

    def velocity(self, t):
        return self.deriv(t, 1)

    def acceleration(self, t):
        return self.deriv(t, 2)

    def jerk(self, t):
        return self.deriv(t, 3)

    def state4(self, t):
        """Four-position, -velocity, -acceleration arrays at parameters t.

        Time parametrization: x = (t, r), v = (1, dr/dt), a = (0, d2r/dt2).
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        r = self.position(t)
        v = self.velocity(t)
        a = self.acceleration(t)
        x4 = np.concatenate([t[:, None], r], axis=1)
        v4 = np.concatenate([np.ones_like(t)[:, None], v], axis=1)
        a4 = np.concatenate([np.zeros_like(t)[:, None], a], axis=1)
        return x4, v4, a4

    def eval(self, t):
        """Interpolated state at a single parameter, as FourVectors."""
        x4, v4, a4 = self.state4(float(t))
        return (
            FourVector.from_array(x4[0]),
            FourVector.from_array(v4[0]),
            FourVector.from_array(a4[0]),
        )

    def segment(self, a, b):
        """Immutable copy of the [a, b] portion, node boundaries preserved."""
        times = self.times
        tol = 1e-9 * max(1.0, times[-1] - times[0])
        keep = (times > a + tol) & (times < b - tol)
        ts = np.concatenate(([a], times[keep], [b]))
        return self.resample(ts)

    def resample(self, new_times):
        new_times = np.asarray(new_times, dtype=float)
        return Trajectory(
            new_times,
            self.position(new_times),
            self.velocity(new_times),
            particle=self.particle,
            mass=self.mass,
            charge=self.charge,
        )

    def with_nodes(self, positions=None, velocities=None):
        return Trajectory(
            self.times,
            self.values if positions is None else positions,
            self.slopes if velocities is None else velocities,
            particle=self.particle,
            mass=self.mass,
            charge=self.charge,
        )

    def speed_squared(self, t):
        v = self.velocity(t)
        return np.sum(v * v, axis=-1)


def subluminal_margin(tr: Trajectory, oversample=10) -> float:
    """min over the span of (1 - ||v||^2), sampled at nodes and within segments.

    Positive return certifies a subluminal orbit; the sampled minimum is an
    approximation of the true infimum.
    """
    ts = _dense_params(tr.times, oversample)
    return float(np.min(1.0 - tr.speed_squared(ts)))


def _dense_params(times, oversample):
    s = np.linspace(0.0, 1.0, oversample, endpoint=False)
    inner = (times[:-1, None] + np.diff(times)[:, None] * s[None, :]).ravel()
    return np.concatenate([inner, times[-1:]])


class Perturbation(_HermiteCurve):
    """C^1 perturbation field over a trajectory's node layout, vanishing at
    both parameter endpoints (time component identically zero)."""

    def __init__(self, times, values, slopes, require_endpoints=True):
        super().__init__(times, values, slopes)
        if require_endpoints:
            tol = 1e-14 * max(1.0, float(np.max(np.abs(values))))
            for k in (0, -1):
                if np.linalg.norm(self.values[k]) > max(tol, 1e-14):
                    raise EndpointViolation(
                        f"perturbation nonzero at endpoint t={self.times[k]:.6g}"
                    )

    def b(self, t):
        return self.deriv(t, 0)

    def bdot(self, t):
        return self.deriv(t, 1)

    def bddot(self, t):
        return self.deriv(t, 2)

    def b4(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.zeros((len(t), 1))
        return (
            np.concatenate([z, self.b(t)], axis=1),
            np.concatenate([z, self.bdot(t)], axis=1),
            np.concatenate([z, self.bddot(t)], axis=1),
        )

    def scaled(self, c):
        return Perturbation(self.times, c * self.values, c * self.slopes,
                            require_endpoints=False)


def perturbation_norm(b: Perturbation, oversample=10) -> float:
    """sup of the Euclidean R^4 norm of bdot over a dense parameter grid."""
    _check_endpoints(b)
    ts = _dense_params(b.times, oversample)
    bd = b.bdot(ts)
    return float(np.max(np.linalg.norm(bd, axis=1)))


def _check_endpoints(b: Perturbation, tol=1e-14):
    scale = max(1.0, float(np.max(np.abs(b.values))))
    for k in (0, -1):
        if np.linalg.norm(b.values[k]) > tol * scale:
            raise EndpointViolation(f"perturbation nonzero at endpoint index {k}")


def sup_bound_check(b: Perturbation, oversample=10):
    """Both sides of sup||b||_4 <= |lambda_F - lambda_I| * sup||bdot||_4."""
    _check_endpoints(b)
    ts = _dense_params(b.times, oversample)
    sup_b = float(np.max(np.linalg.norm(b.b(ts), axis=1)))
    span = float(b.times[-1] - b.times[0])
    return sup_b, span * perturbation_norm(b, oversample)


def apply_perturbation(tr: Trajectory, b: Perturbation, eps: float) -> Trajectory:
    """Nodewise x + eps*b, v + eps*bdot; endpoints unchanged by construction."""
    if len(b.times) != len(tr.times) or not np.allclose(b.times, tr.times, rtol=0, atol=1e-12 * max(1.0, abs(float(tr.times[-1])))):
        raise LayoutMismatch("perturbation node layout differs from trajectory")
    return tr.with_nodes(
        positions=tr.values + eps * b.values,
        velocities=tr.slopes + eps * b.slopes,
    )


def reconstruct_from_acceleration(times, bddot, boundary_side="end"):
    """Rebuild a C^2 perturbation from its sampled second derivative.

    Integrates twice: the inner integral runs from the boundary side (where
    bdot vanishes), the outer from the opposite endpoint (where b vanishes).
    bddot is interpolated linearly between samples, so the result is exact
    for the piecewise-linear representative.
    """
    times = np.asarray(times, dtype=float)
    bddot = np.asarray(bddot, dtype=float)
    if bddot.shape != (len(times), 3):
        raise LayoutMismatch("bddot must be sampled on the given nodes, shape (N, 3)")
    if boundary_side not in ("start", "end"):
        raise ValueError("boundary_side must be 'start' or 'end'")
    h = np.diff(times)[:, None]
    # bdot(t) = int from the boundary side of bddot; trapezoid is exact for
    # the piecewise-linear bddot
    seg = 0.5 * h * (bddot[:-1] + bddot[1:])
    if boundary_side == "end":
        bdot = -np.vstack([np.cumsum(seg[::-1], axis=0)[::-1], np.zeros(3)])
    else:
        bdot = np.vstack([np.zeros(3), np.cumsum(seg, axis=0)])
    # b(t) = int from the opposite endpoint of bdot; bdot is piecewise
    # quadratic, integrate its Hermite representation exactly
    seg_b = 0.5 * h * (bdot[:-1] + bdot[1:]) + (h**2 / 12.0) * (bddot[:-1] - bddot[1:])
    if boundary_side == "end":
        b = np.vstack([np.zeros(3), np.cumsum(seg_b, axis=0)])
    else:
        b = -np.vstack([np.cumsum(seg_b[::-1], axis=0)[::-1], np.zeros(3)])
    return Perturbation(times, b, bdot, require_endpoints=False)


@dataclass(frozen=True)
class BoundaryData:
    """Exchange-of-history boundary conditions.

    Endpoint O_A anchors trajectory 1 at its start, L_B anchors trajectory 2
    at its end; the frozen histories span exactly the partner segments inside
    the lightcones of those endpoints.
    """

    o_a: FourVector
    l_b: FourVector
    t_oa: float            # parameter of O_A on trajectory 1
    t1_end: float          # T1: trajectory 1 crosses the past lightcone of L_B
    lambda1_plus: float    # L+: trajectory 1 crosses the future lightcone of L_B
    lambda2_minus: float   # O-: trajectory 2 crosses the past lightcone of O_A
    lambda2_plus: float    # O+: trajectory 2 crosses the future lightcone of O_A
    t2_end: float          # parameter of L_B on trajectory 2
    history1: Trajectory = field(repr=False, default=None)
    history2: Trajectory = field(repr=False, default=None)

    def variable_window(self, particle):
        if particle == 1:
            return self.t_oa, self.t1_end
        return self.lambda2_plus, self.t2_end

    def full_window(self, particle):
        if particle == 1:
            return self.t_oa, self.lambda1_plus
        return self.lambda2_minus, self.t2_end

    def markers(self, particle):
        if particle == 1:
            return (self.t_oa, self.t1_end, self.lambda1_plus)
        return (self.lambda2_minus, self.lambda2_plus, self.t2_end)

    def interior_mask(self, tr: Trajectory):
        a, b = self.variable_window(tr.particle)
        tol = 1e-9 * max(1.0, b - a)
        return (tr.times > a + tol) & (tr.times < b - tol)


@dataclass
class EhbcCheck:
    name: str
    passed: bool
    slack: float
    detail: str = ""


@dataclass
class EhbcReport:
    checks: list

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = []
        for c in self.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: slack={c.slack:.3e} {c.detail}")
        return "\n".join(lines)


def validate_ehbc(pair, bd: BoundaryData, cone_tol=1e-6) -> EhbcReport:
    """Check reachability, minimal shortness, and history/lightcone alignment.

    Failures are reported, not raised; callers that need a hard guarantee
    raise InvalidEHBC on report.all_passed == False.
    """
    tr1, tr2 = pair
    checks = []

    def add(name, passed, slack, detail=""):
        checks.append(EhbcCheck(name, bool(passed), float(slack), detail))

    # (a) endpoint-to-endpoint travel at speed <= 1
    for tr in (tr1, tr2):
        a, b = bd.variable_window(tr.particle)
        dt = b - a
        dr = float(np.linalg.norm(tr.position(b) - tr.position(a)))
        add(f"reachable_traj{tr.particle}", dr <= dt * (1 + 1e-12), dt - dr,
            f"|dr|={dr:.6g} dt={dt:.6g}")

    # (b) minimally short: trajectory 1 crosses the future lightcone of O+
    # strictly before reaching L-
    x_oplus = np.concatenate([[bd.lambda2_plus], tr2.position(bd.lambda2_plus)])
    tcross = _future_cone_crossing(tr1, x_oplus)
    if tcross is None:
        add("minimally_short", False, -np.inf, "future cone of O+ never crossed")
    else:
        add("minimally_short", tcross < bd.t1_end, bd.t1_end - tcross,
            f"crossing at t1={tcross:.6g}, T1={bd.t1_end:.6g}")

    # (c) history segments span exactly the endpoint lightcone intervals
    for name, tr, t_lo, t_hi, anchor in (
        ("history2_cone", tr2, bd.lambda2_minus, bd.lambda2_plus, bd.o_a),
        ("history1_cone", tr1, bd.t1_end, bd.lambda1_plus, bd.l_b),
    ):
        xa = np.asarray(anchor, dtype=float)
        worst = 0.0
        for tt in (t_lo, t_hi):
            x = np.concatenate([[tt], tr.position(tt)])
            d = x - xa
            worst = max(worst, abs(float(d[0] ** 2 - d[1:] @ d[1:])))
        scale = max(1.0, (t_hi - t_lo) ** 2)
        add(name, worst <= cone_tol * scale, cone_tol * scale - worst,
            f"max null residual {worst:.3e}")

    # history segments must be frozen copies of the trajectory
    for name, hist, tr, lo, hi in (
        ("history1_matches", bd.history1, tr1, bd.t1_end, bd.lambda1_plus),
        ("history2_matches", bd.history2, tr2, bd.lambda2_minus, bd.lambda2_plus),
    ):
        if hist is None:
            add(name, True, 0.0, "no snapshot stored")
            continue
        ts = np.linspace(lo, hi, 17)
        err = float(np.max(np.abs(hist.position(ts) - tr.position(ts))))
        add(name, err <= 1e-9 * max(1.0, hi - lo), 1e-9 - err, f"max dev {err:.3e}")

    return EhbcReport(checks)


def _future_cone_crossing(tr: Trajectory, x_event):
    """First parameter where tr crosses the future lightcone of x_event."""
    te, re = float(x_event[0]), np.asarray(x_event[1:], dtype=float)
    ts = _dense_params(tr.times, 8)
    ts = ts[ts >= te]
    if len(ts) == 0:
        return None
    g = (ts - te) - np.linalg.norm(tr.position(ts) - re[None, :], axis=1)
    sign = g >= 0
    if not np.any(sign):
        return None
    if sign[0]:
        return float(ts[0])
    k = int(np.argmax(sign))
    lo, hi = ts[k - 1], ts[k]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        gm = (mid - te) - float(np.linalg.norm(tr.position(mid) - re))
        if gm >= 0:
            hi = mid
        else:
            lo = mid
    return float(0.5 * (lo + hi))


# -- CSV interchange ---------------------------------------------------------

CSV_HEADER = ["particle", "t", "x", "y", "z", "vx", "vy", "vz"]


def _fmt(x):
    return f"{x:.17g}"


def write_trajectories(path_or_buf, pair):
    """Write both trajectories as CSV rows particle,t,x,y,z,vx,vy,vz."""
    close = False
    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        f = open(path_or_buf, "w", newline="")
        close = True
    else:
        f = path_or_buf
    try:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for tr in pair:
            for t, p, v in zip(tr.times, tr.values, tr.slopes):
                w.writerow([tr.particle] + [_fmt(t)] + [_fmt(c) for c in p] + [_fmt(c) for c in v])
    finally:
        if close:
            f.close()


def read_trajectories(path_or_buf, masses=None, charges=None):
    """Read a trajectory CSV back into a (traj1, traj2) pair."""
    if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, newline="") as f:
            return read_trajectories(f, masses, charges)
    rd = csv.reader(path_or_buf)
    header = next(rd)
    if [h.strip() for h in header] != CSV_HEADER:
        raise ValueError(f"unexpected trajectory CSV header: {header}")
    rows = {1: [], 2: []}
    for row in rd:
        if not row:
            continue
        rows[int(row[0])].append([float(c) for c in row[1:]])
    out = []
    for pid in (1, 2):
        data = np.array(rows[pid])
        if len(data) == 0:
            raise ValueError(f"no rows for particle {pid}")
        out.append(
            Trajectory(
                data[:, 0], data[:, 1:4], data[:, 4:7], particle=pid,
                mass=None if masses is None else masses[pid - 1],
                charge=None if charges is None else charges[pid - 1],
            )
        )
    return tuple(out)


# -- Lorentz boosts of whole data sets (test and invariance machinery) -------

def boost_trajectory(tr: Trajectory, L):
    """Boost all node events and velocities; reparametrize by the new time."""
    L = np.asarray(L, dtype=float)
    x4 = np.concatenate([tr.times[:, None], tr.values], axis=1)
    v4 = np.concatenate([np.ones((len(tr.times), 1)), tr.slopes], axis=1)
    x4b = x4 @ L.T
    v4b = v4 @ L.T
    new_t = x4b[:, 0]
    if np.any(np.diff(new_t) <= 0):
        raise ValueError("boost destroyed time ordering (superluminal data?)")
    return Trajectory(
        new_t, x4b[:, 1:], v4b[:, 1:] / v4b[:, 0:1],
        particle=tr.particle, mass=tr.mass, charge=tr.charge,
    )


def boost_boundary_data(pair, bd: BoundaryData, L):
    """Boost a trajectory pair plus its boundary markers consistently."""
    L = np.asarray(L, dtype=float)
    b1 = boost_trajectory(pair[0], L)
    b2 = boost_trajectory(pair[1], L)

    def tmap(tr, trb, t):
        x = np.concatenate([[t], tr.position(t)])
        return float((L @ x)[0])

    oa = FourVector.from_array(L @ np.asarray(bd.o_a))
    lb = FourVector.from_array(L @ np.asarray(bd.l_b))
    nbd = BoundaryData(
        o_a=oa,
        l_b=lb,
        t_oa=tmap(pair[0], b1, bd.t_oa),
        t1_end=tmap(pair[0], b1, bd.t1_end),
        lambda1_plus=tmap(pair[0], b1, bd.lambda1_plus),
        lambda2_minus=tmap(pair[1], b2, bd.lambda2_minus),
        lambda2_plus=tmap(pair[1], b2, bd.lambda2_plus),
        t2_end=tmap(pair[1], b2, bd.t2_end),
        history1=b1.segment(tmap(pair[0], b1, bd.t1_end), tmap(pair[0], b1, bd.lambda1_plus)),
        history2=b2.segment(tmap(pair[1], b2, bd.lambda2_minus), tmap(pair[1], b2, bd.lambda2_plus)),
    )
    return (b1, b2), nbd

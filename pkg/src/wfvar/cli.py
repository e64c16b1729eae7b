"""Command-line surface: batch workflows over the library, CSV outputs, and
optional rendered figures alongside them."""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .action import fokker_action
from .circular import kepler_circular, make_circular_ehbc, refine_circular
from .errors import (
    ArcTooShort,
    ChainEscaped,
    ConfigError,
    InvalidEHBC,
    LuminalVelocity,
    NearLuminalJacobian,
    NoConvergence,
    RootNotBracketed,
    SuperluminalOrbit,
    SuperluminalStep,
)
from .gradient import eom_residual
from .invariants import conservation_drift
from .lightcone import RETARDED, find_root
from .second_variation import assemble_hessian, bifurcation_scan
from .sewing import build_grid
from .solver import SolveOptions, solve
from .trajectory import (
    BoundaryData,
    read_trajectories,
    validate_ehbc,
    write_trajectories,
)
from .minkowski import FourVector

EXIT_CODES = {
    ConfigError: 2,
    ArcTooShort: 2,
    NoConvergence: 3,
    NearLuminalJacobian: 4,
    SuperluminalOrbit: 4,
    SuperluminalStep: 4,
    LuminalVelocity: 4,
    InvalidEHBC: 5,
    ChainEscaped: 5,
    RootNotBracketed: 5,
}


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


@dataclass
class RunConfig:
    """Flat key=value configuration; command-line flags override file values."""

    m1: float = 1.0
    m2: float = 1824.0
    e1: float = -1.0
    e2: float = 1.0
    r12: float = None
    arc: float = 2 * np.pi
    refine: bool = True
    nodes_per_turn: int = 256
    n_chains: int = 2
    n_gauss: int = 4
    traj: str = None
    boundary: str = None
    out: str = "."
    seed: int = 0
    threads: int = None
    plot: bool = False
    timing: bool = False
    radii: str = "1000,100,30,10,3"
    max_iters: int = 100
    gradient_tol: float = 1e-7
    residual_tol: float = 1e-6
    optimizer: str = "steepest"
    eval_pairs: int = 10

    def validate(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise ConfigError("masses must be positive")
        if self.e1 == 0 or self.e2 == 0:
            raise ConfigError("charges must be nonzero")
        has_circ = self.r12 is not None
        has_files = self.traj is not None
        if has_circ == has_files:
            raise ConfigError(
                "exactly one input source required: --r12 (analytic circular) "
                "or --traj/--boundary (CSV trajectories)"
            )
        if has_files and self.boundary is None:
            raise ConfigError("--traj requires --boundary")

    @staticmethod
    def from_file(path):
        cfg = {}
        with open(path) as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line: {line!r}")
                k, v = (p.strip() for p in line.split("=", 1))
                cfg[k] = v
        return cfg


def _coerce(name, value):
    ftypes = {f.name: f.type for f in fields(RunConfig)}
    if name not in ftypes:
        raise ConfigError(f"unknown config key: {name}")
    t = ftypes[name]
    if value is None:
        return None
    if t in ("bool", bool):
        return str(value).lower() in ("1", "true", "yes", "on")
    if t in ("int", int):
        return int(value)
    if t in ("float", float):
        return float(value)
    return str(value)


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for k, v in RunConfig.from_file(args.config).items():
            setattr(cfg, k, _coerce(k, v))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.validate()
    return cfg


def _load_boundary(path, pair):
    kv = RunConfig.from_file(path)
    need = ("t_oa", "t1_end", "lambda1_plus", "lambda2_minus", "lambda2_plus", "t2_end")
    try:
        vals = {k: float(kv[k]) for k in need}
    except KeyError as exc:
        raise ConfigError(f"boundary file missing key {exc}")
    tr1, tr2 = pair
    o_a = FourVector.from_array(np.concatenate([[vals["t_oa"]], tr1.position(vals["t_oa"])]))
    l_b = FourVector.from_array(np.concatenate([[vals["t2_end"]], tr2.position(vals["t2_end"])]))
    return BoundaryData(
        o_a=o_a, l_b=l_b,
        t_oa=vals["t_oa"], t1_end=vals["t1_end"], lambda1_plus=vals["lambda1_plus"],
        lambda2_minus=vals["lambda2_minus"], lambda2_plus=vals["lambda2_plus"],
        t2_end=vals["t2_end"],
        history1=tr1.segment(vals["t1_end"], vals["lambda1_plus"]),
        history2=tr2.segment(vals["lambda2_minus"], vals["lambda2_plus"]),
    )


def _write_boundary(path, bd: BoundaryData):
    with open(path, "w") as f:
        for k in ("t_oa", "t1_end", "lambda1_plus", "lambda2_minus", "lambda2_plus", "t2_end"):
            f.write(f"{k}={_fmt(getattr(bd, k))}\n")


def build_system(cfg: RunConfig):
    """(pair, bd, spec_or_None) from the configured input source."""
    if cfg.r12 is not None:
        spec, _ = kepler_circular(cfg.r12, m1=cfg.m1, m2=cfg.m2,
                                  nodes_per_turn=cfg.nodes_per_turn)
        if cfg.refine:
            spec = refine_circular(spec)
        pair, bd = make_circular_ehbc(spec, arc=cfg.arc,
                                      nodes_per_turn=cfg.nodes_per_turn)
        return pair, bd, spec
    pair = read_trajectories(cfg.traj, masses=(cfg.m1, cfg.m2), charges=(cfg.e1, cfg.e2))
    bd = _load_boundary(cfg.boundary, pair)
    return pair, bd, None


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(c) for c in row])


def _manifest(outdir, cfg: RunConfig, extra, t_start):
    lines = [f"wfvar_version={__version__}"]
    for f in fields(RunConfig):
        lines.append(f"{f.name}={getattr(cfg, f.name)}")
    for k, v in extra.items():
        lines.append(f"{k}={v}")
    lines.append(f"wall_time_s={time.perf_counter() - t_start:.3f}")
    (Path(outdir) / "manifest.txt").write_text("\n".join(lines) + "\n")


def _maybe_plot(cfg, fn):
    if not cfg.plot:
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fn(plt)


# -- commands -----------------------------------------------------------------

def cmd_circular(cfg: RunConfig, outdir: Path):
    if cfg.r12 is None:
        raise ConfigError("circular requires --r12")
    pair, bd, spec = build_system(cfg)
    write_trajectories(outdir / "trajectories.csv", pair)
    _write_boundary(outdir / "boundary.txt", bd)
    with open(outdir / "circular_spec.txt", "w") as f:
        for k, v in spec.summary().items():
            f.write(f"{k}={_fmt(v)}\n")
    rep = validate_ehbc(pair, bd)
    print(rep)
    if not rep.all_passed:
        raise InvalidEHBC("constructed boundary data failed validation")
    return {"nodes1": len(pair[0].times), "nodes2": len(pair[1].times)}


def cmd_action(cfg: RunConfig, outdir: Path):
    pair, bd, _ = build_system(cfg)
    breakdown = fokker_action(pair, bd, n_gauss=cfg.n_gauss)
    print(breakdown)
    (outdir / "action.txt").write_text(str(breakdown) + "\n")
    return {"total": _fmt(breakdown.total)}


def cmd_residual(cfg: RunConfig, outdir: Path):
    pair, bd, _ = build_system(cfg)
    res = eom_residual(pair, bd)
    rows = []
    for particle, (ts, gs) in ((1, (res.times1, res.g1)), (2, (res.times2, res.g2))):
        for t, g in zip(ts, np.linalg.norm(gs, axis=1)):
            rows.append([particle, t, g])
    _write_csv(outdir / "residual.csv", ["particle", "t", "g_norm"], rows)

    def plot(plt):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(res.times1, np.linalg.norm(res.g1, axis=1), ".", ms=3, label="particle 1")
        ax.semilogy(res.times2, np.linalg.norm(res.g2, axis=1), ".", ms=3, label="particle 2")
        ax.set_xlabel("t")
        ax.set_ylabel("||G||_4")
        ax.legend()
        fig.tight_layout()
        fig.savefig(outdir / "residual.png", dpi=130)

    _maybe_plot(cfg, plot)
    print(f"max ||G||_4 = {res.max_norm:.6e}")
    return {"max_residual": _fmt(res.max_norm)}


def cmd_grid(cfg: RunConfig, outdir: Path):
    pair, bd, _ = build_system(cfg)
    grid = build_grid(pair, bd, n_chains=cfg.n_chains)
    rows = []
    for cid, ch in enumerate(grid.chains):
        for hop, (particle, t) in enumerate(ch.points):
            rows.append([cid, ch.direction, hop, particle, t])
    _write_csv(outdir / "chains.csv", ["chain_id", "direction", "hop_index", "particle", "t"], rows)
    print(f"{len(grid.chains)} chains, {len(grid.nodes1)}+{len(grid.nodes2)} grid nodes")
    return {"chains": len(grid.chains)}


def _spectrum_rows(cfg, r12_values):
    return bifurcation_scan(
        r12_values, m1=cfg.m1, m2=cfg.m2, arc=cfg.arc,
        nodes_per_turn=cfg.nodes_per_turn, n_gauss=cfg.n_gauss,
        threads=cfg.threads,
    )


def cmd_hessian(cfg: RunConfig, outdir: Path):
    pair, bd, spec = build_system(cfg)
    t0 = time.perf_counter()
    qf = assemble_hessian(pair, bd, n_gauss=cfg.n_gauss)
    vals = qf.eigenvalues()
    runtime = time.perf_counter() - t0
    mask = np.ones(qf.n, dtype=bool)
    mask[2::3] = False
    min_inplane = float(np.linalg.eigvalsh(qf.matrix[np.ix_(mask, mask)])[0])
    r12 = cfg.r12 if cfg.r12 is not None else float("nan")
    rows = [[r12, vals[0], min_inplane, runtime if cfg.timing else "", "ok"]]
    _write_csv(outdir / "hessian.csv",
               ["r12", "min_eig", "min_eig_inplane", "runtime", "status"], rows)
    print(f"n={qf.n} min_eig={vals[0]:.6e} min_eig_inplane={min_inplane:.6e} "
          f"max_eig={vals[-1]:.6e} symmetry_defect={qf.symmetry_defect():.2e}")

    def plot(plt):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(np.sort(vals), ".", ms=2)
        ax.set_yscale("symlog", linthresh=1e-8)
        ax.set_xlabel("index")
        ax.set_ylabel("eigenvalue")
        fig.tight_layout()
        fig.savefig(outdir / "hessian_spectrum.png", dpi=130)

    _maybe_plot(cfg, plot)
    return {"min_eig": _fmt(float(vals[0])), "n_dof": qf.n}


def cmd_scan(cfg: RunConfig, outdir: Path):
    radii = [float(r) for r in str(cfg.radii).split(",") if r.strip()]
    results = _spectrum_rows(cfg, radii)
    rows = []
    for r in results:
        rows.append([
            r["r12"], r["min_eig"], r.get("min_eig_inplane", ""),
            r["runtime"] if cfg.timing else "", r["status"],
        ])
    _write_csv(outdir / "scan.csv",
               ["r12", "min_eig", "min_eig_inplane", "runtime", "status"], rows)
    for r in results:
        print(f"r12={r['r12']:g}: min_eig={r['min_eig']:.6e} [{r['status']}]")

    def plot(plt):
        fig, ax = plt.subplots(figsize=(7, 4))
        ok = [r for r in results if np.isfinite(r["min_eig"])]
        ax.semilogx([r["r12"] for r in ok], [r["min_eig"] for r in ok], "o-")
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xlabel("r12")
        ax.set_ylabel("min eigenvalue")
        fig.tight_layout()
        fig.savefig(outdir / "scan.png", dpi=130)

    _maybe_plot(cfg, plot)
    return {"radii": len(radii)}


def cmd_solve(cfg: RunConfig, outdir: Path):
    pair, bd, _ = build_system(cfg)
    opts = SolveOptions(
        max_iters=cfg.max_iters, gradient_tol=cfg.gradient_tol,
        residual_tol=cfg.residual_tol, optimizer=cfg.optimizer,
        n_gauss=cfg.n_gauss,
    )

    def write_report(report):
        with open(outdir / "solve_report.txt", "w") as f:
            for k, v in report.summary().items():
                f.write(f"{k}={_fmt(v) if isinstance(v, float) else v}\n")
            for i, s in enumerate(report.action_history):
                f.write(f"action_{i}={_fmt(s)}\n")

    try:
        solved, report = solve(pair, bd, opts)
    except NoConvergence as exc:
        if exc.report is not None:
            write_report(exc.report)
        raise
    write_trajectories(outdir / "solution.csv", solved)
    write_report(report)
    print(f"converged in {report.iterations} iterations, "
          f"max residual {report.final_max_residual:.3e}")
    return {"iterations": report.iterations}


def cmd_invariants(cfg: RunConfig, outdir: Path):
    pair, bd, _ = build_system(cfg)
    n = max(2, cfg.eval_pairs)
    t1s = np.linspace(bd.t_oa + 0.15 * (bd.t1_end - bd.t_oa),
                      bd.t_oa + 0.85 * (bd.t1_end - bd.t_oa), n)
    eval_pairs = []
    for t1 in t1s:
        x, _, _ = pair[0].state4(t1)
        eval_pairs.append((float(t1), find_root(pair[1], x[0], RETARDED).t_other))
    states, p_drift, l_drift = conservation_drift(pair, bd, eval_pairs, cfg.n_gauss)
    ps = np.array([s.p for s in states])
    p_mean = ps.mean(axis=0)
    scale = max(float(np.linalg.norm(p_mean)), 1e-300)
    rows = []
    for s in states:
        rows.append([s.t1, s.t2, *s.p, s.l_xy, float(np.linalg.norm(s.p - p_mean)) / scale])
    _write_csv(outdir / "invariants.csv",
               ["t1", "t2", "p0", "p1", "p2", "p3", "Lxy", "drift"], rows)
    print(f"p drift {p_drift:.3e}, Lxy drift {l_drift:.3e} over {n} pairs")

    def plot(plt):
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot([s.t1 for s in states], [r[-1] for r in rows], "o-")
        ax.set_xlabel("t1")
        ax.set_ylabel("relative momentum drift")
        fig.tight_layout()
        fig.savefig(outdir / "invariants.png", dpi=130)

    _maybe_plot(cfg, plot)
    return {"p_drift": _fmt(p_drift), "l_drift": _fmt(l_drift)}


COMMANDS = {
    "circular": cmd_circular,
    "action": cmd_action,
    "residual": cmd_residual,
    "grid": cmd_grid,
    "hessian": cmd_hessian,
    "scan": cmd_scan,
    "solve": cmd_solve,
    "invariants": cmd_invariants,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="wfvar",
        description="Finite-bounds Fokker action workflows for the "
                    "electromagnetic two-body problem",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key=value config file; flags override it")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("bool", bool):
            p.add_argument(flag, dest=f.name, action="store_const", const=True, default=None)
            p.add_argument("--no-" + f.name.replace("_", "-"), dest=f.name,
                           action="store_const", const=False, default=None)
        else:
            p.add_argument(flag, dest=f.name, default=None,
                           type=str if f.type == "str" else None)
    return p


def main(argv=None):
    t0 = time.perf_counter()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.threads is not None:
            cfg.threads = int(args.threads)
        if cfg.threads is None:
            cfg.threads = int(os.environ.get("WFVAR_THREADS", "1"))
        for name in ("m1", "m2", "e1", "e2", "r12", "arc", "gradient_tol", "residual_tol"):
            v = getattr(cfg, name)
            if isinstance(v, str):
                setattr(cfg, name, float(v))
        for name in ("nodes_per_turn", "n_chains", "n_gauss", "seed", "max_iters", "eval_pairs"):
            v = getattr(cfg, name)
            if isinstance(v, str):
                setattr(cfg, name, int(v))
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        extra = COMMANDS[args.command](cfg, outdir) or {}
        _manifest(outdir, cfg, extra, t0)
    except tuple(EXIT_CODES) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES[type(exc)]
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points.

    fracollapse ground-state|classify|simulate|analyze [--config PATH] [--jobs N] [--out DIR]

Exit codes: 0 success, 1 convergence failure, 2 configuration error,
3 missing dependency or bad data, 4 numerical integrity failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .blowup import (
    blowup_rate_fit,
    concentration_series,
    profile_series,
    write_concentration_csv,
    write_profile_csv,
)
from .config import RunConfig, load_config, read_manifest, write_manifest
from .dynamics import (
    SimConfig,
    StopReason,
    TrajectoryResult,
    gaussian,
    random_bumps,
    read_diagnostics_csv,
    ring,
    run,
    scaled_ground_state,
    write_diagnostics_csv,
)
from .errors import ConfigError, ConvergenceError, DataError, FitError, FracCollapseError
from .groundstate import GroundState, load_ground_state, save_ground_state, solve_ground_state
from .plotting import line_plot, trajectory_plots
from .spectral import (
    GROUND_STATE_VERSION,
    SNAPSHOT_VERSION,
    Grid,
    ModelParams,
    energy_critical_bound,
    read_snapshot,
    write_snapshot,
)
from .thresholds import REPORT_COLUMNS, classify, negative_energy_rho
from .virial import make_weight

log = logging.getLogger("fracollapse")

DEFAULT_OUT = "fracollapse_out"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def model_params(cfg: RunConfig) -> ModelParams:
    cfg.require("model")
    return ModelParams(
        s=cfg.need("model", "s"),
        dim=cfg.need("model", "dim"),
        p1=cfg.need("model", "p1"),
        p2=cfg.need("model", "p2"),
        lambda1=cfg.get("model", "lambda1", 0.0),
        lambda2=cfg.get("model", "lambda2", 1.0),
    )


def grid_from(cfg: RunConfig) -> Grid:
    cfg.require("grid")
    return Grid(cfg.need("model", "dim"), cfg.need("grid", "n"), cfg.need("grid", "half_length"))


def _solve(cfg: RunConfig, p: float, grid: Grid | None = None) -> GroundState:
    grid = grid_from(cfg) if grid is None else grid
    kw = dict(cfg.sections.get("solver", {}))
    return solve_ground_state(cfg.need("model", "s"), grid.dim, p, grid, **kw)


def _gs_name(s, dim, p) -> str:
    return f"ground_state_s{s:g}_N{dim}_p{p:g}.fnls"


def _report_gs(gs: GroundState, path: Path):
    e1, e2 = gs.relation_errors()
    print(f"ground_state={path}")
    print(f"s={gs.s!r} dim={gs.dim} p={gs.p!r}")
    print(f"iterations={gs.iterations} residual={gs.residual:.3e}")
    print(f"mass_sq={gs.mass_sq!r}")
    print(f"c_opt={gs.c_opt!r}")
    print(f"relation_grad_err={e1:.3e} relation_lp_err={e2:.3e}")


def cmd_ground_state(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    cfg.require("model", "grid")
    s, dim = cfg.need("model", "s"), cfg.need("model", "dim")
    if cfg.get("model", "p") is not None:
        exponents = [cfg.get("model", "p")]
    else:
        exponents = [cfg.need("model", "p1"), cfg.need("model", "p2")]
    out.mkdir(parents=True, exist_ok=True)
    for p in exponents:
        try:
            gs = _solve(cfg, p)
        except ConvergenceError as exc:
            print(f"not converged for p={p:g}: residual={exc.residual:.3e} iterations={exc.iterations}", file=sys.stderr)
            raise
        path, _ = save_ground_state(gs, out / _gs_name(s, dim, p))
        _report_gs(gs, path)
    return 0


def _discover_ground_states(cfg: RunConfig, out: Path) -> list:
    paths = [Path(p) for p in cfg.get("classify", "ground_states", ())]
    if out.is_dir():
        paths += sorted(out.glob("ground_state_*.fnls"))
    lib = []
    for p in paths:
        if not p.exists():
            raise DataError(f"ground state file {p} not found")
        lib.append(load_ground_state(p))
    return lib


def build_initial_data(cfg: RunConfig, params: ModelParams, out: Path | None = None):
    """Returns (u0, ground state used or None)."""
    data = cfg.sections.get("data", {})
    kind = data.get("kind", "gaussian")
    if kind == "snapshot":
        path = cfg.need("data", "path")
        try:
            f, _, _ = read_snapshot(path)
        except OSError as exc:
            raise DataError(f"cannot read snapshot {path}: {exc}") from None
        return f, None
    if kind == "scaled_ground_state":
        gpath = data.get("ground_state")
        gs = load_ground_state(gpath) if gpath else _solve(cfg, params.p2)
        c = data.get("c", 1.0)
        if data.get("rho_over_threshold") is not None:
            if data.get("rho") is not None:
                raise ConfigError("[data] give either rho or rho_over_threshold, not both")
            rho = data["rho_over_threshold"] * negative_energy_rho(c, gs, params)
        else:
            rho = data.get("rho", 1.0)
        return scaled_ground_state(gs, c, rho), gs
    grid = grid_from(cfg)
    if kind == "gaussian":
        return gaussian(grid, data.get("amplitude", 1.0), data.get("width", 1.0), chirp=data.get("chirp", 0.0)), None
    if kind == "ring":
        return ring(grid, data.get("amplitude", 1.0), data.get("radius", 2.0), data.get("width", 0.5)), None
    return random_bumps(grid, cfg.get("sim", "seed", 0), data.get("count", 3)), None


def cmd_classify(cfg: RunConfig, out: Path, data_path: str | None = None) -> int:
    params = model_params(cfg)
    if data_path:
        try:
            u0, _, _ = read_snapshot(data_path)
        except OSError as exc:
            raise DataError(f"cannot read data {data_path}: {exc}") from None
    else:
        u0, _ = build_initial_data(cfg, params, out)
    lib = _discover_ground_states(cfg, out)
    if cfg.get("classify", "solve_missing", False):
        for p in (params.p1, params.p2):
            if p < energy_critical_bound(params.s, params.dim) and not any(
                g.matches(params.s, params.dim, p) for g in lib
            ):
                lib.append(_solve(cfg, p))
    report = classify(
        u0, params, lib,
        case3_constant=cfg.get("classify", "case3_constant"),
        family_tol=cfg.get("classify", "family_tol", 1e-6),
    )
    sys.stdout.write(report.to_text())
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "classify.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        w.writerow(report.to_csv_row())
    return 0


def sim_config(cfg: RunConfig) -> SimConfig:
    cfg.require("sim")
    kw = {k: v for k, v in cfg.sections["sim"].items() if k != "seed"}
    for key in ("dt", "t_end"):
        if key not in kw:
            raise ConfigError(f"[sim] needs '{key}'")
    return SimConfig(**kw)


def _simulate_single(cfg: RunConfig, out: Path) -> tuple:
    params = model_params(cfg)
    sc = sim_config(cfg)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    u0, gs = build_initial_data(cfg, params, out)
    diag = cfg.sections.get("diagnostics", {})
    weight = make_weight(diag["virial_R"], u0.grid) if diag.get("virial_R") else None
    traj = run(u0, params, sc, weight, conc_delta=diag.get("conc_delta"))

    manifest = {f"config.{k}": v for k, v in cfg.echo().items()}
    diag_path = write_diagnostics_csv(out / "diagnostics.csv", traj.diagnostics)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for old in snap_dir.glob("snap_*.fnls"):
        old.unlink()
    for i, (t, f) in enumerate(traj.snapshots):
        write_snapshot(snap_dir / f"snap_{i:05d}.fnls", f, t)
    write_snapshot(out / "final.fnls", traj.final_field, traj.t_stop)
    manifest.update({
        "path.diagnostics": diag_path.name,
        "path.snapshots": snap_dir.name,
        "path.final": "final.fnls",
        "snapshot_count": len(traj.snapshots),
    })
    if gs is not None:
        gpath, cert = save_ground_state(gs, out / "ground_state.fnls")
        manifest["path.ground_state"] = gpath.name
        manifest["path.ground_state_certificate"] = cert.name
    if diag.get("plots", True):
        for key, p in trajectory_plots(out, traj.diagnostics).items():
            manifest[f"path.{key}"] = p.name
    mass0 = traj.diagnostics[0].mass
    manifest.update({
        "stop_reason": traj.stop_reason.value,
        "t_stop": repr(traj.t_stop),
        "steps": traj.steps,
        "hs_initial": repr(traj.diagnostics[0].hs),
        "hs_final": repr(traj.diagnostics[-1].hs),
        "mass_drift": repr(abs(traj.diagnostics[-1].mass - mass0) / mass0),
        "label": "empirical",
        "version.package": __version__,
        "version.snapshot": SNAPSHOT_VERSION,
        "version.ground_state": GROUND_STATE_VERSION,
        "timestamp.start": started,
        "timestamp.end": _now(),
    })
    for i, note in enumerate(traj.notes):
        manifest[f"note{i}"] = note
    write_manifest(out / "manifest.txt", manifest)
    print(f"stop_reason={traj.stop_reason.value} t_stop={traj.t_stop:.10g} steps={traj.steps}")
    print(f"manifest={out / 'manifest.txt'}")
    code = 4 if traj.stop_reason is StopReason.MASS_DRIFT else 0
    summary = {
        "stop_reason": traj.stop_reason.value,
        "t_stop": traj.t_stop,
        "hs_growth": traj.diagnostics[-1].hs / traj.diagnostics[0].hs,
    }
    return code, summary


def _sweep_worker(job):
    sections, overrides, out, source = job
    cfg = RunConfig(sections, {}, source).with_overrides(overrides)
    try:
        return _simulate_single(cfg, Path(out))
    except FracCollapseError as exc:
        return exc.exit_code, {"stop_reason": f"error: {exc}", "t_stop": float("nan"), "hs_growth": float("nan")}


def cmd_simulate(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    points = cfg.sweep_points()
    if not points:
        return _simulate_single(cfg, out)[0]
    out.mkdir(parents=True, exist_ok=True)
    jobs_list = [(cfg.sections, pt, str(out / f"run_{i:03d}"), cfg.source) for i, pt in enumerate(points)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, jobs_list))
    else:
        results = [_sweep_worker(j) for j in jobs_list]
    keys = sorted(points[0])
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", *keys, "exit_code", "stop_reason", "t_stop", "hs_growth"])
        for i, (pt, (code, summ)) in enumerate(zip(points, results)):
            w.writerow([f"run_{i:03d}", *[pt[k] for k in keys], code, summ["stop_reason"],
                        repr(summ["t_stop"]), repr(summ["hs_growth"])])
    return max(code for code, _ in results)


def cmd_analyze(manifest_path: Path, out: Path | None = None) -> int:
    if not manifest_path.exists():
        raise DataError(f"manifest {manifest_path} not found")
    man = read_manifest(manifest_path)
    base = manifest_path.parent
    out = base if out is None else out
    out.mkdir(parents=True, exist_ok=True)
    snap_dir = base / man.get("path.snapshots", "snapshots")
    files = sorted(snap_dir.glob("snap_*.fnls")) if snap_dir.is_dir() else []
    if not files:
        raise DataError(f"no snapshots in {snap_dir}")
    snaps = []
    for p in files:
        f, t, _ = read_snapshot(p)
        snaps.append((t, f))
    diags = read_diagnostics_csv(base / man.get("path.diagnostics", "diagnostics.csv"))
    traj = TrajectoryResult(snaps[-1][1], StopReason(man.get("stop_reason", "ReachedTEnd")),
                            snaps[-1][0], diags, snaps)
    s = float(man["config.model.s"])
    delta = float(man.get("config.diagnostics.conc_delta", 0.5 / s))
    resolved_tol = float(man.get("config.diagnostics.resolved_tol", 1e-6))
    window = float(man.get("config.diagnostics.rate_window", 0.3))

    conc = concentration_series(traj, delta, s)
    write_concentration_csv(out / "concentration.csv", conc)
    line_plot(out / "concentration.svg", [c.t for c in conc], {"window mass": [c.window_mass for c in conc]},
              ylabel="windowed L² mass", marker=".")

    summary = {}
    gpath = man.get("path.ground_state")
    if gpath:
        gs = load_ground_state(base / gpath)
        if gs.is_mass_critical:
            prof = profile_series(traj, gs, s, resolved_tol)
            write_profile_csv(out / "profile.csv", prof)
            if prof:
                line_plot(out / "profile.svg", [r.t for r in prof],
                          {"L²": [r.l2_dist for r in prof], "Ḣ^s": [r.hs_dist for r in prof]},
                          ylabel="distance to Q", logy=True, marker=".")
            summary["profile_rows"] = len(prof)
            summary["ground_state_mass_sq"] = repr(gs.mass_sq)
        else:
            summary["profile"] = "skipped: ground state is not mass-critical"
    try:
        fit = blowup_rate_fit(traj, window)
        summary.update({
            "rate.status": "NotBlowup" if fit.not_blowup else "ok",
            "rate.t_star": repr(fit.t_star),
            "rate.kappa": repr(fit.kappa),
            "rate.r_squared": repr(fit.r_squared),
        })
    except FitError as exc:
        summary["rate.status"] = f"FitError: {exc}"
    summary["concentration_rows"] = len(conc)
    summary["last_window_mass"] = repr(conc[-1].window_mass)
    write_manifest(out / "analysis.txt", summary)
    for k, v in summary.items():
        print(f"{k}={v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracollapse", description="Fractional NLS collapse toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("ground-state", "classify", "simulate", "analyze"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="INI config (for analyze: the run manifest)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        sp.add_argument("--out", type=Path, default=None, help=f"output directory (default {DEFAULT_OUT})")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "classify":
            sp.add_argument("--data", help="snapshot file holding the initial data")
        if name == "analyze":
            sp.add_argument("--manifest", type=Path, help="manifest written by simulate")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    env_out = os.environ.get("FRACOLLAPSE_OUT")
    out = Path(env_out) if env_out else (args.out or Path(DEFAULT_OUT))
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if args.command == "analyze":
            manifest = args.manifest or args.config or out / "manifest.txt"
            target = out if (args.out or env_out) and args.manifest else None
            return cmd_analyze(Path(manifest), target)
        if args.config is None:
            raise ConfigError("--config is required")
        cfg = load_config(args.config)
        if args.command == "ground-state":
            return cmd_ground_state(cfg, out, args.jobs)
        if args.command == "classify":
            return cmd_classify(cfg, out, args.data)
        return cmd_simulate(cfg, out, args.jobs)
    except FracCollapseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

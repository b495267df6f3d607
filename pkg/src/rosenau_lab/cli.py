"""Command-line entry point: ``rosenau-lab <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 blow-up, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from .constants import admissible_constants
from .conservation import FvState, RiemannData, cell_average_step, riemann_profile, solve_godunov
from .diagnostics import energy_balance, linf_scaling_monitor, uniform_bound_monitors
from .errors import BlowUpError, ConfigError, DomainError, QuadratureError
from .grid import make_grid
from .io import (
    config_to_json,
    export_ledger_csv,
    load_config,
    load_snapshot,
    parse_sweep_config,
    save_snapshot,
)
from .solver import EdgeLeakageWarning, Trajectory, check_initial_bounds, solve

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4

MONITOR_COLUMNS = ("name", "kind", "source", "samples", "value", "normalized",
                   "error_bar", "bound_form", "passed")


def _g(v) -> str:
    return format(float(v), ".17g")


def _monitors(traj: Trajectory, c0: float, source: str = "auto"):
    reports = list(linf_scaling_monitor(traj, c0, source))
    if traj.params.eps > 0:
        reports += uniform_bound_monitors(traj, c0, source)
    return reports


def _write_monitors(reports, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MONITOR_COLUMNS)
        for m in reports:
            w.writerow([m.name, m.kind, m.source, m.samples, _g(m.sup_value),
                        _g(m.normalized_value), _g(m.error_bar), m.bound_form, int(m.passed)])


def _read_monitors(path: Path) -> dict:
    with open(path, newline="") as fh:
        return {row["name"]: row for row in csv.DictReader(fh)}


def _write_snapshots(traj: Trajectory, out: Path):
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(traj.snapshots):
        save_snapshot(f, snap_dir / f"snap_{i:06d}.rsnu")


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    if args.stride is not None:
        if args.stride < 1:
            raise ConfigError("--stride must be at least 1")
        cfg = replace(cfg, stride=args.stride)
    stride = cfg.stride
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    u0 = cfg.initial_field()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EdgeLeakageWarning)
        traj = solve(cfg.params, u0, cfg.t_end, output_stride=stride, dt=cfg.dt,
                     safety=cfg.safety)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    (out / "config.json").write_text(config_to_json(cfg))
    _write_snapshots(traj, out)
    export_ledger_csv(traj, out / "ledger.csv")
    reports = _monitors(traj, cfg.c0)
    _write_monitors(reports, out / "monitors.csv")
    bal = energy_balance(traj)
    bounds = check_initial_bounds(u0, cfg.params, cfg.c0)
    (out / "summary.json").write_text(json.dumps({
        "steps": traj.steps,
        "snapshots": len(traj.snapshots),
        "t_end": float(traj.times[-1]),
        "energy_residual_max": bal.max_residual,
        "edge_deviation": traj.edge_deviation,
        "initial_bounds": bounds.lines,
    }, indent=2) + "\n")
    print(f"{traj.steps} steps, {len(traj.snapshots)} snapshots, "
          f"max energy residual {bal.max_residual:.3e} -> {out}")
    return EXIT_OK


def cmd_riemann(args) -> int:
    if args.n < 8 or args.n % 2:
        raise ConfigError("--n must be an even integer >= 8")
    if not args.t > 0 or not args.half_length > 0:
        raise ConfigError("--t and --half-length must be positive")
    d = RiemannData(args.ul, args.ur)
    grid = make_grid(args.half_length, args.n)
    xc = grid.x + 0.5 * grid.spacing
    if args.godunov:
        u0 = FvState(grid, cell_average_step(grid, 0.0, d.u_left, d.u_right))
        u = solve_godunov(u0, args.t, boundary="outflow").final.averages
    else:
        u = riemann_profile(d, xc, args.t)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("x", "u"))
    for xi, ui in zip(xc, u):
        w.writerow((_g(xi), _g(ui)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .harness import run_sweep

    plan = parse_sweep_config(Path(args.config).read_text())
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_sweep(plan, jobs=args.jobs)
    export_ledger_csv(report, out / "report.csv")
    for i, row in enumerate(report.rows):
        run_dir = out / f"run_{i:02d}"
        run_dir.mkdir(exist_ok=True)
        meta = {"eps": row.eps, "beta": row.beta, "n": row.n, "dt": row.dt,
                "status": row.status, "message": row.message,
                "edge_deviation": row.edge_deviation,
                "lp_errors": {f"{p:g}": v for p, v in row.lp_errors.items()},
                "initial_bounds": row.initial_bounds.lines if row.initial_bounds else None}
        if row.entropy is not None:
            meta["entropy_residual"] = {"value": row.entropy.value,
                                        "error_bar": row.entropy.error_bar}
        (run_dir / "run.json").write_text(json.dumps(meta, indent=2) + "\n")
        if row.trajectory is not None:
            _write_snapshots(row.trajectory, run_dir)
            export_ledger_csv(row.trajectory, run_dir / "ledger.csv")
            _write_monitors(list(row.linf_monitors) + list(row.monitors), run_dir / "monitors.csv")
            cfg = {
                "variant": plan.variant.value, "eps": row.eps, "beta": row.beta,
                "grid": {"half_length": plan.half_length, "n_points": row.n},
                "t_end": plan.t_end,
                "initial": {"kind": "riemann", "ul": plan.initial.u_left,
                            "ur": plan.initial.u_right, "width": None, "margin": plan.margin},
                "time_step": {"dt": row.dt, "safety": plan.safety},
                "output": {"stride": row.stride}, "c0": plan.c0,
            }
            (run_dir / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    (out / "summary.json").write_text(json.dumps(report.summary, indent=2) + "\n")
    for key, s in report.summary.items():
        if isinstance(s, dict):
            errs = ", ".join(f"{e:.4g}" for e in s["errors"])
            print(f"{key}: errors [{errs}] finest/coarsest {s['finest_over_coarsest']:.3f}")
    failed = [r for r in report.rows if not r.ok]
    for r in failed:
        print(f"eps={r.eps:g} failed: {r.message}", file=sys.stderr)
    return EXIT_BLOWUP if failed else EXIT_OK


def cmd_check_constants(args) -> int:
    k = admissible_constants(args.c0, args.variant)
    names = ("A", "B", "C", "D") if k.B is not None else ("A", "D")
    for name, v in zip(names, k.as_tuple()):
        print(f"{name} = {v:.17g}")
    for name, (v, ok) in k.inequalities().items():
        print(f"{'ok  ' if ok else 'FAIL'} {name} = {v:.6g} < 0")
    return EXIT_OK if k.feasible else EXIT_CONFIG


def cmd_diagnose(args) -> int:
    run = Path(args.run_dir)
    cfg = load_config(run / "config.json")
    paths = sorted((run / "snapshots").glob("snap_*.rsnu"))
    if not paths:
        raise FileNotFoundError(f"no snapshots under {run / 'snapshots'}")
    snaps = [load_snapshot(p) for p in paths]
    traj = Trajectory.from_snapshots(cfg.params, snaps, cfg.stride)
    reports = _monitors(traj, cfg.c0, source="sparse")
    stored = _read_monitors(run / "monitors.csv") if (run / "monitors.csv").exists() else {}
    print(f"{'monitor':34s} {'normalized':>13s} {'error_bar':>11s} {'in-run':>13s}  verdict")
    for m in reports:
        ref = stored.get(m.name)
        ref_txt, verdict = "-", "pass" if m.passed else "over C0"
        if ref is not None:
            r = float(ref["normalized"])
            ref_txt = f"{r:.6e}"
            agree = abs(r - m.normalized_value) <= m.error_bar + 1e-12 * max(1.0, abs(r))
            verdict += ", agrees" if agree else ", DIFFERS"
        print(f"{m.name:34s} {m.normalized_value:13.6e} {m.error_bar:11.3e} {ref_txt:>13s}  {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rosenau-lab",
                                description="Rosenau-KdV-RLW / Rosenau-RLW singular-limit lab")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="single dispersive run")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", default="run")
    s.add_argument("--stride", type=int)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("riemann", help="reference Riemann solution as CSV on stdout")
    r.add_argument("--ul", type=float, required=True)
    r.add_argument("--ur", type=float, required=True)
    r.add_argument("--t", type=float, required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--half-length", type=float, required=True)
    g = r.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true")
    g.add_argument("--godunov", action="store_true")
    r.set_defaults(func=cmd_riemann)

    w = sub.add_parser("sweep", help="singular-limit sweep")
    w.add_argument("--config", required=True)
    w.add_argument("--out-dir", required=True)
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check-constants", help="admissible energy-estimate constants")
    c.add_argument("--c0", type=float, required=True)
    c.add_argument("--variant", required=True, choices=("rkv-rlw", "r-rlw"))
    c.set_defaults(func=cmd_check_constants)

    d = sub.add_parser("diagnose", help="recompute monitors from stored snapshots")
    d.add_argument("--run-dir", required=True)
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, QuadratureError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

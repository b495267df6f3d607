"""Singular-limit experiment: run an (eps_n, beta_n = D^2 eps_n^4) sequence
and measure L^p_loc distances to a fine Godunov entropy solution."""
from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.fft import next_fast_len

from .conservation import FvState, FvTrajectory, RiemannData, periodic_step_averages, solve_godunov
from .diagnostics import (
    BumpTestFunction,
    EntropyResidual,
    MonitorReport,
    entropy_residual,
    linf_scaling_monitor,
    make_entropy_pair,
    uniform_bound_monitors,
)
from .errors import BlowUpError, ConfigError, DomainError
from .grid import GridSpec, fourier_resample, make_grid
from .solver import (
    EdgeLeakageWarning,
    InitialBounds,
    ModelParams,
    Trajectory,
    Variant,
    check_initial_bounds,
    mollified_riemann,
    solve,
    stable_dt,
)

__all__ = [
    "Window",
    "ExperimentPlan",
    "RunRow",
    "ConvergenceReport",
    "build_plan",
    "grid_size_for",
    "default_test_function",
    "build_reference",
    "lp_loc_error",
    "lp_samples",
    "run_single",
    "run_sweep",
]


@dataclass(frozen=True)
class Window:
    t_min: float
    t_max: float
    x_min: float
    x_max: float

    @property
    def area(self) -> float:
        return (self.t_max - self.t_min) * (self.x_max - self.x_min)


@dataclass(frozen=True)
class ExperimentPlan:
    variant: Variant
    eps_sequence: tuple
    coupling_const: float
    initial: RiemannData
    half_length: float
    t_end: float
    window: Window
    p_values: tuple = (1.0, 2.0, 3.0)
    resolution_factor: float = 8.0   # dx <= eps / resolution_factor
    ref_factor: int = 8              # N_ref = ref_factor * finest N
    n_snapshots: int = 40            # snapshot intervals on [0, t_end]
    margin: Optional[float] = None   # return-ramp offset, default L/4
    cfl: float = 0.9
    safety: float = 0.5
    c0: float = 1.0
    phi: Optional[BumpTestFunction] = None

    @property
    def betas(self):
        return tuple(self.coupling_const ** 2 * e ** 4 for e in self.eps_sequence)

    @property
    def grid_sizes(self):
        return tuple(grid_size_for(self.half_length, e, self.resolution_factor)
                     for e in self.eps_sequence)

    @property
    def ref_size(self) -> int:
        return self.ref_factor * max(self.grid_sizes)

    @property
    def output_times(self) -> np.ndarray:
        return self.t_end * np.arange(self.n_snapshots + 1) / self.n_snapshots

    def params(self, i: int) -> ModelParams:
        return ModelParams.from_coupling(self.variant, self.eps_sequence[i], self.coupling_const)

    def test_function(self) -> BumpTestFunction:
        return self.phi if self.phi is not None else default_test_function(self)


def grid_size_for(half_length: float, eps: float, factor: float = 8.0) -> int:
    """Smallest even FFT-friendly N with 2L/N <= eps/factor."""
    n = max(8, math.ceil(2 * half_length * factor / eps - 1e-9))
    n = next_fast_len(n, real=True)
    while n % 2:
        n = next_fast_len(n + 1, real=True)
    return n


def default_test_function(plan: ExperimentPlan) -> BumpTestFunction:
    """Bump centred on the wave path over the middle 80% of [0, t_end]."""
    d = plan.initial
    T = plan.t_end
    t0, rt = 0.5 * T, 0.4 * T
    # uL + uR is the shock speed, and also the middle of a fan [2 uL t, 2 uR t]
    center_speed = d.u_left + d.u_right
    x0 = center_speed * t0
    t_hi = t0 + rt
    reach = max(abs(2 * d.u_left * t_hi - x0), abs(2 * d.u_right * t_hi - x0),
                abs(center_speed * t_hi - x0))
    return BumpTestFunction(t0, rt, x0, reach + 1.0)


def build_plan(config: dict) -> ExperimentPlan:
    """Validate a sweep configuration mapping and derive the plan."""
    try:
        variant = Variant.parse(config["variant"])
        eps = tuple(float(e) for e in config["eps_sequence"])
        D = float(config.get("coupling_const", 1.0))
        ini = config.get("initial", {})
        initial = RiemannData(float(ini.get("ul", 1.0)), float(ini.get("ur", 0.0)))
        L = float(config["half_length"])
        t_end = float(config["t_end"])
    except KeyError as exc:
        raise ConfigError(f"missing required field {exc.args[0]!r}") from None
    if not eps or any(not e > 0 for e in eps):
        raise ConfigError("eps_sequence: entries must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_sequence must be strictly decreasing")
    if not D > 0:
        raise ConfigError("coupling_const must be positive")
    if not L > 0 or not t_end > 0:
        raise ConfigError("half_length and t_end must be positive")
    win = config.get("window", {})
    window = Window(float(win.get("t_min", 0.0)), float(win.get("t_max", t_end)),
                    float(win.get("x_min", -L / 2)), float(win.get("x_max", L / 2)))
    if not (0 <= window.t_min < window.t_max <= t_end):
        raise ConfigError("window: time range must lie inside [0, t_end]")
    if not (-L < window.x_min < window.x_max < L):
        raise ConfigError("window: space range must lie strictly inside the domain")
    p_values = tuple(float(p) for p in config.get("p_values", (1, 2, 3)))
    if not p_values or any(not 1 <= p < 4 for p in p_values):
        raise ConfigError("p_values: every p must satisfy 1 <= p < 4")
    phi_cfg = config.get("phi")
    phi = None
    if phi_cfg is not None:
        phi = BumpTestFunction(float(phi_cfg["t0"]), float(phi_cfg["rt"]),
                               float(phi_cfg["x0"]), float(phi_cfg["rx"]))
    plan = ExperimentPlan(
        variant=variant, eps_sequence=eps, coupling_const=D, initial=initial,
        half_length=L, t_end=t_end, window=window, p_values=p_values,
        resolution_factor=float(config.get("resolution_factor", 8.0)),
        ref_factor=int(config.get("ref_factor", 8)),
        n_snapshots=int(config.get("n_snapshots", 40)),
        margin=config.get("margin"),
        cfl=float(config.get("cfl", 0.9)),
        safety=float(config.get("safety", 0.5)),
        c0=float(config.get("c0", 1.0)),
        phi=phi,
    )
    if plan.n_snapshots < 2:
        raise ConfigError("n_snapshots must be at least 2")
    for n, e in zip(plan.grid_sizes, eps):
        if 2 * L / n > e / plan.resolution_factor * (1 + 1e-12):
            raise ConfigError(f"grid for eps={e} violates the resolution rule")
    return plan


def build_reference(plan: ExperimentPlan, ref_size: Optional[int] = None) -> FvTrajectory:
    """Godunov solution of the unmollified periodic step at the plan's output times."""
    n = ref_size or plan.ref_size
    grid = make_grid(plan.half_length, n)
    d = plan.initial
    u0 = FvState(grid, periodic_step_averages(grid, d.u_left, d.u_right, plan.margin))
    return solve_godunov(u0, plan.t_end, plan.cfl, output_times=plan.output_times[1:])


def _window_weights(grid: GridSpec, window: Window) -> np.ndarray:
    """Length of each FV cell inside [x_min, x_max]."""
    a = np.clip(grid.x, window.x_min, window.x_max)
    b = np.clip(grid.x + grid.spacing, window.x_min, window.x_max)
    return b - a


def _check_coverage(times, window: Window, what: str):
    tol = 1e-9 * max(1.0, abs(window.t_max))
    if times[0] > window.t_min + tol or times[-1] < window.t_max - tol:
        raise DomainError(
            f"{what} covers [{times[0]}, {times[-1]}], window needs "
            f"[{window.t_min}, {window.t_max}]")


def _window_times(traj: Trajectory, window: Window):
    tol = 1e-9 * max(1.0, abs(window.t_max))
    _check_coverage(traj.times, window, "trajectory")
    sel = np.where((traj.times >= window.t_min - tol) & (traj.times <= window.t_max + tol))[0]
    if (len(sel) < 2 or abs(traj.times[sel[0]] - window.t_min) > tol
            or abs(traj.times[sel[-1]] - window.t_max) > tol):
        raise DomainError("window time limits must coincide with snapshot times")
    return sel


def _cell_values(traj: Trajectory, ref: FvTrajectory, i: int) -> np.ndarray:
    g, rg = traj.grid, ref.grid
    if rg.half_length != g.half_length or rg.n_points % g.n_points:
        raise ConfigError("reference grid must refine the dispersive grid by an integer factor")
    return fourier_resample(traj.snapshots[i].samples, g, rg.n_points, shift=0.5 * rg.spacing)


def lp_loc_error(traj: Trajectory, ref: FvTrajectory, p: float, window: Window) -> float:
    """(int int_window |u - u_ref|^p dx dt)^(1/p).

    The dispersive field is evaluated at the reference cell centres by
    exact Fourier interpolation; space is integrated cell by cell (clipped
    to the window) and time by the trapezoid rule over snapshot times,
    with the reference interpolated linearly in time where needed.
    """
    if not 1 <= p < 4:
        raise ConfigError(f"p must satisfy 1 <= p < 4, got {p!r}")
    L = traj.grid.half_length
    if not (-L <= window.x_min < window.x_max <= L):
        raise DomainError("window leaves the spatial domain")
    _check_coverage(ref.times, window, "reference")
    sel = _window_times(traj, window)
    w = _window_weights(ref.grid, window)
    t = traj.times[sel]
    per_time = np.empty(len(sel))
    for j, i in enumerate(sel):
        diff = _cell_values(traj, ref, i) - ref.at(traj.times[i])
        per_time[j] = np.sum(w * np.abs(diff) ** p)
    integral = float(np.sum(0.5 * np.diff(t) * (per_time[1:] + per_time[:-1])))
    return integral ** (1.0 / p)


def lp_samples(traj: Trajectory, ref: FvTrajectory, window: Window):
    """Rows (t, x_center, u, u_ref, w) for every cell touching the window,
    ``w`` being the length of the cell inside it."""
    sel = _window_times(traj, window)
    w = _window_weights(ref.grid, window)
    cells = np.where(w > 0)[0]
    xc = ref.grid.x[cells] + 0.5 * ref.grid.spacing
    blocks = []
    for i in sel:
        t = traj.times[i]
        u = _cell_values(traj, ref, i)[cells]
        ur = ref.at(t)[cells]
        blocks.append(np.column_stack([np.full(len(cells), t), xc, u, ur, w[cells]]))
    return np.vstack(blocks)


@dataclass
class RunRow:
    eps: float
    beta: float
    n: int
    dt: float = math.nan
    stride: int = 0
    lp_errors: dict = field(default_factory=dict)
    monitors: list = field(default_factory=list)
    linf_monitors: tuple = ()
    entropy: Optional[EntropyResidual] = None
    initial_bounds: Optional[InitialBounds] = None
    wall_s: float = 0.0
    status: str = "ok"
    message: str = ""
    edge_deviation: float = 0.0
    trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def monitor_max(self) -> float:
        vals = [m.normalized_value for m in list(self.monitors) + list(self.linf_monitors)]
        return max(vals) if vals else math.nan

    def monitor(self, name: str) -> MonitorReport:
        for m in list(self.monitors) + list(self.linf_monitors):
            if m.name == name:
                return m
        raise KeyError(name)


@dataclass
class ConvergenceReport:
    plan: ExperimentPlan
    rows: list
    summary: dict

    def errors(self, p: float) -> np.ndarray:
        return np.array([r.lp_errors.get(float(p), math.nan) for r in self.rows])


def _fixed_step(plan: ExperimentPlan, params: ModelParams, grid: GridSpec, umax: float):
    """dt and stride so that snapshots land on the plan's output times."""
    dt = stable_dt(params, grid, 1.5 * max(umax, 1e-12), plan.safety)
    per_interval = math.ceil(plan.t_end / plan.n_snapshots / dt - 1e-9)
    n_steps = per_interval * plan.n_snapshots
    return plan.t_end / n_steps, per_interval


def run_single(plan: ExperimentPlan, index: int, reference: FvTrajectory,
               keep_trajectory: bool = True) -> RunRow:
    started = time.perf_counter()
    params = plan.params(index)
    eps = params.eps
    grid = make_grid(plan.half_length, plan.grid_sizes[index])
    row = RunRow(eps, params.beta, grid.n_points)
    d = plan.initial
    u0 = mollified_riemann(d.u_left, d.u_right, eps, grid, plan.margin)
    row.initial_bounds = check_initial_bounds(u0, params, plan.c0)
    umax = float(np.max(np.abs(u0.samples)))
    row.dt, row.stride = _fixed_step(plan, params, grid, umax)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EdgeLeakageWarning)
            traj = solve(params, u0, plan.t_end, output_stride=row.stride, dt=row.dt)
    except BlowUpError as exc:
        row.status = "failed"
        row.message = str(exc)
        row.wall_s = time.perf_counter() - started
        return row
    row.edge_deviation = traj.edge_deviation
    row.lp_errors = {float(p): lp_loc_error(traj, reference, p, plan.window) for p in plan.p_values}
    row.monitors = uniform_bound_monitors(traj, plan.c0)
    row.linf_monitors = linf_scaling_monitor(traj, plan.c0)
    pair = make_entropy_pair(lambda u: u * u, lambda u: 2.0 * u)
    row.entropy = entropy_residual(traj, pair, plan.test_function())
    if keep_trajectory:
        row.trajectory = traj
    row.wall_s = time.perf_counter() - started
    return row


def _summarize(plan: ExperimentPlan, rows) -> dict:
    out = {}
    for p in plan.p_values:
        errs = [r.lp_errors.get(float(p), math.nan) for r in rows]
        ratios = [b / a if a else math.nan for a, b in zip(errs, errs[1:])]
        finite = all(math.isfinite(e) for e in errs)
        out[f"p={p:g}"] = {
            "errors": errs,
            "ratios": ratios,
            "strictly_decreasing": finite and all(b < a for a, b in zip(errs, errs[1:])),
            "finest_over_coarsest": errs[-1] / errs[0] if finite and errs[0] else math.nan,
        }
    out["all_ok"] = all(r.ok for r in rows)
    return out


def _run_job(args):
    plan, index, reference, keep = args
    return run_single(plan, index, reference, keep)


def run_sweep(plan: ExperimentPlan, jobs: int = 1, reference: Optional[FvTrajectory] = None,
              keep_trajectories: bool = True) -> ConvergenceReport:
    """Run every eps of the plan; rows come back in plan order whatever ``jobs`` is."""
    if reference is None:
        reference = build_reference(plan)
    tasks = [(plan, i, reference, keep_trajectories) for i in range(len(plan.eps_sequence))]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_job, tasks))
    else:
        rows = [_run_job(t) for t in tasks]
    return ConvergenceReport(plan, rows, _summarize(plan, rows))

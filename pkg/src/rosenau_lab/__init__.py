"""Numerical lab for the regularized Rosenau-KdV-RLW and Rosenau-RLW
equations and their vanishing eps, beta limit to u_t + (u^2)_x = 0."""
from .conservation import (
    FvState,
    FvTrajectory,
    RiemannData,
    godunov_flux,
    rankine_hugoniot_speed,
    riemann_exact,
    riemann_profile,
    solve_godunov,
)
from .constants import AdmissibleConstants, admissible_constants
from .diagnostics import (
    BumpTestFunction,
    EnergyBalance,
    EntropyPair,
    MonitorReport,
    energy,
    energy_balance,
    entropy_residual,
    linf_scaling_monitor,
    make_entropy_pair,
    uniform_bound_monitors,
)
from .errors import (
    BlowUpError,
    ConfigError,
    DomainError,
    QuadratureError,
    RosenauLabError,
    SnapshotFormatError,
)
from .grid import Field, GridSpec, NormLedger, deriv, make_grid, norms
from .harness import ConvergenceReport, ExperimentPlan, build_plan, lp_loc_error, run_sweep
from .io import RunConfig, export_ledger_csv, parse_config, read_snapshot, write_snapshot
from .solver import (
    ModelParams,
    Trajectory,
    Variant,
    check_initial_bounds,
    gaussian,
    mollified_riemann,
    solve,
    stable_dt,
    step_ifrk4,
)

__version__ = "0.1.0"

"""Entropy solutions of the limit law u_t + (u^2)_x = 0.

The flux is u^2 (not u^2/2), so characteristic speeds are 2u and shocks
travel at s = u_left + u_right.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError
from .grid import GridSpec

__all__ = [
    "RiemannData",
    "FvState",
    "FvTrajectory",
    "rankine_hugoniot_speed",
    "riemann_exact",
    "riemann_profile",
    "godunov_flux",
    "solve_godunov",
    "cell_average_step",
    "periodic_step_averages",
]


@dataclass(frozen=True)
class RiemannData:
    u_left: float
    u_right: float

    def __post_init__(self):
        if not (math.isfinite(self.u_left) and math.isfinite(self.u_right)):
            raise ConfigError("Riemann states must be finite")


def rankine_hugoniot_speed(d: RiemannData) -> float:
    if d.u_left == d.u_right:
        raise ValueError("shock speed is undefined for equal states")
    return d.u_left + d.u_right


def riemann_exact(d: RiemannData, xi):
    """Entropy solution as a function of the similarity variable xi = x / t."""
    xi = np.asarray(xi, dtype=float)
    ul, ur = d.u_left, d.u_right
    if ul > ur:
        s = ul + ur
        out = np.where(xi < s, ul, ur)
    elif ul < ur:
        out = np.where(xi <= 2 * ul, ul, np.where(xi >= 2 * ur, ur, 0.5 * xi))
    else:
        out = np.full_like(xi, ul)
    return float(out) if out.ndim == 0 else out


def riemann_profile(d: RiemannData, x, t: float, x0: float = 0.0):
    """Exact solution at time ``t`` for a jump located at ``x0``."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.where(x < x0, d.u_left, d.u_right).astype(float)
    return riemann_exact(d, (x - x0) / t)


def godunov_flux(u_left, u_right):
    out = _kernels.godunov_flux_np(u_left, u_right)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FvState:
    """Cell averages on ``grid`` (cell j covers [x_j, x_j + dx))."""

    grid: GridSpec
    averages: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        a = np.array(self.averages, dtype=float)
        if a.shape != (self.grid.n_points,):
            raise ConfigError(f"expected {self.grid.n_points} averages, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ConfigError("cell averages must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "averages", a)

    @property
    def centers(self) -> np.ndarray:
        return self.grid.x + 0.5 * self.grid.spacing

    @property
    def total(self) -> float:
        return float(np.sum(self.averages) * self.grid.spacing)


@dataclass
class FvTrajectory:
    grid: GridSpec
    times: np.ndarray
    states: np.ndarray  # (n_times, n_cells)
    steps: int = 0

    @property
    def final(self) -> FvState:
        return FvState(self.grid, self.states[-1], float(self.times[-1]))

    def state(self, i: int) -> FvState:
        return FvState(self.grid, self.states[i], float(self.times[i]))

    def at(self, t: float) -> np.ndarray:
        """Cell averages at time t, linear in time between stored frames."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise DomainError(f"time {t} outside reference coverage [{times[0]}, {times[-1]}]")
        i = int(np.searchsorted(times, t))
        if i < len(times) and abs(times[i] - t) <= 1e-12 * max(1.0, abs(t)):
            return self.states[i]
        if i > 0 and abs(times[i - 1] - t) <= 1e-12 * max(1.0, abs(t)):
            return self.states[i - 1]
        i = min(max(i, 1), len(times) - 1)
        w = (t - times[i - 1]) / (times[i] - times[i - 1])
        return (1 - w) * self.states[i - 1] + w * self.states[i]


def solve_godunov(u0: FvState, t_end: float, cfl: float = 0.9,
                  output_times: Optional[Sequence[float]] = None,
                  boundary: str = "periodic", record_bounds: bool = False) -> FvTrajectory:
    """First-order Godunov scheme with dt = cfl dx / max 2|u|.

    Steps are shortened to land exactly on every entry of ``output_times``
    (default: only ``t_end``). ``boundary`` is ``"periodic"`` or
    ``"outflow"`` (zero-gradient ghost cells). With ``record_bounds`` the
    scheme stops at every step so the caller can audit the min/max
    principle; the returned trajectory then holds every step.
    """
    if not 0 < cfl < 1:
        raise ConfigError(f"cfl must lie in (0, 1), got {cfl!r}")
    if not t_end > 0:
        raise ConfigError(f"t_end must be positive, got {t_end!r}")
    if boundary not in ("periodic", "outflow"):
        raise ConfigError(f"boundary must be 'periodic' or 'outflow', got {boundary!r}")
    periodic = boundary == "periodic"
    if output_times is None:
        output_times = [t_end]
    targets = sorted(float(t) for t in output_times if u0.time < t <= t_end)
    if not targets or targets[-1] < t_end:
        targets.append(float(t_end))

    dx = u0.grid.spacing
    u = np.array(u0.averages)
    t = u0.time
    times = [t]
    states = [u.copy()]
    steps = 0
    for target in targets:
        while t < target:
            max_steps = 1 if record_bounds else 2 ** 62
            u, t, n = _kernels.godunov_advance(u, dx, t, target, cfl, periodic, max_steps)
            steps += n
            if record_bounds and t < target:
                times.append(t)
                states.append(u.copy())
        times.append(t)
        states.append(u.copy())
    return FvTrajectory(u0.grid, np.array(times), np.array(states), steps)


def cell_average_step(grid: GridSpec, x_jump: float, left: float, right: float) -> np.ndarray:
    """Exact cell averages of (left for x < x_jump, right otherwise)."""
    edges = grid.x
    frac_left = np.clip((x_jump - edges) / grid.spacing, 0.0, 1.0)
    return frac_left * left + (1 - frac_left) * right


def periodic_step_averages(grid: GridSpec, u_left: float, u_right: float,
                           margin: Optional[float] = None) -> np.ndarray:
    """Cell averages of the periodic two-jump profile matching
    :func:`rosenau_lab.solver.mollified_riemann`: u_left on (-L + margin, 0),
    u_right elsewhere."""
    L = grid.half_length
    margin = L / 4 if margin is None else margin
    x_ret = -L + margin
    edges = grid.x
    a = np.clip(edges, x_ret, 0.0)
    b = np.clip(edges + grid.spacing, x_ret, 0.0)
    inside = (b - a) / grid.spacing
    return inside * u_left + (1 - inside) * u_right

"""Integrating-factor RK4 solver for the regularized fifth-order equations.

Both variants share the form

    u_t + (u^2)_x + c * beta u_xxx - beta u_txx + beta^2 u_txxxx = eps u_xx

with c = 1 for the Rosenau-KdV-RLW variant and c = 0 for Rosenau-RLW. In
Fourier space the time-derivative operator 1 + beta k^2 + beta^2 k^4 is
strictly positive, so the system is an explicit ODE per mode:

    d/dt u_hat = lam(k) u_hat - i k (u^2)_hat / (1 + beta k^2 + beta^2 k^4).

The linear part is propagated exactly by exp(lam dt) (Lawson / IF-RK4).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import BlowUpError, ConfigError
from .grid import Field, GridSpec, NormLedger, dealias_mask, derivative_multiplier

__all__ = [
    "Variant",
    "ModelParams",
    "Trajectory",
    "InitialBounds",
    "EdgeLeakageWarning",
    "symbol",
    "grid_symbol",
    "nonlinear_rhs",
    "stable_dt",
    "step_ifrk4",
    "solve",
    "mollified_riemann",
    "gaussian",
    "check_initial_bounds",
    "field_quantities",
]

# keys of the dense per-step ledger, in CSV order after "t"
NORM_KEYS = ("l2", "l4", "linf", "h1_semi", "h2_semi")
EXTRA_KEYS = (
    "h3_semi", "h4_semi", "linf_x", "uux_l2sq", "uxuxx_l1",
    "ut_h1sq", "ut_h2sq", "ut_h3sq",
)


class EdgeLeakageWarning(UserWarning):
    """Waves reached the edge of the periodic box."""


class Variant(str, Enum):
    RKV_RLW = "rkv-rlw"
    R_RLW = "r-rlw"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for v in cls:
            if v.value == key:
                return v
        raise ConfigError(f"unknown variant {value!r}; expected 'rkv-rlw' or 'r-rlw'")


@dataclass(frozen=True)
class ModelParams:
    """Variant and the diffusion/dispersion pair (eps, beta).

    ``eps = 0`` is accepted for energy-conservation experiments; ``beta``
    must be strictly positive.
    """

    variant: Variant
    eps: float
    beta: float
    coupling_const: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not (math.isfinite(self.eps) and self.eps >= 0):
            raise ConfigError(f"eps must be positive, got {self.eps!r}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ConfigError(f"beta must be positive, got {self.beta!r}")
        if self.coupling_const is not None and not self.coupling_const > 0:
            raise ConfigError(f"coupling_const must be positive, got {self.coupling_const!r}")

    @classmethod
    def from_coupling(cls, variant, eps: float, coupling_const: float) -> "ModelParams":
        """beta = D^2 eps^4."""
        return cls(variant, eps, coupling_const ** 2 * eps ** 4, coupling_const)

    @property
    def dispersive(self) -> bool:
        return self.variant is Variant.RKV_RLW


def _mass_operator(beta, k):
    return 1.0 + beta * k ** 2 + beta ** 2 * k ** 4


def symbol(params: ModelParams, k):
    """lam(k) = (i c beta k^3 - eps k^2) / (1 + beta k^2 + beta^2 k^4)."""
    k = np.asarray(k, dtype=float)
    num = -params.eps * k ** 2 + 0j
    if params.dispersive:
        num = num + 1j * params.beta * k ** 3
    lam = num / _mass_operator(params.beta, k)
    return lam if lam.ndim else complex(lam)


def grid_symbol(params: ModelParams, grid: GridSpec) -> np.ndarray:
    """Symbol on the rfft wavenumbers; the odd k^3 part is dropped at Nyquist."""
    k = grid.rwavenumbers
    num = -params.eps * k ** 2 + 0j
    if params.dispersive:
        num = num + params.beta * (-derivative_multiplier(grid, 3))
    return num / _mass_operator(params.beta, k)


class _Operators:
    """Per-(grid, params) spectral arrays reused across steps."""

    def __init__(self, params: ModelParams, grid: GridSpec):
        self.params = params
        self.grid = grid
        self.n = grid.n_points
        self.lam = grid_symbol(params, grid)
        mask = dealias_mask(self.n)
        # -ik / mass, dealiased; the k = 0 entry is exactly zero
        self.nl = np.where(
            mask, -derivative_multiplier(grid, 1) / _mass_operator(params.beta, grid.rwavenumbers), 0)
        self.mask = mask
        self._cache_dt = None

    def exponentials(self, dt):
        if self._cache_dt != dt:
            self._e_half = np.exp(self.lam * (0.5 * dt))
            self._e_full = self._e_half * self._e_half
            self._cache_dt = dt
        return self._e_half, self._e_full

    def nonlinear(self, uh):
        u = np.fft.irfft(np.where(self.mask, uh, 0), n=self.n)
        return self.nl * np.fft.rfft(u * u)

    def rhs(self, uh):
        return self.lam * uh + self.nonlinear(uh)


def nonlinear_rhs(f: Field, params: ModelParams) -> Field:
    """-(u^2)_x with a 2/3-dealiased product, divided by the mass operator."""
    if not f.finite:
        raise BlowUpError("non-finite input to nonlinear_rhs", time=f.time)
    ops = _Operators(params, f.grid)
    out = np.fft.irfft(ops.nonlinear(f.spectrum), n=f.grid.n_points)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite nonlinear term", time=f.time)
    return f.with_samples(out)


def stable_dt(params: ModelParams, grid: GridSpec, umax: float, safety: float = 0.5) -> float:
    """safety * min(2.8 / max|lam|, dx / (2 max(umax, 1e-12)))."""
    if not 0 < safety <= 1:
        raise ConfigError(f"safety must lie in (0, 1], got {safety!r}")
    if not math.isfinite(umax):
        raise BlowUpError("non-finite umax passed to stable_dt")
    lam_max = float(np.max(np.abs(symbol(params, grid.wavenumbers))))
    linear = 2.8 / lam_max if lam_max > 0 else math.inf
    advective = grid.spacing / (2.0 * max(umax, 1e-12))
    return safety * min(linear, advective)


def _ifrk4(uh, ops: _Operators, dt, nonlinear=True):
    e_half, e_full = ops.exponentials(dt)
    if not nonlinear:
        return e_full * uh
    N = ops.nonlinear
    k1 = N(uh)
    k2 = N(e_half * (uh + 0.5 * dt * k1))
    k3 = N(e_half * uh + 0.5 * dt * k2)
    k4 = N(e_full * uh + dt * e_half * k3)
    return e_full * uh + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)


def step_ifrk4(f: Field, params: ModelParams, dt: float, nonlinear: bool = True) -> Field:
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt!r}")
    ops = _Operators(params, f.grid)
    out = np.fft.irfft(_ifrk4(f.spectrum, ops, dt, nonlinear), n=f.grid.n_points)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(
            f"non-finite solution at t={f.time + dt:.6g}; dt={dt:.3g} is probably too large",
            time=f.time + dt)
    return f.with_samples(out, f.time + dt)


def _parseval_weights(grid: GridSpec) -> np.ndarray:
    # sum_j |u_j|^2 dx == sum_k w_k |u_hat_k|^2 for rfft coefficients
    n = grid.n_points
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w * grid.spacing / n


def _quantities(uh, ops: _Operators, w, with_time_derivative=True):
    grid = ops.grid
    n = grid.n_points
    dx = grid.spacing
    u = np.fft.irfft(uh, n=n)
    d = [np.fft.irfft(derivative_multiplier(grid, m) * uh, n=n) for m in (1, 2, 3, 4)]
    q = {
        "l2": math.sqrt(np.sum(u * u) * dx),
        "l4": (np.sum(u ** 4) * dx) ** 0.25,
        "linf": float(np.max(np.abs(u))),
        "h1_semi": math.sqrt(np.sum(d[0] ** 2) * dx),
        "h2_semi": math.sqrt(np.sum(d[1] ** 2) * dx),
        "h3_semi": math.sqrt(np.sum(d[2] ** 2) * dx),
        "h4_semi": math.sqrt(np.sum(d[3] ** 2) * dx),
        "linf_x": float(np.max(np.abs(d[0]))),
        "uux_l2sq": float(np.sum((u * d[0]) ** 2) * dx),
        "uxuxx_l1": float(np.sum(np.abs(d[0] * d[1])) * dx),
    }
    if with_time_derivative:
        uth = ops.rhs(uh)
        for m in (1, 2, 3):
            q[f"ut_h{m}sq"] = float(np.sum(w * np.abs(derivative_multiplier(grid, m) * uth) ** 2))
        k2 = derivative_multiplier(grid, 1).imag ** 2
        # d/dt ||u_x||^2
        q["_dh1sq_dt"] = float(2.0 * np.sum(w * k2 * (np.conj(uh) * uth).real))
    return q


def field_quantities(f: Field, params: ModelParams) -> dict:
    """All per-instant norms used by the ledger and the monitors."""
    ops = _Operators(params, f.grid)
    q = _quantities(f.spectrum, ops, _parseval_weights(f.grid))
    q.pop("_dh1sq_dt")
    q["energy"] = q["l2"] ** 2 + params.beta * q["h1_semi"] ** 2 + params.beta ** 2 * q["h2_semi"] ** 2
    return q


@dataclass
class Trajectory:
    """Output of :func:`solve`.

    ``times``/``snapshots`` are the stored fields (every ``output_stride``
    steps plus the final state). ``step_times`` and ``ledger`` hold one
    entry per accepted step, preceded by the initial state. The ledger
    column ``dissipation`` is 2 eps int_0^t ||u_x||^2 ds.
    """

    params: ModelParams
    grid: GridSpec
    times: np.ndarray
    snapshots: list
    step_times: np.ndarray
    ledger: dict
    output_stride: int = 1
    steps: int = 0
    edge_deviation: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.step_times = np.asarray(self.step_times, dtype=float)
        self.ledger = {k: np.asarray(v, dtype=float) for k, v in self.ledger.items()}

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    def ledger_entry(self, i: int) -> NormLedger:
        return NormLedger(**{k: float(self.ledger[k][i]) for k in NORM_KEYS})

    @property
    def has_dense_ledger(self) -> bool:
        return all(k in self.ledger for k in EXTRA_KEYS)

    def snapshot_array(self) -> np.ndarray:
        return np.stack([s.samples for s in self.snapshots])

    @classmethod
    def from_snapshots(cls, params, snapshots, output_stride=1):
        """Sparse trajectory rebuilt from stored fields (ledger at snapshot times)."""
        grid = snapshots[0].grid
        times = [s.time for s in snapshots]
        rows = [field_quantities(s, params) for s in snapshots]
        ledger = {k: [r[k] for r in rows] for k in rows[0]}
        ledger["dissipation"] = _trapezoid_cumulative(
            times, 2.0 * params.eps * np.asarray(ledger["h1_semi"]) ** 2)
        return cls(params, grid, times, list(snapshots), times, ledger, output_stride,
                   steps=len(times) - 1)


def _trapezoid_cumulative(t, g):
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    out = np.zeros_like(t)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (g[1:] + g[:-1]))
    return out


def _edge_drift(samples, ref_edge, amplitude):
    edge = np.concatenate([samples[:2], samples[-2:]])
    return float(np.max(np.abs(edge - ref_edge)) / amplitude) if amplitude > 0 else 0.0


def solve(params: ModelParams, u0: Field, t_end: float, output_stride: int = 1,
          dt: Optional[float] = None, safety: float = 0.5,
          check_c0: Optional[float] = None, force: bool = False,
          edge_tolerance: float = 1e-8) -> Trajectory:
    """Integrate from ``u0`` to ``t_end``.

    With ``dt=None`` each step uses :func:`stable_dt` at the current max|u|
    (the last step is shortened to land on ``t_end``). A fixed ``dt`` is
    rounded down so that an integer number of steps reaches ``t_end``.

    If ``check_c0`` is given the initial data must pass
    :func:`check_initial_bounds` against it unless ``force`` is set.

    Raises :class:`BlowUpError` (carrying the partial trajectory) when the
    solution stops being finite.
    """
    if not t_end > 0:
        raise ConfigError(f"t_end must be positive, got {t_end!r}")
    if int(output_stride) != output_stride or output_stride < 1:
        raise ConfigError(f"output_stride must be a positive integer, got {output_stride!r}")
    if not u0.finite:
        raise ConfigError("initial data must be finite")
    if check_c0 is not None and not force:
        verdict = check_initial_bounds(u0, params, check_c0)
        if not verdict.passed:
            raise ConfigError(
                f"initial data violates the admissibility bounds for C0={check_c0}: "
                f"{verdict.lines}; pass force=True to override")

    grid = u0.grid
    ops = _Operators(params, grid)
    w = _parseval_weights(grid)
    beta, eps = params.beta, params.eps

    if dt is not None:
        if not dt > 0:
            raise ConfigError(f"dt must be positive, got {dt!r}")
        n_fixed = max(1, math.ceil(t_end / dt - 1e-9))
        dt_fixed = t_end / n_fixed
    else:
        n_fixed = None

    uh = np.fft.rfft(u0.samples)
    t = 0.0
    keys = NORM_KEYS + EXTRA_KEYS + ("energy", "dissipation")
    ledger = {k: [] for k in keys}
    step_times = []

    q = _quantities(uh, ops, w)

    def record(q, t, diss):
        step_times.append(t)
        for k in NORM_KEYS + EXTRA_KEYS:
            ledger[k].append(q[k])
        ledger["energy"].append(q["l2"] ** 2 + beta * q["h1_semi"] ** 2 + beta ** 2 * q["h2_semi"] ** 2)
        ledger["dissipation"].append(diss)

    diss = 0.0
    record(q, t, diss)
    times = [0.0]
    snapshots = [u0.with_samples(u0.samples, 0.0)]
    edge0 = np.concatenate([u0.samples[:2], u0.samples[-2:]])
    amplitude = float(np.max(u0.samples) - np.min(u0.samples)) or float(np.max(np.abs(u0.samples)))
    edge_dev = 0.0

    def partial():
        return Trajectory(params, grid, times, snapshots, step_times, ledger,
                          output_stride, steps=len(step_times) - 1, edge_deviation=edge_dev)

    step = 0
    while True:
        if n_fixed is not None:
            if step >= n_fixed:
                break
            h = dt_fixed
        else:
            if t >= t_end * (1 - 1e-14):
                break
            h = stable_dt(params, grid, q["linf"], safety)
            if t + h >= t_end or t_end - (t + h) < 1e-12 * t_end:
                h = t_end - t
        uh_new = _ifrk4(uh, ops, h)
        if n_fixed is not None:
            # index-based times so fixed-step runs land exactly on k * dt
            t_new = t_end if step + 1 == n_fixed else (step + 1) * dt_fixed
        else:
            t_new = t + h
        if not np.all(np.isfinite(uh_new)):
            raise BlowUpError(
                f"solution became non-finite at t={t_new:.6g} (dt={h:.3g}); "
                "the time step is probably too large for these parameters",
                time=t_new, trajectory=partial())
        q_new = _quantities(uh_new, ops, w)
        # Hermite-corrected trapezoid for 2 eps int ||u_x||^2
        g0, g1 = 2 * eps * q["h1_semi"] ** 2, 2 * eps * q_new["h1_semi"] ** 2
        dg0, dg1 = 2 * eps * q["_dh1sq_dt"], 2 * eps * q_new["_dh1sq_dt"]
        diss = diss + 0.5 * h * (g0 + g1) + h * h / 12.0 * (dg0 - dg1)
        uh, t, q = uh_new, t_new, q_new
        step += 1
        record(q, t, diss)
        done = (step == n_fixed) if n_fixed is not None else t >= t_end * (1 - 1e-14)
        if step % output_stride == 0 or done:
            samples = np.fft.irfft(uh, n=grid.n_points)
            times.append(t)
            snapshots.append(Field(grid, samples, t))
            edge_dev = max(edge_dev, _edge_drift(samples, edge0, amplitude))

    if edge_dev > edge_tolerance:
        warnings.warn(
            f"edge values drifted by {edge_dev:.2e} of the initial amplitude; "
            "consider a larger half_length", EdgeLeakageWarning, stacklevel=2)
    return partial()


def mollified_riemann(u_left: float, u_right: float, width: float, grid: GridSpec,
                      margin: Optional[float] = None) -> Field:
    """Smooth periodic approximation of the step (u_left | u_right) at x = 0.

    The jump at the origin is a tanh of the given width; a matching return
    ramp centred at ``-L + margin`` (default L/4) closes the profile so the
    field is periodic: u = u_left on (-L + margin, 0), u_right elsewhere.
    """
    if not width >= 2 * grid.spacing * (1 - 1e-12):
        raise ConfigError(
            f"mollification width {width} must be at least 2*dx = {2 * grid.spacing}")
    L = grid.half_length
    margin = L / 4 if margin is None else margin
    if not 0 < margin < L:
        raise ConfigError(f"margin must lie in (0, L), got {margin!r}")
    x = grid.x
    jump = u_left - u_right
    if jump == 0:
        return Field(grid, np.full(grid.n_points, float(u_left)), 0.0)
    x_ret = -L + margin
    u = (0.5 * (u_left + u_right) - 0.5 * jump * np.tanh(x / width)
         + 0.5 * jump * (np.tanh((x - x_ret) / width) - 1.0))
    return Field(grid, u, 0.0)


def gaussian(grid: GridSpec, amplitude: float = 1.0, center: float = 0.0,
             sigma: float = 1.0) -> Field:
    """amplitude * exp(-((x - center) / sigma)^2)."""
    return Field(grid, amplitude * np.exp(-((grid.x - center) / sigma) ** 2), 0.0)


@dataclass(frozen=True)
class InitialBounds:
    terms: dict
    lines: dict
    c0: float

    @property
    def passed(self) -> bool:
        return all(v <= self.c0 for v in self.lines.values())


def check_initial_bounds(u0: Field, params: ModelParams, c0: float = 1.0) -> InitialBounds:
    """Evaluate the admissibility combinations required of the initial data.

    The Rosenau-KdV-RLW variant uses three lines (H1, H2/H3 and H4
    weighted sums); Rosenau-RLW uses a single line with beta eps^2 ||u_xx||^2.
    """
    q = field_quantities(u0, params)
    e, b = params.eps, params.beta
    terms = {
        "l2_sq": q["l2"] ** 2,
        "l4_4th": q["l4"] ** 4,
        "h1_sq": q["h1_semi"] ** 2,
        "h2_sq": q["h2_semi"] ** 2,
        "h3_sq": q["h3_semi"] ** 2,
        "h4_sq": q["h4_semi"] ** 2,
    }
    if params.dispersive:
        lines = {
            "mass_h1": terms["l2_sq"] + terms["l4_4th"] + (b + e ** 2) * terms["h1_sq"],
            "h2_h3": (b * e + b * e ** 2 + b ** 2) * terms["h2_sq"]
            + (b ** 2 * e ** 2 + b ** 3) * terms["h3_sq"],
            "h4": b ** 4 * terms["h4_sq"],
        }
    else:
        lines = {"mass_h2": terms["l2_sq"] + terms["l4_4th"] + b * e ** 2 * terms["h2_sq"]}
    terms = {k: float(v) for k, v in terms.items()}
    lines = {k: float(v) for k, v in lines.items()}
    return InitialBounds(terms, lines, float(c0))

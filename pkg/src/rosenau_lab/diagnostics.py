"""Numerical checks of the a priori estimates and of the entropy inequality.

Monitors report a raw quantity (a sup in time or a time integral) together
with its value normalised by the eps/beta power the estimate predicts. The
unknown data-dependent constant is never fixed; sweeps compare normalised
values across eps instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigError, DomainError, QuadratureError
from .grid import Field, norms
from .solver import Trajectory, Variant, field_quantities

__all__ = [
    "energy",
    "EnergyBalance",
    "energy_balance",
    "MonitorReport",
    "linf_scaling_monitor",
    "uniform_bound_monitors",
    "EntropyPair",
    "make_entropy_pair",
    "adaptive_simpson",
    "BumpTestFunction",
    "EntropyResidual",
    "entropy_residual",
    "weak_entropy_residual",
]


def energy(f: Field, beta: float) -> float:
    """||u||^2 + beta ||u_x||^2 + beta^2 ||u_xx||^2."""
    n = norms(f)
    return n.l2 ** 2 + beta * n.h1_semi ** 2 + beta ** 2 * n.h2_semi ** 2


@dataclass
class EnergyBalance:
    e_initial: float
    e_series: np.ndarray            # (n, 2): t, E(t)
    dissipation_series: np.ndarray  # (n, 2): t, 2 eps int_0^t ||u_x||^2
    residual_series: np.ndarray     # (n, 2): t, |E + D - E0| / E0

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual_series[:, 1]))


def energy_balance(traj: Trajectory) -> EnergyBalance:
    t = traj.step_times
    if t.size == 0:
        raise ValueError("trajectory ledger is empty")
    E = traj.ledger["energy"]
    D = traj.ledger["dissipation"]
    e0 = float(E[0])
    res = np.abs(E + D - e0) / max(e0, np.finfo(float).tiny)
    if e0 == 0.0:
        res = np.abs(E + D)
    return EnergyBalance(e0, np.column_stack([t, E]), np.column_stack([t, D]),
                         np.column_stack([t, res]))


@dataclass(frozen=True)
class MonitorReport:
    name: str
    sup_value: float
    bound_form: str
    normalized_value: float
    passed: bool
    error_bar: float = 0.0
    kind: str = "sup"
    source: str = "dense"
    samples: int = 0


def _series(traj: Trajectory, source: str):
    """Times and per-instant quantities, from the per-step ledger or the snapshots."""
    if source == "auto":
        source = "dense" if traj.has_dense_ledger else "sparse"
    if source == "dense":
        return source, traj.step_times, traj.ledger
    rows = [field_quantities(s, traj.params) for s in traj.snapshots]
    q = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    return source, traj.times, q


def _coarse_indices(n):
    idx = list(range(0, n, 2))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return np.array(idx)


def _trapz(t, g):
    return float(np.sum(0.5 * np.diff(t) * (g[1:] + g[:-1])))


def _integral_with_bar(t, g):
    if len(t) < 3:
        raise QuadratureError(
            f"time quadrature needs at least 3 samples, got {len(t)}; lower the output stride")
    fine = _trapz(t, g)
    c = _coarse_indices(len(t))
    coarse = _trapz(t[c], g[c])
    # local trapezoid error h^3/12 |g''| with g'' from second divided
    # differences, taking the larger estimate on either side of each interval
    h = np.diff(t)
    slope = np.diff(g) / h
    dd = np.abs(2.0 * np.diff(slope) / (h[1:] + h[:-1]))
    curv = np.maximum(np.concatenate([dd[:1], dd]), np.concatenate([dd, dd[-1:]]))
    local = float(np.sum(h ** 3 * curv) / 12.0)
    return fine, max(abs(fine - coarse), local)


def _sup_with_bar(g):
    if len(g) < 3:
        raise QuadratureError(f"sup monitors need at least 3 samples, got {len(g)}")
    i = int(np.argmax(g))
    fine = float(g[i])
    coarse = float(np.max(g[_coarse_indices(len(g))]))
    neighbours = [abs(g[j] - g[i]) for j in (i - 1, i + 1) if 0 <= j < len(g)]
    return fine, max(fine - coarse, 0.5 * max(neighbours))


def _make(name, raw, bar, factor, bound_form, c0, kind, source, n):
    normalized = factor * raw
    return MonitorReport(name, float(raw), bound_form, float(normalized),
                         bool(normalized <= c0), float(factor * bar), kind, source, n)


def linf_scaling_monitor(traj: Trajectory, c0: float = 1.0, source: str = "auto"):
    """sup_t ||u||_inf * beta^(1/4) and sup_t ||u_x||_inf * beta^(3/4)."""
    source, t, q = _series(traj, source)
    b = traj.params.beta
    u_sup, u_bar = _sup_with_bar(np.asarray(q["linf"]))
    ux_sup, ux_bar = _sup_with_bar(np.asarray(q["linf_x"]))
    return (
        _make("u_linf", u_sup, u_bar, b ** 0.25, "C0*beta^(-1/4)", c0, "sup", source, len(t)),
        _make("ux_linf", ux_sup, ux_bar, b ** 0.75, "C0*beta^(-3/4)", c0, "sup", source, len(t)),
    )


def uniform_bound_monitors(traj: Trajectory, c0: float = 1.0, source: str = "auto"):
    """Every eps/beta-uniform bound of the higher-order energy estimate.

    Sup-in-time families (L4 norm and weighted Sobolev seminorms) and
    time-integrated families (including beta int ||u_x u_xx||_1 / eps^2 and
    beta^2 int ||u_xx||^2 / eps^5) for Rosenau-KdV-RLW; the reduced list
    for Rosenau-RLW.
    """
    p = traj.params
    e, b = p.eps, p.beta
    if e <= 0:
        raise ValueError("uniform-bound monitors need eps > 0")
    source, t, q = _series(traj, source)
    t = np.asarray(t)
    n = len(t)
    g = {k: np.asarray(v) for k, v in q.items()}

    sups = [("u_l4", "l4", 1.0, "C0")]
    integrals = [
        ("eps_int_uux_sq", g["uux_l2sq"], e, "C0*eps^(-1)"),
        ("beta_eps_int_utx_sq", g["ut_h1sq"], b * e, "C0*(beta*eps)^(-1)"),
        ("beta2_eps_int_utxx_sq", g["ut_h2sq"], b ** 2 * e, "C0*(beta^2*eps)^(-1)"),
        ("beta3_eps_int_utxxx_sq", g["ut_h3sq"], b ** 3 * e, "C0*(beta^3*eps)^(-1)"),
    ]
    if p.variant is Variant.RKV_RLW:
        sups += [
            ("eps_ux_l2", "h1_semi", e, "C0*eps^(-1)"),
            ("sqrt_beta_eps_uxx_l2", "h2_semi", math.sqrt(b * e), "C0*(beta*eps)^(-1/2)"),
            ("eps_sqrt_beta_uxx_l2", "h2_semi", e * math.sqrt(b), "C0*eps^(-1)*beta^(-1/2)"),
            ("beta_uxx_l2", "h2_semi", b, "C0*beta^(-1)"),
            ("beta_eps_uxxx_l2", "h3_semi", b * e, "C0*(beta*eps)^(-1)"),
            ("beta32_uxxx_l2", "h3_semi", b ** 1.5, "C0*beta^(-3/2)"),
            ("beta_uxxxx_l2", "h4_semi", b, "C0*beta^(-1)"),
        ]
        integrals += [
            ("eps3_int_uxx_sq", g["h2_semi"] ** 2, e ** 3, "C0*eps^(-3)"),
            ("beta2_eps_int_uxxx_sq", g["h3_semi"] ** 2, b ** 2 * e, "C0*(beta^2*eps)^(-1)"),
            ("beta_int_ux_uxx_l1_over_eps2", g["uxuxx_l1"], b / e ** 2, "C0*eps^2*beta^(-1)"),
            ("beta2_int_uxx_sq_over_eps5", g["h2_semi"] ** 2, b ** 2 / e ** 5, "C0*eps^5*beta^(-2)"),
        ]
    else:
        sups += [("eps_sqrt_beta_uxx_l2", "h2_semi", e * math.sqrt(b), "C0*eps^(-1)*beta^(-1/2)")]

    out = []
    for name, key, factor, form in sups:
        raw, bar = _sup_with_bar(g[key])
        out.append(_make(name, raw, bar, factor, form, c0, "sup", source, n))
    for name, series, factor, form in integrals:
        raw, bar = _integral_with_bar(t, series)
        out.append(_make(name, raw, bar, factor, form, c0, "integral", source, n))
    return out


# --------------------------------------------------------------------------
# entropy pairs and the weak entropy residual


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if not math.isfinite(delta):
            raise QuadratureError(f"non-finite integrand on [{a}, {b}]")
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]")
        return (rec(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
                + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 0)


class _EntropyFlux:
    """q(u) = int_0^u 2 s eta'(s) ds.

    Scalars go straight through adaptive Simpson; arrays are served from a
    cubic Hermite table (nodes every 1/64, exact slopes 2 u eta'(u)) that
    grows to cover whatever range it is asked for.
    """

    step = 1.0 / 64

    def __init__(self, deta, tol=1e-10):
        self.deta = deta
        self.tol = tol
        self._lo = self._hi = 0
        self._values = {0: 0.0}
        self._spline = None

    def integrand(self, s):
        return 2.0 * s * float(self.deta(s))

    def scalar(self, u: float) -> float:
        return adaptive_simpson(self.integrand, 0.0, float(u), self.tol)

    def _extend(self, lo, hi):
        h = self.step
        i_lo = min(self._lo, int(math.floor(lo / h)) - 1)
        i_hi = max(self._hi, int(math.ceil(hi / h)) + 1)
        if i_lo == self._lo and i_hi == self._hi and self._spline is not None:
            return
        for i in range(self._hi + 1, i_hi + 1):
            self._values[i] = self._values[i - 1] + adaptive_simpson(
                self.integrand, (i - 1) * h, i * h, self.tol)
        for i in range(self._lo - 1, i_lo - 1, -1):
            self._values[i] = self._values[i + 1] - adaptive_simpson(
                self.integrand, i * h, (i + 1) * h, self.tol)
        self._lo, self._hi = i_lo, i_hi
        nodes = np.arange(i_lo, i_hi + 1) * h
        vals = np.array([self._values[i] for i in range(i_lo, i_hi + 1)])
        slopes = 2.0 * nodes * np.asarray(self.deta(nodes), dtype=float) * np.ones_like(nodes)
        self._spline = CubicHermiteSpline(nodes, vals, slopes)

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        if u_arr.ndim == 0:
            return self.scalar(float(u_arr))
        if u_arr.size == 0:
            return np.zeros_like(u_arr)
        if not np.all(np.isfinite(u_arr)):
            raise QuadratureError("entropy flux requested at non-finite states")
        self._extend(float(u_arr.min()), float(u_arr.max()))
        return self._spline(u_arr)


@dataclass
class EntropyPair:
    eta: Callable
    deta: Callable
    q: Callable

    def consistency_error(self, u_samples, h: float = 1e-5) -> float:
        """max |q'(u) - 2 u eta'(u)| with q' by central differences."""
        u = np.asarray(u_samples, dtype=float)
        dq = np.array([(self.q(float(v) + h) - self.q(float(v) - h)) / (2 * h) for v in u])
        return float(np.max(np.abs(dq - 2.0 * u * np.asarray(self.deta(u), dtype=float))))


def make_entropy_pair(eta: Callable, deta: Callable, tol: float = 1e-10) -> EntropyPair:
    """Entropy ``eta`` (with derivative ``deta``) and its flux for f(u) = u^2."""
    return EntropyPair(eta, deta, _EntropyFlux(deta, tol))


def _bump(s):
    inside = np.abs(s) < 1
    return np.where(inside, (1.0 - s * s) ** 3, 0.0)


def _dbump(s):
    inside = np.abs(s) < 1
    return np.where(inside, -6.0 * s * (1.0 - s * s) ** 2, 0.0)


@dataclass(frozen=True)
class BumpTestFunction:
    """phi(t, x) = b((t - t0)/rt) b((x - x0)/rx), b(s) = (1 - s^2)^3 on |s| < 1."""

    t0: float
    rt: float
    x0: float
    rx: float

    def __post_init__(self):
        if not (self.rt > 0 and self.rx > 0):
            raise ConfigError("bump radii must be positive")

    @property
    def sup(self) -> float:
        return 1.0

    @property
    def support(self):
        return (self.t0 - self.rt, self.t0 + self.rt), (self.x0 - self.rx, self.x0 + self.rx)

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)[..., None]
        return _bump((t - self.t0) / self.rt) * _bump((np.asarray(x) - self.x0) / self.rx)

    def dt(self, t, x):
        t = np.asarray(t, dtype=float)[..., None]
        return (_dbump((t - self.t0) / self.rt) / self.rt
                * _bump((np.asarray(x) - self.x0) / self.rx))

    def dx(self, t, x):
        t = np.asarray(t, dtype=float)[..., None]
        return (_bump((t - self.t0) / self.rt)
                * _dbump((np.asarray(x) - self.x0) / self.rx) / self.rx)


@dataclass(frozen=True)
class EntropyResidual:
    value: float
    error_bar: float
    phi_sup: float = 1.0

    @property
    def negative_part(self) -> float:
        return max(0.0, -self.value)


def weak_entropy_residual(times, x, dx, values, pair: EntropyPair, phi: BumpTestFunction,
                          x_domain=None) -> EntropyResidual:
    """int int (eta(u) phi_t + q(u) phi_x) dx dt on sampled data.

    ``values`` has shape (len(times), len(x)); space uses the rectangle rule
    with weight ``dx`` and time the trapezoid rule. The error bar is the
    Richardson estimate from dropping every other time sample.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    (ta, tb), (xa, xb) = phi.support
    if ta < times[0] - 1e-12 or tb > times[-1] + 1e-12:
        raise DomainError(
            f"test function time support [{ta}, {tb}] exceeds data window "
            f"[{times[0]}, {times[-1]}]")
    lo, hi = x_domain if x_domain is not None else (x[0], x[-1] + dx)
    if xa < lo or xb > hi:
        raise DomainError(f"test function space support [{xa}, {xb}] exceeds [{lo}, {hi}]")
    if len(times) < 3:
        raise QuadratureError("entropy residual needs at least 3 time samples")
    u = np.asarray(values, dtype=float)
    integrand = pair.eta(u) * phi.dt(times, x) + pair.q(u) * phi.dx(times, x)
    per_time = np.sum(integrand, axis=1) * dx
    fine = _trapz(times, per_time)
    c = _coarse_indices(len(times))
    coarse = _trapz(times[c], per_time[c])
    return EntropyResidual(fine, abs(fine - coarse) / 3.0, phi.sup)


def entropy_residual(traj: Trajectory, pair: EntropyPair, phi: BumpTestFunction) -> EntropyResidual:
    """Weak entropy residual of a dispersive trajectory (>= 0 for entropy solutions)."""
    g = traj.grid
    return weak_entropy_residual(traj.times, g.x, g.spacing, traj.snapshot_array(), pair, phi,
                                 x_domain=(-g.half_length, g.half_length))

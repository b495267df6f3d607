"""Periodic grid, Fourier differentiation, dealiasing and discrete norms.

Every field lives on the periodic interval [-L, L) sampled at N equispaced
nodes ``x_j = -L + j * dx``. Spectral work uses the real FFT; the full
FFT-ordered wavenumber array is kept on the grid for callers that need it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError

__all__ = [
    "GridSpec",
    "Field",
    "NormLedger",
    "make_grid",
    "deriv",
    "deriv_samples",
    "derivative_multiplier",
    "norms",
    "dealias",
    "dealias_mask",
    "fourier_resample",
]


@dataclass(frozen=True)
class GridSpec:
    half_length: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.half_length) and self.half_length > 0):
            raise ConfigError(f"half_length must be positive, got {self.half_length!r}")
        n = self.n_points
        if int(n) != n or n < 8 or n % 2:
            raise ConfigError(f"n_points must be an even integer >= 8, got {n!r}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_length + self.spacing * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_j = pi j / L in standard FFT order (j = 0..N/2-1, -N/2..-1)."""
        j = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points)
        k = np.pi * j / self.half_length
        k.flags.writeable = False
        return k

    @cached_property
    def rwavenumbers(self) -> np.ndarray:
        """Nonnegative wavenumbers matching ``np.fft.rfft`` output."""
        k = np.pi * np.arange(self.n_points // 2 + 1) / self.half_length
        k.flags.writeable = False
        return k


def make_grid(half_length: float, n_points: int) -> GridSpec:
    return GridSpec(half_length, n_points)


@dataclass(frozen=True)
class Field:
    """Real samples of u on ``grid`` at simulation time ``time``."""

    grid: GridSpec
    samples: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64)
        if s.shape != (self.grid.n_points,):
            raise ConfigError(
                f"expected {self.grid.n_points} samples, got shape {s.shape}")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "time", float(self.time))

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.samples)))

    @cached_property
    def spectrum(self) -> np.ndarray:
        return np.fft.rfft(self.samples)

    def with_samples(self, samples, time=None) -> "Field":
        return Field(self.grid, samples, self.time if time is None else time)

    def __mul__(self, scale):
        return self.with_samples(self.samples * scale)

    __rmul__ = __mul__


@dataclass(frozen=True)
class NormLedger:
    l2: float
    l4: float
    linf: float
    h1_semi: float
    h2_semi: float

    def __post_init__(self):
        for name in ("l2", "l4", "linf", "h1_semi", "h2_semi"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be finite and nonnegative, got {v}")


def derivative_multiplier(grid: GridSpec, order: int, full: bool = False) -> np.ndarray:
    """Spectral multiplier (ik)^order; odd orders drop the Nyquist mode."""
    if order not in (0, 1, 2, 3, 4):
        raise ConfigError(f"derivative order must be in 1..4, got {order!r}")
    k = grid.wavenumbers if full else grid.rwavenumbers
    m = (1j * k) ** order
    if order % 2:
        nyq = grid.n_points // 2
        m = m.copy()
        m[nyq] = 0.0
    return m


def deriv_samples(samples: np.ndarray, grid: GridSpec, order: int) -> np.ndarray:
    m = derivative_multiplier(grid, order)
    return np.fft.irfft(m * np.fft.rfft(samples), n=grid.n_points)


def deriv(f: Field, order: int) -> Field:
    if order not in (1, 2, 3, 4):
        raise ConfigError(f"derivative order must be in 1..4, got {order!r}")
    m = derivative_multiplier(f.grid, order)
    out = np.fft.irfft(m * f.spectrum, n=f.grid.n_points)
    return f.with_samples(out)


def _lp(samples, dx, p):
    return float((np.sum(np.abs(samples) ** p) * dx) ** (1.0 / p))


def norms(f: Field) -> NormLedger:
    if not f.finite:
        raise ValueError("field contains non-finite samples")
    dx = f.grid.spacing
    u = f.samples
    return NormLedger(
        l2=_lp(u, dx, 2),
        l4=_lp(u, dx, 4),
        linf=float(np.max(np.abs(u))),
        h1_semi=_lp(deriv(f, 1).samples, dx, 2),
        h2_semi=_lp(deriv(f, 2).samples, dx, 2),
    )


def dealias_mask(n_points: int, half: bool = True) -> np.ndarray:
    """Boolean mask keeping modes with |j| <= N/3."""
    if half:
        j = np.arange(n_points // 2 + 1)
    else:
        j = np.abs(np.fft.fftfreq(n_points, d=1.0 / n_points))
    return 3 * j <= n_points


def dealias(coeffs) -> np.ndarray:
    """2/3 rule on a full (length N, FFT-ordered) coefficient array."""
    c = np.asarray(coeffs)
    return np.where(dealias_mask(c.shape[-1], half=False), c, 0)


def fourier_resample(samples: np.ndarray, grid: GridSpec, n_out: int,
                     shift: float = 0.0) -> np.ndarray:
    """Evaluate the trigonometric interpolant at ``-L + shift + m * 2L / n_out``.

    ``n_out`` must be >= N. The Nyquist coefficient is split evenly between
    the +/- N/2 modes, which keeps the interpolant real.
    """
    n = grid.n_points
    if n_out < n:
        raise ConfigError("fourier_resample only upsamples")
    c = np.fft.rfft(samples)
    if shift:
        c = c * np.exp(1j * grid.rwavenumbers * shift)
    out = np.zeros(n_out // 2 + 1, dtype=complex)
    out[: n // 2 + 1] = c
    if n_out > n:
        out[n // 2] *= 0.5
    return np.fft.irfft(out, n=n_out) * (n_out / n)

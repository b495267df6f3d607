"""Hot loops of the finite-volume reference solver.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical arithmetic. Set ``ROSENAU_LAB_DISABLE_NUMBA=1`` to
force the numpy path (numba is also skipped when it cannot be imported).
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ROSENAU_LAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by ROSENAU_LAB_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def godunov_flux_np(ul, ur):
    """Exact Godunov flux for f(u) = u^2 (sonic point u = 0), vectorised."""
    ul = np.asarray(ul, dtype=np.float64)
    ur = np.asarray(ur, dtype=np.float64)
    lo = np.maximum(ul, 0.0)
    hi = np.minimum(ur, 0.0)
    # uL <= uR: min of u^2 on [uL, uR]; uL > uR: max(uL^2, uR^2)
    rare = lo * lo + hi * hi
    shock = np.maximum(ul * ul, ur * ur)
    return np.where(ul <= ur, rare, shock)


def _advance_np(u, dx, t, t_stop, cfl, periodic, max_steps):
    u = u.copy()
    steps = 0
    while t < t_stop and steps < max_steps:
        speed = 2.0 * np.max(np.abs(u))
        dt = cfl * dx / speed if speed > 0 else t_stop - t
        if t + dt > t_stop:
            dt = t_stop - t
        if periodic:
            left = np.roll(u, 1)
            right = np.roll(u, -1)
        else:
            left = np.concatenate((u[:1], u[:-1]))
            right = np.concatenate((u[1:], u[-1:]))
        f_minus = godunov_flux_np(left, u)
        f_plus = godunov_flux_np(u, right)
        u = u - (dt / dx) * (f_plus - f_minus)
        t = t + dt
        steps += 1
    return u, t, steps


if HAVE_NUMBA:

    @njit(cache=True)
    def _flux_nb(ul, ur):
        if ul <= ur:
            lo = ul if ul > 0.0 else 0.0
            hi = ur if ur < 0.0 else 0.0
            return lo * lo + hi * hi
        a = ul * ul
        b = ur * ur
        return a if a > b else b

    @njit(cache=True)
    def _advance_nb(u, dx, t, t_stop, cfl, periodic, max_steps):
        n = u.shape[0]
        u = u.copy()
        flux = np.empty(n + 1)
        steps = 0
        while t < t_stop and steps < max_steps:
            umax = 0.0
            for j in range(n):
                a = abs(u[j])
                if a > umax:
                    umax = a
            speed = 2.0 * umax
            dt = cfl * dx / speed if speed > 0 else t_stop - t
            if t + dt > t_stop:
                dt = t_stop - t
            # flux[j] sits at the left face of cell j
            for j in range(1, n):
                flux[j] = _flux_nb(u[j - 1], u[j])
            if periodic:
                flux[0] = _flux_nb(u[n - 1], u[0])
                flux[n] = flux[0]
            else:
                flux[0] = _flux_nb(u[0], u[0])
                flux[n] = _flux_nb(u[n - 1], u[n - 1])
            r = dt / dx
            for j in range(n):
                u[j] = u[j] - r * (flux[j + 1] - flux[j])
            t = t + dt
            steps += 1
        return u, t, steps

    def godunov_advance(u, dx, t, t_stop, cfl, periodic=True, max_steps=2 ** 62):
        return _advance_nb(np.ascontiguousarray(u, dtype=np.float64), float(dx), float(t),
                           float(t_stop), float(cfl), bool(periodic), int(max_steps))

else:

    def godunov_advance(u, dx, t, t_stop, cfl, periodic=True, max_steps=2 ** 62):
        return _advance_np(np.asarray(u, dtype=np.float64), float(dx), float(t),
                           float(t_stop), float(cfl), bool(periodic), int(max_steps))


def godunov_advance_np(u, dx, t, t_stop, cfl, periodic=True, max_steps=2 ** 62):
    """Pure-numpy path regardless of the active backend."""
    return _advance_np(np.asarray(u, dtype=np.float64), float(dx), float(t),
                       float(t_stop), float(cfl), bool(periodic), int(max_steps))

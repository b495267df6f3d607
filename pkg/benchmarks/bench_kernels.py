"""Compare the numba and numpy Godunov kernels on a shock-tube problem.

    python benchmarks/bench_kernels.py [--n 800 1600 3200] [--repeat 3]

Both paths are timed in the same process. The numba path is warmed up once
so compilation is not counted.
"""
import argparse
import time

import numpy as np

from rosenau_lab import _kernels


def _setup(n, half_length=20.0):
    dx = 2 * half_length / n
    xc = -half_length + dx * (np.arange(n) + 0.5)
    return np.where(xc < 0, 1.0, 0.0), dx


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[800, 1600, 3200])
    ap.add_argument("--t", type=float, default=5.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    print(f"active backend: {_kernels.BACKEND}")
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable or disabled; timing numpy only")
    u0, dx = _setup(64)
    _kernels.godunov_advance(u0, dx, 0.0, 0.1, 0.9, periodic=False)  # compile

    print(f"{'N':>6s} {'steps':>7s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max|diff|':>10s}")
    for n in args.n:
        u0, dx = _setup(n)
        t_np, (u_np, _, steps) = _best(
            lambda: _kernels.godunov_advance_np(u0, dx, 0.0, args.t, 0.9, periodic=False), args.repeat)
        if _kernels.HAVE_NUMBA:
            t_nb, (u_nb, _, _) = _best(
                lambda: _kernels.godunov_advance(u0, dx, 0.0, args.t, 0.9, periodic=False), args.repeat)
            diff = float(np.max(np.abs(u_nb - u_np)))
            print(f"{n:6d} {steps:7d} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")
        else:
            print(f"{n:6d} {steps:7d} {t_np:10.4f} {'-':>10s} {'-':>8s} {'-':>10s}")


if __name__ == "__main__":
    main()

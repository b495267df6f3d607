"""Admissible constants for the higher-order energy estimates.

For the Rosenau-KdV-RLW variant the weights (A, B, C) and the coupling
constant D (beta <= D^2 eps^4) must satisfy

    4A^2 - 5A + 2 C0 D < 0,   2B^2 - B - D^2 C0^2 < 0,   C > 4A,

with C = 6A and D < min(25 / (32 C0), sqrt(2) / (4 C0)). For Rosenau-RLW
only 2A^2 - 3A + 2 C0 D < 0 with D = 1 / (16 C0) is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError
from .solver import Variant

__all__ = ["AdmissibleConstants", "admissible_constants", "quadratic_roots"]


def quadratic_roots(a: float, b: float, c: float):
    """Real roots (lo, hi) of a x^2 + b x + c, a > 0."""
    disc = b * b - 4 * a * c
    if disc <= 0:
        raise ValueError("quadratic has no distinct real roots")
    r = math.sqrt(disc)
    # cancellation-free form
    q = -0.5 * (b + math.copysign(r, b))
    x1, x2 = q / a, c / q
    return (min(x1, x2), max(x1, x2))


@dataclass(frozen=True)
class AdmissibleConstants:
    variant: Variant
    c0: float
    A: float
    D: float
    B: Optional[float] = None
    C: Optional[float] = None
    a_interval: tuple = ()
    b_interval: tuple = ()

    def as_tuple(self):
        if self.variant is Variant.RKV_RLW:
            return (self.A, self.B, self.C, self.D)
        return (self.A, self.D)

    def inequalities(self) -> dict:
        """Name -> (value, holds) for every strict inequality the constants must meet.

        Each value is arranged so that the inequality reads ``value < 0``.
        """
        c0, A, D = self.c0, self.A, self.D
        out = {
            "D - min(25/(32 C0), sqrt(2)/(4 C0))":
                D - min(25 / (32 * c0), math.sqrt(2) / (4 * c0)),
            "-A": -A,
            "-D": -D,
        }
        if self.variant is Variant.RKV_RLW:
            B, C = self.B, self.C
            out.update({
                "4A^2 - 5A + 2 C0 D": 4 * A * A - 5 * A + 2 * c0 * D,
                "2B^2 - B - D^2 C0^2": 2 * B * B - B - D * D * c0 * c0,
                # the estimate itself needs B - 2B^2 - D^2 C0^2 > 0
                "2B^2 - B + D^2 C0^2": 2 * B * B - B + D * D * c0 * c0,
                "4A - C": 4 * A - C,
                "32 C0 D - 25": 32 * c0 * D - 25,
                "8 D^2 C0^2 - 1": 8 * D * D * c0 * c0 - 1,
                "-B": -B,
            })
        else:
            out.update({
                "2A^2 - 3A + 2 C0 D": 2 * A * A - 3 * A + 2 * c0 * D,
                "16 C0 D - 9": 16 * c0 * D - 9,
            })
        return {k: (v, v < 0) for k, v in out.items()}

    @property
    def feasible(self) -> bool:
        return all(ok for _, ok in self.inequalities().values())


def admissible_constants(c0: float, variant) -> AdmissibleConstants:
    """Pick feasible constants: D at half its upper bound (RKV-RLW) or
    1/(16 C0) (R-RLW), A and B at the midpoints of their root intervals."""
    if not (math.isfinite(c0) and c0 > 0):
        raise ConfigError(f"C0 must be positive, got {c0!r}")
    variant = Variant.parse(variant)
    if variant is Variant.RKV_RLW:
        D = 0.5 * math.sqrt(2) / (4 * c0)
        a_int = quadratic_roots(4.0, -5.0, 2 * c0 * D)
        A = 0.5 * (a_int[0] + a_int[1])
        b_lo, b_hi = quadratic_roots(2.0, -1.0, -(D * c0) ** 2)
        b_int = (max(b_lo, 0.0), b_hi)
        B = 0.5 * (b_int[0] + b_int[1])
        out = AdmissibleConstants(variant, c0, A, D, B, 6 * A, a_int, b_int)
    else:
        D = 1.0 / (16 * c0)
        a_int = quadratic_roots(2.0, -3.0, 2 * c0 * D)
        A = 0.5 * (a_int[0] + a_int[1])
        out = AdmissibleConstants(variant, c0, A, D, a_interval=a_int)
    failed = [k for k, (_, ok) in out.inequalities().items() if not ok]
    assert not failed, f"constants violate {failed}"
    return out

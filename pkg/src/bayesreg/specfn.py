"""Special functions behind every region formula.

Three pieces only: the regularized upper incomplete gamma function
Q(a, x) = Γ(a, x)/Γ(a), its inverse in the second argument, and the
volume of the d-dimensional unit ball.  The factorial notation
(a - 1)! for half-integer a is read as Γ(a) throughout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = ["reg_upper_gamma", "inv_reg_upper_gamma", "unit_ball_volume"]


def reg_upper_gamma(a: float, x):
    """Q(a, x) = Γ(a, x)/Γ(a) for a > 0, x >= 0.

    Monotone nonincreasing in x, with Q(a, 0) = 1 and Q(a, inf) = 0.
    Scalar or array x.
    """
    if a <= 0:
        raise ValueError(f"gamma order must be positive, got a={a}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("reg_upper_gamma requires x >= 0")
    out = special.gammaincc(a, x)
    return float(out) if out.ndim == 0 else out


def inv_reg_upper_gamma(a: float, y):
    """x such that Q(a, x) = y, for y in (0, 1]; x = 0 at y = 1.

    Scalar or array y.
    """
    if a <= 0:
        raise ValueError(f"gamma order must be positive, got a={a}")
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(y > 1):
        raise ValueError("inv_reg_upper_gamma requires 0 < y <= 1")
    out = special.gammainccinv(a, y)
    return float(out) if out.ndim == 0 else out


def unit_ball_volume(d: int) -> float:
    """Volume pi^(d/2)/Γ(d/2 + 1) of the unit d-ball."""
    if d < 1 or d != int(d):
        raise ValueError(f"dimension must be a positive integer, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)

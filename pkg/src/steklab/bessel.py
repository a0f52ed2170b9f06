"""Bessel functions of the first kind, evaluated by their ascending series.

Kept independent of scipy.special on purpose: these values are the analytic
oracle that the finite-element solver is measured against, so they must not
share code with anything on the FEM side.  The series converges rapidly for
the moderate arguments used here (x of order k*R, a few at most).
"""

from __future__ import annotations

import math

_MAX_TERMS = 400


def bessel_j(m: int, x: float) -> float:
    """J_m(x) via the ascending power series.

    Accurate to near machine precision for |x| <= ~20; raises for larger
    arguments rather than silently losing digits to cancellation.
    """
    if abs(x) > 20.0:
        raise ValueError(f"series evaluation not supported for |x| = {abs(x)} > 20")
    if m < 0:
        return bessel_j(-m, x) * (-1.0 if m % 2 else 1.0)
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term
    for j in range(1, _MAX_TERMS):
        term *= -(half * half) / (j * (j + m))
        total += term
        if abs(term) <= 1e-18 * max(abs(total), 1e-300):
            return total
    raise RuntimeError("Bessel series did not converge")


def bessel_j_prime(m: int, x: float) -> float:
    """dJ_m/dx from the recurrence J_m' = (J_{m-1} - J_{m+1}) / 2."""
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))


def disk_branch_eigenvalue(m: int, k: float, radius: float, delta: float) -> float:
    """Boundary eigenvalue of the homogeneous disk on the angular branch m.

    Separation of variables with u = J_m(k r) e^{i m theta} turns the smoothed
    boundary condition into a scalar relation per branch:

        lambda_m = (1 + m^2 / R^2)^delta * (-k * J_m'(kR) / J_m(kR)).

    Raises ValueError on a Dirichlet resonance (J_m(kR) ~ 0), where the
    branch has no finite eigenvalue.
    """
    x = k * radius
    jm = bessel_j(m, x)
    if abs(jm) < 1e-12:
        raise ValueError(f"J_{m}({x}) vanishes: Dirichlet resonance, branch undefined")
    return (1.0 + m * m / radius**2) ** delta * (-k * bessel_j_prime(m, x) / jm)

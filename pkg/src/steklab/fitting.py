"""Log-log least-squares slope fits for convergence studies."""

from __future__ import annotations

import numpy as np


def fit_slope(x, y) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2 of log(y) against log(x).

    Requires at least 3 points, strictly monotone positive x and positive y.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3 or len(y) != len(x):
        raise ValueError("need at least 3 matching points")
    dx = np.diff(x)
    if not ((dx > 0).all() or (dx < 0).all()):
        raise ValueError("x must be strictly monotone")
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError("x and y must be positive for a log-log fit")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2

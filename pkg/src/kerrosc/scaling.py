"""Power-law and exponential fits on transformed coordinates, plus the
critical-exponent consistency check eta_t * nu_n = nu_t * eta_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit y = prefactor * x^exponent (power) or
    y = prefactor * exp(exponent * x) (exponential), on log coordinates."""

    exponent: float
    prefactor: float
    r_squared: float
    exponent_stderr: float
    residuals: np.ndarray
    kind: str  # "power" | "exponential"


def _linear_fit(t: np.ndarray, logy: np.ndarray, kind: str) -> ScalingFit:
    if len(t) < 3:
        raise ValueError("need at least 3 points to fit")
    A = np.column_stack([t, np.ones_like(t)])
    coeffs, _, _, _ = np.linalg.lstsq(A, logy, rcond=None)
    slope, intercept = coeffs
    resid = logy - (slope * t + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    dof = len(t) - 2
    if dof > 0 and ss_res > 0:
        sxx = float(np.sum((t - t.mean()) ** 2))
        stderr = np.sqrt(ss_res / dof / sxx)
    else:
        stderr = 0.0
    return ScalingFit(
        exponent=float(slope),
        prefactor=float(np.exp(intercept)),
        r_squared=r2,
        exponent_stderr=float(stderr),
        residuals=resid,
        kind=kind,
    )


def fit_power_law(xs, ys) -> ScalingFit:
    """Fit y ~ prefactor * x^exponent by OLS on log-log coordinates."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit requires strictly positive data")
    return _linear_fit(np.log(xs), np.log(ys), "power")


def fit_exponential(xs, ys) -> ScalingFit:
    """Fit y ~ prefactor * exp(exponent * x) by OLS on semi-log coordinates."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        raise ValueError("exponential fit requires strictly positive y data")
    return _linear_fit(xs, np.log(ys), "exponential")


def exponent_relation(
    nu_n: float, nu_t: float, eta_n: float, eta_t: float, tol: float = 0.1
) -> tuple[bool, float]:
    """Check eta_t * nu_n = nu_t * eta_n; returns (holds, residual)."""
    residual = eta_t * nu_n - nu_t * eta_n
    return abs(residual) <= tol, residual

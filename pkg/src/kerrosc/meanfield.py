"""Mean-field steady states, time evolution, and the PT-symmetric
stability matrix with its eigenvalue flow.

The semiclassical equation of motion for alpha = <a> is

    d/dt alpha = (i omega_d - i U |alpha|^2 - gamma/2) alpha - i (G/2) alpha*

whose resonant steady states carry the order parameter phi = U n with
phi = 0 below |G| = gamma and phi = sqrt(|G|^2 - gamma^2)/2 above.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams

#: |alpha| beyond which the fixed-step integrator aborts (unstable dt).
OVERFLOW_GUARD = 1e6


class BelowThresholdError(ValueError):
    """Raised when a symmetry-broken quantity is requested for |G| <= gamma."""


class IntegrationOverflowError(RuntimeError):
    """Raised when |alpha| exceeds the overflow guard during integration."""

    def __init__(self, t: float, dt: float):
        super().__init__(
            f"|alpha| exceeded {OVERFLOW_GUARD:g} at t = {t:g}; "
            f"dt = {dt:g} is too large for this flow"
        )
        self.t = t
        self.dt = dt


@dataclass(frozen=True)
class MeanFieldState:
    """Steady amplitude together with its order parameter and phase."""

    alpha: complex
    phi: float
    theta: float

    @property
    def n(self) -> float:
        return abs(self.alpha) ** 2


@dataclass(frozen=True)
class PTMatrix:
    """2x2 stability matrix of the mean-field flow and its eigenvalues.

    The matrix acts on (alpha, alpha*); its PT symmetry pins the eigenvalues
    to Gamma_pm = -gamma/2 +- xi with xi = sqrt(|G|^2 - 4 phi^2)/2, real in
    the PT-unbroken region |G| > 2 phi and purely imaginary otherwise.
    """

    matrix: np.ndarray
    gamma_plus: complex
    gamma_minus: complex
    xi: complex


@dataclass(frozen=True)
class FlowField:
    """Re Gamma_+ sampled on a (phi, |G|) grid.

    stabilized_phi marks the line Re Gamma_+ = 0 (the mean-field solution,
    2 phi = sqrt(|G|^2 - gamma^2)); exceptional_phi marks the line of
    exceptional points |G| = 2 phi where the two eigenmodes coalesce.
    """

    phi_values: np.ndarray
    g_values: np.ndarray
    re_gamma_plus: np.ndarray  # shape (len(g_values), len(phi_values))
    exceptional_phi: np.ndarray
    stabilized_phi: np.ndarray


def mf_rhs(alpha: complex, params: ModelParams) -> complex:
    """Right-hand side of the mean-field equation of motion."""
    return (
        (1j * params.omega_d - 1j * params.U * abs(alpha) ** 2 - params.gamma / 2) * alpha
        - 0.5j * params.G * alpha.conjugate()
    )


def integrate_mf(
    alpha0: complex,
    params: ModelParams,
    t_final: float,
    dt: float = 0.01,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the mean-field flow with a fixed-step classical RK4 scheme.

    Returns (times, alphas) including the initial point.  Raises
    IntegrationOverflowError if |alpha| grows beyond the overflow guard,
    which signals an unstable step size.  dt <= 0.01/gamma is sufficient
    everywhere, including near the exceptional line.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")

    n_steps = int(round(t_final / dt))
    times = np.arange(n_steps + 1) * dt
    alphas = np.empty(n_steps + 1, dtype=complex)
    alphas[0] = alpha0

    a = complex(alpha0)
    for k in range(n_steps):
        k1 = mf_rhs(a, params)
        k2 = mf_rhs(a + 0.5 * dt * k1, params)
        k3 = mf_rhs(a + 0.5 * dt * k2, params)
        k4 = mf_rhs(a + dt * k3, params)
        a = a + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if abs(a) > OVERFLOW_GUARD:
            raise IntegrationOverflowError(times[k + 1], dt)
        alphas[k + 1] = a
    return times, alphas


def steady_order_parameter(params: ModelParams) -> float:
    """Resonant order parameter phi = U n of the steady state.

    phi = 0 for |G| <= gamma (continuity from below at the critical point)
    and sqrt(|G|^2 - gamma^2)/2 above.  Requires omega_d = 0; for a detuned
    drive use admissible_occupations.
    """
    if params.omega_d != 0.0:
        raise ValueError("resonant branch only; use admissible_occupations for omega_d != 0")
    g = params.g_abs
    if g <= params.gamma:
        return 0.0
    return 0.5 * math.sqrt(g * g - params.gamma ** 2)


def admissible_occupations(params: ModelParams) -> tuple[float, ...]:
    """Candidate steady occupations n for omega_d >= 0.

    In the bistable window gamma <= |G| <= sqrt(gamma^2 + 4 omega_d^2) both
    n = 0 and the finite branch solve the fixed-point equation; no stability
    selection is made here, the caller decides.  Requires U > 0 for the
    finite branch.
    """
    if params.omega_d < 0:
        raise ValueError("omega_d >= 0 assumed for the occupation formulas")
    g = params.g_abs
    gamma = params.gamma
    if g < gamma:
        return (0.0,)
    if params.U <= 0:
        raise ValueError("finite occupation branch requires U > 0")
    n_finite = (params.omega_d + 0.5 * math.sqrt(g * g - gamma * gamma)) / params.U
    if g <= math.sqrt(gamma ** 2 + 4 * params.omega_d ** 2):
        return (0.0, n_finite)
    return (n_finite,)


def steady_phase(params: ModelParams) -> complex:
    """Phase factor e^{i 2 theta} of the symmetry-broken amplitude.

    Defined through e^{i2theta} = -(sqrt(|G|^2 - gamma^2) + i gamma)/G*;
    both +-sqrt(n) e^{i theta} are fixed points of the flow.
    """
    g = params.g_abs
    if g <= params.gamma:
        raise BelowThresholdError(
            f"no symmetry-broken amplitude for |G| = {g:g} <= gamma = {params.gamma:g}"
        )
    return -(math.sqrt(g * g - params.gamma ** 2) + 1j * params.gamma) / params.G.conjugate()


def steady_states(params: ModelParams) -> tuple[MeanFieldState, ...]:
    """Both symmetry-broken steady states (requires |G| > gamma and U > 0)."""
    phi = steady_order_parameter(params)
    if params.U <= 0:
        raise ValueError("steady amplitude requires U > 0")
    n = phi / params.U
    theta = cmath.phase(steady_phase(params)) / 2.0
    states = []
    for sign in (+1.0, -1.0):
        alpha = sign * math.sqrt(n) * cmath.exp(1j * theta)
        states.append(MeanFieldState(alpha=alpha, phi=phi, theta=theta))
    return tuple(states)


def pt_matrix(phi: float, params: ModelParams) -> np.ndarray:
    """Stability matrix of the flow for (alpha, alpha*) at order parameter phi."""
    return np.array(
        [
            [-1j * phi - params.gamma / 2, -0.5j * params.G],
            [0.5j * params.G.conjugate(), 1j * phi - params.gamma / 2],
        ],
        dtype=complex,
    )


def pt_eigenvalues(phi: float, params: ModelParams) -> PTMatrix:
    """Eigenvalues Gamma_pm = -gamma/2 +- xi of the PT-symmetric matrix.

    xi = sqrt(|G|^2 - 4 phi^2)/2 is real for |G| > 2 phi and purely
    imaginary for |G| < 2 phi; xi = 0 is the line of exceptional points.
    """
    if phi < 0:
        raise ValueError("phi must be non-negative")
    g = params.g_abs
    disc = g * g - 4.0 * phi * phi
    if disc >= 0:
        xi = complex(0.5 * math.sqrt(disc), 0.0)
    else:
        xi = complex(0.0, 0.5 * math.sqrt(-disc))
    half = params.gamma / 2
    return PTMatrix(
        matrix=pt_matrix(phi, params),
        gamma_plus=-half + xi,
        gamma_minus=-half - xi,
        xi=xi,
    )


def flow_field(
    phi_range: tuple[float, float],
    g_range: tuple[float, float],
    resolution: int = 101,
    gamma: float = 1.0,
) -> FlowField:
    """Sample Re Gamma_+ over a (phi, |G|) grid.

    For |G| < 2 phi the PT symmetry is broken and Re Gamma_+ = -gamma/2
    exactly; the sign of Re Gamma_+ elsewhere drives the flow toward the
    stabilized line 2 phi = sqrt(|G|^2 - gamma^2).
    """
    phis = np.linspace(phi_range[0], phi_range[1], resolution)
    gs = np.linspace(g_range[0], g_range[1], resolution)
    if phis.min() < 0 or gs.min() < 0:
        raise ValueError("phi and |G| ranges must be non-negative")
    pp, gg = np.meshgrid(phis, gs)
    disc = gg * gg - 4.0 * pp * pp
    re_plus = np.where(disc > 0, -gamma / 2 + 0.5 * np.sqrt(np.maximum(disc, 0.0)), -gamma / 2)
    stabilized = np.where(gs > gamma, 0.5 * np.sqrt(np.maximum(gs * gs - gamma * gamma, 0.0)), 0.0)
    return FlowField(
        phi_values=phis,
        g_values=gs,
        re_gamma_plus=re_plus,
        exceptional_phi=gs / 2.0,
        stabilized_phi=stabilized,
    )

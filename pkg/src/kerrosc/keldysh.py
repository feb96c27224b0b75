"""Closed-form Green functions of the Gaussian fluctuation theory, the
spectral function and emission power spectrum in both regimes and at
criticality, and the fluctuation-dissipation diagnostic h(omega).

All curves are evaluated from closed forms; build_response_matrix provides
the 4x4 frequency-space kernel whose blockwise inversion reproduces them,
used as a transcription cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .core import FrequencyGrid, ModelParams, RegimeTag, classify_regime
from .meanfield import steady_order_parameter, steady_phase


class CriticalRegimeError(ValueError):
    """Generic-branch evaluator called at |G| = gamma; use the dedicated
    critical formulas instead."""


def _order_parameter(params: ModelParams) -> float:
    g, gamma = params.g_abs, params.gamma
    if g <= gamma:
        return 0.0
    return 0.5 * math.sqrt(g * g - gamma * gamma)


def _require_generic(params: ModelParams) -> RegimeTag:
    regime = classify_regime(params)
    if regime is RegimeTag.CRITICAL:
        raise CriticalRegimeError(
            "|G| = gamma: use critical_spectral_function / near_critical_power_spectrum"
        )
    return regime


@dataclass(frozen=True)
class SpectralCurve:
    """Curve sampled on a frequency grid, with an optional Dirac-delta
    component kept symbolic as (location, weight) and never folded into the
    sampled values."""

    omega: np.ndarray
    values: np.ndarray
    kind: str  # "spectral" | "power" | "h-function"
    delta_location: float | None = None
    delta_weight: float | None = None
    masked: np.ndarray | None = None  # indices where the curve diverges

    def __post_init__(self):
        if self.kind == "spectral" and self.delta_weight is not None:
            if not 0.0 <= self.delta_weight <= 1.0:
                raise ValueError("spectral delta weight must lie in [0, 1]")


@dataclass(frozen=True)
class EffectiveParams:
    """Collective shifts of the quadratic fluctuation theory above threshold:
    the detuning moves to -2 phi and the drive renormalizes to |G_eff| = gamma."""

    omega_d_eff: float
    G_eff: complex
    s: float


@dataclass(frozen=True)
class GreenFunctionSet:
    """Frequency- and time-domain evaluators for g_K, g_R, g_A = g_R*."""

    params: ModelParams
    regime: RegimeTag
    phi: float

    def ig_r(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        gamma = self.params.gamma
        if self.regime is RegimeTag.BELOW:
            g = self.params.g_abs
            z = gamma - 2j * w
            return 2 * z / (z * z - g * g)
        z = gamma - 2j * w
        ph = self.phi
        return 2 * (z - 4j * ph) / (z * z + 16 * ph * ph - gamma * gamma)

    def ig_k(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        gamma = self.params.gamma
        if self.regime is RegimeTag.BELOW:
            g = self.params.g_abs
            num = 4 * gamma * (4 * w * w + gamma * gamma + g * g)
            den = (-4 * w * w + gamma * gamma - g * g) ** 2 + 16 * gamma * gamma * w * w
            return num / den + 0j
        ph = self.phi
        num = gamma / 4 * (4 * w * w + 16 * ph * w + 16 * ph * ph + 2 * gamma * gamma)
        den = w ** 4 + (gamma * gamma - 8 * ph * ph) * w * w + 16 * ph ** 4
        return num / den + 0j

    def g_r(self, omega) -> np.ndarray:
        return -1j * self.ig_r(omega)

    def g_a(self, omega) -> np.ndarray:
        return np.conj(self.g_r(omega))

    def g_k(self, omega) -> np.ndarray:
        return -1j * self.ig_k(omega)

    def ig_r_minus_ig_a_tau(self, tau) -> np.ndarray:
        """Time-domain ig_R(tau) - ig_A(tau); below threshold this is the
        two-exponential form whose Fourier transform is the spectral function.
        Above threshold it is obtained by quadrature of 2 pi A(omega)."""
        gamma = self.params.gamma
        if self.regime is RegimeTag.BELOW:
            t = np.abs(np.asarray(tau, dtype=float))
            g = self.params.g_abs
            return 0.5 * (np.exp(-0.5 * (gamma - g) * t) + np.exp(-0.5 * (gamma + g) * t))
        # ig_A(omega) = -conj(ig_R(omega)), so the difference is 2 Re ig_R
        ig_diff = lambda w: self.ig_r(w) + np.conj(self.ig_r(w))
        return _fourier_to_tau(ig_diff, tau)

    def ig_k_tau(self, tau) -> np.ndarray:
        gamma = self.params.gamma
        if self.regime is RegimeTag.BELOW:
            t = np.abs(np.asarray(tau, dtype=float))
            g = self.params.g_abs
            return gamma / (2 * (gamma - g)) * np.exp(-0.5 * (gamma - g) * t) + gamma / (
                2 * (gamma + g)
            ) * np.exp(-0.5 * (gamma + g) * t)
        return _fourier_to_tau(self.ig_k, tau)


def _fourier_to_tau(f_omega, taus) -> np.ndarray:
    """(1/2pi) int dw f(w) e^{-i w tau} by adaptive quadrature."""

    def one(tau):
        re = quad(lambda w: np.real(f_omega(w) * np.exp(-1j * w * tau)), -np.inf, np.inf, limit=400)[0]
        im = quad(lambda w: np.imag(f_omega(w) * np.exp(-1j * w * tau)), -np.inf, np.inf, limit=400)[0]
        return (re + 1j * im) / (2 * math.pi)

    out = np.array([one(t) for t in np.atleast_1d(np.asarray(taus, dtype=float))])
    return out if np.ndim(taus) else out[0]


def green_functions(params: ModelParams) -> GreenFunctionSet:
    """Closed-form Green functions in the regime of params (not critical)."""
    regime = _require_generic(params)
    return GreenFunctionSet(params=params, regime=regime, phi=_order_parameter(params))


def effective_params(params: ModelParams) -> EffectiveParams:
    """Effective detuning and drive of the fluctuation theory above threshold."""
    g = params.g_abs
    if g <= params.gamma:
        return EffectiveParams(omega_d_eff=0.0, G_eff=params.G, s=params.gamma / g if g else math.inf)
    phi = _order_parameter(params)
    e2t = steady_phase(params)
    return EffectiveParams(
        omega_d_eff=-2.0 * phi,
        G_eff=params.G + 2.0 * phi * e2t,
        s=params.gamma / g,
    )


def build_response_matrix(params: ModelParams, omega: float) -> np.ndarray:
    """Quadratic-action kernel A(omega) on (da_c, da_c*(-w), da_q, da_q*(-w)).

    Blockwise [[0, P_A], [P_R, P_K]]; the Green functions are read off from
    C = (A^{-1})^T.  Used only to cross-check the closed forms.
    """
    gamma = params.gamma
    phi = _order_parameter(params)
    if phi > 0:
        u_a2 = phi * steady_phase(params)  # U * alpha_s^2
    else:
        u_a2 = 0.0j
    od = params.G / 2 + u_a2  # off-diagonal drive entry
    w = omega
    m = np.array(
        [
            [0, 0, w - 0.5j * gamma - 2 * phi, -od],
            [0, 0, -np.conj(od), -w + 0.5j * gamma - 2 * phi],
            [w + 0.5j * gamma - 2 * phi, -od, 1j * gamma, 0],
            [-np.conj(od), -w - 0.5j * gamma - 2 * phi, 0, 1j * gamma],
        ],
        dtype=complex,
    )
    return -1j * m


def green_functions_from_matrix(params: ModelParams, omega: float) -> tuple[complex, complex, complex]:
    """(g_K, g_R, g_A) at one frequency via direct inversion of A(omega).

    In C = (A^{-1})^T the retarded block [(P^R)^{-1}]^T lands at rows 3-4 /
    columns 1-2 (retarded analyticity in the upper half plane picks the
    assignment), so g_R = -i C[2,0] and g_A = -i C[0,2].
    """
    c = np.linalg.inv(build_response_matrix(params, omega)).T
    return -1j * c[0, 0], -1j * c[2, 0], -1j * c[0, 2]


def _spectral_values(params: ModelParams, w: np.ndarray, regime: RegimeTag) -> np.ndarray:
    gamma = params.gamma
    if regime is RegimeTag.BELOW:
        g = params.g_abs
        num = 4 * gamma * (4 * w * w + gamma * gamma - g * g)
        den = (-4 * w * w + gamma * gamma - g * g) ** 2 + 16 * gamma * gamma * w * w
        return num / den / (2 * math.pi)
    phi = _order_parameter(params)
    # regular form of gamma / ((w - 2 phi)^2 + gamma^2 w^2 / (w + 2 phi)^2):
    # multiply through by (w + 2 phi)^2; exactly zero at w = -2 phi.
    num = gamma * (w + 2 * phi) ** 2
    den = (w * w - 4 * phi * phi) ** 2 + gamma * gamma * w * w
    return num / den / (2 * math.pi)


def spectral_function(params: ModelParams, grid: FrequencyGrid) -> SpectralCurve:
    """Absorption spectral function A(omega) away from the critical point.

    Above threshold the curve vanishes exactly at omega = -2 phi.
    """
    regime = _require_generic(params)
    w = grid.values()
    return SpectralCurve(omega=w, values=_spectral_values(params, w, regime), kind="spectral")


def critical_spectral_function(gamma: float, grid: FrequencyGrid) -> SpectralCurve:
    """A(omega) at |G| = gamma: equal-weight mixture of delta(omega) and a
    Lorentzian of FWHM 2*gamma; the sampled values carry only the smooth part."""
    w = grid.values()
    smooth = 0.5 * gamma / (w * w + gamma * gamma) / math.pi
    return SpectralCurve(
        omega=w, values=smooth, kind="spectral", delta_location=0.0, delta_weight=0.5
    )


def spectral_sum_rule(params: ModelParams, cutoff_factor: float = 1e3) -> float:
    """Integral of A(omega): adaptive quadrature over |omega| <= cutoff*gamma
    plus the analytic gamma/(pi W) tail; includes the delta weight when the
    parameters sit at the critical point."""
    gamma = params.gamma
    regime = classify_regime(params)
    big = cutoff_factor * gamma
    if regime is RegimeTag.CRITICAL:
        f = lambda w: 0.5 * gamma / (w * w + gamma * gamma) / math.pi
        body = quad(f, -big, big, points=[0.0], limit=400)[0]
        tail = gamma / math.pi / big  # 2 * (gamma/2pi) / W for the Lorentzian
        return 0.5 + body + tail
    f = lambda w: float(_spectral_values(params, np.asarray(w), regime))
    phi = _order_parameter(params)
    features = [-2 * phi, 0.0, 2 * phi] if phi > 0 else [0.0]
    body = quad(f, -big, big, points=features, limit=400)[0]
    return body + gamma / math.pi / big


def _half_max_crossing(f, half: float, lo: float, hi: float) -> float:
    return brentq(lambda w: f(w) - half, lo, hi, xtol=1e-12, rtol=1e-15)


def fwhm(params: ModelParams) -> float:
    """Full width at half maximum of A(omega), bracketed and bisected to
    1e-10 in omega."""
    regime = _require_generic(params)
    gamma = params.gamma
    span = 50.0 * gamma

    def f(w):
        return float(_spectral_values(params, np.asarray(float(w)), regime))

    if regime is RegimeTag.BELOW:
        half = f(0.0) / 2
        if f(span) >= half:
            raise RuntimeError("no half-maximum crossing within |omega| <= 50 gamma")
        right = _half_max_crossing(f, half, 1e-300, span)
        return 2.0 * right
    phi = _order_parameter(params)
    peak = peak_location(params)
    half = f(peak) / 2
    if f(peak + span) >= half:
        raise RuntimeError("no half-maximum crossing within |omega| <= 50 gamma")
    right = _half_max_crossing(f, half, peak, peak + span)
    left = _half_max_crossing(f, half, -2 * phi, peak)  # A(-2 phi) = 0 < half
    return right - left


def peak_location(params: ModelParams, n_scan: int = 4001) -> float:
    """Location of the maximum of A(omega); 0 exactly below threshold (even
    function), grid scan plus golden-section refinement above."""
    regime = _require_generic(params)
    if regime is RegimeTag.BELOW:
        return 0.0
    gamma = params.gamma
    phi = _order_parameter(params)
    w = np.linspace(-2 * phi, 2 * phi + 5 * gamma, n_scan)
    vals = _spectral_values(params, w, regime)
    i = int(np.argmax(vals))
    i = min(max(i, 1), n_scan - 2)
    res = minimize_scalar(
        lambda x: -float(_spectral_values(params, np.asarray(float(x)), regime)),
        bracket=(w[i - 1], w[i], w[i + 1]),
        method="golden",
        options={"xtol": 1e-12},
    )
    return float(res.x)


def _power_values(params: ModelParams, w: np.ndarray, regime: RegimeTag) -> np.ndarray:
    gamma = params.gamma
    if regime is RegimeTag.BELOW:
        g = params.g_abs
        den = (-4 * w * w + gamma * gamma - g * g) ** 2 + 16 * gamma * gamma * w * w
        return 4 * gamma * gamma * g * g / den
    phi = _order_parameter(params)
    den = (w * w - 4 * phi * phi) ** 2 + gamma * gamma * w * w
    return 0.25 * gamma ** 4 / den


def power_spectrum_inel(params: ModelParams, grid: FrequencyGrid) -> SpectralCurve:
    """Inelastic emission power spectrum S_inel(omega), symmetric in omega.

    Above threshold the elastic line (weight gamma * 2 phi / U at omega = 0)
    is reported as the symbolic delta component, never added to the samples.
    """
    regime = _require_generic(params)
    w = grid.values()
    values = _power_values(params, w, regime)
    if regime is RegimeTag.ABOVE:
        phi = _order_parameter(params)
        weight = params.gamma * 2.0 * phi / params.U if params.U > 0 else math.inf
        return SpectralCurve(
            omega=w, values=values, kind="power", delta_location=0.0, delta_weight=weight
        )
    return SpectralCurve(omega=w, values=values, kind="power")


def near_critical_power_spectrum(
    gamma: float, delta_g: float, grid: FrequencyGrid
) -> SpectralCurve:
    """Low-frequency approximation S_inel = gamma^2 / (4 omega^2 + Delta_G^2)
    for |G| = gamma - Delta_G just below threshold."""
    if not 0 < delta_g:
        raise ValueError("Delta_G must be positive")
    w = grid.values()
    return SpectralCurve(
        omega=w, values=gamma * gamma / (4 * w * w + delta_g * delta_g), kind="power"
    )


def power_peak_location(params: ModelParams, n_scan: int = 2001) -> float:
    """argmax of S_inel over omega >= 0 (0 below the two-peak onset)."""
    regime = _require_generic(params)
    gamma = params.gamma
    w = np.linspace(0.0, 3.0 * gamma, n_scan)
    vals = _power_values(params, w, regime)
    i = int(np.argmax(vals))
    if i == 0:
        return 0.0
    i = min(i, n_scan - 2)
    res = minimize_scalar(
        lambda x: -float(_power_values(params, np.asarray(float(x)), regime)),
        bracket=(w[i - 1], w[i], w[i + 1]),
        method="golden",
        options={"xtol": 1e-12},
    )
    return float(res.x)


def two_peak_onset(gamma: float) -> float:
    """Drive strength sqrt(3/2) * gamma above which S_inel splits into two
    symmetric maxima at +- sqrt(4 phi^2 - gamma^2/2)."""
    return math.sqrt(1.5) * gamma


def two_peak_onset_numeric(gamma: float, tol: float = 1e-9) -> float:
    """Onset located by argmax tracking of S_inel: bisection on |G| for the
    smallest drive whose spectrum peaks away from omega = 0."""

    def splits(g_abs: float) -> bool:
        p = ModelParams(U=0.01, G=1j * g_abs, gamma=gamma)
        return power_peak_location(p) > 1e-4 * gamma

    lo, hi = gamma * (1 + 1e-9), 2.0 * gamma
    if splits(lo) or not splits(hi):
        raise RuntimeError("onset not bracketed in (gamma, 2 gamma)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if splits(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def effective_distribution(params: ModelParams, grid: FrequencyGrid) -> SpectralCurve:
    """Fluctuation-dissipation diagnostic h(omega) = g_K / (g_R - g_A).

    Equals 1 identically only for G = 0 (equilibrium at T = 0); above
    threshold it diverges at omega = -2 phi, where grid points are masked.
    """
    regime = _require_generic(params)
    gamma = params.gamma
    w = grid.values()
    if regime is RegimeTag.BELOW:
        g = params.g_abs
        values = 2 * g * g / (4 * w * w + gamma * gamma - g * g) + 1.0
        return SpectralCurve(omega=w, values=values, kind="h-function")
    phi = _order_parameter(params)
    shifted = w + 2 * phi
    with np.errstate(divide="ignore"):
        values = 0.5 * gamma * gamma / (shifted * shifted) + 1.0
    masked = np.flatnonzero(~np.isfinite(values))
    values = np.where(np.isfinite(values), values, np.nan)
    return SpectralCurve(
        omega=w, values=values, kind="h-function", masked=masked if masked.size else None
    )


@dataclass(frozen=True)
class AboveCriticalExpansion:
    """Lowest-order expansion of ig_K(tau) for g slightly above gamma:
    a slow pole at rate 2(g - gamma) plus a fast e^{-gamma |tau|} part."""

    nu_n: float
    nu_t: float
    slow_rate: float
    ig_k_tau: Callable[[np.ndarray], np.ndarray] = field(repr=False)


def exponents_from_above(gamma: float, g: float) -> AboveCriticalExpansion:
    """Critical exponents approached from g > gamma; both equal their
    from-below counterparts (nu_n = nu_t = 1)."""
    if g <= gamma:
        raise ValueError("requires g > gamma")
    slow = 2.0 * (g - gamma)
    amp = gamma / (8.0 * (g - gamma))

    def ig_k_tau(tau):
        t = np.abs(np.asarray(tau, dtype=float))
        return amp * np.exp(-slow * t) + 0.25 * np.exp(-gamma * t)

    return AboveCriticalExpansion(nu_n=1.0, nu_t=1.0, slow_rate=slow, ig_k_tau=ig_k_tau)

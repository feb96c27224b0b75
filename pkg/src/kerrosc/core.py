"""Shared parameter types, regime classification, and gauge handling.

All frequencies and rates are expressed in units of the single-photon loss
rate gamma (gamma = 1 by default); gamma stays an explicit parameter so that
unit-scaling can be tested.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

#: Relative tolerance used to route |G| ~ gamma to the dedicated critical
#: formulas (the generic branches are singular there).
EPS_REGIME = 1e-9


class RegimeTag(enum.Enum):
    BELOW = "below"
    CRITICAL = "critical"
    ABOVE = "above"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the driven Kerr oscillator.

    omega_d : detuning (resonant drive omega_d = 0 is the default analysis
              regime), units of gamma.
    U       : Kerr interaction strength >= 0.
    G       : complex two-photon driving amplitude.
    gamma   : single-photon loss rate > 0.
    """

    omega_d: float = 0.0
    U: float = 0.0
    G: complex = 0.0j
    gamma: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.U < 0:
            raise ValueError(f"U must be non-negative, got {self.U}")
        if not math.isfinite(self.omega_d):
            raise ValueError("omega_d must be finite")
        if not (math.isfinite(self.G.real) and math.isfinite(self.G.imag)):
            raise ValueError("G must be finite")

    @property
    def g_abs(self) -> float:
        return abs(self.G)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid [omega_min, omega_max] with n_points samples."""

    omega_min: float
    omega_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if not self.omega_max > self.omega_min:
            raise ValueError("grid must be strictly increasing")

    def values(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.omega_max - self.omega_min) / (self.n_points - 1)


@dataclass(frozen=True)
class GaugeFrame:
    """Phase rotation that brings the drive to the canonical form G = i|G|.

    theta_G is defined through G = i|G| exp(-i theta_G).  Amplitudes in the
    canonical frame are e^{i theta_G/2} times the original ones (the drive
    transforms with twice the amplitude phase).
    """

    theta_G: float = 0.0

    def to_canonical(self, alpha: complex) -> complex:
        return alpha * np.exp(0.5j * self.theta_G)

    def from_canonical(self, alpha: complex) -> complex:
        return alpha * np.exp(-0.5j * self.theta_G)


def classify_regime(params: ModelParams, eps_reg: float = EPS_REGIME) -> RegimeTag:
    """Classify |G| against the critical drive |G_c| = gamma.

    The comparison is relative: |{|G|} - gamma| <= eps_reg * gamma counts as
    critical.
    """
    g = params.g_abs
    if abs(g - params.gamma) <= eps_reg * params.gamma:
        return RegimeTag.CRITICAL
    return RegimeTag.BELOW if g < params.gamma else RegimeTag.ABOVE


def canonicalize_gauge(params: ModelParams) -> tuple[ModelParams, GaugeFrame]:
    """Rotate the drive phase so that G = i|G| (real positive |G|).

    Returns the rotated parameters and the frame needed to map amplitudes
    back to the original gauge.  G = 0 yields the identity frame.
    """
    if params.G == 0:
        return params, GaugeFrame(0.0)
    theta_G = math.pi / 2 - math.atan2(params.G.imag, params.G.real)
    canonical = replace(params, G=1j * abs(params.G))
    return canonical, GaugeFrame(theta_G)

"""Toolkit for the driven-dissipative Kerr oscillator phase transition:
mean-field theory, PT-symmetric stability, Liouvillian exact
diagonalization, Keldysh Green-function spectra, and quantum-Langevin
critical scaling."""

from .core import (
    EPS_REGIME,
    FrequencyGrid,
    GaugeFrame,
    ModelParams,
    RegimeTag,
    canonicalize_gauge,
    classify_regime,
)

__version__ = "0.1.0"

__all__ = [
    "EPS_REGIME",
    "FrequencyGrid",
    "GaugeFrame",
    "ModelParams",
    "RegimeTag",
    "canonicalize_gauge",
    "classify_regime",
    "__version__",
]

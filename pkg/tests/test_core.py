import math

import numpy as np
import pytest

from kerrosc.core import (
    FrequencyGrid,
    ModelParams,
    RegimeTag,
    canonicalize_gauge,
    classify_regime,
)


def test_classify_regime_examples():
    assert classify_regime(ModelParams(G=0.8), 1e-9) is RegimeTag.BELOW
    assert classify_regime(ModelParams(G=1.0), 1e-9) is RegimeTag.CRITICAL
    assert classify_regime(ModelParams(G=1.2), 1e-9) is RegimeTag.ABOVE


def test_classify_regime_is_relative_to_gamma():
    assert classify_regime(ModelParams(G=2.0, gamma=2.0)) is RegimeTag.CRITICAL
    assert classify_regime(ModelParams(G=1.0, gamma=2.0)) is RegimeTag.BELOW


def test_classify_regime_monotone_in_drive():
    eps = 1e-9
    gamma = 1.3
    for g in np.linspace(0.0, gamma * (1 - 2 * eps), 50):
        assert classify_regime(ModelParams(G=g, gamma=gamma), eps) is RegimeTag.BELOW
    for g in np.linspace(gamma * (1 + 2 * eps), 3 * gamma, 50):
        assert classify_regime(ModelParams(G=complex(g), gamma=gamma), eps) is RegimeTag.ABOVE


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(gamma=0.0)
    with pytest.raises(ValueError):
        ModelParams(U=-0.1)
    with pytest.raises(ValueError):
        ModelParams(omega_d=math.inf)


def test_gauge_already_canonical():
    params, frame = canonicalize_gauge(ModelParams(G=0.9j))
    assert params.G == 0.9j
    assert frame.theta_G == pytest.approx(0.0, abs=1e-14)


def test_gauge_real_drive():
    # G = i|G| e^{-i theta_G} solved for real positive G gives theta_G = pi/2
    params, frame = canonicalize_gauge(ModelParams(G=0.9))
    assert frame.theta_G == pytest.approx(math.pi / 2, abs=1e-14)
    assert params.G == pytest.approx(0.9j, abs=1e-14)


def test_gauge_zero_drive_identity():
    params, frame = canonicalize_gauge(ModelParams(G=0.0))
    assert params.G == 0.0
    assert frame.theta_G == 0.0


@pytest.mark.parametrize("g", [0.3 + 0.4j, -1.2, 2.0j, -0.5 - 0.9j])
def test_gauge_preserves_modulus_and_roundtrips(g):
    original = ModelParams(G=g, gamma=1.7, U=0.1)
    params, frame = canonicalize_gauge(original)
    assert abs(params.G) == pytest.approx(abs(g), abs=1e-14)
    assert params.gamma == original.gamma
    # the defining relation G = i|G| e^{-i theta_G}
    assert 1j * abs(g) * np.exp(-1j * frame.theta_G) == pytest.approx(g, abs=1e-12)
    # rotation followed by its inverse is the identity on amplitudes
    alpha = 0.7 - 0.2j
    assert frame.from_canonical(frame.to_canonical(alpha)) == pytest.approx(alpha, abs=1e-12)
    # double application is idempotent
    again, frame2 = canonicalize_gauge(params)
    assert again.G == pytest.approx(params.G, abs=1e-14)
    assert frame2.theta_G == pytest.approx(0.0, abs=1e-12)


def test_frequency_grid():
    grid = FrequencyGrid(-2.0, 2.0, 5)
    assert np.allclose(grid.values(), [-2, -1, 0, 1, 2])
    assert grid.spacing == 1.0
    with pytest.raises(ValueError):
        FrequencyGrid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        FrequencyGrid(1.0, 0.0, 5)

import numpy as np
import pytest

from kerrosc import scaling


def test_power_law_exact():
    xs = np.array([1.0, 2.0, 5.0, 10.0, 20.0])
    ys = 2.0 * xs ** 0.667
    fit = scaling.fit_power_law(xs, ys)
    assert fit.exponent == pytest.approx(0.667, abs=1e-12)
    assert fit.prefactor == pytest.approx(2.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.kind == "power"


def test_exponential_exact():
    xs = np.linspace(0.0, 10.0, 7)
    ys = 1.7 * np.exp(-0.3 * xs)
    fit = scaling.fit_exponential(xs, ys)
    assert fit.exponent == pytest.approx(-0.3, abs=1e-12)
    assert fit.prefactor == pytest.approx(1.7, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_scale_invariance_of_exponent():
    rng = np.random.default_rng(5)
    xs = np.linspace(1.0, 9.0, 12)
    ys = 3.1 * xs ** -1.5 * np.exp(rng.normal(scale=0.02, size=12))
    base = scaling.fit_power_law(xs, ys)
    scaled = scaling.fit_power_law(xs, 7.3 * ys)
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-12)
    assert scaled.prefactor == pytest.approx(7.3 * base.prefactor, rel=1e-9)


def test_rejects_bad_data():
    with pytest.raises(ValueError):
        scaling.fit_power_law([1.0, -2.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        scaling.fit_power_law([1.0, 2.0, 3.0], [1.0, 0.0, 3.0])
    with pytest.raises(ValueError):
        scaling.fit_exponential([1.0, 2.0], [1.0, 2.0])


def test_exponent_stderr_reported():
    rng = np.random.default_rng(11)
    xs = np.linspace(1.0, 20.0, 15)
    ys = xs ** 2.0 * np.exp(rng.normal(scale=0.05, size=15))
    fit = scaling.fit_power_law(xs, ys)
    assert fit.exponent_stderr > 0
    assert abs(fit.exponent - 2.0) < 4 * fit.exponent_stderr


def test_exponent_relation():
    ok, resid = scaling.exponent_relation(1.0, 1.0, 2.0 / 3.0, 2.0 / 3.0, tol=1e-12)
    assert ok and resid == 0.0
    ok, resid = scaling.exponent_relation(1.0, 1.0, 2.0 / 3.0, 0.5, tol=1e-3)
    assert not ok
    assert resid == pytest.approx(0.5 - 2.0 / 3.0, abs=1e-12)
    ok, _ = scaling.exponent_relation(0.98, 1.03, 0.69, 0.66, tol=0.1)
    assert ok

import cmath
import math

import numpy as np
import pytest

from kerrosc.core import ModelParams
from kerrosc import meanfield as mf


def test_rhs_vacuum_fixed_point():
    params = ModelParams(U=0.3, G=1.1 + 0.2j, gamma=1.0, omega_d=0.4)
    assert mf.mf_rhs(0.0, params) == 0.0


def test_rhs_pure_decay():
    params = ModelParams(U=0.0, G=0.0, gamma=1.0)
    assert mf.mf_rhs(1.0, params) == pytest.approx(-0.5, abs=1e-15)


def test_rhs_steady_state_residual():
    # substituting the closed-form steady state must annihilate the flow
    for g in (1.2, 1.5 + 0.0j, 1.1j, 0.9 + 0.8j):
        params = ModelParams(U=1.0, G=complex(g), gamma=1.0)
        for state in mf.steady_states(params):
            assert abs(mf.mf_rhs(state.alpha, params)) < 1e-12


def test_rhs_z2_equivariance():
    rng = np.random.default_rng(7)
    params = ModelParams(U=0.4, G=1.3 - 0.2j, gamma=0.8, omega_d=0.1)
    for _ in range(25):
        alpha = complex(*rng.normal(size=2))
        assert mf.mf_rhs(-alpha, params) == pytest.approx(-mf.mf_rhs(alpha, params), abs=1e-14)


def test_integrate_converges_above_threshold():
    params = ModelParams(U=1.0, G=1.2, gamma=1.0)
    _, alphas = mf.integrate_mf(0.01 + 0.01j, params, t_final=200.0, dt=0.01)
    phi_final = params.U * abs(alphas[-1]) ** 2
    assert phi_final == pytest.approx(math.sqrt(0.44) / 2, abs=1e-6)


def test_integrate_decays_below_threshold():
    params = ModelParams(U=1.0, G=0.8, gamma=1.0)
    _, alphas = mf.integrate_mf(0.01, params, t_final=200.0, dt=0.01)
    assert abs(alphas[-1]) < 1e-8


def test_integrate_z2_trajectory_map():
    params = ModelParams(U=1.0, G=1.2, gamma=1.0)
    _, plus = mf.integrate_mf(0.3 + 0.1j, params, t_final=5.0, dt=0.01)
    _, minus = mf.integrate_mf(-0.3 - 0.1j, params, t_final=5.0, dt=0.01)
    assert np.max(np.abs(plus + minus)) < 1e-12


def test_integrate_overflow_guard():
    params = ModelParams(U=1.0, G=1.2, gamma=1.0)
    with pytest.raises(mf.IntegrationOverflowError):
        mf.integrate_mf(0.5 + 0.1j, params, t_final=2000.0, dt=15.0)


def test_order_parameter_branches():
    assert mf.steady_order_parameter(ModelParams(G=0.8)) == 0.0
    assert mf.steady_order_parameter(ModelParams(G=1.0)) == 0.0
    assert mf.steady_order_parameter(ModelParams(G=1.2)) == pytest.approx(
        0.33166247903554, abs=1e-12
    )
    with pytest.raises(ValueError):
        mf.steady_order_parameter(ModelParams(G=1.2, omega_d=0.3))


def test_admissible_occupations_detuned():
    # bistable window gamma <= |G| <= sqrt(gamma^2 + 4 omega_d^2)
    params = ModelParams(U=0.1, G=1.2, gamma=1.0, omega_d=0.5)
    cands = mf.admissible_occupations(params)
    assert cands[0] == 0.0 and len(cands) == 2
    n = cands[1]
    assert n == pytest.approx((0.5 + 0.5 * math.sqrt(1.44 - 1.0)) / 0.1, abs=1e-12)
    strong = ModelParams(U=0.1, G=2.0, gamma=1.0, omega_d=0.5)
    assert len(mf.admissible_occupations(strong)) == 1
    weak = ModelParams(U=0.1, G=0.5, gamma=1.0, omega_d=0.5)
    assert mf.admissible_occupations(weak) == (0.0,)


def test_steady_phase_value():
    e2t = mf.steady_phase(ModelParams(G=1.2))
    assert e2t == pytest.approx(-0.552770798392566 - 0.833333333333333j, abs=1e-12)
    assert abs(e2t) == pytest.approx(1.0, abs=1e-12)


def test_steady_phase_complex_drive_back_substitution():
    params = ModelParams(U=1.0, G=1.2j, gamma=1.0)
    e2t = mf.steady_phase(params)
    assert abs(e2t) == pytest.approx(1.0, abs=1e-12)
    n = mf.steady_order_parameter(params) / params.U
    alpha = math.sqrt(n) * cmath.exp(0.5j * cmath.phase(e2t))
    assert abs(mf.mf_rhs(alpha, params)) < 1e-12


def test_steady_phase_below_threshold_error():
    with pytest.raises(mf.BelowThresholdError):
        mf.steady_phase(ModelParams(G=0.9))


def test_pt_eigenvalues_examples():
    # exceptional point: phi = |G|/2
    res = mf.pt_eigenvalues(0.6, ModelParams(G=1.2))
    assert abs(res.gamma_plus - res.gamma_minus) < 1e-12
    assert res.gamma_plus == pytest.approx(-0.5, abs=1e-12)

    res = mf.pt_eigenvalues(0.0, ModelParams(G=1.0))
    assert res.gamma_plus == pytest.approx(0.0, abs=1e-12)
    assert res.gamma_minus == pytest.approx(-1.0, abs=1e-12)

    res = mf.pt_eigenvalues(0.25, ModelParams(G=1.0))
    assert res.gamma_plus == pytest.approx(-0.066987298107781, abs=1e-9)
    assert res.gamma_minus == pytest.approx(-0.933012701892219, abs=1e-9)


def test_pt_matrix_eigenvalues_match_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(20):
        phi = rng.uniform(0, 1.0)
        g = complex(*rng.normal(size=2))
        params = ModelParams(U=0.2, G=g, gamma=rng.uniform(0.5, 2.0))
        res = mf.pt_eigenvalues(phi, params)
        eig = np.linalg.eigvals(res.matrix)
        # pair each closed-form eigenvalue with its nearest numerical one
        d0 = abs(eig[0] - res.gamma_plus) + abs(eig[1] - res.gamma_minus)
        d1 = abs(eig[0] - res.gamma_minus) + abs(eig[1] - res.gamma_plus)
        assert min(d0, d1) < 1e-12
        # PT spectrum structure
        assert (res.gamma_plus + res.gamma_minus).imag == pytest.approx(0.0, abs=1e-12)
        assert (res.gamma_plus + res.gamma_minus).real == pytest.approx(-params.gamma, abs=1e-12)
        assert res.gamma_plus.real >= res.gamma_minus.real


def test_pt_xi_character():
    # xi real in the PT-unbroken region, purely imaginary in the broken one
    res = mf.pt_eigenvalues(0.2, ModelParams(G=1.0))
    assert res.xi.imag == 0.0 and res.xi.real > 0
    res = mf.pt_eigenvalues(0.8, ModelParams(G=1.0))
    assert res.xi.real == 0.0 and res.xi.imag > 0


def test_flow_field_lines():
    flow = mf.flow_field((0.0, 1.2), (0.0, 2.0), 241, gamma=1.0)
    # node at phi = 0, |G| = 0 decays at -gamma/2
    assert flow.re_gamma_plus[0, 0] == -0.5
    gg, pp = np.meshgrid(flow.g_values, flow.phi_values, indexing="ij")
    broken = gg < 2 * pp
    assert np.all(flow.re_gamma_plus[broken] == -0.5)
    # on the mean-field line Re Gamma_+ vanishes
    for g in np.linspace(1.05, 2.0, 40):
        phi = 0.5 * math.sqrt(g * g - 1.0)
        res = mf.pt_eigenvalues(phi, ModelParams(G=complex(g)))
        assert abs(res.gamma_plus.real) < 1e-10
    # self-stabilization sign structure around the line
    for g in (1.3, 1.7):
        phi_line = 0.5 * math.sqrt(g * g - 1.0)
        below = mf.pt_eigenvalues(0.8 * phi_line, ModelParams(G=complex(g)))
        above = mf.pt_eigenvalues(1.2 * phi_line, ModelParams(G=complex(g)))
        assert below.gamma_plus.real > 0
        assert above.gamma_plus.real < 0


def test_flow_field_marker_lines():
    flow = mf.flow_field((0.0, 1.0), (0.0, 2.0), 81, gamma=1.0)
    assert np.allclose(flow.exceptional_phi, flow.g_values / 2)
    mask = flow.g_values > 1.0
    assert np.allclose(
        2 * flow.stabilized_phi[mask], np.sqrt(flow.g_values[mask] ** 2 - 1.0)
    )
    assert np.all(flow.stabilized_phi[~mask] == 0.0)

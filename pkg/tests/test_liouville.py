import math
import warnings

import numpy as np
import pytest
from scipy.special import eval_genlaguerre

from kerrosc.core import ModelParams
from kerrosc import liouville as lv
from kerrosc import meanfield as mf


def random_density_matrix(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_ladder_operators():
    ops = lv.build_hamiltonian(ModelParams(G=0.0), 6)
    for m in range(1, 7):
        assert ops.a[m - 1, m] == pytest.approx(math.sqrt(m), abs=1e-15)
    comm = ops.a @ ops.adag - ops.adag @ ops.a
    # canonical commutator below the cutoff row; truncation breaks the last one
    assert np.allclose(comm[:6, :6], np.eye(6), atol=1e-14)
    assert np.all(ops.adag[:, 6] == 0.0)  # adag |n_max> = 0


def test_hamiltonian_matrix_elements():
    params = ModelParams(omega_d=0.3, U=0.2, G=1.2 - 0.4j, gamma=1.0)
    ops = lv.build_hamiltonian(params, 8)
    h = ops.hamiltonian
    assert np.max(np.abs(h - h.conj().T)) < 1e-14
    assert h[2, 0] == pytest.approx(params.G / 4 * math.sqrt(2), abs=1e-14)
    for n in range(9):
        assert h[n, n] == pytest.approx(-0.3 * n + 0.1 * n * (n - 1), abs=1e-13)
    trivial = lv.build_hamiltonian(ModelParams(G=0.0), 5)
    assert np.all(trivial.hamiltonian == 0.0)


def test_liouvillian_matches_direct_superoperator():
    rng = np.random.default_rng(12)
    params = ModelParams(omega_d=0.1, U=1 / 30, G=1.2 + 0.3j, gamma=0.9)
    liou = lv.build_liouvillian(params, 8)
    ops = lv.build_hamiltonian(params, 8)
    for _ in range(50):
        rho = random_density_matrix(rng, 9)
        direct = lv.apply_lindblad(rho, ops, params.gamma)
        via_matrix = (liou.matrix @ rho.reshape(-1)).reshape(9, 9)
        assert np.max(np.abs(direct - via_matrix)) < 1e-12


def test_pure_decay_spectrum():
    liou = lv.build_liouvillian(ModelParams(G=0.0, gamma=1.0), 7)
    spec = lv.diagonalize(liou, compute_vectors=False)
    got = np.sort(spec.eigenvalues.real)
    expected = np.sort([-(m + n) / 2.0 for m in range(8) for n in range(8)])
    assert np.max(np.abs(got - expected)) < 1e-8
    assert np.max(np.abs(spec.eigenvalues.imag)) < 1e-8
    assert spec.gap == pytest.approx(0.5, abs=1e-8)


def test_trace_preservation_left_null_vector():
    params = ModelParams(U=0.05, G=1.1, gamma=1.3)
    liou = lv.build_liouvillian(params, 10)
    ident = np.eye(11, dtype=complex).reshape(-1)
    assert np.max(np.abs(ident @ liou.matrix)) < 1e-10


def test_dimension_cap():
    with pytest.raises(lv.DimensionCapError):
        lv.build_liouvillian(ModelParams(G=0.5), 80)


def test_diagonalize_sorting_and_structure():
    params = ModelParams(U=0.25, G=1.2, gamma=1.0)
    liou = lv.build_liouvillian(params, 12)
    spec = lv.diagonalize(liou)
    w = spec.eigenvalues
    assert np.all(np.diff(w.real) <= 1e-12)  # descending real parts
    assert np.all(w.real <= 1e-8)
    assert abs(w[0]) < 1e-8
    # conjugate pairs
    for lam in w[np.abs(w.imag) > 1e-8][:20]:
        assert np.min(np.abs(w - np.conj(lam))) < 1e-8


def test_parity_blocks_match_direct_diagonalization():
    params = ModelParams(U=0.3, G=1.1, gamma=1.0)
    liou = lv.build_liouvillian(params, 9)
    blocked = lv.diagonalize(liou)
    direct = lv.diagonalize(liou, use_parity_blocks=False)
    # same multiset of eigenvalues (pairing by nearest match: the lexsort
    # order of conjugate pairs is sensitive to last-ulp real parts)
    b = direct.eigenvalues.copy()
    for lam in blocked.eigenvalues:
        j = int(np.argmin(np.abs(b - lam)))
        assert abs(b[j] - lam) < 1e-10
        b[j] = np.inf
    # eigenmatrices have definite m+n parity in both paths
    d = liou.n_max + 1
    pi = lv.parity_operator(liou.n_max)
    for spec in (blocked, direct):
        for i in range(10):
            sig = spec.eigenmatrix(i)
            flipped = pi @ sig @ pi
            scale = np.max(np.abs(sig))
            sym = np.max(np.abs(flipped - sig)) / scale
            anti = np.max(np.abs(flipped + sig)) / scale
            assert min(sym, anti) < 1e-6


def test_hermiticity_pairing():
    # sigma^dag is an eigenmatrix with conjugated eigenvalue
    params = ModelParams(U=1 / 6, G=1.2, gamma=1.0)
    liou = lv.build_liouvillian(params, 14)
    spec = lv.diagonalize(liou)
    for i in range(10):
        lam = spec.eigenvalues[i]
        sig_dag = spec.eigenmatrix(i).conj().T.reshape(-1)
        resid = liou.matrix @ sig_dag - np.conj(lam) * sig_dag
        assert np.max(np.abs(resid)) < 1e-9 * max(1.0, np.max(np.abs(sig_dag)))


def test_zero_mode_count_below_vs_above():
    below = lv.diagonalize(lv.build_liouvillian(ModelParams(U=1 / 90, G=0.8), 40),
                           compute_vectors=False)
    assert below.n_zero_modes() == 1
    assert below.gap > 0.05


def test_steady_pair_structure():
    params = ModelParams(U=0.1, G=1.2, gamma=1.0)
    liou = lv.build_liouvillian(params, 40)
    spec = lv.diagonalize(liou)
    pair = lv.steady_pair(spec)
    d = 41
    assert np.trace(pair.sigma0).real == pytest.approx(1.0, abs=1e-10)
    assert abs(np.trace(pair.sigma0).imag) < 1e-12
    assert lv.trace_norm(pair.sigma1) == pytest.approx(1.0, abs=1e-10)
    assert abs(np.trace(pair.sigma1)) < 1e-8
    assert pair.sigma0_min_eigenvalue > -1e-8
    # parity structure: sigma0 even, sigma1 odd
    pi = lv.parity_operator(40)
    assert np.max(np.abs(pi @ pair.sigma0 @ pi - pair.sigma0)) < 1e-6
    assert np.max(np.abs(pi @ pair.sigma1 @ pi + pair.sigma1)) < 1e-6
    # symmetry breaking: Tr[a sigma0] = 0 but the sigma1 admixture shifts it
    ops = lv.build_hamiltonian(params, 40)
    assert abs(np.trace(ops.a @ pair.sigma0)) < 1e-6
    assert abs(np.trace(ops.a @ (pair.sigma0 + pair.sigma1))) > 1e-3
    # sign convention
    quad = ops.a + ops.adag
    assert np.trace(quad @ (pair.sigma0 + pair.sigma1)).real >= 0


def test_sigma1_gapped_below_threshold():
    liou = lv.build_liouvillian(ModelParams(U=0.05, G=0.5), 40)
    spec = lv.diagonalize(liou)
    pair = lv.steady_pair(spec)
    # decay rate of sigma1 is of order gamma below threshold
    assert abs(pair.lambda1.real) > 0.1


def test_observable_n():
    ops = lv.build_hamiltonian(ModelParams(G=0.0), 8)
    vac = np.zeros((9, 9), dtype=complex)
    vac[0, 0] = 1.0
    assert lv.observable_n(vac, ops) == 0.0
    fock3 = np.zeros((9, 9), dtype=complex)
    fock3[3, 3] = 1.0
    assert lv.observable_n(fock3, ops) == pytest.approx(3.0, abs=1e-14)


def test_occupation_below_threshold_closed_form():
    params = ModelParams(U=1 / 90, G=0.8, gamma=1.0)
    liou = lv.build_liouvillian(params, 40)
    rho = lv.steady_state_direct(liou)
    ops = lv.build_hamiltonian(params, 40)
    n_ed = lv.observable_n(rho, ops)
    n_closed = 0.64 / (2 * (1 - 0.64))
    assert abs(n_ed - n_closed) / n_closed < 0.05


def test_ed_approaches_closed_form_monotonically():
    points = lv.finite_size_sweep(0.8, [15, 30, 60], n_max_override=40)
    n_closed = 0.64 / (2 * (1 - 0.64))
    devs = [abs(p.n_ed - n_closed) for p in points]
    assert devs[0] > devs[1] > devs[2]


def test_steady_state_direct_matches_eigenvector():
    params = ModelParams(U=0.1, G=1.1, gamma=1.0)
    liou = lv.build_liouvillian(params, 24)
    direct = lv.steady_state_direct(liou)
    pair = lv.steady_pair(lv.diagonalize(liou))
    assert np.max(np.abs(direct - pair.sigma0)) < 1e-10


def test_evolve_identity_and_trace():
    rng = np.random.default_rng(3)
    params = ModelParams(U=0.2, G=1.1, gamma=1.0)
    liou = lv.build_liouvillian(params, 8)
    rho0 = random_density_matrix(rng, 9)
    assert np.array_equal(lv.evolve(rho0, liou, 0.0), rho0)
    spec = lv.diagonalize(liou)
    for t in (0.3, 2.0, 20.0):
        rho_t = lv.evolve(rho0, liou, t, spectrum=spec)
        assert np.trace(rho_t).real == pytest.approx(1.0, abs=1e-8)
        assert abs(np.trace(rho_t).imag) < 1e-8
    # long-time limit approaches the steady state
    rho_inf = lv.evolve(rho0, liou, 200.0, spectrum=spec)
    assert np.max(np.abs(rho_inf - lv.steady_pair(spec).sigma0)) < 1e-6


def test_evolve_against_expm_oracle():
    import scipy.linalg as sla

    rng = np.random.default_rng(8)
    params = ModelParams(U=0.3, G=0.9, gamma=1.0)
    liou = lv.build_liouvillian(params, 6)
    rho0 = random_density_matrix(rng, 7)
    t = 1.7
    expected = (sla.expm(liou.matrix * t) @ rho0.reshape(-1)).reshape(7, 7)
    got = lv.evolve(rho0, liou, t)
    assert np.max(np.abs(got - expected)) < 1e-9


def test_evolve_retains_displacement_sign():
    # symmetry breaking selected by the initial state
    params = ModelParams(U=1 / 30, G=1.2, gamma=1.0)
    liou = lv.build_liouvillian(params, 40)
    spec = lv.diagonalize(liou)
    ops = lv.build_hamiltonian(params, 40)
    beta = 2.0
    coh = np.exp(-abs(beta) ** 2 / 2) * np.array(
        [beta ** n / math.sqrt(math.factorial(n)) for n in range(41)]
    )
    rho0 = np.outer(coh, coh.conj())
    rho0 /= np.trace(rho0)
    a0 = np.trace(ops.a @ rho0)
    rho_t = lv.evolve(rho0, liou, 50.0, spectrum=spec)
    a_t = np.trace(ops.a @ rho_t)
    assert a0.real > 0
    assert a_t.real > 0.05  # keeps pointing along the initial displacement


def test_wigner_vacuum_and_fock():
    d = 12
    vac = np.zeros((d, d), dtype=complex)
    vac[0, 0] = 1.0
    grid = lv.wigner(vac, n_points=101)
    i0 = np.argmin(np.abs(grid.x))
    assert grid.values[i0, i0] == pytest.approx(1.0 / math.pi, abs=1e-12)
    assert grid.integral() == pytest.approx(1.0, abs=1e-3)
    fock1 = np.zeros((d, d), dtype=complex)
    fock1[1, 1] = 1.0
    grid = lv.wigner(fock1, n_points=101)
    assert grid.values[i0, i0] == pytest.approx(-1.0 / math.pi, abs=1e-12)
    assert grid.integral() == pytest.approx(1.0, abs=1e-3)


def test_wigner_coherent_state_oracle():
    # W for |beta> is a unit Gaussian at (sqrt2 Re beta, sqrt2 Im beta)
    d = 36
    beta = 0.8 + 0.5j
    coh = np.exp(-abs(beta) ** 2 / 2) * np.array(
        [beta ** n / math.sqrt(math.factorial(n)) for n in range(d)]
    )
    rho = np.outer(coh, coh.conj())
    x = np.linspace(-3.5, 4.0, 41)
    grid = lv.wigner(rho, x=x, p=x.copy())
    xx, pp = np.meshgrid(grid.x, grid.p)
    expected = np.exp(-(xx - math.sqrt(2) * beta.real) ** 2
                      - (pp - math.sqrt(2) * beta.imag) ** 2) / math.pi
    assert np.max(np.abs(grid.values - expected)) < 1e-10


def test_wigner_laguerre_recurrence_against_scipy():
    rng = np.random.default_rng(9)
    z = rng.uniform(0, 30, size=7)
    # recompute the recurrence exactly as the implementation does
    for k in (0, 1, 3, 6):
        lm1 = np.ones_like(z)
        lcur = 1.0 + k - z
        for n in range(1, 12):
            expected_prev = eval_genlaguerre(n, k, z)
            assert np.max(np.abs(lcur - expected_prev)) < 1e-9 * np.max(
                np.abs(expected_prev) + 1.0
            )
            lnext = ((2 * n + 1 + k - z) * lcur - (n + k) * lm1) / (n + 1)
            lm1, lcur = lcur, lnext


def test_wigner_requires_hermitian():
    bad = np.zeros((5, 5), dtype=complex)
    bad[0, 1] = 1.0
    with pytest.raises(ValueError):
        lv.wigner(bad)


def test_wigner_warns_on_truncated_state():
    d = 10
    top = np.zeros((d, d), dtype=complex)
    top[d - 1, d - 1] = 1.0
    with pytest.warns(lv.CutoffWarning):
        lv.wigner(top, n_points=21)


def test_default_nmax_rule():
    below, clipped = lv.default_nmax(ModelParams(U=1 / 90, G=0.8))
    assert below == 40 and not clipped
    above, clipped = lv.default_nmax(ModelParams(U=1 / 20, G=1.2))
    assert above == math.ceil(8 * mf.steady_order_parameter(ModelParams(G=1.2)) * 20)
    assert not clipped
    crit, clipped = lv.default_nmax(ModelParams(U=1 / 40, G=1.0))
    assert clipped and crit == 63
    small_cap, clipped = lv.default_nmax(ModelParams(U=1 / 40, G=0.5), dim_cap=1024)
    assert clipped and small_cap == 31


def test_cutoff_doubling_convergence():
    # leading eigenvalues stable under doubling the rule cutoff
    params = ModelParams(U=1 / 30, G=0.8, gamma=1.0)
    n_rule, clipped = lv.default_nmax(params)
    assert not clipped
    spec1 = lv.diagonalize(lv.build_liouvillian(params, n_rule, dim_cap=2 * 81 ** 2),
                           compute_vectors=False)
    spec2 = lv.diagonalize(lv.build_liouvillian(params, 2 * n_rule, dim_cap=2 * 81 ** 2),
                           compute_vectors=False)
    for i in range(6):
        assert abs(spec1.eigenvalues[i] - spec2.eigenvalues[i]) < 1e-6


def test_finite_size_sweep_fields():
    points = lv.finite_size_sweep(1.2, [6, 8], n_max_override=30, k_eigen=3)
    assert [p.inv_u for p in points] == [6, 8]
    for p in points:
        assert p.phi_mf == pytest.approx(0.33166247903554, abs=1e-12)
        assert p.gap > 0
        assert len(p.leading_eigenvalues) == 4
        assert p.phi_ed == pytest.approx(p.n_ed / p.inv_u, abs=1e-14)

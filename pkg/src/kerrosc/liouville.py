"""Fock-space operators, Liouvillian vectorization and exact
diagonalization, steady-state pair, Wigner functions, time evolution, and
finite-size sweeps.

Vectorization is row-major: rho -> vec with |m><n| at index m*(n_max+1)+n,
so A rho B maps to (A kron B^T) vec(rho).  The Liouvillian conserves the
parity of m+n, which splits it into two blocks that are diagonalized
densely and merged.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import ModelParams, RegimeTag, classify_regime
from .meanfield import steady_order_parameter

#: Default cap on the dense Liouvillian dimension (n_max+1)^2.
DEFAULT_DIM_CAP = 4096

#: |lambda| below which an eigenvalue counts as zero, relative to gamma.
ZERO_TOL = 1e-8


class CutoffWarning(UserWarning):
    """Results may be unreliable because of the Fock-space truncation."""


class DimensionCapError(MemoryError):
    def __init__(self, n_max: int, cap: int):
        super().__init__(
            f"Liouvillian dimension ({n_max + 1}^2 = {(n_max + 1) ** 2}) exceeds the cap {cap}"
        )


@dataclass(frozen=True)
class FockOperators:
    """Truncated ladder operators and Hamiltonian at occupation cutoff n_max;
    adag|n_max> = 0 is enforced by the truncation."""

    n_max: int
    a: np.ndarray
    adag: np.ndarray
    number: np.ndarray
    hamiltonian: np.ndarray


@dataclass(frozen=True)
class LiouvilleOperator:
    """Dense vectorized Lindblad generator for jump operator a."""

    matrix: np.ndarray
    params: ModelParams
    n_max: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class LiouvilleSpectrum:
    """All eigenpairs, sorted by descending real part (ties by ascending
    |Im|, then ascending Im).  vectors[:, i] holds vectorized sigma_i;
    parity[i] is +1/-1 for the even/odd m+n sector."""

    eigenvalues: np.ndarray
    vectors: np.ndarray | None
    parity: np.ndarray
    n_max: int
    params: ModelParams

    @property
    def gap(self) -> float:
        return -float(self.eigenvalues[1].real)

    def eigenmatrix(self, i: int) -> np.ndarray:
        if self.vectors is None:
            raise ValueError("spectrum was computed without eigenvectors")
        d = self.n_max + 1
        return self.vectors[:, i].reshape(d, d)

    def n_zero_modes(self, gamma: float | None = None) -> int:
        g = gamma if gamma is not None else self.params.gamma
        return int(np.sum(np.abs(self.eigenvalues) < ZERO_TOL * g))


@dataclass(frozen=True)
class SteadyPair:
    """Steady density matrix sigma0 (unit trace) and the slowest-decaying
    traceless Hermitian eigenmatrix sigma1 (unit trace norm), with the sign
    convention Tr[(a + adag)(sigma0 + sigma1)] >= 0."""

    sigma0: np.ndarray
    sigma1: np.ndarray
    lambda1: complex
    sigma0_min_eigenvalue: float


@dataclass(frozen=True)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(p), len(x))

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(self.values.sum() * dx * dp)


def destroy(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def parity_operator(n_max: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(n_max + 1)).astype(complex)


def build_hamiltonian(params: ModelParams, n_max: int) -> FockOperators:
    """H = -omega_d n + (U/2) adag adag a a + (G/4) adag^2 + (G*/4) a^2."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a = destroy(n_max)
    adag = a.conj().T
    number = adag @ a
    ns = np.arange(n_max + 1, dtype=float)
    h = np.diag(-params.omega_d * ns + 0.5 * params.U * ns * (ns - 1.0)).astype(complex)
    h += 0.25 * params.G * (adag @ adag) + 0.25 * np.conj(params.G) * (a @ a)
    return FockOperators(n_max=n_max, a=a, adag=adag, number=number, hamiltonian=h)


def apply_lindblad(rho: np.ndarray, ops: FockOperators, gamma: float) -> np.ndarray:
    """-i[H, rho] + gamma D(a) rho applied directly (oracle for the
    vectorized generator)."""
    h, a, adag = ops.hamiltonian, ops.a, ops.adag
    comm = h @ rho - rho @ h
    n_op = adag @ a
    diss = a @ rho @ adag - 0.5 * (n_op @ rho + rho @ n_op)
    return -1j * comm + gamma * diss


def build_liouvillian(
    params: ModelParams, n_max: int, dim_cap: int = DEFAULT_DIM_CAP
) -> LiouvilleOperator:
    """Vectorized generator
    -i H x 1 + i 1 x H^T + gamma (a x a* - 1/2 1 x a^T a* - 1/2 adag a x 1).
    """
    if (n_max + 1) ** 2 > dim_cap:
        raise DimensionCapError(n_max, dim_cap)
    ops = build_hamiltonian(params, n_max)
    d = n_max + 1
    eye = np.eye(d, dtype=complex)
    h = ops.hamiltonian
    a = ops.a
    n_op = ops.adag @ ops.a
    mat = -1j * np.kron(h, eye) + 1j * np.kron(eye, h.T)
    mat += params.gamma * (
        np.kron(a, a.conj())
        - 0.5 * np.kron(eye, a.T @ a.conj())
        - 0.5 * np.kron(n_op, eye)
    )
    return LiouvilleOperator(matrix=mat, params=params, n_max=n_max)


def _parity_indices(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    d = n_max + 1
    m, n = np.divmod(np.arange(d * d), d)
    even = np.flatnonzero((m + n) % 2 == 0)
    odd = np.flatnonzero((m + n) % 2 == 1)
    return even, odd


def _sort_order(eigenvalues: np.ndarray) -> np.ndarray:
    return np.lexsort((eigenvalues.imag, np.abs(eigenvalues.imag), -eigenvalues.real))


def diagonalize(
    liouvillian: LiouvilleOperator,
    compute_vectors: bool = True,
    use_parity_blocks: bool = True,
) -> LiouvilleSpectrum:
    """Dense eigendecomposition of the full generator.

    The m+n parity blocks are diagonalized separately (exactly equivalent,
    since the generator conserves parity) and merged; disable with
    use_parity_blocks=False for a direct cross-check.
    """
    mat = liouvillian.matrix
    dim = mat.shape[0]
    try:
        if not use_parity_blocks:
            if compute_vectors:
                w, v = sla.eig(mat)
            else:
                w, v = np.linalg.eigvals(mat), None
            pi_super = None
            par = np.zeros(dim)
            if compute_vectors:
                even, odd = _parity_indices(liouvillian.n_max)
                for i in range(dim):
                    we = np.linalg.norm(v[even, i])
                    wo = np.linalg.norm(v[odd, i])
                    par[i] = 1.0 if we >= wo else -1.0
            order = _sort_order(w)
            return LiouvilleSpectrum(
                eigenvalues=w[order],
                vectors=v[:, order] if v is not None else None,
                parity=par[order],
                n_max=liouvillian.n_max,
                params=liouvillian.params,
            )
        even, odd = _parity_indices(liouvillian.n_max)
        w = np.empty(dim, dtype=complex)
        v = np.zeros((dim, dim), dtype=complex) if compute_vectors else None
        par = np.empty(dim)
        offset = 0
        for idx, sign in ((even, 1.0), (odd, -1.0)):
            block = mat[np.ix_(idx, idx)]
            if compute_vectors:
                wb, vb = sla.eig(block)
                v[np.ix_(idx, offset + np.arange(len(idx)))] = vb
            else:
                wb = np.linalg.eigvals(block)
            w[offset : offset + len(idx)] = wb
            par[offset : offset + len(idx)] = sign
            offset += len(idx)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigensolver failed to converge for dimension {dim}"
        ) from exc
    order = _sort_order(w)
    return LiouvilleSpectrum(
        eigenvalues=w[order],
        vectors=v[:, order] if v is not None else None,
        parity=par[order],
        n_max=liouvillian.n_max,
        params=liouvillian.params,
    )


def _hermitize_phase(sigma: np.ndarray) -> np.ndarray:
    """Rotate the arbitrary eigenvector phase so the matrix is Hermitian."""
    tr2 = np.trace(sigma @ sigma)
    if abs(tr2) > 0:
        sigma = sigma * np.exp(-0.5j * np.angle(tr2))
    return 0.5 * (sigma + sigma.conj().T)


def trace_norm(m: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def steady_pair(spectrum: LiouvilleSpectrum) -> SteadyPair:
    """sigma0 scaled to unit trace and Hermitized; sigma1 Hermitized, scaled
    to unit trace norm, with sign fixed by Tr[(a+adag)(sigma0+sigma1)] >= 0.

    Warns (CutoffWarning) when sigma0 acquires an eigenvalue below -1e-6,
    which signals a too-small cutoff.
    """
    lam0 = spectrum.eigenvalues[0]
    gamma = spectrum.params.gamma
    if abs(lam0) > ZERO_TOL * gamma:
        raise ValueError(f"leading eigenvalue {lam0} is not zero within {ZERO_TOL:g}*gamma")
    sigma0 = spectrum.eigenmatrix(0)
    sigma0 = sigma0 / np.trace(sigma0)
    sigma0 = 0.5 * (sigma0 + sigma0.conj().T)
    min_eig = float(np.linalg.eigvalsh(sigma0).min())
    if min_eig < -1e-6:
        warnings.warn(
            f"sigma0 has negative eigenvalue {min_eig:.3g}; cutoff n_max = "
            f"{spectrum.n_max} looks too small",
            CutoffWarning,
        )

    sigma1 = _hermitize_phase(spectrum.eigenmatrix(1))
    sigma1 = sigma1 / trace_norm(sigma1)
    a = destroy(spectrum.n_max)
    quad_op = a + a.conj().T
    if float(np.trace(quad_op @ (sigma0 + sigma1)).real) < 0:
        sigma1 = -sigma1
    return SteadyPair(
        sigma0=sigma0,
        sigma1=sigma1,
        lambda1=complex(spectrum.eigenvalues[1]),
        sigma0_min_eigenvalue=min_eig,
    )


def steady_state_direct(liouvillian: LiouvilleOperator) -> np.ndarray:
    """Steady density matrix from the even-parity null space, solved as a
    linear system with the trace constraint (no full diagonalization)."""
    d = liouvillian.n_max + 1
    even, _ = _parity_indices(liouvillian.n_max)
    block = liouvillian.matrix[np.ix_(even, even)].copy()
    m, n = np.divmod(even, d)
    trace_row = (m == n).astype(complex)
    block[0, :] = trace_row
    rhs = np.zeros(len(even), dtype=complex)
    rhs[0] = 1.0
    try:
        sol = sla.solve(block, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(block, rhs, rcond=None)[0]
    vec = np.zeros(d * d, dtype=complex)
    vec[even] = sol
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def observable_n(state: np.ndarray, ops: FockOperators) -> float:
    """Tr[adag a state]; the imaginary part must vanish within 1e-10."""
    val = complex(np.trace(ops.number @ state))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"occupation expectation not real: {val}")
    return val.real


def evolve(
    rho0: np.ndarray,
    liouvillian: LiouvilleOperator,
    t: float,
    spectrum: LiouvilleSpectrum | None = None,
) -> np.ndarray:
    """exp(L t) applied to vec(rho0) by spectral reconstruction per parity
    block (falls back to a dense matrix exponential if the eigenbasis is too
    ill-conditioned)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return rho0.astype(complex).copy()
    d = liouvillian.n_max + 1
    vec0 = rho0.astype(complex).reshape(d * d)
    if spectrum is None:
        spectrum = diagonalize(liouvillian)
    if spectrum.vectors is None:
        raise ValueError("spectrum must carry eigenvectors")
    even, odd = _parity_indices(liouvillian.n_max)
    vec_t = np.zeros(d * d, dtype=complex)
    ok = True
    for idx, sign in ((even, 1.0), (odd, -1.0)):
        modes = np.flatnonzero(spectrum.parity == sign)
        basis = spectrum.vectors[np.ix_(idx, modes)]
        rhs = vec0[idx]
        coeff = np.linalg.solve(basis, rhs)
        if np.linalg.norm(basis @ coeff - rhs) > 1e-8 * max(np.linalg.norm(rhs), 1e-30):
            ok = False
            break
        vec_t[idx] = basis @ (coeff * np.exp(spectrum.eigenvalues[modes] * t))
    if not ok:
        vec_t = sla.expm(liouvillian.matrix * t) @ vec0
    return vec_t.reshape(d, d)


def wigner(
    state: np.ndarray,
    x: np.ndarray | None = None,
    p: np.ndarray | None = None,
    n_points: int = 201,
    span_factor: float = 0.8,
) -> WignerGrid:
    """Wigner function W(x, p) with x = (a + adag)/sqrt(2), normalized so
    that the double integral equals Tr state.

    Evaluated through the Fock-basis kernels of |m><n| (associated-Laguerre
    series), exact at the cutoff.  Default grid: symmetric, span
    sqrt(2 n_max) * span_factor, n_points per axis.  Warns when at least
    1e-3 of the state weight sits in the top 10% of Fock levels.
    """
    state = np.asarray(state, dtype=complex)
    d = state.shape[0]
    if state.shape != (d, d):
        raise ValueError("state must be square")
    if np.max(np.abs(state - state.conj().T)) > 1e-8 * max(1.0, np.max(np.abs(state))):
        raise ValueError("state must be Hermitian within 1e-8")
    n_max = d - 1

    abs_w = np.abs(state)
    top = int(math.ceil(0.9 * d))
    tail = abs_w[top:, :].sum() + abs_w[:top, top:].sum()
    if abs_w.sum() > 0 and tail / abs_w.sum() >= 1e-3:
        warnings.warn(
            f"{tail / abs_w.sum():.2e} of the state weight sits in the top "
            "10% of Fock levels; Wigner grid/cutoff may be unreliable",
            CutoffWarning,
        )

    if x is None:
        half = (n_points - 1) // 2
        span = math.sqrt(2.0 * n_max) * span_factor
        x = np.arange(-half, half + 1) * (span / half)
    if p is None:
        p = x.copy()

    xx, pp = np.meshgrid(x, p)
    r2 = xx * xx + pp * pp
    b = math.sqrt(2.0) * (xx + 1j * pp)
    z = 2.0 * r2

    acc = np.zeros_like(r2, dtype=complex)
    signs = (-1.0) ** np.arange(d)
    for k in range(d):
        diag = np.diagonal(state, offset=k)  # state[n, n+k]
        if not np.any(diag):
            continue
        # c_{n,k} = (-1)^n sqrt(n!/(n+k)!)
        ln_ratio = 0.5 * (
            np.array([math.lgamma(n + 1) - math.lgamma(n + k + 1) for n in range(d - k)])
        )
        coeff = signs[: d - k] * np.exp(ln_ratio) * diag
        # sum over n of coeff[n] * L_n^(k)(z) via the three-term recurrence
        lm1 = np.ones_like(z)
        sk = coeff[0] * lm1
        if d - k > 1:
            lcur = 1.0 + k - z
            sk = sk + coeff[1] * lcur
            for n in range(1, d - k - 1):
                lnext = ((2 * n + 1 + k - z) * lcur - (n + k) * lm1) / (n + 1)
                lm1, lcur = lcur, lnext
                sk = sk + coeff[n + 1] * lcur
        if k == 0:
            acc += sk
        else:
            acc += 2.0 * (b ** k * sk).real
    values = acc.real * np.exp(-r2) / math.pi
    return WignerGrid(x=x, p=p, values=values)


def default_nmax(
    params: ModelParams, dim_cap: int = DEFAULT_DIM_CAP
) -> tuple[int, bool]:
    """Cutoff rule n_max = max(40, ceil(8 n_est)) with the regime-dependent
    occupation estimate, clipped so (n_max+1)^2 <= dim_cap.

    Returns (n_max, clipped); clipped results should be validated with the
    doubling test where feasible.
    """
    regime = classify_regime(params)
    g, gamma = params.g_abs, params.gamma
    if regime is RegimeTag.BELOW:
        n_est = g * g / (2.0 * (gamma * gamma - g * g))
    elif regime is RegimeTag.ABOVE:
        if params.U <= 0:
            raise ValueError("cutoff rule above threshold requires U > 0")
        n_est = steady_order_parameter(params) / params.U
    else:
        if params.U <= 0:
            raise ValueError("cutoff rule at criticality requires U > 0")
        n_est = 1.2 * (1.0 / params.U) ** (2.0 / 3.0)
    n_max = max(40, int(math.ceil(8.0 * n_est)))
    n_cap = int(math.isqrt(dim_cap)) - 1
    if n_max > n_cap:
        return n_cap, True
    return n_max, False


@dataclass(frozen=True)
class SweepPoint:
    inv_u: float
    n_max: int
    clipped: bool
    n_ed: float
    phi_ed: float
    phi_mf: float
    gap: float
    leading_eigenvalues: np.ndarray
    sigma0_min_eigenvalue: float


def finite_size_sweep(
    g_abs: float,
    inv_u_list,
    gamma: float = 1.0,
    k_eigen: int = 6,
    n_max_override: int | None = None,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> list[SweepPoint]:
    """One diagonalization per 1/U at fixed |G|: occupation, order-parameter
    deviation from mean field, gap, and the leading eigenvalues."""
    points = []
    for inv_u in sorted(inv_u_list):
        params = ModelParams(U=1.0 / inv_u, G=complex(g_abs), gamma=gamma)
        if n_max_override is not None:
            n_max, clipped = n_max_override, False
        else:
            n_max, clipped = default_nmax(params, dim_cap)
        liou = build_liouvillian(params, n_max, dim_cap)
        spectrum = diagonalize(liou)
        pair = steady_pair(spectrum)
        ops = build_hamiltonian(params, n_max)
        n_ed = observable_n(pair.sigma0, ops)
        phi_mf = steady_order_parameter(params)
        points.append(
            SweepPoint(
                inv_u=inv_u,
                n_max=n_max,
                clipped=clipped,
                n_ed=n_ed,
                phi_ed=params.U * n_ed,
                phi_mf=phi_mf,
                gap=spectrum.gap,
                leading_eigenvalues=spectrum.eigenvalues[: k_eigen + 1].copy(),
                sigma0_min_eigenvalue=pair.sigma0_min_eigenvalue,
            )
        )
    return points

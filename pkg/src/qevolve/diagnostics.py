"""Entanglement and accuracy diagnostics.

Reduced density matrices index the kept qubits little-endian in the order
given: row ``sum_j b[A[j]] * 2**j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .pauli import Hamiltonian
from .simcore import n_qubits_of

MAX_SUBSET = 8
MAX_LANCZOS_QUBITS = 20
LANCZOS_CAP = 3000
RESIDUAL_TOL = 1e-8


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


def _check_subset(n: int, subset: Sequence[int]) -> list[int]:
    subset = [int(q) for q in subset]
    if not subset:
        raise ValueError("subset must not be empty")
    if len(subset) > MAX_SUBSET:
        raise ValueError(f"subset of {len(subset)} qubits exceeds the {MAX_SUBSET}-qubit guard")
    if len(set(subset)) != len(subset) or any(not 0 <= q < n for q in subset):
        raise ValueError(f"invalid subset {subset} for {n} qubits")
    return subset


def _split(state: np.ndarray, subset: list[int]) -> np.ndarray:
    """State as a (2^|A|, 2^|B|) matrix."""
    n = n_qubits_of(state)
    axis = lambda q: n - 1 - q  # C order puts qubit 0 on the last axis
    rest = [q for q in range(n - 1, -1, -1) if q not in subset]
    order = [axis(q) for q in reversed(subset)] + [axis(q) for q in rest]
    psi = state.reshape((2,) * n).transpose(order)
    return psi.reshape(1 << len(subset), -1)


@dataclass(frozen=True)
class ReducedDensity:
    subset: tuple[int, ...]
    matrix: np.ndarray

    def purity(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))


def reduced_density(state: np.ndarray, subset: Sequence[int]) -> ReducedDensity:
    subset = _check_subset(n_qubits_of(state), subset)
    m = _split(state, subset)
    return ReducedDensity(tuple(subset), m @ m.conj().T)


def renyi2(state: np.ndarray, subset: Sequence[int]) -> float:
    """Second Renyi entropy ``-ln Tr rho_A^2`` in nats."""
    purity = reduced_density(state, subset).purity()
    return max(0.0, -math.log(purity))


def page_entropy(k: int, n: int) -> float:
    """``k ln 2 - 1 / 2^(n - 2k + 1)``, the large-n Page value for k of n qubits."""
    if not 1 <= k <= n / 2:
        raise ValueError(f"need 1 <= k <= n/2, got k={k}, n={n}")
    return k * math.log(2) - 2.0 ** -(n - 2 * k + 1)


def normalized_renyi2(state: np.ndarray, subset: Sequence[int] = (0, 1)) -> float:
    return renyi2(state, subset) / page_entropy(len(subset), n_qubits_of(state))


@dataclass
class GroundSpace:
    energy: float
    basis: np.ndarray  # (k, 2^n), rows orthonormal
    degeneracy_tol: float
    residuals: list[float] = field(default_factory=list)
    next_energy: Optional[float] = None

    @property
    def degeneracy(self) -> int:
        return self.basis.shape[0]


def default_degeneracy_tol(e0: float) -> float:
    return 1e-6 * max(1.0, abs(e0))


def _lanczos_lowest(h: Hamiltonian, deflate: np.ndarray, rng: np.random.Generator,
                    max_iter: int, krylov_max: int):
    """Lowest eigenpair of H restricted to the complement of ``deflate`` rows.

    Lanczos with full reorthogonalization, restarted from the current Ritz
    vector whenever the Krylov basis reaches ``krylov_max`` vectors.
    """
    dim = 1 << h.n_qubits

    def project(w):
        for _ in range(2):
            if deflate.shape[0]:
                w -= deflate.T @ (deflate.conj() @ w)
        return w

    v = project(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
    free_dim = dim - deflate.shape[0]
    if free_dim <= 0:
        return None
    v /= np.linalg.norm(v)
    hv = np.empty(dim, dtype=np.complex128)
    total = 0
    residual = math.inf
    while total < max_iter:
        m = min(krylov_max, free_dim, max_iter - total)
        V = np.zeros((m, dim), dtype=np.complex128)
        alpha, beta = np.zeros(m), np.zeros(m)
        V[0] = v
        k = 0
        for k in range(m):
            h.apply(V[k], hv)
            w = project(hv.copy())
            alpha[k] = float(np.vdot(V[k], w).real)
            for _ in range(2):
                w -= V[: k + 1].T @ (V[: k + 1].conj() @ w)
            total += 1
            b = np.linalg.norm(w)
            if (k + 1) % 10 == 0 and k + 1 < m:
                _, s = eigh_tridiagonal(alpha[: k + 1], beta[:k], select="i", select_range=(0, 0))
                if b * abs(s[-1, 0]) < 1e-2 * RESIDUAL_TOL:
                    beta[k] = b
                    break
            if k + 1 < m and b > 1e-12:
                beta[k] = b
                V[k + 1] = w / b
            else:
                beta[k] = b
                break
        n_k = k + 1
        theta, s = eigh_tridiagonal(alpha[:n_k], beta[: n_k - 1], select="i", select_range=(0, 0))
        y = s[:, 0] @ V[:n_k]
        y /= np.linalg.norm(y)
        energy = float(theta[0])
        h.apply(y, hv)
        residual = float(np.linalg.norm(project(hv.copy()) - energy * y))
        if residual < RESIDUAL_TOL:
            return energy, y, residual
        v = y
    raise ConvergenceError(f"Lanczos did not converge in {max_iter} iterations", residual)


def ground_space(
    h: Hamiltonian,
    degeneracy_tol: Optional[float] = None,
    *,
    seed: int = 0,
    max_iter: int = LANCZOS_CAP,
    krylov_max: int = 120,
) -> GroundSpace:
    """Ground energy and an orthonormal basis of the (near-)degenerate ground space.

    Matrix-free Lanczos; further vectors are found by deflating the ones
    already accepted until the next eigenvalue lies more than
    ``degeneracy_tol`` above the ground energy (default ``1e-6 * max(1, |E0|)``).
    """
    if h.n_qubits > MAX_LANCZOS_QUBITS:
        raise ValueError(f"{h.n_qubits} qubits exceed the {MAX_LANCZOS_QUBITS}-qubit Lanczos budget")
    rng = np.random.default_rng(seed)
    dim = 1 << h.n_qubits
    found = np.zeros((0, dim), dtype=np.complex128)
    e0, y, res = _lanczos_lowest(h, found, rng, max_iter, krylov_max)
    tol = default_degeneracy_tol(e0) if degeneracy_tol is None else degeneracy_tol
    found = y[None, :]
    residuals = [res]
    next_energy = None
    while found.shape[0] < dim:
        out = _lanczos_lowest(h, found, rng, max_iter, krylov_max)
        if out is None:
            break
        e, y, res = out
        if e - e0 > tol:
            next_energy = e
            break
        # keep the basis exactly orthonormal
        y = y - found.T @ (found.conj() @ y)
        found = np.vstack([found, y / np.linalg.norm(y)])
        residuals.append(res)
        e0 = min(e0, e)
    return GroundSpace(e0, found, tol, residuals, next_energy)


def ground_space_dense(h: Hamiltonian, degeneracy_tol: Optional[float] = None) -> GroundSpace:
    """Dense-diagonalization reference for small systems."""
    if h.n_qubits > 12:
        raise ValueError("dense diagonalization is limited to 12 qubits")
    w, v = np.linalg.eigh(h.to_dense())
    tol = default_degeneracy_tol(w[0]) if degeneracy_tol is None else degeneracy_tol
    k = int(np.sum(w - w[0] <= tol))
    nxt = float(w[k]) if k < w.size else None
    return GroundSpace(float(w[0]), v[:, :k].T.copy(), tol, [0.0] * k, nxt)


def overlap(state: np.ndarray, gs: GroundSpace) -> float:
    """Weight of ``state`` inside the ground space, ``sum_b |<b|state>|^2``."""
    if state.shape != gs.basis.shape[1:]:
        raise ValueError("state and ground space dimensions differ")
    return float(np.sum(np.abs(gs.basis.conj() @ state) ** 2))


def degeneracy_pattern(eigenvalues: np.ndarray, tol: float = 1e-8) -> list[int]:
    """Multiplicities of a sorted spectrum, clustering values within ``tol``."""
    w = np.sort(np.asarray(eigenvalues))
    out = [1]
    for a, b in zip(w[:-1], w[1:]):
        if b - a <= tol:
            out[-1] += 1
        else:
            out.append(1)
    return out

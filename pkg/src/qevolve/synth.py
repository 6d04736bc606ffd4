"""Gate synthesis against the Frobenius distance ``d - Re Tr(U^dag V)``.

The cost is linear in the circuit unitary, so a RotY or CRY angle enters at
the first harmonic while a RotZ angle enters at the second: synthesis costs
always use the order-5 landscape.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import _kernels
from .ansatz import AnsatzSpec, build_ansatz
from .evolve import EvolutionConfig, run
from .landscape import argmin5, fit5
from .simcore import Circuit, EvalCounter

MAX_UNITARY_QUBITS = 8
UNITARY_TOL = 1e-8


class NotUnitaryError(ValueError):
    pass


@dataclass(frozen=True)
class TargetUnitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        d = m.shape[0]
        if m.ndim != 2 or m.shape != (d, d) or d < 2 or d & (d - 1):
            raise ValueError(f"matrix of shape {m.shape} is not 2^n x 2^n")
        err = np.max(np.abs(m.conj().T @ m - np.eye(d)))
        if err > UNITARY_TOL:
            raise NotUnitaryError(f"max |U^dag U - I| = {err:.3e} exceeds {UNITARY_TOL}")
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dimension.bit_length() - 1

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def circuit_unitary(circuit: Circuit, params) -> np.ndarray:
    """Column ``j`` is the circuit applied to basis state ``j``."""
    if circuit.n_qubits > MAX_UNITARY_QUBITS:
        raise ValueError(f"unitaries are limited to {MAX_UNITARY_QUBITS} qubits")
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {params.shape}")
    return _kernels.unitary(1 << circuit.n_qubits, *circuit.kernel_arrays, params)


def frobenius_cost(U, V) -> float:
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape != V.shape:
        raise ValueError(f"shape mismatch {U.shape} vs {V.shape}")
    return float(U.shape[0] - np.vdot(U, V).real)


class SynthesisCost:
    def __init__(self, target, circuit: Circuit, counter: Optional[EvalCounter] = None):
        self.target = np.asarray(target, dtype=np.complex128)
        if self.target.shape[0] != 1 << circuit.n_qubits:
            raise ValueError("target and circuit widths differ")
        self.circuit = circuit
        self.counter = counter if counter is not None else EvalCounter()
        self.order = 5
        self.n_params = circuit.n_params
        self._arrays = circuit.kernel_arrays
        self._dim = self.target.shape[0]

    def __call__(self, params) -> float:
        V = _kernels.unitary(self._dim, *self._arrays, np.asarray(params, dtype=np.float64))
        self.counter.increment()
        return float(self._dim - np.vdot(self.target, V).real)


@dataclass
class PolishResult:
    params: np.ndarray
    cost: float
    evaluations: int
    sweeps: int


def polish(f, params, cost: float, *, tol: float = 1e-8, min_gain: float = 1e-14,
           max_sweeps: int = 10_000) -> PolishResult:
    """Full coordinate sweeps of exact single-parameter minimization.

    A coordinate update is kept only if the re-evaluated cost is lower, so the
    cost never increases. Stops once the cost drops below ``tol`` or a sweep
    gains less than ``min_gain``.
    """
    x = np.array(params, dtype=np.float64)
    used = 0
    sweeps = 0
    while cost >= tol and sweeps < max_sweeps:
        start = cost
        for i in range(x.size):
            model = fit5(f, x, i, cost)
            used += 4
            t = argmin5(model, x[i])
            if t == x[i]:
                continue
            trial = x.copy()
            trial[i] = t
            c = f(trial)
            used += 1
            if c < cost:
                x, cost = trial, c
            if cost < tol:
                break
        sweeps += 1
        if start - cost < min_gain:
            break
    return PolishResult(x, cost, used, sweeps)


@dataclass
class SynthesisReport:
    final_cost: float
    cnot_count: int
    evaluations: int
    wall_time: float
    circuit: Circuit
    params: np.ndarray
    converged: bool
    evolution_evaluations: int = 0
    polish_evaluations: int = 0
    polish_sweeps: int = 0
    episodes: int = 0
    trace: list = field(default_factory=list)


def synthesize(
    target,
    ansatz: AnsatzSpec,
    cfg: EvolutionConfig,
    polish_threshold: float = 1e-3,
    *,
    init: Union[str, np.ndarray] = "random",
    tol: float = 1e-8,
    threads: int = 1,
) -> SynthesisReport:
    """Evolutionary search down to ``polish_threshold``, then coordinate-sweep polish.

    Non-convergence is reported through ``converged``, never raised.
    """
    target = np.asarray(target, dtype=np.complex128)
    if target.shape[0] != 1 << ansatz.n_qubits:
        raise ValueError("ansatz width does not match the target")
    t0 = time.perf_counter()
    circuit = build_ansatz(ansatz)
    f = SynthesisCost(target, circuit)
    cfg = dataclasses.replace(cfg, target_cost=polish_threshold)
    result = run(f, cfg, init, threads=threads)
    params, cost = result.best_params, result.best_cost
    pol = PolishResult(params, cost, 0, 0)
    if cost < polish_threshold:
        pol = polish(f, params, cost, tol=tol)
    return SynthesisReport(
        final_cost=max(pol.cost, 0.0),
        cnot_count=circuit.cnot_count,
        evaluations=result.evaluations_used + pol.evaluations,
        wall_time=time.perf_counter() - t0,
        circuit=circuit,
        params=pol.params,
        converged=pol.cost < tol,
        evolution_evaluations=result.evaluations_used,
        polish_evaluations=pol.evaluations,
        polish_sweeps=pol.sweeps,
        episodes=result.episodes,
        trace=result.trace,
    )


def align_global_phase(U) -> np.ndarray:
    """Divide ``U`` by the phase of its largest-magnitude diagonal entry.

    The Frobenius cost is phase sensitive; this removes the arbitrary phase a
    target may carry.
    """
    U = np.asarray(U, dtype=np.complex128)
    diag = np.diag(U)
    j = int(np.argmax(np.abs(diag)))
    if abs(diag[j]) == 0:
        return U.copy()
    return U * (abs(diag[j]) / diag[j])


def haar_unitary(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    d = 1 << n_qubits
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def qft_matrix(n_qubits: int) -> np.ndarray:
    d = 1 << n_qubits
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)


def write_target(path, U) -> None:
    U = np.asarray(U, dtype=np.complex128)
    n = U.shape[0].bit_length() - 1
    lines = [str(n)]
    for row in U:
        lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_target(path) -> TargetUnitary:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"{path}: first line must be the qubit count") from None
    d = 1 << n
    if len(lines) != d + 1:
        raise ValueError(f"{path}: expected {d} matrix rows, found {len(lines) - 1}")
    m = np.empty((d, d), dtype=np.complex128)
    for r, line in enumerate(lines[1:]):
        cells = line.split()
        if len(cells) != d:
            raise ValueError(f"{path}: row {r} has {len(cells)} entries, expected {d}")
        for c, cell in enumerate(cells):
            try:
                re, im = cell.split(",")
                m[r, c] = complex(float(re), float(im))
            except ValueError:
                raise ValueError(f"{path}: cannot parse entry {cell!r}") from None
    return TargetUnitary(m)

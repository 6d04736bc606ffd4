"""Matrix-free statevector simulation.

States are plain ``complex128`` numpy arrays of length ``2**n``; bit ``q`` of a
basis index is the value of qubit ``q``. Parameter vectors are float arrays
kept in ``[0, 2*pi)``.

Gate conventions (angle ``t``)::

    RotZ(t) = diag(1, exp(2i t))          # exp(-i t Z) up to a global phase
    RotY(t) = exp(-i t Y) = [[cos t, -sin t], [sin t, cos t]]
    CRY(t)  = RotY(t) on target when the control bit is 1
    CNOT    = X on target when the control bit is 1

Full-angle rotations make every single-parameter energy cross-section a
sinusoid of ``2 t``. RotZ carries the phase-gate global phase so that gate
synthesis can match targets with arbitrary determinant.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .pauli import Hamiltonian

TWO_PI = 2.0 * np.pi


class GateKind(enum.IntEnum):
    RZ = _kernels.RZ
    RY = _kernels.RY
    CNOT = _kernels.CNOT
    CRY = _kernels.CRY

    @property
    def parametric(self) -> bool:
        return self is not GateKind.CNOT

    @property
    def controlled(self) -> bool:
        return self in (GateKind.CNOT, GateKind.CRY)


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    target: int
    control: Optional[int] = None
    param_index: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        if self.kind.controlled:
            if self.control is None:
                raise ValueError(f"{self.kind.name} needs a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind.name} takes no control qubit")
        if self.kind.parametric and self.param_index is None:
            raise ValueError(f"{self.kind.name} needs a parameter index")
        if not self.kind.parametric and self.param_index is not None:
            raise ValueError(f"{self.kind.name} is parameter-free")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        seen = set()
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} acts outside {self.n_qubits} qubits")
            if g.param_index is not None:
                if not 0 <= g.param_index < self.n_params:
                    raise ValueError(f"parameter index {g.param_index} out of range")
                if g.param_index in seen:
                    raise ValueError(f"parameter {g.param_index} is shared by two gates")
                seen.add(g.param_index)
        if len(seen) != self.n_params:
            raise ValueError(
                f"{self.n_params} parameters declared but {len(seen)} are referenced"
            )

    @cached_property
    def kernel_arrays(self):
        kinds = np.array([int(g.kind) for g in self.gates], dtype=np.int64)
        targets = np.array([g.target for g in self.gates], dtype=np.int64)
        controls = np.array(
            [-1 if g.control is None else g.control for g in self.gates], dtype=np.int64
        )
        pidx = np.array(
            [-1 if g.param_index is None else g.param_index for g in self.gates],
            dtype=np.int64,
        )
        return kinds, targets, controls, pidx

    @property
    def cnot_count(self) -> int:
        return sum(g.kind is GateKind.CNOT for g in self.gates)

    @property
    def has_controlled_rotations(self) -> bool:
        return any(g.kind is GateKind.CRY for g in self.gates)


class EvalCounter:
    """Monotone, thread-safe count of cost-function evaluations."""

    def __init__(self) -> None:
        self._value = 0
        self._lock = threading.Lock()

    def increment(self, k: int = 1) -> None:
        with self._lock:
            self._value += k

    @property
    def value(self) -> int:
        return self._value

    def __repr__(self) -> str:
        return f"EvalCounter({self._value})"


#: Used by :func:`expectation` when no counter is passed.
evaluation_counter = EvalCounter()


def canonicalize(params) -> np.ndarray:
    """Map angles into ``[0, 2*pi)``."""
    out = np.mod(np.asarray(params, dtype=np.float64), TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out[out >= TWO_PI] = 0.0
    return out


def n_qubits_of(state: np.ndarray) -> int:
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if state.ndim != 1 or dim != 1 << n or n < 1:
        raise ValueError(f"state length {state.shape} is not a power of two")
    return n


def zero_state(n_qubits: int) -> np.ndarray:
    return basis_state(n_qubits, 0)


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[index] = 1.0
    return state


def random_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(1 << n_qubits) + 1j * rng.standard_normal(1 << n_qubits)
    return v / np.linalg.norm(v)


def apply_gate(state: np.ndarray, gate: Gate, angle: Optional[float] = None) -> np.ndarray:
    """Return a new state with ``gate`` applied."""
    n = n_qubits_of(state)
    if any(q >= n or q < 0 for q in gate.qubits):
        raise ValueError(f"gate {gate} does not fit a {n}-qubit state")
    if gate.kind.parametric and angle is None:
        raise ValueError(f"{gate.kind.name} needs an angle")
    if not gate.kind.parametric and angle is not None:
        raise ValueError(f"{gate.kind.name} takes no angle")
    out = np.array(state, dtype=np.complex128, copy=True)
    control = -1 if gate.control is None else gate.control
    _kernels.apply_one(out, int(gate.kind), gate.target, control, float(angle or 0.0))
    return out


def run_circuit(
    circuit: Circuit, params: Sequence[float], initial: Optional[np.ndarray] = None
) -> np.ndarray:
    """Apply the gates of ``circuit`` in order to ``initial`` (default ``|0...0>``)."""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {params.shape}")
    if initial is None:
        state = zero_state(circuit.n_qubits)
    else:
        if initial.shape != (1 << circuit.n_qubits,):
            raise ValueError("initial state does not match the circuit width")
        state = np.array(initial, dtype=np.complex128, copy=True)
    _kernels.run(state, *circuit.kernel_arrays, params)
    return state


def expectation(
    state: np.ndarray, hamiltonian: Hamiltonian, counter: Optional[EvalCounter] = None
) -> float:
    """``<state|H|state>``; counts as one cost-function evaluation."""
    if state.shape != (1 << hamiltonian.n_qubits,):
        raise ValueError(
            f"state of length {state.shape[0]} vs {hamiltonian.n_qubits}-qubit Hamiltonian"
        )
    value = _kernels.expectation(state, *hamiltonian.kernel_arrays)
    (counter or evaluation_counter).increment()
    return float(value.real)

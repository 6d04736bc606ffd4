"""Layered hardware-efficient ansatz and OpenQASM 2.0 export."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .simcore import Circuit, Gate, GateKind

Entangler = Literal["cnot_chain", "cry_chain"]


@dataclass(frozen=True)
class AnsatzSpec:
    """``layers`` copies of [RotZ RotY RotZ on every qubit, then a nearest-neighbour
    entangling chain].

    ``final_rotations`` appends one more rotation block after the last
    entangler. Synthesis needs it: without it the trailing entangler is wasted
    and ``p`` layers act like ``p - 1`` for reaching arbitrary unitaries.
    """

    n_qubits: int
    layers: int
    entangler: Entangler = "cnot_chain"
    final_rotations: bool = False

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("an ansatz needs at least one layer")
        if self.n_qubits < 2:
            raise ValueError("an entangled ansatz needs at least two qubits")
        if self.entangler not in ("cnot_chain", "cry_chain"):
            raise ValueError(f"unknown entangler {self.entangler!r}")

    @property
    def params_per_layer(self) -> int:
        extra = self.n_qubits - 1 if self.entangler == "cry_chain" else 0
        return 3 * self.n_qubits + extra

    @property
    def n_params(self) -> int:
        tail = 3 * self.n_qubits if self.final_rotations else 0
        return self.params_per_layer * self.layers + tail

    @property
    def cnot_count(self) -> int:
        return (self.n_qubits - 1) * self.layers if self.entangler == "cnot_chain" else 0


def _rotation_block(n: int, offset: int) -> list[Gate]:
    gates = []
    for q in range(n):
        base = offset + 3 * q
        gates.append(Gate(GateKind.RZ, q, param_index=base))
        gates.append(Gate(GateKind.RY, q, param_index=base + 1))
        gates.append(Gate(GateKind.RZ, q, param_index=base + 2))
    return gates


def build_ansatz(spec: AnsatzSpec) -> Circuit:
    n = spec.n_qubits
    gates: list[Gate] = []
    offset = 0
    for _ in range(spec.layers):
        gates += _rotation_block(n, offset)
        k = offset + 3 * n
        for q in range(n - 1):
            if spec.entangler == "cnot_chain":
                gates.append(Gate(GateKind.CNOT, q + 1, control=q))
            else:
                gates.append(Gate(GateKind.CRY, q + 1, control=q, param_index=k))
                k += 1
        offset += spec.params_per_layer
    if spec.final_rotations:
        gates += _rotation_block(n, offset)
    return Circuit(n, tuple(gates), spec.n_params)


def export_qasm(circuit: Circuit, params) -> str:
    """OpenQASM 2.0 text using only gates from the standard ``qelib1.inc``.

    qelib1 rotations are half-angle, so each angle is doubled: RotZ(t) is
    ``rz(2t)`` (= ``u1(2t)``), RotY(t) is ``ry(2t)``, CRY(t) is ``cu3(2t,0,0)``.
    """
    if params is None:
        raise ValueError("parameters must be bound before export")
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.n_params,) or not np.all(np.isfinite(params)):
        raise ValueError("parameters must be bound before export")
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.n_qubits}];"]
    for g in circuit.gates:
        if g.kind is GateKind.CNOT:
            lines.append(f"cx q[{g.control}],q[{g.target}];")
            continue
        angle = repr(2.0 * float(params[g.param_index]))
        if g.kind is GateKind.RZ:
            lines.append(f"rz({angle}) q[{g.target}];")
        elif g.kind is GateKind.RY:
            lines.append(f"ry({angle}) q[{g.target}];")
        else:
            lines.append(f"cu3({angle},0,0) q[{g.control}],q[{g.target}];")
    return "\n".join(lines) + "\n"

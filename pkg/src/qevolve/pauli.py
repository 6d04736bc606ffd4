"""Pauli strings in symplectic form, phased products, and weighted Hamiltonians.

A string on ``n`` qubits is stored as an X-mask and a Z-mask; bit ``q`` of each
mask refers to qubit ``q``. The symbol on a qubit is I (0,0), X (1,0), Z (0,1)
or Y (1,1), where Y is the Hermitian Pauli matrix, i.e. ``Y = i X Z``.
Text labels list qubit 0 leftmost: ``"XIZ"`` is X on qubit 0 and Z on qubit 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels

_SYMBOLS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_PHASES = (1, 1j, -1, -1j)
DROP_TOL = 1e-14

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a Pauli string needs at least one qubit")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"masks do not fit in {self.n_qubits} qubits")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                bx, bz = _SYMBOLS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli symbol {ch!r} in {label!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, symbol: str) -> PauliString:
        return cls.from_label("".join(symbol if q == qubit else "I" for q in range(n_qubits)))

    @property
    def label(self) -> str:
        out = []
        for q in range(self.n_qubits):
            key = ((self.x >> q) & 1, (self.z >> q) & 1)
            out.append({v: k for k, v in _SYMBOLS.items()}[key])
        return "".join(out)

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return _popcount(self.x | self.z)

    def to_matrix(self) -> np.ndarray:
        # kron puts its first factor on the most significant bit
        out = np.ones((1, 1), dtype=complex)
        for ch in reversed(self.label):
            out = np.kron(out, _MATS[ch])
        return out

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class PhasedPauli:
    """``i**phase_exp`` times a Pauli string."""

    string: PauliString
    phase_exp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exp]

    @property
    def n_qubits(self) -> int:
        return self.string.n_qubits

    def to_matrix(self) -> np.ndarray:
        return self.phase * self.string.to_matrix()

    def __mul__(self, other: PhasedPauli) -> PhasedPauli:
        return multiply(self, other)

    def __str__(self) -> str:
        return f"{('+1', '+i', '-1', '-i')[self.phase_exp]}*{self.string.label}"


def multiply(a: PhasedPauli, b: PhasedPauli) -> PhasedPauli:
    """Exact product ``a @ b``.

    Each factor is rewritten as ``i^k i^ny X^x Z^z``; moving ``Z^z1`` past
    ``X^x2`` costs ``(-1)^|z1 & x2|`` and the result is folded back into
    Hermitian-Y form.
    """
    sa, sb = a.string, b.string
    if sa.n_qubits != sb.n_qubits:
        raise ValueError(f"qubit count mismatch: {sa.n_qubits} vs {sb.n_qubits}")
    x = sa.x ^ sb.x
    z = sa.z ^ sb.z
    k = (
        a.phase_exp
        + b.phase_exp
        + sa.n_y
        + sb.n_y
        + 2 * _popcount(sa.z & sb.x)
        - _popcount(x & z)
    )
    return PhasedPauli(PauliString(sa.n_qubits, x, z), k)


def apply_pauli(string: PauliString, state: np.ndarray) -> np.ndarray:
    """Return ``P|state>`` without forming the matrix."""
    state = np.asarray(state, dtype=np.complex128)
    if state.shape != (1 << string.n_qubits,):
        raise ValueError(
            f"state of length {state.shape} does not match {string.n_qubits} qubits"
        )
    coef = np.array([_PHASES[string.n_y % 4]], dtype=np.complex128)
    out = np.empty_like(state)
    _kernels.apply_sum(
        state,
        np.array([string.x], dtype=np.int64),
        np.array([string.z], dtype=np.int64),
        coef,
        out,
    )
    return out


@dataclass(frozen=True)
class PauliTerm:
    weight: float
    string: PauliString

    def __post_init__(self):
        w = float(self.weight)
        if not math.isfinite(w):
            raise ValueError(f"non-finite weight {self.weight!r}")
        object.__setattr__(self, "weight", w)


class Hamiltonian:
    """Real-weighted sum of Pauli strings.

    Duplicate strings are merged by summing weights and terms whose merged
    weight is below ``1e-14`` in magnitude are dropped. Term order follows
    first appearance.
    """

    def __init__(self, n_qubits: int, terms):
        merged: dict[tuple[int, int], float] = {}
        for term in terms:
            if not isinstance(term, PauliTerm):
                term = PauliTerm(*term)
            if term.string.n_qubits != n_qubits:
                raise ValueError(
                    f"term {term.string.label} has {term.string.n_qubits} qubits, "
                    f"expected {n_qubits}"
                )
            key = (term.string.x, term.string.z)
            merged[key] = merged.get(key, 0.0) + term.weight
        self.n_qubits = n_qubits
        self.terms = tuple(
            PauliTerm(w, PauliString(n_qubits, x, z))
            for (x, z), w in merged.items()
            if abs(w) >= DROP_TOL
        )

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Hamiltonian)
            and self.n_qubits == other.n_qubits
            and self.terms == other.terms
        )

    def __repr__(self) -> str:
        return f"Hamiltonian(n_qubits={self.n_qubits}, n_terms={len(self.terms)})"

    @cached_property
    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xs = np.array([t.string.x for t in self.terms], dtype=np.int64)
        zs = np.array([t.string.z for t in self.terms], dtype=np.int64)
        coefs = np.array(
            [t.weight * _PHASES[t.string.n_y % 4] for t in self.terms],
            dtype=np.complex128,
        )
        return xs, zs, coefs

    def apply(self, state: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Matrix-free ``H|state>``."""
        if out is None:
            out = np.empty_like(state, dtype=np.complex128)
        return _kernels.apply_sum(state, *self.kernel_arrays, out)

    def to_dense(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            out += t.weight * t.string.to_matrix()
        return out

    def to_text(self) -> str:
        return "".join(f"{t.weight!r} {t.string.label}\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str) -> Hamiltonian:
        terms = []
        n = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<weight> <string>', got {raw!r}")
            string = PauliString.from_label(parts[1])
            if n is None:
                n = string.n_qubits
            elif string.n_qubits != n:
                raise ValueError(f"line {lineno}: string length {string.n_qubits} != {n}")
            terms.append(PauliTerm(float(parts[0]), string))
        if n is None:
            raise ValueError("no terms found")
        return cls(n, terms)

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path) -> Hamiltonian:
        return cls.from_text(Path(path).read_text())

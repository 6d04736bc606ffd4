"""Benchmark Hamiltonians: Heisenberg XXX on regular graphs and SYK via Jordan-Wigner."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import stream
from .pauli import Hamiltonian, PauliString, PauliTerm, PhasedPauli, multiply

PAIRING_RETRIES = 10_000


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class RegularGraph:
    n_vertices: int
    degree: int
    edges: frozenset  # of (u, v) tuples with u < v

    def __post_init__(self):
        edges = frozenset(tuple(sorted(e)) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        deg = [0] * self.n_vertices
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphError(f"edge ({u}, {v}) outside {self.n_vertices} vertices")
            deg[u] += 1
            deg[v] += 1
        if any(d != self.degree for d in deg):
            raise GraphError(f"graph is not {self.degree}-regular: degrees {deg}")

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_text(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.sorted_edges())

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str, n_vertices: int | None = None) -> RegularGraph:
        edges = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                u, v = (int(x) for x in line.split())
                edges.append((u, v))
        if not edges:
            raise GraphError("empty edge list")
        if n_vertices is None:
            n_vertices = 1 + max(max(e) for e in edges)
        if len(set(tuple(sorted(e)) for e in edges)) != len(edges):
            raise GraphError("duplicate edge in edge list")
        degree = 2 * len(edges) // n_vertices
        return cls(n_vertices, degree, frozenset(edges))

    @classmethod
    def read(cls, path, n_vertices: int | None = None) -> RegularGraph:
        return cls.from_text(Path(path).read_text(), n_vertices)


def random_regular_graph(n: int, degree: int, seed: int) -> RegularGraph:
    """Uniform simple ``degree``-regular graph via the pairing (configuration) model.

    Each attempt pairs up ``n * degree`` half-edges at random and is rejected
    outright if it contains a loop or a repeated edge, which keeps the
    accepted graphs uniformly distributed.
    """
    if degree < 0 or n < 1:
        raise GraphError("need n >= 1 and degree >= 0")
    if (n * degree) % 2:
        raise GraphError(f"no {degree}-regular graph on {n} vertices (n*degree is odd)")
    if degree >= n:
        raise GraphError(f"degree {degree} must be smaller than n = {n}")
    rng = stream(seed)
    points = np.repeat(np.arange(n), degree)
    for _ in range(PAIRING_RETRIES):
        pairs = rng.permutation(points).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        edges = {tuple(sorted((int(a), int(b)))) for a, b in pairs}
        if len(edges) == len(pairs):
            return RegularGraph(n, degree, frozenset(edges))
    raise GraphError(f"pairing model exceeded {PAIRING_RETRIES} attempts")


def ring_graph(n: int) -> RegularGraph:
    if n < 3:
        raise GraphError("a ring needs at least 3 vertices")
    return RegularGraph(n, 2, frozenset((q, (q + 1) % n) for q in range(n)))


@dataclass(frozen=True)
class HeisenbergSpec:
    n_qubits: int
    graph: RegularGraph
    J: float = 1.0
    h_z: float = 1.0

    def __post_init__(self):
        if self.graph.n_vertices != self.n_qubits:
            raise ValueError("graph size does not match the qubit count")


def build_heisenberg(spec: HeisenbergSpec) -> Hamiltonian:
    """``J * sum_edges (XX + YY + ZZ) + h_z * sum_q Z``."""
    n = spec.n_qubits
    terms = []
    for u, v in spec.graph.sorted_edges():
        for p in "XYZ":
            label = ["I"] * n
            label[u] = label[v] = p
            terms.append(PauliTerm(spec.J, PauliString.from_label("".join(label))))
    for q in range(n):
        terms.append(PauliTerm(spec.h_z, PauliString.single(n, q, "Z")))
    return Hamiltonian(n, terms)


def majorana(index: int, n_qubits: int) -> PhasedPauli:
    """Jordan-Wigner image of Majorana mode ``index`` (0-based, ``< 2 * n_qubits``).

    Mode ``2q`` is ``X_0 ... X_{q-1} Z_q`` and mode ``2q + 1`` is
    ``X_0 ... X_{q-1} Y_q``; in 1-based notation these are chi_{2i-1} and
    chi_{2i} with i = q + 1. Every mode squares to the identity, so
    ``{chi_a, chi_b} = 2 delta_ab``.
    """
    if not 0 <= index < 2 * n_qubits:
        raise IndexError(f"Majorana index {index} outside [0, {2 * n_qubits})")
    q = index // 2
    label = "X" * q + ("Z" if index % 2 == 0 else "Y") + "I" * (n_qubits - q - 1)
    return PhasedPauli(PauliString.from_label(label))


@dataclass(frozen=True)
class SykSpec:
    n_qubits: int
    J: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_qubits < 4:
            raise ValueError("SYK needs at least 4 qubits")

    @property
    def coupling_variance(self) -> float:
        n = self.n_qubits
        return math.factorial(3) * self.J**2 / ((n - 3) * (n - 2) * (n - 1))


def syk_couplings(spec: SykSpec, size: int | None = None) -> np.ndarray:
    """Gaussian couplings, one per Majorana quadruple in lexicographic order.

    Drawn with numpy's ziggurat normal sampler over a Philox stream keyed by
    ``spec.seed``.
    """
    if size is None:
        size = math.comb(2 * spec.n_qubits, 4)
    return stream(spec.seed).standard_normal(size) * math.sqrt(spec.coupling_variance)


def build_syk(spec: SykSpec) -> Hamiltonian:
    n = spec.n_qubits
    modes = [majorana(m, n) for m in range(2 * n)]
    quads = list(itertools.combinations(range(2 * n), 4))
    couplings = syk_couplings(spec, len(quads))
    terms = []
    for (i, j, k, l), c in zip(quads, couplings):
        prod = multiply(multiply(modes[i], modes[j]), multiply(modes[k], modes[l]))
        if prod.phase_exp % 2:
            raise ArithmeticError(
                f"chi_{i} chi_{j} chi_{k} chi_{l} reduced to a non-Hermitian {prod}"
            )
        terms.append(PauliTerm(float(c) * prod.phase.real, prod.string))
    return Hamiltonian(n, terms)

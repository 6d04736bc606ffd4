import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import all_subsets, partial_trace, random_state, random_terms, renyi2_dense
from qevolve.diagnostics import (
    ConvergenceError,
    default_degeneracy_tol,
    degeneracy_pattern,
    ground_space,
    ground_space_dense,
    normalized_renyi2,
    overlap,
    page_entropy,
    reduced_density,
    renyi2,
)
from qevolve.models import HeisenbergSpec, SykSpec, build_heisenberg, build_syk, ring_graph
from qevolve.pauli import Hamiltonian, PauliString
from qevolve.simcore import basis_state, zero_state

LN2 = math.log(2)


def bell():
    s = np.zeros(4, complex)
    s[0] = s[3] = 1 / math.sqrt(2)
    return s


def ghz(n):
    s = np.zeros(1 << n, complex)
    s[0] = s[-1] = 1 / math.sqrt(2)
    return s


def ham(n, terms):
    return Hamiltonian(n, [(w, PauliString.from_label(lab)) for w, lab in terms])


class TestReducedDensity:
    def test_basis_state(self):
        # |01>: qubit 0 in |0>, qubit 1 in |1>, basis index 2
        rho = reduced_density(basis_state(2, 2), [0]).matrix
        np.testing.assert_allclose(rho, np.diag([1, 0]))
        rho = reduced_density(basis_state(2, 2), [1]).matrix
        np.testing.assert_allclose(rho, np.diag([0, 1]))

    def test_bell_is_maximally_mixed(self):
        np.testing.assert_allclose(reduced_density(bell(), [1]).matrix, np.eye(2) / 2, atol=1e-15)

    def test_subset_order_defines_index(self):
        s = basis_state(3, 0b010)  # qubit 1 set
        rho = reduced_density(s, [1, 0]).matrix
        assert rho[1, 1] == pytest.approx(1.0)
        rho = reduced_density(s, [0, 1]).matrix
        assert rho[2, 2] == pytest.approx(1.0)

    @pytest.mark.parametrize("subset", [[], [0, 0], [3], [-1]])
    def test_invalid_subset(self, subset):
        with pytest.raises(ValueError):
            reduced_density(zero_state(3), subset)

    def test_subset_guard(self):
        with pytest.raises(ValueError):
            reduced_density(zero_state(10), list(range(9)))

    @given(st.integers(0, 2**32 - 1))
    def test_matches_partial_trace_oracle(self, seed):
        rng = np.random.default_rng(seed)
        s = random_state(4, rng)
        for subset in all_subsets(4):
            rho = reduced_density(s, subset).matrix
            np.testing.assert_allclose(rho, partial_trace(s, subset), atol=1e-12)
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
            assert np.linalg.eigvalsh(rho).min() > -1e-12


class TestRenyi2:
    def test_product(self):
        assert renyi2(zero_state(4), [0, 1]) == 0.0

    def test_bell(self):
        assert renyi2(bell(), [0]) == pytest.approx(LN2, abs=1e-14)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_ghz_any_subset(self, n):
        for subset in all_subsets(n):
            if len(subset) < n:
                assert renyi2(ghz(n), subset) == pytest.approx(LN2, abs=1e-13)

    @given(st.integers(0, 2**32 - 1))
    def test_bounds_and_complement(self, seed):
        s = random_state(5, np.random.default_rng(seed))
        for subset in all_subsets(5):
            if len(subset) > 2:
                continue
            v = renyi2(s, subset)
            assert 0 <= v <= len(subset) * LN2 + 1e-12
            rest = [q for q in range(5) if q not in subset]
            assert v == pytest.approx(renyi2(s, rest), abs=1e-10)
            assert v == pytest.approx(renyi2_dense(s, subset), abs=1e-10)

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(3)
        s = random_state(3, rng)
        q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        u = np.kron(np.eye(4), q)  # acts on qubit 0
        assert renyi2(u @ s, [0, 1]) == pytest.approx(renyi2(s, [0, 1]), abs=1e-12)


class TestPageEntropy:
    def test_one_of_two(self):
        assert page_entropy(1, 2) == LN2 - 0.5

    def test_two_of_ten(self):
        assert page_entropy(2, 10) == pytest.approx(2 * LN2 - 2**-7, abs=1e-15)

    @pytest.mark.parametrize("k,n", [(0, 4), (3, 4), (2, 3)])
    def test_domain(self, k, n):
        with pytest.raises(ValueError):
            page_entropy(k, n)

    def test_normalized(self):
        s = ghz(4)
        assert normalized_renyi2(s) == pytest.approx(LN2 / page_entropy(2, 4))


class TestGroundSpace:
    def test_single_z(self):
        gs = ground_space(ham(1, [(1.0, "Z")]))
        assert gs.energy == pytest.approx(-1.0, abs=1e-10)
        assert gs.degeneracy == 1
        assert abs(gs.basis[0, 1]) == pytest.approx(1.0, abs=1e-8)

    def test_heisenberg_edge(self):
        gs = ground_space(ham(2, [(1.0, "XX"), (1.0, "YY"), (1.0, "ZZ")]))
        assert gs.energy == pytest.approx(-3.0, abs=1e-10)
        assert gs.degeneracy == 1
        assert gs.next_energy == pytest.approx(1.0, abs=1e-8)

    def test_random_six_qubit_matches_dense(self):
        rng = np.random.default_rng(6)
        h = ham(6, random_terms(6, 20, rng))
        w = np.linalg.eigvalsh(h.to_dense())
        gs = ground_space(h)
        assert gs.energy == pytest.approx(w[0], abs=1e-9)
        assert max(gs.residuals) < 1e-8

    def test_degenerate_space_recovered(self):
        # ZZ on a ring has a two-fold ground space
        h = ham(4, [(1.0, "ZZII"), (1.0, "IZZI"), (1.0, "IIZZ"), (1.0, "ZIIZ")])
        gs = ground_space(h)
        assert gs.degeneracy == 2
        np.testing.assert_allclose(gs.basis.conj() @ gs.basis.T, np.eye(2), atol=1e-10)

    def test_heisenberg_ring_matches_dense(self):
        h = build_heisenberg(HeisenbergSpec(8, ring_graph(8), 1.0, 0.3))
        dense = ground_space_dense(h)
        gs = ground_space(h)
        assert gs.energy == pytest.approx(dense.energy, abs=1e-9)
        assert gs.degeneracy == dense.degeneracy

    def test_syk_five_ground_pair(self):
        h = build_syk(SykSpec(5, seed=1))
        gs = ground_space(h)
        assert gs.degeneracy == 2
        assert gs.energy == pytest.approx(ground_space_dense(h).energy, abs=1e-9)

    def test_too_many_qubits(self):
        with pytest.raises(ValueError):
            ground_space(ham(21, [(1.0, "Z" * 21)]))

    def test_iteration_cap(self):
        rng = np.random.default_rng(0)
        h = ham(8, random_terms(8, 30, rng))
        with pytest.raises(ConvergenceError) as info:
            ground_space(h, max_iter=5, krylov_max=5)
        assert info.value.residual > 0

    def test_default_tolerance(self):
        assert default_degeneracy_tol(-0.5) == 1e-6
        assert default_degeneracy_tol(-20.0) == pytest.approx(2e-5)


class TestOverlap:
    def test_ground_state_has_unit_overlap(self):
        h = build_heisenberg(HeisenbergSpec(4, ring_graph(4), 1.0, 0.0))
        gs = ground_space(h)
        assert overlap(gs.basis[0], gs) == pytest.approx(1.0, abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_bounded(self, seed):
        h = build_heisenberg(HeisenbergSpec(4, ring_graph(4), 1.0, 0.0))
        gs = ground_space_dense(h)
        m = overlap(random_state(4, np.random.default_rng(seed)), gs)
        assert 0.0 <= m <= 1.0 + 1e-12

    def test_orthogonal_excited_state(self):
        gs = ground_space(ham(1, [(1.0, "Z")]))
        assert overlap(basis_state(1, 0), gs) == pytest.approx(0.0, abs=1e-12)

    def test_dimension_mismatch(self):
        gs = ground_space(ham(1, [(1.0, "Z")]))
        with pytest.raises(ValueError):
            overlap(zero_state(2), gs)


class TestDegeneracyPattern:
    def test_clusters(self):
        assert degeneracy_pattern([0.0, 1e-10, 1.0, 2.0, 2.0, 2.0]) == [2, 1, 3]

    def test_unsorted_input(self):
        assert degeneracy_pattern([1.0, 0.0, 1.0]) == [1, 2]

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import X, circuit_matrix, gate_tuples
from qevolve.ansatz import AnsatzSpec, build_ansatz
from qevolve.evolve import EvolutionConfig
from qevolve.landscape import fit5, scan
from qevolve.simcore import TWO_PI, Circuit, Gate, GateKind, basis_state, run_circuit
from qevolve.synth import (
    NotUnitaryError,
    SynthesisCost,
    TargetUnitary,
    align_global_phase,
    circuit_unitary,
    frobenius_cost,
    haar_unitary,
    load_target,
    polish,
    qft_matrix,
    synthesize,
    write_target,
)

seeds = st.integers(0, 2**32 - 1)


class TestCircuitUnitary:
    def test_empty_is_identity(self):
        np.testing.assert_array_equal(circuit_unitary(Circuit(2, (), 0), np.zeros(0)), np.eye(4))

    def test_single_cnot(self):
        u = circuit_unitary(Circuit(2, (Gate(GateKind.CNOT, 1, control=0),), 0), np.zeros(0))
        perm = np.eye(4)[:, [0, 3, 2, 1]]
        np.testing.assert_array_equal(u, perm)

    @given(seeds)
    def test_columns_and_unitarity(self, seed):
        c = build_ansatz(AnsatzSpec(3, 2, "cry_chain", final_rotations=True))
        x = np.random.default_rng(seed).uniform(0, TWO_PI, c.n_params)
        u = circuit_unitary(c, x)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-10)
        for j in (0, 5):
            np.testing.assert_allclose(u[:, j], run_circuit(c, x, basis_state(3, j)), atol=1e-12)
        np.testing.assert_allclose(u, circuit_matrix(3, gate_tuples(c), x), atol=1e-10)

    def test_size_guard(self):
        c = build_ansatz(AnsatzSpec(9, 1))
        with pytest.raises(ValueError):
            circuit_unitary(c, np.zeros(c.n_params))


class TestFrobeniusCost:
    def test_self(self):
        u = haar_unitary(2, np.random.default_rng(0))
        assert frobenius_cost(u, u) == pytest.approx(0.0, abs=1e-12)

    def test_identity_vs_x(self):
        assert frobenius_cost(np.eye(2), X) == 2.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            frobenius_cost(np.eye(2), np.eye(4))

    @given(seeds, st.integers(1, 3))
    def test_norm_identity(self, seed, n):
        rng = np.random.default_rng(seed)
        u, v = haar_unitary(n, rng), haar_unitary(n, rng)
        f = frobenius_cost(u, v)
        assert f == pytest.approx(0.5 * np.linalg.norm(v - u) ** 2, abs=1e-10)
        assert f >= -1e-12

    def test_global_phase_sensitive(self):
        u = haar_unitary(1, np.random.default_rng(1))
        assert frobenius_cost(u, -u) == pytest.approx(4.0)


class TestSynthesisCost:
    def test_order_five_cross_sections(self):
        c = build_ansatz(AnsatzSpec(2, 2, final_rotations=True))
        f = SynthesisCost(haar_unitary(2, np.random.default_rng(2)), c)
        x = np.random.default_rng(3).uniform(0, TWO_PI, c.n_params)
        assert f.order == 5
        for i in range(c.n_params):
            m = fit5(f, x, i)
            thetas, values = scan(f, x, i)
            assert np.max(np.abs(m(thetas) - values)) < 1e-9

    def test_matches_frobenius_cost(self):
        c = build_ansatz(AnsatzSpec(2, 1))
        u = haar_unitary(2, np.random.default_rng(4))
        f = SynthesisCost(u, c)
        x = np.random.default_rng(5).uniform(0, TWO_PI, c.n_params)
        assert f(x) == pytest.approx(frobenius_cost(u, circuit_unitary(c, x)), abs=1e-12)
        assert f.counter.value == 1

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            SynthesisCost(np.eye(8), build_ansatz(AnsatzSpec(2, 1)))


class TestPolish:
    def test_monotone(self):
        c = build_ansatz(AnsatzSpec(2, 3, final_rotations=True))
        f = SynthesisCost(haar_unitary(2, np.random.default_rng(6)), c)
        x = np.random.default_rng(7).uniform(0, TWO_PI, c.n_params)
        cost = f(x)
        history = []
        for _ in range(20):
            res = polish(f, x, cost, max_sweeps=1)
            history.append(res.cost)
            assert res.cost <= cost
            assert f(res.params) == pytest.approx(res.cost, abs=1e-12)
            x, cost = res.params, res.cost
        assert history[-1] < history[0]

    def test_already_below_tolerance(self):
        c = build_ansatz(AnsatzSpec(2, 1))
        f = SynthesisCost(np.eye(4), c)
        res = polish(f, np.zeros(c.n_params), 0.0)
        assert res.evaluations == 0 and res.sweeps == 0


class TestSynthesize:
    def test_identity_target_at_zero(self):
        spec = AnsatzSpec(2, 2)
        rep = synthesize(np.eye(4), spec, EvolutionConfig(n_agents=4, max_evaluations=10_000),
                         init="zeros")
        assert rep.final_cost < 1e-12
        assert rep.episodes == 0 and rep.converged
        assert rep.cnot_count == 2

    def test_two_qubit_target(self):
        u = haar_unitary(2, np.random.default_rng(11))
        cfg = EvolutionConfig(n_agents=16, episode_length=20, max_evaluations=1_000_000)
        rep = synthesize(u, AnsatzSpec(2, 3, final_rotations=True), cfg)
        assert rep.final_cost < 1e-8 and rep.converged
        assert rep.evaluations == rep.evolution_evaluations + rep.polish_evaluations
        v = circuit_unitary(rep.circuit, rep.params)
        assert frobenius_cost(u, v) == pytest.approx(rep.final_cost, abs=1e-12)

    def test_budget_exhaustion_is_reported(self):
        u = haar_unitary(2, np.random.default_rng(12))
        rep = synthesize(u, AnsatzSpec(2, 1), EvolutionConfig(max_evaluations=200))
        assert not rep.converged and rep.final_cost > 1e-3
        assert rep.polish_evaluations == 0

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            synthesize(np.eye(8), AnsatzSpec(2, 1), EvolutionConfig())

    @pytest.mark.slow
    def test_three_qubit_fourier_transform(self):
        cfg = EvolutionConfig(n_agents=16, episode_length=20, max_evaluations=3_000_000)
        spec = AnsatzSpec(3, 10, final_rotations=True)
        assert spec.cnot_count <= 20
        rep = synthesize(qft_matrix(3), spec, cfg)
        assert rep.final_cost < 1e-8


class TestTargets:
    def test_qft_definition(self):
        q = qft_matrix(2)
        np.testing.assert_allclose(q[1], [0.5, 0.5j, -0.5, -0.5j], atol=1e-15)
        TargetUnitary(qft_matrix(3))

    def test_haar_is_unitary(self):
        u = haar_unitary(3, np.random.default_rng(0))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-12)

    def test_non_unitary(self):
        m = np.eye(2) + 0.1 * np.array([[0, 1], [0, 0]])
        with pytest.raises(NotUnitaryError):
            TargetUnitary(m)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            TargetUnitary(np.eye(3))

    def test_align_phase(self):
        u = haar_unitary(2, np.random.default_rng(8))
        a = align_global_phase(np.exp(1.3j) * u)
        b = align_global_phase(u)
        np.testing.assert_allclose(a, b, atol=1e-12)
        j = np.argmax(np.abs(np.diag(a)))
        assert a[j, j].imag == pytest.approx(0.0, abs=1e-12) and a[j, j].real > 0


class TestMatrixFile:
    def test_identity_file(self, tmp_path):
        p = tmp_path / "i.txt"
        p.write_text("1\n1,0 0,0\n0,0 1,0\n")
        np.testing.assert_array_equal(load_target(p).matrix, np.eye(2))

    def test_round_trip_bitwise(self, tmp_path):
        u = haar_unitary(3, np.random.default_rng(9))
        p = tmp_path / "u.txt"
        write_target(p, u)
        np.testing.assert_array_equal(load_target(p).matrix, u)

    def test_non_unitary_file(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("1\n1,0 0.1,0\n0,0 1,0\n")
        with pytest.raises(NotUnitaryError):
            load_target(p)

    @pytest.mark.parametrize("text", ["", "x\n", "1\n1,0 0,0\n", "1\n1,0\n0,0 1,0\n", "1\n1 0\n0 1\n"])
    def test_malformed(self, tmp_path, text):
        p = tmp_path / "m.txt"
        p.write_text(text)
        with pytest.raises(ValueError):
            load_target(p)


def test_polish_reaches_machine_precision_near_solution():
    # start a small kick away from an exact solution
    c = build_ansatz(AnsatzSpec(2, 2, final_rotations=True))
    x_true = np.random.default_rng(10).uniform(0, TWO_PI, c.n_params)
    f = SynthesisCost(circuit_unitary(c, x_true), c)
    x = x_true + 1e-3 * np.random.default_rng(11).standard_normal(c.n_params)
    res = polish(f, x, f(x))
    assert res.cost < 1e-8
    assert math.isfinite(res.cost)

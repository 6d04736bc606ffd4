import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import circuit_matrix, gate_tuples, parse_qasm, qasm_unitary
from qevolve.ansatz import AnsatzSpec, build_ansatz, export_qasm
from qevolve.simcore import TWO_PI, Circuit, Gate, GateKind, run_circuit, zero_state
from qevolve.synth import circuit_unitary

specs = st.builds(
    AnsatzSpec,
    n_qubits=st.integers(2, 5),
    layers=st.integers(1, 4),
    entangler=st.sampled_from(["cnot_chain", "cry_chain"]),
    final_rotations=st.booleans(),
)


class TestAnsatzSpec:
    def test_needs_a_layer(self):
        with pytest.raises(ValueError):
            AnsatzSpec(3, 0)

    def test_needs_two_qubits(self):
        with pytest.raises(ValueError):
            AnsatzSpec(1, 2)

    def test_unknown_entangler(self):
        with pytest.raises(ValueError):
            AnsatzSpec(3, 1, "ladder")

    def test_ten_qubit_counts(self):
        assert AnsatzSpec(10, 50).n_params == 1500
        assert AnsatzSpec(10, 100).n_params == 3000


class TestBuildAnsatz:
    def test_five_qubit_layer(self):
        c = build_ansatz(AnsatzSpec(5, 1))
        kinds = [g.kind for g in c.gates]
        assert sum(k.parametric for k in kinds) == 15
        assert kinds.count(GateKind.CNOT) == 4
        assert c.n_params == 15

    def test_layer_order(self):
        c = build_ansatz(AnsatzSpec(2, 1))
        got = [(g.kind.name, g.target, g.control, g.param_index) for g in c.gates]
        assert got == [
            ("RZ", 0, None, 0), ("RY", 0, None, 1), ("RZ", 0, None, 2),
            ("RZ", 1, None, 3), ("RY", 1, None, 4), ("RZ", 1, None, 5),
            ("CNOT", 1, 0, None),
        ]

    def test_cry_chain_parameters(self):
        c = build_ansatz(AnsatzSpec(3, 2, "cry_chain"))
        cry = [g for g in c.gates if g.kind is GateKind.CRY]
        assert [(g.control, g.target, g.param_index) for g in cry] == [
            (0, 1, 9), (1, 2, 10), (0, 1, 20), (1, 2, 21)
        ]

    @given(specs)
    def test_parameter_count_formula(self, spec):
        c = build_ansatz(spec)
        n, p = spec.n_qubits, spec.layers
        expected = 3 * n * p + (n - 1) * p * (spec.entangler == "cry_chain")
        expected += 3 * n * spec.final_rotations
        assert c.n_params == spec.n_params == expected
        assert c.cnot_count == spec.cnot_count

    @given(specs)
    def test_layers_are_shifted_copies(self, spec):
        gates = build_ansatz(spec).gates
        per = 4 * spec.n_qubits - 1  # 3n rotations plus n-1 entanglers
        shift = spec.params_per_layer
        for k in range(1, spec.layers):
            for a, b in zip(gates[:per], gates[k * per:(k + 1) * per]):
                assert (a.kind, a.target, a.control) == (b.kind, b.target, b.control)
                if a.param_index is not None:
                    assert b.param_index == a.param_index + k * shift

    @given(specs)
    def test_zero_parameters_leave_zero_state(self, spec):
        c = build_ansatz(spec)
        out = run_circuit(c, np.zeros(c.n_params))
        np.testing.assert_allclose(out, zero_state(spec.n_qubits), atol=1e-14)


class TestExportQasm:
    def test_empty_circuit(self):
        text = export_qasm(Circuit(3, (), 0), np.zeros(0))
        assert text == 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[3];\n'

    def test_single_cnot(self):
        text = export_qasm(Circuit(2, (Gate(GateKind.CNOT, 1, control=0),), 0), np.zeros(0))
        assert text.splitlines()[3:] == ["cx q[0],q[1];"]

    def test_unbound(self):
        c = build_ansatz(AnsatzSpec(2, 1))
        with pytest.raises(ValueError):
            export_qasm(c, None)
        x = np.zeros(c.n_params)
        x[3] = np.nan
        with pytest.raises(ValueError):
            export_qasm(c, x)
        with pytest.raises(ValueError):
            export_qasm(c, np.zeros(c.n_params - 1))

    @given(specs, st.integers(0, 2**32 - 1))
    def test_round_trip_gate_list(self, spec, seed):
        c = build_ansatz(spec)
        x = np.random.default_rng(seed).uniform(0, TWO_PI, c.n_params)
        n, ops = parse_qasm(export_qasm(c, x))
        assert n == spec.n_qubits
        names = {"RZ": "rz", "RY": "ry", "CNOT": "cx", "CRY": "cu3"}
        assert [op[0] for op in ops] == [names[g.kind.name] for g in c.gates]
        for (name, args, qs), g in zip(ops, c.gates):
            assert qs == list(g.qubits)
            if g.param_index is not None:
                assert args[0] == pytest.approx(2 * x[g.param_index], abs=1e-15)

    @pytest.mark.parametrize("entangler", ["cnot_chain", "cry_chain"])
    def test_random_three_qubit_round_trip_matrix(self, entangler):
        c = build_ansatz(AnsatzSpec(3, 3, entangler, final_rotations=True))
        x = np.random.default_rng(4).uniform(0, TWO_PI, c.n_params)
        u = qasm_unitary(export_qasm(c, x))
        np.testing.assert_allclose(u, circuit_unitary(c, x), atol=1e-9)
        np.testing.assert_allclose(u, circuit_matrix(3, gate_tuples(c), x), atol=1e-9)

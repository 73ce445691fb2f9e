import numpy as np
import pytest

from noisygrover.circuit import (
    CNOT,
    Circuit,
    CircuitError,
    Gate,
    H,
    TOFFOLI,
    X,
    build_grover_gate,
    build_grover_network,
    decompose_cnx,
    noiseless_first_maximum,
    noiseless_success,
    num_ancillas,
    reference_resource_formulas,
    resource_counts,
    schedule_layers,
)
from oracles import gate_unitary, grover_success_closed_form, ideal_grover_operator


def circuit_unitary(c: Circuit) -> np.ndarray:
    m = c.num_qubits
    U = np.eye(1 << m, dtype=complex)
    for g in c.gates:
        U = gate_unitary(g.kind, g.qubits, m) @ U
    return U


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_grover_gate_is_minus_textbook_operator_on_data(n):
    c = build_grover_gate(n)
    U = circuit_unitary(c)
    N = 2 ** n
    # ancillas start and end in |0>: restrict to that block
    block = U[:N, :N]
    np.testing.assert_allclose(block, -ideal_grover_operator(n), atol=1e-12)
    assert np.allclose(np.abs(U[N:, :N]), 0)


@pytest.mark.parametrize("k", [3, 4, 5])
def test_cnx_decomposition_flips_target_only_when_all_controls_set(k):
    controls = list(range(k))
    target, anc = k, list(range(k + 1, 2 * k - 1))
    m = 2 * k - 1
    gates = decompose_cnx(controls, target, anc)
    assert sum(g.kind == "TOFFOLI" for g in gates) == 2 * k - 3
    for basis in range(1 << (k + 1)):
        state = basis
        for g in gates:
            q = g.qubits
            if all(state >> c & 1 for c in q[:-1]):
                state ^= 1 << q[-1]
        expect = basis ^ (1 << target) if all(basis >> c & 1 for c in controls) else basis
        assert state == expect
    assert m == k + 1 + len(anc)


def test_gate_validation():
    with pytest.raises(CircuitError):
        Gate("CNOT", (1, 1))
    with pytest.raises(CircuitError):
        Gate("FOO", (0,))
    with pytest.raises(CircuitError):
        Gate("H", (0, 1))
    with pytest.raises(CircuitError):
        Circuit(2, 0, ((H(0), CNOT(0, 1)),))
    with pytest.raises(CircuitError):
        Circuit(2, 0, ((H(2),),))
    with pytest.raises(CircuitError):
        build_grover_gate(1)


def test_schedule_layers_is_asap_and_order_preserving():
    c = schedule_layers([H(0), H(1), CNOT(0, 1), X(2), TOFFOLI(0, 1, 2)])
    assert [len(layer) for layer in c.layers] == [3, 1, 1]
    assert c.layers[1][0] == CNOT(0, 1)


@pytest.mark.parametrize("n", range(2, 8))
def test_resource_counts(n):
    actual, formula = resource_counts(build_grover_network(n), n)
    assert actual.hadamard == formula.hadamard == 3 * n
    assert actual.x == formula.x == 2 * (2 * n - 1)
    assert actual.z == formula.z == 2
    assert actual.ancillas == num_ancillas(n)
    expected_toffoli = {2: 0, 3: 2}.get(n, 2 * (2 * n - 5))
    assert actual.toffoli == expected_toffoli
    if n <= 3:
        assert abs(actual.time_steps - formula.time_steps) <= 1
    else:
        # the uncompute half of the Toffoli chain adds depth beyond the formula
        assert actual.time_steps == 4 * n - 3


def test_depth_table():
    depths = {n: build_grover_network(n).depth for n in range(2, 8)}
    assert depths == {2: 11, 3: 11, 4: 13, 5: 17, 6: 21, 7: 25}
    assert reference_resource_formulas(4).time_steps == 14


def test_noiseless_closed_form_helpers():
    for n in range(2, 8):
        for k in range(10):
            assert abs(noiseless_success(n, k) - grover_success_closed_form(n, k)) < 1e-14
    assert [noiseless_first_maximum(n) for n in range(2, 8)] == [1, 2, 3, 4, 6, 8]


def test_text_and_dump():
    c = build_grover_gate(3)
    assert c.to_text().count("\n") == c.num_qubits - 1
    lines = c.dump().splitlines()
    assert len(lines) == len(c.gates)
    assert lines[0].split()[1] == "X"

"""Independent reference implementations used by the tests.

Nothing here imports the simulation kernels: gates are full matrices built
with ``np.kron`` and applied by matrix-vector products.
"""
from __future__ import annotations

import math
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
PZ = np.array([[1, 0], [0, -1]], dtype=complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
P1 = np.diag([0, 1]).astype(complex)
LETTER = {"I": I2, "X": PX, "Y": PY, "Z": PZ}


def op_on(ops: dict, m: int) -> np.ndarray:
    """Full 2^m matrix with ``ops[q]`` on qubit q; qubit 0 is the last kron factor."""
    return reduce(np.kron, [ops.get(q, I2) for q in range(m - 1, -1, -1)])


def controlled(controls, target, u, m) -> np.ndarray:
    on = {c: P1 for c in controls}
    return np.eye(1 << m, dtype=complex) - op_on(on, m) + op_on({**on, target: u}, m)


def gate_unitary(kind: str, qubits, m: int) -> np.ndarray:
    if kind == "H":
        return op_on({qubits[0]: HAD}, m)
    if kind in ("X", "Y", "Z"):
        return op_on({qubits[0]: LETTER[kind]}, m)
    if kind == "MEASURE":
        return np.eye(1 << m, dtype=complex)
    if kind == "CNOT":
        return controlled(qubits[:1], qubits[1], PX, m)
    if kind == "CZ":
        return controlled(qubits[:1], qubits[1], PZ, m)
    if kind == "TOFFOLI":
        return controlled(qubits[:2], qubits[2], PX, m)
    raise ValueError(kind)


def pauli_matrix(letters: dict, m: int) -> np.ndarray:
    return op_on({q: LETTER[c] for q, c in letters.items()}, m)


def grover_success_closed_form(n: int, k: int) -> float:
    theta = 2 * math.asin(2 ** (-n / 2))
    return math.sin((2 * k + 1) * theta / 2) ** 2


def ideal_grover_operator(n: int) -> np.ndarray:
    """Textbook ``(2|psi><psi| - I)(I - 2|0><0|)`` on n qubits."""
    N = 2 ** n
    psi = np.full(N, 1 / math.sqrt(N))
    oracle = np.eye(N)
    oracle[0, 0] = -1
    return (2 * np.outer(psi, psi) - np.eye(N)) @ oracle


def logical_zero_from_generators(rows) -> np.ndarray:
    """Uniform superposition over the span of ``rows`` (7-bit ints)."""
    words = {0}
    for r in rows:
        words |= {w ^ r for w in words}
    v = np.zeros(128, dtype=complex)
    v[list(words)] = 1 / math.sqrt(len(words))
    return v

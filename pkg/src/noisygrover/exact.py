"""Exact noisy evolution by density matrices (small registers only).

Each error location is applied as its Pauli channel, which is the average
over every error branch with its probability. The gate unitaries are built
from Kronecker products, independently of the state-vector kernels, so the
result serves as a reference for the Monte Carlo estimator.
"""
from __future__ import annotations

import itertools
from functools import reduce

import numpy as np

from .circuit import Circuit, Gate, build_grover_gate, build_uniform_superposition, num_ancillas
from .noise import NoiseParams

_I = np.eye(2, dtype=complex)
_PAULI = {
    "I": _I,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_P0 = np.diag([1, 0]).astype(complex)
_P1 = np.diag([0, 1]).astype(complex)


def embed(ops: dict, m: int) -> np.ndarray:
    """Kronecker product with ``ops[q]`` on qubit q (qubit 0 least significant)."""
    return reduce(np.kron, [ops.get(q, _I) for q in reversed(range(m))])


def gate_matrix(g: Gate, m: int) -> np.ndarray:
    q = g.qubits
    if g.kind == "MEASURE":
        return np.eye(1 << m, dtype=complex)
    if g.kind == "H":
        return embed({q[0]: _H}, m)
    if g.kind in "XYZ":
        return embed({q[0]: _PAULI[g.kind]}, m)
    if g.kind in ("CNOT", "CZ", "TOFFOLI"):
        controls, target = q[:-1], q[-1]
        flip = _PAULI["Z"] if g.kind == "CZ" else _PAULI["X"]
        on = {c: _P1 for c in controls}
        u = np.eye(1 << m, dtype=complex) - embed(on, m) + embed({**on, target: flip}, m)
        return u
    raise ValueError(g.kind)


def pauli_channel(rho: np.ndarray, qubits, p: float, m: int) -> np.ndarray:
    """Depolarize ``qubits`` jointly: total probability ``p`` spread uniformly."""
    if p == 0:
        return rho
    words = [w for w in itertools.product("IXYZ", repeat=len(qubits)) if set(w) != {"I"}]
    out = (1 - p) * rho
    for w in words:
        P = embed(dict(zip(qubits, (_PAULI[c] for c in w))), m)
        out = out + (p / len(words)) * (P @ rho @ P.conj().T)
    return out


def evolve_density(rho: np.ndarray, circuit: Circuit, params: NoiseParams, memory_mode: str = "additive") -> np.ndarray:
    m = circuit.num_qubits
    for layer in circuit.layers:
        for g in layer:
            U = gate_matrix(g, m)
            rho = U @ rho @ U.conj().T
        for g in layer:
            rho = pauli_channel(rho, g.qubits, params.gamma, m)
        busy = {q for g in layer for q in g.qubits}
        reps = 2 if memory_mode == "doubled" else 1
        for _ in range(reps):
            for q in range(m):
                if memory_mode == "folded" and q in busy:
                    continue
                rho = pauli_channel(rho, (q,), params.epsilon, m)
    return rho


def exact_success_curve(n: int, params: NoiseParams, T: int, memory_mode: str = "additive") -> np.ndarray:
    """``P_S(t)`` for ``t = 0..T`` from the exact channel evolution."""
    init = build_uniform_superposition(n, num_ancillas(n))
    grover = build_grover_gate(n)
    m = init.num_qubits
    if m > 7:
        raise ValueError("exact evolution limited to 7 qubits")
    rho = np.zeros((1 << m, 1 << m), dtype=complex)
    rho[0, 0] = 1
    out = []
    keep = np.arange(1 << m)[(np.arange(1 << m) & ((1 << n) - 1)) == 0]
    for t in range(T + 1):
        rho = evolve_density(rho, init if t == 0 else grover, params, memory_mode)
        out.append(float(np.real(np.trace(rho[np.ix_(keep, keep)]))))
    return np.array(out)

"""Gate-level circuits with explicit time-step layers.

Qubit 0 is the least significant bit of a basis index. Data qubits occupy
``0..n-1``; ancillas are allocated contiguously above them.

The Grover network searches for ``|0...0>``. The oracle is an X-conjugated
multi-controlled Z and the inversion about the mean is H/X-conjugated the
same way, with the target's ``H X H`` pairs folded into single Z gates.
Multi-controlled X gates are realized as a Toffoli AND-chain into ancillas
followed by uncomputation, so every ancilla returns to ``|0>`` after each
Grover gate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

GATE_ARITY = {
    "H": 1,
    "X": 1,
    "Y": 1,
    "Z": 1,
    "MEASURE": 1,
    "CNOT": 2,
    "CZ": 2,
    "TOFFOLI": 3,
}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """A gate on explicit qubits.

    Controls come first: ``CNOT(c, t)`` and ``TOFFOLI(c1, c2, t)``.
    ``MEASURE`` acts as the identity on the state; it only marks a noisy
    readout location.
    """

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise CircuitError(
                f"{self.kind} takes {GATE_ARITY[self.kind]} qubits, got {self.qubits}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.kind}{self.qubits}")
        if min(self.qubits) < 0:
            raise CircuitError(f"negative qubit index in {self.kind}{self.qubits}")

    def __str__(self):
        return f"{self.kind}({','.join(map(str, self.qubits))})"


def H(q):
    return Gate("H", (q,))


def X(q):
    return Gate("X", (q,))


def Y(q):
    return Gate("Y", (q,))


def Z(q):
    return Gate("Z", (q,))


def CNOT(c, t):
    return Gate("CNOT", (c, t))


def CZ(a, b):
    return Gate("CZ", (a, b))


def TOFFOLI(c1, c2, t):
    return Gate("TOFFOLI", (c1, c2, t))


def MEASURE(q):
    return Gate("MEASURE", (q,))


@dataclass(frozen=True)
class Circuit:
    num_data_qubits: int
    num_ancilla_qubits: int
    layers: tuple[tuple[Gate, ...], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        labels = tuple(self.labels) or ("",) * len(layers)
        if len(labels) != len(layers):
            raise CircuitError("one label per layer required")
        object.__setattr__(self, "labels", labels)
        m = self.num_qubits
        for i, layer in enumerate(layers):
            seen = set()
            for g in layer:
                if max(g.qubits) >= m:
                    raise CircuitError(f"layer {i}: {g} outside {m}-qubit register")
                if seen.intersection(g.qubits):
                    raise CircuitError(f"layer {i}: qubit reused by {g}")
                seen.update(g.qubits)

    @property
    def num_qubits(self) -> int:
        return self.num_data_qubits + self.num_ancilla_qubits

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def gates(self) -> list[Gate]:
        return [g for layer in self.layers for g in layer]

    def __add__(self, other: "Circuit") -> "Circuit":
        """Sequential composition; the register is widened to fit both."""
        return Circuit(
            max(self.num_data_qubits, other.num_data_qubits),
            max(self.num_ancilla_qubits, other.num_ancilla_qubits),
            self.layers + other.layers,
            self.labels + other.labels,
        )

    def to_text(self) -> str:
        """Text diagram, one row per qubit, one column per layer."""
        m = self.num_qubits
        width = max([len(str(g)) for g in self.gates] + [1])
        rows = []
        for q in range(m):
            name = f"q{q}" if q < self.num_data_qubits else f"a{q - self.num_data_qubits}"
            cells = []
            for layer in self.layers:
                cell = "-" * width
                for g in layer:
                    if q in g.qubits:
                        role = _role(g, q)
                        cell = role.center(width, "-")
                cells.append(cell)
            rows.append(f"{name:>4} " + "-".join(cells))
        return "\n".join(rows)

    def dump(self) -> str:
        """Machine-readable listing: ``layer kind q0 q1 ...`` per line."""
        lines = []
        for i, layer in enumerate(self.layers):
            for g in layer:
                lines.append(" ".join([str(i), g.kind, *map(str, g.qubits)]))
        return "\n".join(lines) + ("\n" if lines else "")


def _role(g: Gate, q: int) -> str:
    if g.kind in ("CNOT", "TOFFOLI"):
        return "@" if q != g.qubits[-1] else "X"
    if g.kind == "CZ":
        return "@"
    if g.kind == "MEASURE":
        return "M"
    return g.kind


def schedule_layers(
    gates: Iterable[Gate],
    num_data_qubits: int | None = None,
    num_ancilla_qubits: int = 0,
    gate_labels: Sequence[str] | None = None,
) -> Circuit:
    """Greedy as-soon-as-possible layering preserving per-qubit gate order."""
    gates = list(gates)
    if gate_labels is None:
        gate_labels = [""] * len(gates)
    if num_data_qubits is None:
        num_data_qubits = max((max(g.qubits) for g in gates), default=-1) + 1
        num_data_qubits -= num_ancilla_qubits
    ready: dict[int, int] = {}
    layers: list[list[Gate]] = []
    layer_labels: list[list[str]] = []
    for g, label in zip(gates, gate_labels):
        slot = max((ready.get(q, 0) for q in g.qubits), default=0)
        while len(layers) <= slot:
            layers.append([])
            layer_labels.append([])
        layers[slot].append(g)
        if label and label not in layer_labels[slot]:
            layer_labels[slot].append(label)
        for q in g.qubits:
            ready[q] = slot + 1
    return Circuit(
        num_data_qubits,
        num_ancilla_qubits,
        tuple(tuple(layer) for layer in layers),
        tuple("+".join(lbl) for lbl in layer_labels),
    )


def decompose_cnx(controls: Sequence[int], target: int, ancillas: Sequence[int]) -> list[Gate]:
    """C^k(X) as a compute/apply/uncompute Toffoli chain (2k-3 Toffolis)."""
    controls = list(controls)
    k = len(controls)
    if k < 2:
        raise CircuitError("decompose_cnx needs at least two controls")
    need = k - 2
    if len(ancillas) < need:
        raise CircuitError(f"C^{k}(X) needs {need} ancillas, got {len(ancillas)}")
    ancillas = list(ancillas[:need])
    touched = controls + [target] + ancillas
    if len(set(touched)) != len(touched):
        raise CircuitError("controls, target and ancillas must be disjoint")
    if k == 2:
        return [TOFFOLI(controls[0], controls[1], target)]
    compute = [TOFFOLI(controls[0], controls[1], ancillas[0])]
    for j in range(1, need):
        compute.append(TOFFOLI(ancillas[j - 1], controls[j + 1], ancillas[j]))
    apply = TOFFOLI(ancillas[-1], controls[-1], target)
    return compute + [apply] + compute[::-1]


def num_ancillas(n: int) -> int:
    return max(n - 3, 0)


def build_uniform_superposition(n: int, num_ancilla_qubits: int = 0) -> Circuit:
    if n < 1:
        raise CircuitError("n must be >= 1")
    return Circuit(n, num_ancilla_qubits, (tuple(H(q) for q in range(n)),), ("synthesis",))


def _controlled_flip(n: int) -> list[Gate]:
    """C^{n-1}(X) with the top data qubit as target (CNOT when n = 2)."""
    target = n - 1
    controls = list(range(n - 1))
    if n == 2:
        return [CNOT(0, 1)]
    return decompose_cnx(controls, target, list(range(n, n + num_ancillas(n))))


def oracle_gates(n: int) -> list[Gate]:
    """Phase flip of |0...0>: X^n . H_t C^{n-1}(X) H_t . X^n."""
    t = n - 1
    xs = [X(q) for q in range(n)]
    return xs + [H(t)] + _controlled_flip(n) + [H(t)] + xs


def inversion_gates(n: int) -> list[Gate]:
    """Inversion about the mean (up to a global sign).

    ``H^n X^n CZ X^n H^n`` with the target's ``H X H`` collapsed to ``Z``.
    """
    t = n - 1
    controls = range(n - 1)
    return (
        [H(q) for q in controls] + [Z(t)]
        + [X(q) for q in controls]
        + _controlled_flip(n)
        + [X(q) for q in controls] + [Z(t)]
        + [H(q) for q in controls]
    )


def build_grover_gate(n: int) -> Circuit:
    """One Grover iteration for the searched state |0...0>.

    The circuit equals ``-G`` on the data register (global sign only).
    """
    if n < 2:
        raise CircuitError("Grover network needs n >= 2")
    oracle = oracle_gates(n)
    inversion = inversion_gates(n)
    oracle_c = schedule_layers(oracle, n, num_ancillas(n), ["oracle"] * len(oracle))
    inversion_c = schedule_layers(inversion, n, num_ancillas(n), ["inversion"] * len(inversion))
    return oracle_c + inversion_c


def build_grover_network(n: int, iterations: int = 1) -> Circuit:
    """Initial superposition followed by ``iterations`` Grover gates."""
    c = build_uniform_superposition(n, num_ancillas(n))
    g = build_grover_gate(n)
    for _ in range(iterations):
        c = c + g
    return c


@dataclass
class ResourceCounts:
    toffoli: int = 0
    hadamard: int = 0
    x: int = 0
    z: int = 0
    cnot: int = 0
    time_steps: int = 0
    ancillas: int = 0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "toffoli": self.toffoli,
            "hadamard": self.hadamard,
            "x": self.x,
            "z": self.z,
            "cnot": self.cnot,
            "time_steps": self.time_steps,
            "ancillas": self.ancillas,
        }


def reference_resource_formulas(n: int) -> ResourceCounts:
    """Reference counts for one-iteration Grover network (initial H layer included)."""
    return ResourceCounts(
        toffoli=2 * (n - 2) if n > 2 else 0,
        hadamard=3 * n,
        x=2 * (2 * n - 1),
        z=2,
        cnot=2 if n == 2 else 0,
        time_steps=2 * n + 6,
        ancillas=num_ancillas(n),
    )


def resource_counts(circuit: Circuit, n: int) -> tuple[ResourceCounts, ResourceCounts]:
    """Counted resources of ``circuit`` and the reference formula values."""
    kinds = [g.kind for g in circuit.gates]
    actual = ResourceCounts(
        toffoli=kinds.count("TOFFOLI"),
        hadamard=kinds.count("H"),
        x=kinds.count("X"),
        z=kinds.count("Z"),
        cnot=kinds.count("CNOT"),
        time_steps=circuit.depth,
        ancillas=circuit.num_ancilla_qubits,
    )
    return actual, reference_resource_formulas(n)


def noiseless_success(n: int, k: int) -> float:
    """sin^2((2k+1) theta/2) with sin(theta/2) = 1/sqrt(2^n)."""
    half = math.asin(1.0 / math.sqrt(2 ** n))
    return math.sin((2 * k + 1) * half) ** 2


def noiseless_first_maximum(n: int) -> int:
    """Smallest k maximizing the noiseless success locally (~ floor(pi sqrt(N)/4))."""
    k = 1
    while noiseless_success(n, k + 1) > noiseless_success(n, k):
        k += 1
    return k

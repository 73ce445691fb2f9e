"""Independent stochastic depolarizing error model.

Every layer of a circuit is one time step. For each layer the ideal gates
act first, then each gate's error word on its own support, then one memory
word over all qubits of the register (idle ancillas included).
Two alternative readings are selectable: ``folded`` drops the memory error
on qubits that are busy in a layer, ``doubled`` applies two independent
memory words per layer (one bundled with the gate step, one idle step).

Memory location:  I with 1-eps, X/Y/Z with eps/3 each.
Gate location:    identity with 1-gamma, otherwise a uniform pick among the
                  3, 15 or 63 non-identity words on the gate's 1, 2 or 3 qubits.

One uniform draw decides each location: an error happens iff ``u < p`` and
``u / p`` then selects which Pauli. Runs at different ``(eps, gamma)`` with
the same seed therefore share their random numbers, and the error set grows
monotonically with the rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate
from .qstate import OP_CODES, PAULI_LETTERS, PauliWord, QStateError, StateVector, evolve_batch

MEMORY_MODES = ("additive", "folded", "doubled")
GENERATOR_NAME = "numpy.random.Philox[SeedSequence(master_seed, spawn_key=(domain, stream))]"


def generator_info() -> str:
    return f"{GENERATOR_NAME}; numpy {np.__version__}"


@dataclass(frozen=True)
class NoiseParams:
    epsilon: float
    gamma: float

    def __post_init__(self):
        for name in ("epsilon", "gamma"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0 or math.isnan(v):
                raise ValueError(f"{name}={v} is not a probability")
            object.__setattr__(self, name, v)

    @classmethod
    def from_ratio(cls, epsilon: float, C: float) -> "NoiseParams":
        """Parameters with ``C = epsilon / gamma``; ``C = inf`` means gamma = 0."""
        if C <= 0:
            raise ValueError("C must be positive")
        gamma = 0.0 if math.isinf(C) else epsilon / C
        return cls(epsilon, gamma)

    @classmethod
    def from_inverse(cls, inv_epsilon: float | None, inv_gamma: float | None) -> "NoiseParams":
        eps = 0.0 if not inv_epsilon else 1.0 / inv_epsilon
        gam = 0.0 if not inv_gamma else 1.0 / inv_gamma
        return cls(eps, gam)

    @property
    def ratio(self) -> float:
        if self.gamma == 0.0:
            return math.inf if self.epsilon > 0 else math.nan
        return self.epsilon / self.gamma

    @property
    def noiseless(self) -> bool:
        return self.epsilon == 0.0 and self.gamma == 0.0


@dataclass(frozen=True)
class RandomStream:
    """Reproducible substream ``(master_seed, stream_index)``.

    ``domain`` separates unrelated uses of one master seed (for example the
    encoded and bare arms of one experiment).
    """

    master_seed: int
    stream_index: int = 0
    domain: int = 0

    @cached_property
    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.domain), int(self.stream_index)))
        return np.random.Generator(np.random.Philox(seq))

    def random(self, *args, **kwargs):
        return self.generator.random(*args, **kwargs)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomStream):
        return rng.generator
    if isinstance(rng, (int, np.integer)):
        return RandomStream(int(rng)).generator
    raise TypeError(f"cannot use {type(rng).__name__} as a random stream")


# ------------------------------------------------------------- decoding


def memory_codes(u: np.ndarray, epsilon: float) -> np.ndarray:
    """Pauli codes (0=I, 1=X, 2=Y, 3=Z) for memory locations with draws ``u``."""
    u = np.asarray(u, dtype=float)
    codes = np.zeros(u.shape, dtype=np.int64)
    if epsilon <= 0.0:
        return codes
    hit = u < epsilon
    codes[hit] = 1 + np.minimum((3.0 * u[hit] / epsilon).astype(np.int64), 2)
    return codes


def gate_error_index(u: np.ndarray, gamma: float, arity: int) -> np.ndarray:
    """Error word index in ``0..4**arity-1`` (0 = no error) for draws ``u``.

    Base-4 digit ``j`` of the index is the Pauli code on the gate's ``j``-th qubit.
    """
    u = np.asarray(u, dtype=float)
    idx = np.zeros(u.shape, dtype=np.int64)
    if gamma <= 0.0:
        return idx
    n_words = np.broadcast_to(4 ** np.asarray(arity, dtype=np.int64) - 1, u.shape)
    hit = u < gamma
    idx[hit] = 1 + np.minimum((n_words[hit] * u[hit] / gamma).astype(np.int64), n_words[hit] - 1)
    return idx


_CODE_X = np.array([0, 1, 1, 0], dtype=np.int64)
_CODE_Z = np.array([0, 0, 1, 1], dtype=np.int64)
_CODE_Y = np.array([0, 0, 1, 0], dtype=np.int64)
_BITS_CODE = np.array([[0, 3], [1, 2]], dtype=np.int64)  # [x, z] -> code


def codes_to_word(codes: Sequence[int], qubits: Sequence[int]) -> PauliWord:
    return PauliWord({q: PAULI_LETTERS[int(c)] for q, c in zip(qubits, codes)})


def sample_memory_word(active_qubits: Sequence[int], epsilon: float, rng) -> PauliWord:
    gen = as_generator(rng)
    codes = memory_codes(gen.random(len(active_qubits)), epsilon)
    return codes_to_word(codes, active_qubits)


def sample_gate_error(gate: Gate, gamma: float, rng) -> PauliWord:
    gen = as_generator(rng)
    w = int(gate_error_index(gen.random(), gamma, len(gate.qubits)))
    codes = [(w >> (2 * j)) & 3 for j in range(len(gate.qubits))]
    return codes_to_word(codes, gate.qubits)


# ------------------------------------------------------------ circuit errors


@dataclass(frozen=True, eq=False)
class CompiledCircuit:
    """Flat arrays describing a circuit for the batched kernels."""

    num_qubits: int
    kinds: np.ndarray        # (G,) op codes
    qubits: np.ndarray       # (G, 3) zero padded
    arity: np.ndarray        # (G,)
    layer_start: np.ndarray  # (L+1,)
    busy: np.ndarray         # (L, m) qubit touched by a gate in the layer
    gate_layer: np.ndarray   # (G,) layer of each gate
    gates: tuple

    @property
    def num_layers(self) -> int:
        return self.layer_start.size - 1

    @property
    def num_gates(self) -> int:
        return self.kinds.size


@lru_cache(maxsize=256)
def compile_circuit(circuit: Circuit) -> CompiledCircuit:
    gates = circuit.gates
    m = circuit.num_qubits
    kinds = np.array([OP_CODES[g.kind] for g in gates], dtype=np.int64)
    qubits = np.zeros((len(gates), 3), dtype=np.int64)
    for i, g in enumerate(gates):
        qubits[i, : len(g.qubits)] = g.qubits
    arity = np.array([len(g.qubits) for g in gates], dtype=np.int64)
    layer_start = np.cumsum([0] + [len(layer) for layer in circuit.layers]).astype(np.int64)
    busy = np.zeros((circuit.depth, m), dtype=bool)
    for li, layer in enumerate(circuit.layers):
        for g in layer:
            busy[li, list(g.qubits)] = True
    gate_layer = np.repeat(np.arange(circuit.depth), np.diff(layer_start))
    return CompiledCircuit(m, kinds, qubits, arity, layer_start, busy, gate_layer, tuple(gates))


@dataclass
class CircuitErrors:
    """Sampled errors for ``B`` trajectories of one circuit pass.

    ``x, z, phase`` have shape ``(B, L)``: the combined Pauli
    ``i**phase X^x Z^z`` acting after layer ``l`` (gate errors first, then
    the memory word). ``gate_words`` is ``(B, G)``; ``memory`` is ``(B, L, m)``
    Pauli codes.
    """

    x: np.ndarray
    z: np.ndarray
    phase: np.ndarray
    gate_words: np.ndarray
    memory: np.ndarray


def sample_circuit_errors(
    cc: CompiledCircuit,
    params: NoiseParams,
    gen: np.random.Generator | None,
    batch: int,
    memory_mode: str = "additive",
) -> CircuitErrors:
    """Draw every error location of one circuit pass.

    Draw layout: a single ``(batch, G + L*m)`` block (``G + 2*L*m`` when
    doubled); the first ``G`` columns
    are gate locations in circuit order, the rest are memory locations layer
    by layer, qubits ``0..m-1``. The layout does not depend on the rates, so
    equal seeds give coupled samples across ``(eps, gamma)``. In ``folded``
    mode the memory draws of qubits busy in a layer are ignored.
    """
    if memory_mode not in MEMORY_MODES:
        raise ValueError(f"memory_mode must be one of {MEMORY_MODES}")
    L, m, G = cc.num_layers, cc.num_qubits, cc.num_gates
    x = np.zeros((batch, L), dtype=np.int64)
    z = np.zeros((batch, L), dtype=np.int64)
    ph = np.zeros((batch, L), dtype=np.int64)
    words = np.zeros((batch, G), dtype=np.int64)
    mem = np.zeros((batch, L, m), dtype=np.int64)
    if params.noiseless:
        return CircuitErrors(x, z, ph, words, mem)
    u = gen.random((batch, G + L * m * (2 if memory_mode == "doubled" else 1)))
    if params.gamma > 0 and G:
        ug = u[:, :G]
        b, g = np.nonzero(ug < params.gamma)
        if b.size:
            w = gate_error_index(ug[b, g], params.gamma, cc.arity[g])
            words[b, g] = w
            cx = np.zeros_like(w)
            cz = np.zeros_like(w)
            cy = np.zeros_like(w)
            for j in range(3):
                code = (w >> (2 * j)) & 3
                cx |= _CODE_X[code] << cc.qubits[g, j]
                cz |= _CODE_Z[code] << cc.qubits[g, j]
                cy += _CODE_Y[code]
            lay = cc.gate_layer[g]
            np.bitwise_xor.at(x, (b, lay), cx)
            np.bitwise_xor.at(z, (b, lay), cz)
            np.add.at(ph, (b, lay), cy)
    if params.epsilon > 0:
        for um in np.split(u[:, G:], 2 if memory_mode == "doubled" else 1, axis=1):
            b, c = np.nonzero(um < params.epsilon)
            lay, q = np.divmod(c, m)
            code = memory_codes(um[b, c], params.epsilon)
            if memory_mode == "folded":
                keep = ~cc.busy[lay, q]
                b, lay, q, code = b[keep], lay[keep], q[keep], code[keep]
            if b.size:
                # combined letter when two memory steps hit the same location
                prev = mem[b, lay, q]
                mem[b, lay, q] = _BITS_CODE[_CODE_X[prev] ^ _CODE_X[code], _CODE_Z[prev] ^ _CODE_Z[code]]
                # Z of the memory word passing an X already present: Z X = -X Z
                sign = _CODE_Z[code] & ((x[b, lay] >> q) & 1)
                np.add.at(ph, (b, lay), _CODE_Y[code] + 2 * sign)
                np.bitwise_xor.at(x, (b, lay), _CODE_X[code] << q)
                np.bitwise_xor.at(z, (b, lay), _CODE_Z[code] << q)
    return CircuitErrors(x, z, ph & 3, words, mem)


def run_layers_batch(
    amps: np.ndarray,
    circuit: Circuit,
    params: NoiseParams,
    gen: np.random.Generator | None,
    memory_mode: str = "additive",
    trace: list | None = None,
) -> np.ndarray:
    """Noisy evolution of every row of ``amps`` (shape ``(B, 2**m)``) in place."""
    cc = compile_circuit(circuit)
    m = cc.num_qubits
    if amps.ndim != 2 or amps.shape[1] != 1 << m or not amps.flags.c_contiguous:
        raise QStateError(f"state batch shape {amps.shape} does not fit {m} qubits")
    err = sample_circuit_errors(cc, params, gen, amps.shape[0], memory_mode)
    if trace is not None:
        trace.extend(_trace_events(circuit, cc, err))
    evolve_batch(amps, cc.kinds, cc.qubits, cc.layer_start, err.x, err.z, err.phase)
    return amps


def _trace_events(circuit: Circuit, cc: CompiledCircuit, err: CircuitErrors):
    events = []
    k = 0
    for li, layer in enumerate(circuit.layers):
        for g in layer:
            w = int(err.gate_words[0, k])
            k += 1
            codes = [(w >> (2 * j)) & 3 for j in range(len(g.qubits))]
            events.append(("gate", li, g, codes_to_word(codes, g.qubits)))
        events.append(("memory", li, None, codes_to_word(err.memory[0, li], range(cc.num_qubits))))
    return events


def run_noisy_trajectory(
    circuit: Circuit,
    params: NoiseParams,
    rng,
    input_state: StateVector,
    memory_mode: str = "additive",
    trace: list | None = None,
) -> StateVector:
    """One noisy trajectory; returns a new state, ``input_state`` is untouched.

    ``trace`` (if given) receives ``(kind, layer, gate, PauliWord)`` tuples for
    every error location, sampled or not.
    """
    if input_state.num_qubits != circuit.num_qubits:
        raise QStateError(
            f"state has {input_state.num_qubits} qubits, circuit needs {circuit.num_qubits}"
        )
    gen = None if params.noiseless else as_generator(rng)
    amps = input_state.amplitudes.copy().reshape(1, -1)
    run_layers_batch(amps, circuit, params, gen, memory_mode, trace)
    return StateVector(amps[0])

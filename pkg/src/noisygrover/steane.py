"""The [[7,1,3]] Steane code and the encoded two-qubit Grover search.

Code tables come from the Hamming pair ``C = [7,4,3] ⊃ C⊥ = [7,3,4]``: the
parity check of ``C`` has the binary expansions of 1..7 as columns, and its
rows generate ``C⊥``. Bit ``j`` of a 7-bit word is qubit ``j`` of the block.

Two simulation routes are provided. The dense route evolves state vectors
(at most 14 live qubits) and is meant for cross-checks. The frame route
tracks only the Pauli error frame through the circuit, which is exact here
because every circuit involved is Clifford and every error is a Pauli; it
is vectorized over trajectories and used for large runs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import CNOT, Circuit, Gate, H, schedule_layers
from .mc import DEFAULT_CHUNK, _map, estimate_success_curve
from .noise import (
    CompiledCircuit,
    NoiseParams,
    RandomStream,
    as_generator,
    compile_circuit,
    generator_info,
    run_noisy_trajectory,
    sample_circuit_errors,
)
from .qstate import OP_CODES, PauliWord, StateVector, apply_pauli_word, measure_qubits

BLOCK = 7
BLOCK_MASK = (1 << BLOCK) - 1
STEANE_DOMAIN = 2
DEFAULT_MAX_RESTARTS = 200


class CodeError(RuntimeError):
    pass


class PreparationFailure(RuntimeError):
    """Every verification attempt detected an error."""


def _weight(v: int) -> int:
    return bin(v).count("1")


def _span(rows: Sequence[int]) -> list[int]:
    words = {0}
    for r in rows:
        words |= {w ^ r for w in words}
    return sorted(words)


@dataclass(frozen=True)
class CodeTables:
    generator: tuple[int, ...]      # rows of the C⊥ generator = parity check of C
    parity_check: tuple[int, ...]
    dual_codewords: tuple[int, ...]   # C⊥, 8 words
    codewords: tuple[int, ...]        # C, 16 words
    corrections: tuple[int, ...]      # syndrome -> weight <= 1 correction

    @staticmethod
    def as_bits(word: int) -> np.ndarray:
        return np.array([(word >> j) & 1 for j in range(BLOCK)], dtype=np.uint8)

    def matrix(self, rows) -> np.ndarray:
        return np.array([self.as_bits(r) for r in rows])

    def syndrome(self, word: int) -> int:
        return sum((_weight(word & row) & 1) << i for i, row in enumerate(self.parity_check))

    def in_dual(self, word: int) -> bool:
        return word in self._dual_set

    @property
    def _dual_set(self) -> frozenset:
        return frozenset(self.dual_codewords)


@lru_cache(maxsize=None)
def code_tables() -> CodeTables:
    """Hamming tables, checked exhaustively before they are returned."""
    rows = tuple(sum(((j + 1) >> i & 1) << j for j in range(BLOCK)) for i in range(3))
    dual = _span(rows)
    code = [w for w in range(1 << BLOCK) if all(_weight(w & r) % 2 == 0 for r in rows)]
    corrections = [0] * 8
    for j in range(BLOCK):
        s = sum((_weight((1 << j) & r) & 1) << i for i, r in enumerate(rows))
        corrections[s] = 1 << j
    t = CodeTables(rows, rows, tuple(dual), tuple(code), tuple(corrections))
    verify_tables(t)
    return t


def min_distance(words: Sequence[int]) -> int:
    return min(_weight(w) for w in words if w)


def verify_tables(t: CodeTables) -> dict:
    report = {
        "dual_size": len(t.dual_codewords),
        "code_size": len(t.codewords),
        "dual_in_code": set(t.dual_codewords) <= set(t.codewords),
        "dual_distance": min_distance(t.dual_codewords),
        "code_distance": min_distance(t.codewords),
        "corrections_complete": sorted(t.corrections[1:]) == [1 << j for j in range(BLOCK)],
    }
    expected = dict(dual_size=8, code_size=16, dual_in_code=True, dual_distance=4, code_distance=3,
                    corrections_complete=True)
    if report != expected:
        raise CodeError(f"code tables inconsistent: {report}")
    return report


# ------------------------------------------------------------ ideal states


def _coset_state(offset: int) -> StateVector:
    amps = np.zeros(1 << BLOCK, dtype=complex)
    for c in code_tables().dual_codewords:
        amps[c ^ offset] = 1.0 / math.sqrt(8)
    return StateVector(amps)


def logical_zero_ideal() -> StateVector:
    return _coset_state(0)


def logical_one_ideal() -> StateVector:
    return _coset_state(BLOCK_MASK)


def _same(a: StateVector, b: StateVector, tol: float = 1e-12) -> bool:
    return bool(np.allclose(a.amplitudes, b.amplitudes, atol=tol, rtol=0))


def x_word(v: int) -> PauliWord:
    return PauliWord({j: "X" for j in range(BLOCK) if v >> j & 1})


def z_word(v: int) -> PauliWord:
    return PauliWord({j: "Z" for j in range(BLOCK) if v >> j & 1})


def weight_equivalence_check(tables: CodeTables | None = None) -> dict:
    """Match weight-2 bit flips on |0_E> with weight-1 flips on |1_E>, and back.

    Returns ``{"forward": {v: u}, "inverse": {u: v}}``. Raises
    :class:`CodeError` with the first counterexample.
    """
    tables = tables or code_tables()
    zero, one = logical_zero_ideal(), logical_one_ideal()
    w1 = [1 << j for j in range(BLOCK)]
    w2 = [a | b for a, b in itertools.combinations(w1, 2)]
    flipped_one = {u: apply_pauli_word(one.copy(), x_word(u)) for u in w1}
    forward = {}
    for v in w2:
        lhs = apply_pauli_word(zero.copy(), x_word(v))
        match = [u for u in w1 if _same(lhs, flipped_one[u])]
        if not match:
            raise CodeError(f"X_{v:07b}|0_E> has no weight-1 partner on |1_E>")
        forward[v] = match[0]
    inverse = {}
    for u in w1:
        lhs = apply_pauli_word(zero.copy(), x_word(u))
        match = [v for v in w2 if _same(lhs, apply_pauli_word(one.copy(), x_word(v)))]
        if not match:
            raise CodeError(f"X_{u:07b}|0_E> has no weight-2 partner on |1_E>")
        inverse[u] = match[0]
    return {"forward": forward, "inverse": inverse}


def phase_equivalence_check() -> dict:
    """Every weight-2 ``Z_v|0_E>`` equals some weight-1 ``Z_u|0_E>``."""
    zero = logical_zero_ideal()
    w1 = [1 << j for j in range(BLOCK)]
    out = {}
    for a, b in itertools.combinations(w1, 2):
        v = a | b
        lhs = apply_pauli_word(zero.copy(), z_word(v))
        match = [u for u in w1 if _same(lhs, apply_pauli_word(zero.copy(), z_word(u)))]
        if not match:
            raise CodeError(f"Z_{v:07b}|0_E> is not a weight-1 phase error")
        out[v] = match[0]
    return out


# ----------------------------------------------------------------- networks


def synthesis_gates(offset: int = 0, tables: CodeTables | None = None) -> list[Gate]:
    """H on each generator's leading qubit, then CNOT fan-out along the row."""
    tables = tables or code_tables()
    gates = []
    leads = []
    for row in tables.generator:
        lead = (row & -row).bit_length() - 1
        leads.append(lead)
        gates.append(H(offset + lead))
    fans = [frozenset(j for j in range(BLOCK) if row >> j & 1 and j != lead)
            for row, lead in zip(tables.generator, leads)]
    for rnd in _fan_rounds(tuple(fans)):
        gates += [CNOT(offset + lead, offset + t) for lead, t in zip(leads, rnd) if t is not None]
    return gates


def _fan_rounds(fans: tuple[frozenset, ...]) -> list[tuple]:
    """Split the fan-outs into rounds where every row hits a distinct target."""
    if not any(fans):
        return []
    for choice in itertools.product(*[sorted(f) or [None] for f in fans]):
        hit = [t for t in choice if t is not None]
        if len(set(hit)) != len(hit):
            continue
        rest = tuple(f - {t} for f, t in zip(fans, choice))
        try:
            return [choice] + _fan_rounds(rest)
        except ValueError:
            continue
    raise ValueError("no parallel fan-out schedule")


def build_zero_synthesis_network(tables: CodeTables | None = None) -> Circuit:
    return schedule_layers(synthesis_gates(0, tables), BLOCK)


def transversal_gate(kind: str, blocks: Sequence[Sequence[int]]) -> list[Gate]:
    """Qubit-wise ``kind`` over one block (H, X, Z) or a pair of blocks (CNOT, CZ)."""
    blocks = [list(b) for b in blocks]
    if any(len(b) != BLOCK for b in blocks):
        raise ValueError("blocks must have exactly 7 qubits")
    if kind in ("H", "X", "Z", "Y", "MEASURE"):
        if len(blocks) != 1:
            raise ValueError(f"transversal {kind} takes one block")
        return [Gate(kind, (q,)) for q in blocks[0]]
    if kind in ("CNOT", "CZ"):
        if len(blocks) != 2:
            raise ValueError(f"transversal {kind} takes two blocks")
        if set(blocks[0]) & set(blocks[1]):
            raise ValueError("blocks overlap")
        return [Gate(kind, (a, b)) for a, b in zip(*blocks)]
    raise ValueError(f"no transversal {kind}")


_KIND_NAMES = {v: k for k, v in OP_CODES.items()}

BLOCK_A = tuple(range(BLOCK))
BLOCK_B = tuple(range(BLOCK, 2 * BLOCK))


@lru_cache(maxsize=None)
def ft_prep_circuit() -> Circuit:
    """Block A (0..6) and verifier V (7..13): synthesis, CNOT A->V, measure V."""
    gates = synthesis_gates(0) + synthesis_gates(BLOCK)
    synth = schedule_layers(gates, 2 * BLOCK)
    check = Circuit(2 * BLOCK, 0, (tuple(transversal_gate("CNOT", [BLOCK_A, BLOCK_B])),
                                   tuple(transversal_gate("MEASURE", [BLOCK_B]))),
                    ("verify", "measure"))
    return synth + check


@lru_cache(maxsize=None)
def encoded_grover_circuit() -> Circuit:
    """Logical n=2 Grover on blocks A and B, starting from |0_E 0_E>.

    ``HH | XX CZ XX | HH XX CZ XX HH``: uniform superposition, phase flip of
    |00>, inversion about the mean. Ideal output is |0_E 0_E> up to sign.
    """
    def both(kind):
        return tuple(transversal_gate(kind, [BLOCK_A]) + transversal_gate(kind, [BLOCK_B]))

    cz = tuple(transversal_gate("CZ", [BLOCK_A, BLOCK_B]))
    layers = (both("H"), both("X"), cz, both("X"), both("H"), both("X"), cz, both("X"), both("H"))
    labels = ("init", "oracle", "oracle", "oracle", "inversion", "inversion", "inversion", "inversion", "inversion")
    return Circuit(2 * BLOCK, 0, layers, labels)


# -------------------------------------------------------------- decoding


@lru_cache(maxsize=None)
def _decode_table() -> tuple[np.ndarray, np.ndarray]:
    t = code_tables()
    logical = np.zeros(1 << BLOCK, dtype=np.int8)
    corrected = np.zeros(1 << BLOCK, dtype=np.int64)
    for w in range(1 << BLOCK):
        c = w ^ t.corrections[t.syndrome(w)]
        corrected[w] = c
        logical[w] = 0 if t.in_dual(c) else 1 if c in t.codewords else -1
    return logical, corrected


def classical_decode(bits, tables: CodeTables | None = None) -> tuple[int, int, bool]:
    """Correct one bit flip, then read the coset: ``(logical, corrected, detected)``.

    ``bits`` is an int (bit j = qubit j) or a sequence of 7 bits.
    """
    tables = tables or code_tables()
    w = bits if isinstance(bits, (int, np.integer)) else sum(int(b) << j for j, b in enumerate(bits))
    w = int(w)
    if not 0 <= w <= BLOCK_MASK:
        raise ValueError("word must have 7 bits")
    fix = tables.corrections[tables.syndrome(w)]
    c = w ^ fix
    if c not in tables.codewords:
        raise CodeError(f"{w:07b} does not decode into C")
    return (0 if tables.in_dual(c) else 1), c, bool(fix)


def verification_detects(v: int) -> bool:
    """Would X_v on block A before the transversal CNOT make V reject?"""
    # noiseless elsewhere: V reads a C⊥ word xor v
    return not code_tables().in_dual(v)


# ------------------------------------------------------- Pauli-frame route


def propagate_frames(cc: CompiledCircuit, ex: np.ndarray, ez: np.ndarray,
                     x0: np.ndarray | None = None, z0: np.ndarray | None = None):
    """Push per-layer error masks ``(B, L)`` through a Clifford circuit.

    Layer ``l`` applies its gates to the running frame and then XORs in
    ``ex[:, l]``, ``ez[:, l]``. Returns the final ``(x, z)`` masks.
    """
    B = ex.shape[0]
    x = np.zeros(B, dtype=np.int64) if x0 is None else x0.astype(np.int64).copy()
    z = np.zeros(B, dtype=np.int64) if z0 is None else z0.astype(np.int64).copy()
    for layer in range(cc.num_layers):
        for g in range(cc.layer_start[layer], cc.layer_start[layer + 1]):
            kind = _KIND_NAMES[cc.kinds[g]]
            q0, q1 = int(cc.qubits[g, 0]), int(cc.qubits[g, 1])
            if kind == "H":
                bx = (x >> q0) & 1
                bz = (z >> q0) & 1
                d = (bx ^ bz) << q0
                x ^= d
                z ^= d
            elif kind == "CNOT":
                x ^= ((x >> q0) & 1) << q1
                z ^= ((z >> q1) & 1) << q0
            elif kind == "CZ":
                z ^= (((x >> q0) & 1) << q1) | (((x >> q1) & 1) << q0)
            elif kind == "TOFFOLI":
                raise ValueError("Pauli frames cannot pass a Toffoli")
            # X, Y, Z and MEASURE only flip signs
        x ^= ex[:, layer]
        z ^= ez[:, layer]
    return x, z



@lru_cache(maxsize=None)
def _dual_lookup() -> np.ndarray:
    table = np.zeros(1 << BLOCK, dtype=bool)
    table[list(code_tables().dual_codewords)] = True
    return table


def logical_bits(x_block: np.ndarray) -> np.ndarray:
    """Decoded logical Z-readout of blocks whose x-frame is ``x_block``."""
    return _decode_table()[0][np.asarray(x_block) & BLOCK_MASK]


@dataclass
class FramePrep:
    x: np.ndarray
    z: np.ndarray
    attempts: np.ndarray
    accepted: np.ndarray

    @property
    def logical_errors(self) -> np.ndarray:
        return self.accepted & (logical_bits(self.x) != 0)


def prepare_zero_frames(params: NoiseParams, gen: np.random.Generator | None, batch: int,
                        max_restarts: int = DEFAULT_MAX_RESTARTS, memory_mode: str = "additive") -> FramePrep:
    """Verified |0_E> preparation for ``batch`` trajectories, as error frames."""
    if max_restarts < 1:
        raise ValueError("max_restarts must be >= 1")
    cc = compile_circuit(ft_prep_circuit())
    x = np.zeros(batch, dtype=np.int64)
    z = np.zeros(batch, dtype=np.int64)
    attempts = np.zeros(batch, dtype=np.int64)
    accepted = np.zeros(batch, dtype=bool)
    if params.noiseless:
        return FramePrep(x, z, attempts + 1, ~accepted)
    pending = np.arange(batch)
    dual = _dual_lookup()
    for attempt in range(1, max_restarts + 1):
        err = sample_circuit_errors(cc, params, gen, pending.size, memory_mode)
        fx, fz = propagate_frames(cc, err.x, err.z)
        ok = dual[(fx >> BLOCK) & BLOCK_MASK]
        attempts[pending] = attempt
        idx = pending[ok]
        x[idx] = fx[ok] & BLOCK_MASK
        z[idx] = fz[ok] & BLOCK_MASK
        accepted[idx] = True
        pending = pending[~ok]
        if not pending.size:
            break
    return FramePrep(x, z, attempts, accepted)


# ---------------------------------------------------------- dense route


def prepare_zero_ft(params: NoiseParams, rng, max_restarts: int = DEFAULT_MAX_RESTARTS,
                    memory_mode: str = "additive") -> tuple[StateVector, int]:
    """Verified |0_E> preparation on state vectors.

    Returns the accepted 7-qubit block and the number of attempts; raises
    :class:`PreparationFailure` when every attempt is rejected.
    """
    if max_restarts < 1:
        raise ValueError("max_restarts must be >= 1")
    gen = None if params.noiseless else as_generator(rng)
    circuit = ft_prep_circuit()
    start = StateVector(np.eye(1, 1 << 2 * BLOCK, dtype=complex)[0])
    dual = _dual_lookup()
    for attempt in range(1, max_restarts + 1):
        state = run_noisy_trajectory(circuit, params, gen, start, memory_mode)
        bits, state = measure_qubits(state, BLOCK_B, gen if gen is not None else np.random.default_rng(0))
        w = sum(b << j for j, b in enumerate(bits))
        if dual[w]:
            block = state.amplitudes[w << BLOCK:(w + 1) << BLOCK].copy()
            block /= np.linalg.norm(block)
            return StateVector(block), attempt
    raise PreparationFailure(f"no verified block in {max_restarts} attempts")


def _dense_encoded_trial(params, gen, max_restarts, memory_mode) -> tuple[bool, int]:
    try:
        a, na = prepare_zero_ft(params, gen, max_restarts, memory_mode)
        b, nb = prepare_zero_ft(params, gen, max_restarts, memory_mode)
    except PreparationFailure:
        return False, 2 * max_restarts
    state = run_noisy_trajectory(encoded_grover_circuit(), params, gen, a.tensor(b), memory_mode)
    bits, _ = measure_qubits(state, range(2 * BLOCK), gen if gen is not None else np.random.default_rng(0))
    word = sum(bit << j for j, bit in enumerate(bits))
    la, _, _ = classical_decode(word & BLOCK_MASK)
    lb, _, _ = classical_decode(word >> BLOCK)
    return la == 0 and lb == 0, na + nb


# ---------------------------------------------------------- experiments


@dataclass
class EncodedResult:
    epsilon: float
    gamma: float
    C: float
    encoded_ps: float
    encoded_stderr: float
    bare_ps: float
    bare_stderr: float
    mean_attempts: float
    n_traj: int
    seed: int
    prep_failures: int = 0
    meta: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in ENCODED_COLUMNS}


ENCODED_COLUMNS = ("epsilon", "gamma", "C", "encoded_ps", "encoded_stderr", "bare_ps", "bare_stderr",
                   "mean_attempts", "n_traj", "seed")


def _encoded_chunk(job):
    params, chunk, size, seed, max_restarts, memory_mode, method = job
    gen = None if params.noiseless else RandomStream(seed, chunk, STEANE_DOMAIN).generator
    if method == "dense":
        ok = att = 0
        for _ in range(size):
            s, a = _dense_encoded_trial(params, gen, max_restarts, memory_mode)
            ok += s
            att += a
        return ok, att, 0
    pa = prepare_zero_frames(params, gen, size, max_restarts, memory_mode)
    pb = prepare_zero_frames(params, gen, size, max_restarts, memory_mode)
    cc = compile_circuit(encoded_grover_circuit())
    err = sample_circuit_errors(cc, params, gen, size, memory_mode)
    x, _ = propagate_frames(cc, err.x, err.z, pa.x | (pb.x << BLOCK), pa.z | (pb.z << BLOCK))
    good = pa.accepted & pb.accepted
    success = good & (logical_bits(x) == 0) & (logical_bits(x >> BLOCK) == 0)
    return int(success.sum()), int(pa.attempts.sum() + pb.attempts.sum()), int((~good).sum())


def run_encoded_experiment(
    epsilon: float,
    C_ratio: float,
    n_trajectories: int,
    master_seed: int,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    max_restarts: int = DEFAULT_MAX_RESTARTS,
    memory_mode: str = "additive",
    method: str = "frames",
) -> EncodedResult:
    """Encoded versus bare n=2 Grover success at ``(epsilon, epsilon / C_ratio)``.

    Success means both blocks decode to logical 0 after the terminal
    readout. Trajectories whose preparation runs out of restarts fail.
    """
    if method not in ("frames", "dense"):
        raise ValueError("method must be 'frames' or 'dense'")
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    params = NoiseParams.from_ratio(epsilon, C_ratio)
    full, rest = divmod(n_trajectories, chunk_size)
    sizes = [chunk_size] * full + ([rest] if rest else [])
    jobs = [(params, c, s, master_seed, max_restarts, memory_mode, method) for c, s in enumerate(sizes)]
    parts = _map(_encoded_chunk, jobs, workers)
    ok = sum(p[0] for p in parts)
    att = sum(p[1] for p in parts)
    fails = sum(p[2] for p in parts)
    p_enc = ok / n_trajectories
    se_enc = math.sqrt(max(p_enc * (1 - p_enc), 0.0) / max(n_trajectories - 1, 1))
    bare = estimate_success_curve(2, params, 1, n_trajectories, master_seed,
                                  chunk_size=chunk_size, workers=workers, memory_mode=memory_mode)
    return EncodedResult(
        epsilon=params.epsilon,
        gamma=params.gamma,
        C=C_ratio,
        encoded_ps=p_enc,
        encoded_stderr=se_enc,
        bare_ps=float(bare.p_success[1]),
        bare_stderr=float(bare.std_err[1]),
        mean_attempts=att / (2 * n_trajectories),
        n_traj=n_trajectories,
        seed=master_seed,
        prep_failures=fails,
        meta={"generator": generator_info(), "method": method, "max_restarts": max_restarts,
              "memory_mode": memory_mode, "chunk_size": chunk_size},
    )


@dataclass
class PrepScaling:
    epsilons: list
    rates: list
    std_errs: list
    slope: float
    intercept: float
    n_traj: int


def ft_prep_error_rate(epsilon: float, C_ratio: float, n_trajectories: int, master_seed: int,
                       chunk_size: int = 1 << 16, max_restarts: int = DEFAULT_MAX_RESTARTS,
                       memory_mode: str = "additive") -> tuple[float, float]:
    """Probability that an accepted |0_E> decodes to logical 1 (frame route)."""
    params = NoiseParams.from_ratio(epsilon, C_ratio)
    bad = acc = 0
    done = 0
    chunk = 0
    while done < n_trajectories:
        size = min(chunk_size, n_trajectories - done)
        gen = RandomStream(master_seed, chunk, STEANE_DOMAIN + 1).generator
        prep = prepare_zero_frames(params, gen, size, max_restarts, memory_mode)
        bad += int(prep.logical_errors.sum())
        acc += int(prep.accepted.sum())
        done += size
        chunk += 1
    p = bad / acc if acc else math.nan
    return p, math.sqrt(p * (1 - p) / acc) if acc else math.nan


def ft_prep_scaling(epsilons: Sequence[float], n_trajectories: int, master_seed: int, C_ratio: float = 1.0,
                    **kwargs) -> PrepScaling:
    """Log-log slope of the post-acceptance logical error rate against epsilon."""
    rates, ses = [], []
    for e in epsilons:
        p, s = ft_prep_error_rate(e, C_ratio, n_trajectories, master_seed, **kwargs)
        rates.append(p)
        ses.append(s)
    if min(rates) <= 0:
        raise ValueError("a logical error rate is zero; increase n_trajectories")
    slope, intercept = np.polyfit(np.log(epsilons), np.log(rates), 1)
    return PrepScaling(list(epsilons), rates, ses, float(slope), float(intercept), n_trajectories)

"""Dense state-vector kernel.

Bit order: qubit 0 is the least significant bit of the basis index, so the
basis state ``|q_{m-1} ... q_1 q_0>`` has index ``sum(q_i << i)``.

All kernels work in place on amplitude arrays shaped ``(batch, 2**m)``; a
single :class:`StateVector` is handled as a batch of one. Pauli operators
are carried as ``(x_mask, z_mask)`` integer bitmasks plus a power of ``i``,
meaning ``i**phase * X^x Z^z`` with Z applied first. ``Y = i X Z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .circuit import Gate

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
PAULI_LETTERS = "IXYZ"


class QStateError(ValueError):
    pass


class StateVector:
    """Amplitudes of an ``m``-qubit pure state."""

    def __init__(self, amplitudes, num_qubits: int | None = None):
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        m = int(round(np.log2(amps.size))) if amps.size else 0
        if amps.size != 1 << m or m < 1:
            raise QStateError(f"amplitude count {amps.size} is not 2**m with m >= 1")
        if num_qubits is not None and num_qubits != m:
            raise QStateError(f"expected {1 << num_qubits} amplitudes, got {amps.size}")
        self.amplitudes = amps
        self.num_qubits = m

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self, other: "StateVector") -> "StateVector":
        """``other`` becomes the high qubits: ``|other> (x) |self>``."""
        return StateVector(np.kron(other.amplitudes, self.amplitudes))

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


def new_basis_state(m: int, index: int) -> StateVector:
    if m < 1:
        raise QStateError("need at least one qubit")
    if not 0 <= index < (1 << m):
        raise QStateError(f"basis index {index} out of range for {m} qubits")
    amps = np.zeros(1 << m, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


@dataclass(frozen=True)
class PauliWord:
    """Tensor product of single-qubit Paulis on a support set."""

    letters: tuple[tuple[int, str], ...]

    def __init__(self, letters: Mapping[int, str] | Sequence[tuple[int, str]] = ()):
        items = letters.items() if isinstance(letters, Mapping) else letters
        items = tuple(sorted((int(q), str(p).upper()) for q, p in items))
        qs = [q for q, _ in items]
        if len(set(qs)) != len(qs):
            raise QStateError("repeated qubit in Pauli word")
        for q, p in items:
            if q < 0:
                raise QStateError("negative qubit in Pauli word")
            if p not in PAULI_LETTERS:
                raise QStateError(f"bad Pauli letter {p!r}")
        object.__setattr__(self, "letters", items)

    @classmethod
    def from_masks(cls, x_mask: int, z_mask: int, support: Sequence[int] = ()) -> "PauliWord":
        qs = set(support)
        bits = int(x_mask) | int(z_mask)
        q = 0
        while bits >> q:
            if (bits >> q) & 1:
                qs.add(q)
            q += 1
        out = {}
        for q in qs:
            xb, zb = (int(x_mask) >> q) & 1, (int(z_mask) >> q) & 1
            out[q] = PAULI_LETTERS[{(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(xb, zb)]]
        return cls(out)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.letters)

    @property
    def x_mask(self) -> int:
        return sum(1 << q for q, p in self.letters if p in "XY")

    @property
    def z_mask(self) -> int:
        return sum(1 << q for q, p in self.letters if p in "YZ")

    @property
    def weight(self) -> int:
        return sum(1 for _, p in self.letters if p != "I")

    @property
    def is_trivial(self) -> bool:
        return self.weight == 0

    def __str__(self):
        return "".join(f"{p}{q}" for q, p in self.letters) or "I"


# ---------------------------------------------------------------- kernels


def _split(amps: np.ndarray, q: int, m: int) -> np.ndarray:
    return amps.reshape(amps.shape[0], 1 << (m - 1 - q), 2, 1 << q)


def _axis(q: int, m: int) -> int:
    # (batch, 2, ..., 2) with axis 1 holding the most significant qubit
    return m - q


def _slice(m: int, fixed: Mapping[int, int]) -> tuple:
    idx = [slice(None)] * (m + 1)
    for q, b in fixed.items():
        idx[_axis(q, m)] = b
    return tuple(idx)


def apply_gate_batch(amps: np.ndarray, gate: Gate, m: int) -> None:
    """Apply ``gate`` in place to every row of ``amps`` (shape ``(B, 2**m)``)."""
    kind, qs = gate.kind, gate.qubits
    if kind == "MEASURE":
        return
    if kind in ("H", "X", "Y", "Z"):
        a = _split(amps, qs[0], m)
        if kind == "Z":
            a[:, :, 1, :] *= -1
            return
        a0 = a[:, :, 0, :].copy()
        if kind == "H":
            a1 = a[:, :, 1, :]
            a[:, :, 0, :] += a1
            a[:, :, 0, :] *= _INV_SQRT2
            a1 *= -1
            a1 += a0
            a1 *= _INV_SQRT2
        elif kind == "X":
            a[:, :, 0, :] = a[:, :, 1, :]
            a[:, :, 1, :] = a0
        else:  # Y|0> = i|1>, Y|1> = -i|0>
            a[:, :, 0, :] = -1j * a[:, :, 1, :]
            a[:, :, 1, :] = 1j * a0
        return
    t = amps.reshape((amps.shape[0],) + (2,) * m)
    if kind == "CZ":
        t[_slice(m, {qs[0]: 1, qs[1]: 1})] *= -1
        return
    controls, target = qs[:-1], qs[-1]
    fixed = {c: 1 for c in controls}
    s0 = _slice(m, {**fixed, target: 0})
    s1 = _slice(m, {**fixed, target: 1})
    tmp = t[s0].copy()
    t[s0] = t[s1]
    t[s1] = tmp


def _popcount_parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    parity = np.zeros_like(v)
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    return parity


def apply_pauli_masks(
    amps: np.ndarray,
    m: int,
    x_mask: np.ndarray,
    z_mask: np.ndarray,
    phase: np.ndarray | None = None,
) -> None:
    """Apply per-row Paulis ``i**phase X^x Z^z`` in place.

    Rows whose operator is the identity (up to phase 0) are not touched.
    """
    x_mask = np.asarray(x_mask, dtype=np.int64)
    z_mask = np.asarray(z_mask, dtype=np.int64)
    if phase is None:
        phase = np.zeros_like(x_mask)
    phase = np.asarray(phase, dtype=np.int64) & 3
    rows = np.flatnonzero((x_mask | z_mask | phase) != 0)
    if rows.size == 0:
        return
    xm = x_mask[rows][:, None]
    zm = z_mask[rows][:, None]
    idx = np.arange(1 << m, dtype=np.int64)[None, :]
    src = idx ^ xm
    sub = np.take_along_axis(amps[rows], src, axis=1)
    sign = _popcount_parity(src & zm)
    sub *= (1 - 2 * sign)
    sub *= (1j ** phase[rows])[:, None]
    amps[rows] = sub


def compose_pauli(x1, z1, p1, x2, z2, p2):
    """Masks of ``P2 . P1`` (P1 applied first), exact phase tracked mod 4."""
    # X^x2 Z^z2 X^x1 Z^z1 = (-1)^{|z2 & x1|} X^(x1^x2) Z^(z1^z2)
    sign = _popcount_parity(np.asarray(z2 & x1, dtype=np.int64))
    return x1 ^ x2, z1 ^ z2, (p1 + p2 + 2 * sign) & 3


def _check_qubits(qubits: Sequence[int], m: int) -> None:
    if len(set(qubits)) != len(qubits):
        raise QStateError(f"repeated qubit index in {tuple(qubits)}")
    for q in qubits:
        if not 0 <= q < m:
            raise QStateError(f"qubit {q} outside {m}-qubit register")


# ---------------------------------------------------------- single state


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_qubits(gate.qubits, state.num_qubits)
    apply_gate_batch(state.amplitudes[None, :], gate, state.num_qubits)
    return state


def apply_pauli_word(state: StateVector, word: PauliWord) -> StateVector:
    _check_qubits(word.support, state.num_qubits)
    y = sum(1 for _, p in word.letters if p == "Y")
    apply_pauli_masks(
        state.amplitudes[None, :],
        state.num_qubits,
        np.array([word.x_mask]),
        np.array([word.z_mask]),
        np.array([y]),
    )
    return state


def marginal_distribution(amps: np.ndarray, m: int, qubits: Sequence[int]) -> np.ndarray:
    """Outcome probabilities of ``qubits`` for each row.

    Returns shape ``(B, 2**k)`` where outcome bit ``j`` belongs to ``qubits[j]``.
    """
    probs = np.abs(amps.reshape(amps.shape[0], -1)) ** 2
    qubits = list(qubits)
    if qubits == list(range(len(qubits))):
        k = len(qubits)
        return probs.reshape(probs.shape[0], -1, 1 << k).sum(axis=1)
    idx = np.arange(1 << m)
    outcome = np.zeros(1 << m, dtype=np.int64)
    for j, q in enumerate(qubits):
        outcome |= ((idx >> q) & 1) << j
    out = np.zeros((probs.shape[0], 1 << len(qubits)))
    for b in range(probs.shape[0]):
        out[b] = np.bincount(outcome, weights=probs[b], minlength=1 << len(qubits))
    return out


def marginal_probability(state: StateVector, qubit_subset: Sequence[int], outcome_bits) -> float:
    """Probability that ``qubit_subset`` reads ``outcome_bits`` (same order)."""
    qubit_subset = list(qubit_subset)
    bits = [int(b) for b in outcome_bits]
    if len(bits) != len(qubit_subset):
        raise QStateError("outcome length does not match qubit subset")
    _check_qubits(qubit_subset, state.num_qubits)
    if any(b not in (0, 1) for b in bits):
        raise QStateError("outcome bits must be 0 or 1")
    dist = marginal_distribution(state.amplitudes[None, :], state.num_qubits, qubit_subset)[0]
    return float(dist[sum(b << j for j, b in enumerate(bits))])


def measure_qubits(state: StateVector, qubit_subset: Sequence[int], rng) -> tuple[tuple[int, ...], StateVector]:
    """Projective Z-basis measurement; collapses ``state`` in place."""
    qubit_subset = list(qubit_subset)
    m = state.num_qubits
    _check_qubits(qubit_subset, m)
    gen = getattr(rng, "generator", rng)
    dist = marginal_distribution(state.amplitudes[None, :], m, qubit_subset)[0]
    cdf = np.cumsum(dist)
    u = gen.random() * cdf[-1]
    outcome = int(np.searchsorted(cdf, u, side="right"))
    outcome = min(outcome, dist.size - 1)
    if dist[outcome] <= 0.0:
        raise RuntimeError("measurement selected a zero-probability branch")
    idx = np.arange(1 << m)
    keep = np.ones(1 << m, dtype=bool)
    bits = tuple((outcome >> j) & 1 for j in range(len(qubit_subset)))
    for q, b in zip(qubit_subset, bits):
        keep &= ((idx >> q) & 1) == b
    state.amplitudes[~keep] = 0.0
    state.amplitudes /= np.sqrt(dist[outcome])
    return bits, state


# ------------------------------------------------- compiled circuit kernel

OP_CODES = {"H": 0, "X": 1, "Y": 2, "Z": 3, "CNOT": 4, "CZ": 5, "TOFFOLI": 6, "MEASURE": 7}


@njit(cache=True)
def _parity(v):
    p = 0
    while v:
        p ^= v & 1
        v >>= 1
    return p


@njit(cache=True)
def _apply_op(row, kind, q0, q1, q2):
    n = row.size
    if kind == 0:
        bit = 1 << q0
        s = 0.7071067811865476
        for i in range(n):
            if i & bit == 0:
                a0 = row[i]
                a1 = row[i | bit]
                row[i] = (a0 + a1) * s
                row[i | bit] = (a0 - a1) * s
    elif kind == 1 or kind == 2:
        bit = 1 << q0
        for i in range(n):
            if i & bit == 0:
                a0 = row[i]
                a1 = row[i | bit]
                if kind == 1:
                    row[i] = a1
                    row[i | bit] = a0
                else:
                    row[i] = -1j * a1
                    row[i | bit] = 1j * a0
    elif kind == 3:
        bit = 1 << q0
        for i in range(n):
            if i & bit:
                row[i] = -row[i]
    elif kind == 5:
        mask = (1 << q0) | (1 << q1)
        for i in range(n):
            if i & mask == mask:
                row[i] = -row[i]
    elif kind == 4 or kind == 6:
        if kind == 4:
            cmask = 1 << q0
            tbit = 1 << q1
        else:
            cmask = (1 << q0) | (1 << q1)
            tbit = 1 << q2
        for i in range(n):
            if i & cmask == cmask and i & tbit == 0:
                a0 = row[i]
                row[i] = row[i | tbit]
                row[i | tbit] = a0


@njit(cache=True)
def _apply_pauli_row(row, buf, x, z, ph):
    n = row.size
    f = 1.0 + 0.0j
    ph = ph & 3
    if ph == 1:
        f = 1j
    elif ph == 2:
        f = -1.0 + 0.0j
    elif ph == 3:
        f = -1j
    for i in range(n):
        j = i ^ x
        v = row[j]
        if _parity(j & z):
            v = -v
        buf[i] = f * v
    for i in range(n):
        row[i] = buf[i]


@njit(cache=True)
def evolve_batch(amps, kinds, qubits, layer_start, ex, ez, eph):
    """Apply a compiled circuit to every row of ``amps`` in place.

    Layer ``l`` runs ops ``layer_start[l]:layer_start[l+1]`` and then the
    row's Pauli ``i**eph X^ex Z^ez`` for that layer.
    """
    n_rows = amps.shape[0]
    n_layers = layer_start.size - 1
    buf = np.empty(amps.shape[1], dtype=amps.dtype)
    for b in range(n_rows):
        row = amps[b]
        for lay in range(n_layers):
            for k in range(layer_start[lay], layer_start[lay + 1]):
                _apply_op(row, kinds[k], qubits[k, 0], qubits[k, 1], qubits[k, 2])
            x = ex[b, lay]
            z = ez[b, lay]
            ph = eph[b, lay]
            if x != 0 or z != 0 or (ph & 3) != 0:
                _apply_pauli_row(row, buf, x, z, ph)

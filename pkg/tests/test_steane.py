import math

import numpy as np
import pytest

from noisygrover import steane
from noisygrover.noise import NoiseParams, RandomStream
from noisygrover.noise import compile_circuit
from noisygrover.qstate import StateVector, apply_gate, apply_pauli_masks
from oracles import logical_zero_from_generators


def run_ideal(gates, state):
    for g in gates:
        apply_gate(state, g)
    return state


def test_tables():
    t = steane.code_tables()
    assert len(t.dual_codewords) == 8 and len(t.codewords) == 16
    assert steane.min_distance(t.dual_codewords) == 4 and steane.min_distance(t.codewords) == 3
    assert set(t.dual_codewords) <= set(t.codewords)
    assert 0b1111111 in t.codewords and 0b1111111 not in t.dual_codewords


def test_logical_zero():
    z = steane.logical_zero_ideal().amplitudes
    assert math.isclose(z[0].real, 1 / math.sqrt(8))
    assert np.count_nonzero(z) == 8
    np.testing.assert_allclose(z, logical_zero_from_generators(steane.code_tables().generator))


def test_synthesis_network():
    c = steane.build_zero_synthesis_network()
    kinds = [g.kind for g in c.gates]
    assert kinds.count("H") == 3
    assert kinds.count("CNOT") == sum(bin(r).count("1") for r in steane.code_tables().generator) - 3
    out = run_ideal(c.gates, StateVector(np.eye(1, 128, dtype=complex)[0]))
    np.testing.assert_allclose(out.amplitudes, steane.logical_zero_ideal().amplitudes, atol=1e-12)


def test_transversal_logical_action():
    zero, one = steane.logical_zero_ideal(), steane.logical_one_ideal()
    blk = list(range(7))
    x = run_ideal(steane.transversal_gate("X", [blk]), zero.copy())
    np.testing.assert_allclose(x.amplitudes, one.amplitudes, atol=1e-12)
    h = run_ideal(steane.transversal_gate("H", [blk]), zero.copy())
    np.testing.assert_allclose(h.amplitudes, (zero.amplitudes + one.amplitudes) / math.sqrt(2), atol=1e-12)
    # |+_E>|0_E> -> encoded Bell state
    bell = run_ideal(steane.transversal_gate("CNOT", [blk, list(range(7, 14))]), h.tensor(zero))
    ref = (zero.tensor(zero).amplitudes + one.tensor(one).amplitudes) / math.sqrt(2)
    np.testing.assert_allclose(bell.amplitudes, ref, atol=1e-12)
    with pytest.raises(ValueError):
        steane.transversal_gate("CNOT", [blk, blk])
    with pytest.raises(ValueError):
        steane.transversal_gate("TOFFOLI", [blk])


def test_transversal_cnot_keeps_codespace():
    zero, one = steane.logical_zero_ideal(), steane.logical_one_ideal()
    out = run_ideal(steane.transversal_gate("CNOT", [range(7), range(7, 14)]), one.tensor(zero))
    probs = out.probabilities()
    t = steane.code_tables()
    for w in np.nonzero(probs > 1e-12)[0]:
        assert t.syndrome(int(w) & 127) == 0 and t.syndrome(int(w) >> 7) == 0
    np.testing.assert_allclose(out.amplitudes, one.tensor(one).amplitudes, atol=1e-12)


def test_weight_and_phase_equivalence():
    r = steane.weight_equivalence_check()
    assert len(r["forward"]) == 21 and len(r["inverse"]) == 7
    assert all(bin(u).count("1") == 1 for u in r["forward"].values())
    assert len(steane.phase_equivalence_check()) == 21


def test_classical_decode():
    assert steane.classical_decode(0) == (0, 0, False)
    assert steane.classical_decode([1] * 7) == (1, 127, False)
    for c in steane.code_tables().dual_codewords:
        for j in range(7):
            assert steane.classical_decode(c ^ (1 << j)) == (0, c, True)
    with pytest.raises(ValueError):
        steane.classical_decode(128)


def test_verification_rejects_everything_but_stabilizers():
    missed = [v for v in range(1, 128) if not steane.verification_detects(v)]
    assert sorted(missed) == sorted(set(steane.code_tables().dual_codewords) - {0})


def test_noiseless_prep_and_encoded_grover():
    st, attempts = steane.prepare_zero_ft(NoiseParams(0, 0), 0)
    assert attempts == 1
    np.testing.assert_allclose(st.amplitudes, steane.logical_zero_ideal().amplitudes, atol=1e-12)
    from noisygrover.suite import encoded_noiseless_success

    assert abs(encoded_noiseless_success() - 1) < 1e-9
    r = steane.run_encoded_experiment(0, 1, 50, 0)
    assert r.encoded_ps == 1 and r.bare_ps == pytest.approx(1)
    with pytest.raises(ValueError):
        steane.prepare_zero_ft(NoiseParams(0, 0), 0, max_restarts=0)


def _apply_masks(v, x, z):
    buf = v.reshape(1, -1).copy()
    apply_pauli_masks(buf, 14, np.array([x]), np.array([z]))
    return buf[0]


@pytest.mark.parametrize("circuit", [steane.ft_prep_circuit, steane.encoded_grover_circuit])
def test_frames_match_state_vector_error_propagation(circuit):
    """Errors injected layer by layer equal the propagated frame at the end (up to phase)."""
    c = circuit()
    cc = compile_circuit(c)
    rng = np.random.default_rng(1)
    rows, L = 3, c.depth
    ex = rng.integers(0, 1 << 14, size=(rows, L)) * (rng.random((rows, L)) < 0.3)
    ez = rng.integers(0, 1 << 14, size=(rows, L)) * (rng.random((rows, L)) < 0.3)
    fx, fz = steane.propagate_frames(cc, ex, ez)
    start = steane.logical_zero_ideal().tensor(steane.logical_one_ideal()).amplitudes
    for b in range(rows):
        noisy, ideal = start.copy(), start.copy()
        for layer, gates in enumerate(c.layers):
            for g in gates:
                noisy = apply_gate(StateVector(noisy), g).amplitudes
                ideal = apply_gate(StateVector(ideal), g).amplitudes
            noisy = _apply_masks(noisy, int(ex[b, layer]), int(ez[b, layer]))
        framed = _apply_masks(ideal, int(fx[b]), int(fz[b]))
        assert abs(abs(np.vdot(framed, noisy)) - 1) < 1e-9


def test_ft_prep_acceptance_and_errors_statistics():
    gen = RandomStream(4).generator
    prep = steane.prepare_zero_frames(NoiseParams(0.01, 0.01), gen, 20_000)
    assert prep.accepted.all()
    assert 1 < prep.attempts.mean() < 2
    # a single fault never yields a logical error, so rates stay well below eps
    assert prep.logical_errors.mean() < 0.01


def test_dense_and_frame_routes_agree():
    d = steane.run_encoded_experiment(0.02, 1, 300, 8, method="dense")
    f = steane.run_encoded_experiment(0.02, 1, 20_000, 8)
    assert abs(d.encoded_ps - f.encoded_ps) < 4 * math.hypot(d.encoded_stderr, f.encoded_stderr)


def test_encoded_workers_invariance():
    a = steane.run_encoded_experiment(0.004, 1, 2000, 3, chunk_size=500, workers=1)
    b = steane.run_encoded_experiment(0.004, 1, 2000, 3, chunk_size=500, workers=2)
    assert a.row() == b.row()


def test_prep_exhaustion_counts_as_failure():
    r = steane.run_encoded_experiment(0.3, 1, 200, 1, max_restarts=1)
    assert r.prep_failures > 0 and r.encoded_ps < 1
    with pytest.raises(steane.PreparationFailure):
        steane.prepare_zero_ft(NoiseParams(0.5, 0.5), 3, max_restarts=1)

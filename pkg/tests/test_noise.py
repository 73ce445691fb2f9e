import math

import numpy as np
import pytest
from scipy import stats

from noisygrover.circuit import CNOT, Circuit, H, TOFFOLI, build_grover_gate
from noisygrover.exact import exact_success_curve
from noisygrover.noise import (
    NoiseParams,
    RandomStream,
    as_generator,
    compile_circuit,
    gate_error_index,
    memory_codes,
    run_noisy_trajectory,
    sample_circuit_errors,
    sample_gate_error,
    sample_memory_word,
)
from noisygrover.qstate import StateVector, apply_gate, apply_pauli_word


LETTER_OF = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def probe():
    return Circuit(6, 0, ((H(0), CNOT(1, 2), TOFFOLI(3, 4, 5)),))


def test_params_validation_and_ratio():
    with pytest.raises(ValueError):
        NoiseParams(-0.1, 0)
    with pytest.raises(ValueError):
        NoiseParams(0.1, 1.5)
    p = NoiseParams.from_ratio(0.01, 2)
    assert p.gamma == 0.005 and p.ratio == 2
    assert NoiseParams.from_ratio(0.01, math.inf).gamma == 0
    assert NoiseParams.from_inverse(3000, 5000) == NoiseParams(1 / 3000, 1 / 5000)
    assert NoiseParams(0, 0).noiseless


def test_random_stream_is_reproducible_and_separated():
    a = RandomStream(5, 1).random(4)
    assert np.array_equal(a, RandomStream(5, 1).random(4))
    assert not np.array_equal(a, RandomStream(5, 2).random(4))
    assert not np.array_equal(a, RandomStream(5, 1, domain=3).random(4))
    assert np.array_equal(as_generator(5).random(3), RandomStream(5).random(3))


def test_decoders_cover_their_ranges():
    u = np.linspace(0, 0.999999, 100_001)
    codes = memory_codes(u, 0.3)
    assert set(np.unique(codes)) == {0, 1, 2, 3}
    for arity in (1, 2, 3):
        idx = gate_error_index(u, 0.3, arity)
        assert idx.max() == 4 ** arity - 1 and (idx[u >= 0.3] == 0).all()


@pytest.mark.parametrize("arity", [1, 2, 3])
def test_single_gate_sampler_chi_square(arity):
    gate = [H(0), CNOT(0, 1), TOFFOLI(0, 1, 2)][arity - 1]
    gen = np.random.default_rng(arity)
    counts = {}
    draws = 20_000
    for _ in range(draws):
        w = sample_gate_error(gate, 0.5, gen)
        key = (w.x_mask, w.z_mask)
        counts[key] = counts.get(key, 0) + 1
    k = 4 ** arity - 1
    assert len(counts) == k + 1
    errs = [c for w, c in counts.items() if w != (0, 0)]
    exp = np.full(k, sum(errs) / k)
    assert stats.chisquare(errs, exp).pvalue > 1e-3
    assert abs(counts[(0, 0)] / draws - 0.5) < 4 * math.sqrt(0.25 / draws)


def test_memory_word_sampler_frequencies():
    gen = np.random.default_rng(0)
    letters = {"I": 0, "X": 0, "Y": 0, "Z": 0}
    for _ in range(20_000):
        w = sample_memory_word([0], 0.3, gen)
        letters[LETTER_OF[(w.x_mask & 1, w.z_mask & 1)]] += 1
    obs = [letters[c] for c in "IXYZ"]
    assert stats.chisquare(obs, 20_000 * np.array([0.7, 0.1, 0.1, 0.1])).pvalue > 1e-3


def test_common_random_numbers_give_nested_error_sets():
    cc = compile_circuit(build_grover_gate(3))
    lo = sample_circuit_errors(cc, NoiseParams(0.01, 0.01), RandomStream(1).generator, 500)
    hi = sample_circuit_errors(cc, NoiseParams(0.05, 0.05), RandomStream(1).generator, 500)
    assert ((lo.memory == 0) | (hi.memory != 0)).all()
    assert ((lo.gate_words == 0) | (hi.gate_words != 0)).all()


def test_folded_mode_skips_busy_qubits():
    cc = compile_circuit(probe())
    err = sample_circuit_errors(cc, NoiseParams(0.9, 0), RandomStream(2).generator, 200, "folded")
    assert (err.memory == 0).all()  # every qubit of the probe is busy
    add = sample_circuit_errors(cc, NoiseParams(0.9, 0), RandomStream(2).generator, 200)
    assert (add.memory != 0).mean() > 0.8


def test_trace_matches_state_evolution():
    c = build_grover_gate(3)
    v = np.zeros(8, dtype=complex)
    v[:] = 1 / math.sqrt(8)
    trace = []
    params = NoiseParams(0.2, 0.2)
    out = run_noisy_trajectory(c, params, RandomStream(4), StateVector(v.copy()), trace=trace)
    s = StateVector(v.copy())
    it = iter(trace)
    for layer in c.layers:
        for g in layer:
            apply_gate(s, g)
        for g in layer:
            kind, _, gate, word = next(it)
            assert kind == "gate" and gate == g
            apply_pauli_word(s, word)
        kind, _, _, word = next(it)
        assert kind == "memory"
        apply_pauli_word(s, word)
    np.testing.assert_allclose(s.amplitudes, out.amplitudes, atol=1e-12)
    assert any(not w.is_trivial for *_, w in trace)


@pytest.mark.parametrize("mode", ["additive", "folded", "doubled"])
def test_modes_match_exact_channel_evolution(mode):
    from noisygrover.mc import estimate_success_curve

    params = NoiseParams(0.03, 0.02)
    exact = exact_success_curve(3, params, 2, mode)
    c = estimate_success_curve(3, params, 2, 20_000, 17, memory_mode=mode)
    assert (np.abs(c.p_success - exact) <= 4 * c.std_err + 1e-12).all()


def test_unknown_memory_mode():
    with pytest.raises(ValueError):
        sample_circuit_errors(compile_circuit(probe()), NoiseParams(0.1, 0), RandomStream(0).generator, 2, "other")

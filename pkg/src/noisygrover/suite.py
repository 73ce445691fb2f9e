"""Acceptance battery at desk scale.

Each ``criterion_*`` function runs one check and returns a
:class:`CriterionResult`; :func:`run_suite` runs a selection and
:func:`format_result` renders the one-line verdict.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import analysis, steane
from .circuit import CNOT, TOFFOLI, Circuit, H, noiseless_success
from .exact import exact_success_curve
from .mc import coefficient_histogram, estimate_success_curve
from .noise import NoiseParams, RandomStream, compile_circuit, run_noisy_trajectory, sample_circuit_errors
from .qstate import apply_pauli_word


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)
    seconds: float = 0.0


def format_result(r: CriterionResult) -> str:
    return f"[{'PASS' if r.passed else 'FAIL'}] {r.number:2d} {r.title}: {r.detail} ({r.seconds:.1f}s)"


def _ok(flag: bool) -> str:
    return "ok" if flag else "FAILED"


# 1 -----------------------------------------------------------------------


def criterion_noiseless(workers: int = 1) -> CriterionResult:
    worst = {}
    for n in range(2, 8):
        T = 2 * math.floor(math.pi * math.sqrt(2 ** n) / 4)
        c = estimate_success_curve(n, NoiseParams(0, 0), T, 1, 0, workers=workers)
        ref = np.array([noiseless_success(n, k) for k in range(T + 1)])
        worst[n] = float(np.max(np.abs(c.p_success - ref)))
    n2 = estimate_success_curve(2, NoiseParams(0, 0), 1, 1, 0).p_success[1]
    passed = max(worst.values()) < 1e-9 and abs(n2 - 1) < 1e-12
    detail = f"max |P_sim - closed form| = {max(worst.values()):.1e} (< 1e-9); n=2,k=1: P = {n2:.15f}"
    return CriterionResult(1, "noiseless oracle equivalence", bool(passed), detail, {"max_dev": worst, "n2_k1": float(n2)})


# 2 -----------------------------------------------------------------------


def _sampler_probe() -> Circuit:
    return Circuit(6, 0, ((H(0), CNOT(1, 2), TOFFOLI(3, 4, 5)),))


def criterion_error_distributions(draws: int = 400_000, seed: int = 2) -> CriterionResult:
    eps, gamma = 0.3, 0.3
    cc = compile_circuit(_sampler_probe())
    gen = RandomStream(seed, 0, 9).generator
    pvals = {}
    err = sample_circuit_errors(cc, NoiseParams(eps, gamma), gen, draws)
    mem = err.memory[:, 0, :].ravel()
    obs = np.bincount(mem, minlength=4)
    exp = mem.size * np.array([1 - eps, eps / 3, eps / 3, eps / 3])
    pvals["memory"] = float(stats.chisquare(obs, exp).pvalue)
    for j, arity in enumerate((1, 2, 3)):
        k = 4 ** arity
        obs = np.bincount(err.gate_words[:, j], minlength=k)
        exp = draws * np.array([1 - gamma] + [gamma / (k - 1)] * (k - 1))
        pvals[f"gate{arity}"] = float(stats.chisquare(obs, exp).pvalue)
    passed = min(pvals.values()) > 1e-3
    detail = ", ".join(f"{k} p={v:.3f}" for k, v in pvals.items()) + f" ({draws} draws each, need p > 0.001)"
    return CriterionResult(2, "error-model distributions", passed, detail, pvals)


# 3 -----------------------------------------------------------------------


def criterion_branch_sum(n_traj: int = 100_000, seed: int = 3, workers: int = 1) -> CriterionResult:
    params = NoiseParams(0.01, 0.01)
    exact = float(exact_success_curve(2, params, 1)[1])
    c = estimate_success_curve(2, params, 1, n_traj, seed, workers=workers)
    p, se = float(c.p_success[1]), float(c.std_err[1])
    z = abs(p - exact) / se
    detail = f"MC {p:.5f} +- {se:.5f} vs exact {exact:.5f}: {z:.2f} sigma (< 3)"
    return CriterionResult(3, "exact branch-sum equivalence", z < 3, detail, {"mc": p, "stderr": se, "exact": exact})


# 4 -----------------------------------------------------------------------

REFERENCE_LAMBDA = 0.0282


def criterion_damping(n_traj: int = 50_000, seed: int = 7, workers: int = 1) -> CriterionResult:
    c = estimate_success_curve(4, NoiseParams.from_inverse(3000, 5000), 40, n_traj, seed, workers=workers)
    fit = analysis.fit_curve_damping(c)
    form = fit.residual_rms < 0.1
    lo, hi = 0.7 * REFERENCE_LAMBDA, 1.3 * REFERENCE_LAMBDA
    mag = lo <= fit.lam <= hi
    detail = (
        f"maxima t={[t for t, _ in fit.points_used]}; ln-residual rms {fit.residual_rms:.3f} < 0.1 {_ok(form)}; "
        f"lambda {fit.lam:.4f} in [{lo:.4f}, {hi:.4f}] {_ok(mag)} (soft)"
    )
    return CriterionResult(4, "damping law", form and mag, detail,
                           {"fit": fit.to_dict(), "form_ok": form, "lambda_ok": mag})


# 5 -----------------------------------------------------------------------


def criterion_first_max_drift(seed: int = 13, per_decade: int = 20, workers: int = 1) -> CriterionResult:
    grid = analysis.epsilon_grid(1e-4, 1e-1, per_decade)
    cfg = analysis.McConfig(seed=seed, workers=workers)
    pts = analysis.first_max_scan(5, grid, 1.0, cfg)
    t1 = [p.t1 for p in pts]
    defined = [t for t in t1 if t is not None]
    tail_ok = all(t is None for t in t1[len(defined):])
    monotone = tail_ok and all(a >= b for a, b in zip(defined, defined[1:]))
    i = int(np.argmin(np.abs(np.log(grid * 2000))))
    near = [t1[j] for j in range(max(i - 1, 0), min(i + 2, len(grid)))]
    hit = 4 in near
    disc = analysis.discontinuity_points(pts)
    A, B = analysis.fit_log_drift(disc) if len(disc) >= 2 else (math.nan, math.nan)
    detail = (f"t1 non-increasing {_ok(monotone)}; t1 near 1/eps=2000: {near} contains 4 {_ok(hit)}; "
              f"drift fit t1 = {A:.3f} ln(eps) + {B:.3f}")
    return CriterionResult(5, "first-maximum drift", monotone and hit, detail,
                           {"grid": grid.tolist(), "t1": t1, "discontinuities": disc, "fit": (A, B)})


# 6 -----------------------------------------------------------------------


def criterion_weight_structure(n_traj: int = 20_000, seed: int = 6, workers: int = 1,
                               late=(30, 35, 40)) -> CriterionResult:
    h = coefficient_histogram(5, NoiseParams(1 / 2000, 1 / 2000), (4, *late), n_traj, seed, workers=workers)
    h4 = h[4]
    gap = h4.weight_mean[1] - h4.weight_mean[2]
    sig = math.hypot(h4.weight_std_err[1], h4.weight_std_err[2])
    ordered = gap > 3 * sig
    dev = {t: float(np.max(np.abs(h[t].mean - 1 / 32) / h[t].std_err)) for t in late}
    flat = max(dev.values()) < 3
    detail = (f"t=4 weight-1 {h4.weight_mean[1]:.5f} > weight-2 {h4.weight_mean[2]:.5f} by {gap / sig:.0f} sigma {_ok(ordered)}; "
              f"t>={late[0]} max |c^2 - 1/32| = {max(dev.values()):.0f} sigma (< 3) {_ok(flat)}, "
              f"P(searched) at t={late[0]}: {h[late[0]].mean[0]:.3f}")
    return CriterionResult(6, "weight structure of coefficients", ordered and flat, detail,
                           {"weight_mean": {t: v.weight_mean.tolist() for t, v in h.items()}, "late_sigma": dev})


# 7 -----------------------------------------------------------------------


def criterion_threshold_law(seed: int = 11, ns=(2, 3, 4, 5), workers: int = 1) -> CriterionResult:
    cfg = analysis.McConfig(seed=seed, workers=workers)
    res = [analysis.solve_threshold(n, 1.0, 0.5, cfg) for n in ns]
    fit = analysis.fit_threshold_law([(r.n, r.epsilon) for r in res], 1.0)
    r2 = fit.r_squared > 0.98
    a_ok = 0.8 <= fit.a <= 1.4
    decreasing = all(x.epsilon > y.epsilon for x, y in zip(res, res[1:]))
    emax = analysis.epsilon_max(1.1, 2.3802)
    nmax = analysis.max_qubits(1e-5, 1.1, 2.711)
    closed = round(emax, 4) == 0.0432 and nmax == 11
    eps_txt = ", ".join(f"n={r.n}: {r.epsilon:.3e}" for r in res)
    detail = (f"eps_th {eps_txt}; R^2 {fit.r_squared:.4f} > 0.98 {_ok(r2)}; a {fit.a:.3f} in [0.8, 1.4] {_ok(a_ok)}; "
              f"b {fit.b:.3f}; decreasing in n {_ok(decreasing)}; eps_max {emax:.4f}, n_max(1e-5) {nmax} {_ok(closed)}")
    return CriterionResult(7, "threshold law shape", r2 and a_ok and closed and decreasing, detail,
                           {"thresholds": [r.to_dict() for r in res], "fit": fit.to_dict()})


# 8 -----------------------------------------------------------------------


def criterion_steane_exact() -> CriterionResult:
    tables = steane.code_tables()
    rep = steane.verify_tables(tables)
    weq = steane.weight_equivalence_check(tables)
    peq = steane.phase_equivalence_check()
    zero = steane.logical_zero_ideal()
    detected, harmless = 0, 0
    for v in range(1, 128):
        if steane.verification_detects(v):
            detected += 1
        elif np.allclose(apply_pauli_word(zero.copy(), steane.x_word(v)).amplitudes, zero.amplitudes):
            harmless += 1
    verify_ok = detected + harmless == 127
    p00 = encoded_noiseless_success()
    grover_ok = abs(p00 - 1) < 1e-9
    passed = len(weq["forward"]) == 21 and len(weq["inverse"]) == 7 and len(peq) == 21 and verify_ok and grover_ok
    detail = (f"d(C_perp)={rep['dual_distance']}, d(C)={rep['code_distance']}; weight-2 map {len(weq['forward'])}/21, "
              f"phase map {len(peq)}/21; verification rejects {detected}/127, remaining {harmless} are stabilizers "
              f"(X_v|0_E> = |0_E>) {_ok(verify_ok)}; noiseless encoded P(00) = {p00:.12f}")
    return CriterionResult(8, "Steane properties", passed, detail,
                           {"tables": rep, "detected": detected, "stabilizers": harmless, "p00": p00})


def encoded_noiseless_success() -> float:
    a, _ = steane.prepare_zero_ft(NoiseParams(0, 0), 0)
    b, _ = steane.prepare_zero_ft(NoiseParams(0, 0), 0)
    out = run_noisy_trajectory(steane.encoded_grover_circuit(), NoiseParams(0, 0), None, a.tensor(b))
    probs = out.probabilities()
    words = np.arange(probs.size)
    la = steane.logical_bits(words & steane.BLOCK_MASK)
    lb = steane.logical_bits(words >> steane.BLOCK)
    return float(probs[(la == 0) & (lb == 0)].sum())


# 9 -----------------------------------------------------------------------


def criterion_ft_prep_scaling(n_traj: int = 2_000_000, seed: int = 9) -> CriterionResult:
    sc = steane.ft_prep_scaling([1e-3, 2e-3, 4e-3, 8e-3], n_traj, seed)
    passed = abs(sc.slope - 2.0) <= 0.5
    rates = ", ".join(f"{e:g}: {p:.2e}" for e, p in zip(sc.epsilons, sc.rates))
    detail = f"logical error after acceptance {rates}; log-log slope {sc.slope:.3f} (2.0 +- 0.5)"
    return CriterionResult(9, "FT preparation scaling", passed, detail,
                           {"rates": sc.rates, "stderr": sc.std_errs, "slope": sc.slope})


# 10 ----------------------------------------------------------------------

CROSSOVER_GRID = (5e-4, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2)


def criterion_encoded_crossover(n_traj: int = 20_000, seed: int = 10, workers: int = 1) -> CriterionResult:
    res = [steane.run_encoded_experiment(e, 1.0, n_traj, seed, workers=workers) for e in CROSSOVER_GRID]
    z = [(r.encoded_ps - r.bare_ps) / math.hypot(r.encoded_stderr, r.bare_stderr) for r in res]
    better = [i for i, v in enumerate(z) if v > 3]
    worse = [i for i, v in enumerate(z) if v < -3]
    passed = bool(better) and any(j > better[0] for j in worse)
    pairs = "; ".join(f"{r.epsilon:g}: {r.encoded_ps:.4f}/{r.bare_ps:.4f}" for r in res)
    detail = f"encoded/bare {pairs}; encoded ahead at 3 sigma {_ok(bool(better))}, reversed at larger eps {_ok(passed)}"
    return CriterionResult(10, "encoded crossover", passed, detail, {"rows": [r.row() for r in res], "z": z})


# 11 ----------------------------------------------------------------------


def criterion_determinism(workers: int = 2) -> CriterionResult:
    def runs(w):
        c = estimate_success_curve(4, NoiseParams.from_inverse(3000, 5000), 8, 5000, 21, chunk_size=512, workers=w)
        h = coefficient_histogram(3, NoiseParams(0.01, 0.01), (2, 5), 3000, 22, chunk_size=512, workers=w)
        e = steane.run_encoded_experiment(4e-3, 1.0, 3000, 23, chunk_size=512, workers=w)
        t = analysis.solve_threshold(2, 1.0, 0.5, analysis.McConfig(seed=24, workers=w, n_trajectories=4096,
                                                                    chunk_size=512))
        return (c.p_success.tobytes() + c.std_err.tobytes()
                + b"".join(v.mean.tobytes() for v in h.values())
                + repr(e.row()).encode() + repr(t.epsilon).encode())

    a, b = runs(1), runs(workers)
    passed = a == b
    return CriterionResult(11, "determinism across worker counts", passed,
                           f"curve, histogram, encoded and threshold outputs with 1 vs {workers} workers identical {_ok(passed)}")


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_noiseless,
    2: criterion_error_distributions,
    3: criterion_branch_sum,
    4: criterion_damping,
    5: criterion_first_max_drift,
    6: criterion_weight_structure,
    7: criterion_threshold_law,
    8: criterion_steane_exact,
    9: criterion_ft_prep_scaling,
    10: criterion_encoded_crossover,
    11: criterion_determinism,
}


def run_criterion(number: int, workers: int = 1) -> CriterionResult:
    fn = CRITERIA[number]
    t0 = time.perf_counter()
    kwargs = {"workers": workers} if "workers" in fn.__code__.co_varnames and number != 11 else {}
    r = fn(**kwargs)
    r.passed = bool(r.passed)
    r.seconds = time.perf_counter() - t0
    return r


def run_suite(selected=None, workers: int = 1, log=print) -> list[CriterionResult]:
    out = []
    for k in selected or sorted(CRITERIA):
        r = run_criterion(k, workers)
        if log:
            log(format_result(r))
        out.append(r)
    return out

import math

import numpy as np
import pytest

from noisygrover import analysis
from noisygrover.analysis import (
    FitError,
    McConfig,
    NoMaximumError,
    epsilon_max,
    find_maxima,
    first_maximum,
    fit_damping,
    fit_lambda_model,
    fit_log_drift,
    fit_threshold_law,
    lambda_model,
    max_qubits,
    solve_threshold,
)
from noisygrover.mc import estimate_success_curve
from noisygrover.noise import NoiseParams


def test_lambda_model_values():
    assert round(lambda_model(1 / 3000, 1 / 5000, 4), 4) == 0.0269
    assert lambda_model(0, 0, 5) == 0
    assert math.isclose(lambda_model(1e-3, 0, 2), 0.031389, rel_tol=1e-12)
    for n in range(2, 8):
        for e in np.linspace(0, 0.1, 6):
            for g in np.linspace(0, 0.1, 6):
                assert lambda_model(e, g, n) >= 0
    with pytest.raises(ValueError):
        lambda_model(0.1, 0.1, 1)


def test_lambda_refit_round_trip():
    samples = [(e, g, n, lambda_model(e, g, n)) for e in (1e-3, 2e-3) for g in (5e-4, 1e-3) for n in (2, 3, 4)]
    np.testing.assert_allclose(fit_lambda_model(samples), analysis.LAMBDA_COEFFS, rtol=1e-9)


def test_find_maxima_rules():
    t = np.arange(10)
    p = np.array([0.25, 1, 0.25, 0.25, 1, 0.25, 0.25, 1, 0.25, 0.25])
    assert [m[0] for m in find_maxima((t, p))] == [1, 4, 7]
    assert find_maxima((t, np.linspace(1, 0, 10))) == []
    plateau = np.array([0.1, 0.5, 0.5, 0.2])
    assert find_maxima((np.arange(4), plateau)) == [(1, 0.5)]
    # the final point never qualifies
    assert find_maxima((np.arange(3), np.array([0.1, 0.2, 0.9]))) == []
    with pytest.raises(FitError):
        find_maxima((np.arange(2), np.array([0.1, 0.2])))
    with pytest.raises(NoMaximumError):
        first_maximum((t, np.linspace(1, 0, 10)))


def test_synthetic_damping_round_trip():
    n, A, lam = 4, 0.8, 0.03
    t = np.arange(0, 60)
    p = A * np.exp(-lam * t) * np.sin(0.5 * t) ** 2 + 1 / 2 ** n
    maxima = [(int(k), A * math.exp(-lam * k) + 1 / 2 ** n) for k in (3, 9, 15, 22, 28)]
    fit = fit_damping(maxima, n, weighted=False)
    assert abs(fit.A - A) < 1e-10 and abs(fit.lam - lam) < 1e-10 and fit.residual_rms < 1e-10
    found = find_maxima((t, p))
    assert len(found) >= 5
    with pytest.raises(FitError):
        fit_damping(maxima[:2], n)
    fit = fit_damping(maxima + [(40, 0.01)], n)  # below baseline: dropped
    assert len(fit.points_used) == 5


def test_first_maximum_noiseless():
    c = estimate_success_curve(4, NoiseParams(0, 0), 8, 1, 0)
    assert first_maximum(c)[0] == 3


def test_threshold_law_round_trip_and_bounds():
    pts = [(n, math.exp(-1.1 * n * math.log(2) - 2.711)) for n in range(2, 8)]
    fit = fit_threshold_law(pts)
    assert abs(fit.a - 1.1) < 1e-12 and abs(fit.b - 2.711) < 1e-12 and fit.r_squared > 1 - 1e-12
    with pytest.raises(FitError):
        fit_threshold_law(pts[:2])
    assert max_qubits(1e-5, 1.1, 2.711) == 11
    assert max_qubits(epsilon_max(1.1, 2.711), 1.1, 2.711) == 1
    assert max_qubits(0.05, 1.1, 2.3802) == 0
    assert round(epsilon_max(1.1, 2.3802), 4) == 0.0432
    assert epsilon_max(0, 0) == 1
    assert math.exp(-1.1 * math.log(2048) - 2.711) >= 1e-5 > math.exp(-1.1 * math.log(4096) - 2.711)


@pytest.mark.parametrize("eps", [1e-5, 3e-4, 0.02])
def test_max_qubits_matches_scan(eps):
    a, b = 1.1, 2.711
    best = max([n for n in range(1, 65) if math.exp(-a * n * math.log(2) - b) >= eps], default=0)
    assert max_qubits(eps, a, b) == best


def test_drift_fit():
    pts = [(4, 1e-3), (3, 3e-3), (2, 9e-3)]
    A, B = fit_log_drift(pts)
    assert A < 0
    with pytest.raises(FitError):
        fit_log_drift(pts[:1])


def test_solve_threshold_small():
    cfg = McConfig(seed=3, n_trajectories=4000)
    r = solve_threshold(2, 1.0, 0.5, cfg)
    lo, hi = r.bracket
    assert lo <= r.epsilon <= hi and hi / lo - 1 <= 0.02 + 1e-12
    with pytest.raises(analysis.ThresholdOutOfRange):
        solve_threshold(2, 1.0, 0.999, cfg, eps_lo=1e-2)
    with pytest.raises(ValueError):
        solve_threshold(2, 1.0, 0.2, cfg)


def test_epsilon_grid():
    g = analysis.epsilon_grid(1e-4, 1e-2, 20)
    assert len(g) == 41 and math.isclose(g[-1], 1e-2)

"""Fits and laws extracted from success curves.

* exponential damping of the maxima, ``P(t) = A exp(-lambda t) + 1/2**n``,
  fitted linearly in ``ln(P - 1/2**n)`` with the baseline held fixed;
* the closed-form decay-rate model ``lambda(eps, gamma, n)``;
* first-maximum location and its logarithmic drift with the error rate;
* thresholds ``eps_th`` where the first-maximum probability crosses ``P_th``;
* the log-linear allowed-error law ``ln eps_th = -a ln N - b`` and its
  consequences (maximum qubit count, absolute error bound).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .circuit import noiseless_first_maximum
from .mc import DEFAULT_CHUNK, SuccessCurve, estimate_success_curve, required_trajectories
from .noise import NoiseParams

LAMBDA_COEFFS = (18.63, 8.124, 5.871, 12.336)


class FitError(ValueError):
    pass


class NoMaximumError(ValueError):
    """The curve has no interior local maximum: noise overwhelms the search."""


class ThresholdOutOfRange(RuntimeError):
    pass


def lambda_model(epsilon: float, gamma: float, n: int, coeffs=LAMBDA_COEFFS) -> float:
    if n < 2:
        raise ValueError("lambda model holds for n >= 2")
    c1, c2, c3, c4 = coeffs
    return (c1 * epsilon + c2 * gamma) * n - c3 * epsilon - c4 * gamma


def fit_lambda_model(samples: Sequence[tuple[float, float, int, float]]) -> tuple[float, float, float, float]:
    """Least-squares refit of the four model coefficients from ``(eps, gamma, n, lambda)``."""
    rows = np.array([[e * n, g * n, -e, -g] for e, g, n, _ in samples], dtype=float)
    lam = np.array([s[3] for s in samples], dtype=float)
    if len(samples) < 4:
        raise FitError("need at least four samples")
    coef, *_ = np.linalg.lstsq(rows, lam, rcond=None)
    return tuple(float(c) for c in coef)


def _curve_arrays(curve):
    if isinstance(curve, SuccessCurve):
        return np.asarray(curve.t_values), np.asarray(curve.p_success), np.asarray(curve.std_err)
    t, p = np.asarray(curve[0]), np.asarray(curve[1])
    se = np.asarray(curve[2]) if len(curve) > 2 else np.zeros_like(p)
    return t, p, se


def find_maxima(curve) -> list[tuple[int, float]]:
    """Interior local maxima ``(t, P)``.

    ``P(t) >= P(t-1)`` and ``P(t) >= P(t+1)``; on a plateau only the first
    point is kept. ``t = 0`` and the last point never qualify. ``curve`` is a
    :class:`SuccessCurve` or a ``(t, p[, stderr])`` tuple.
    """
    t, p, _ = _curve_arrays(curve)
    if len(p) < 3:
        raise FitError("curve needs at least three points")
    out = []
    for i in range(1, len(p) - 1):
        if p[i] >= p[i - 1] and p[i] >= p[i + 1]:
            if out and out[-1][0] == t[i - 1] and p[i] == p[i - 1]:
                continue
            out.append((int(t[i]), float(p[i])))
    return out


def first_maximum(curve) -> tuple[int, float]:
    maxima = find_maxima(curve)
    if not maxima:
        raise NoMaximumError("no local maximum in the success curve")
    return maxima[0]


@dataclass
class DampingFit:
    A: float
    lam: float
    baseline: float
    residual_rms: float
    points_used: list
    weighted: bool = True
    warnings: list = field(default_factory=list)

    @property
    def tau(self) -> float:
        return math.inf if self.lam == 0 else 1.0 / self.lam

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["tau"] = self.tau
        return d


def fit_damping(maxima, n: int, std_errs: Sequence[float] | None = None, weighted: bool = True) -> DampingFit:
    """Fit ``ln(P - 1/2**n) = ln A - lambda t`` over the maxima.

    Points at or below the baseline are dropped. With ``std_errs`` and
    ``weighted`` the points are weighted by ``(P - base) / stderr``.
    """
    base = 1.0 / 2 ** n
    pts = [(int(t), float(p)) for t, p in maxima]
    ses = list(std_errs) if std_errs is not None else [0.0] * len(pts)
    keep = [(t, p, s) for (t, p), s in zip(pts, ses) if p > base]
    if len(keep) < 3:
        raise FitError(f"need >= 3 maxima above the 1/2^n baseline, have {len(keep)}")
    t = np.array([k[0] for k in keep], dtype=float)
    y = np.log(np.array([k[1] for k in keep]) - base)
    se = np.array([k[2] for k in keep])
    use_w = weighted and np.all(se > 0)
    w = (np.array([k[1] for k in keep]) - base) / se if use_w else np.ones_like(t)
    slope, intercept = np.polyfit(t, y, 1, w=w)
    resid = y - (slope * t + intercept)
    fit = DampingFit(
        A=float(math.exp(intercept)),
        lam=float(-slope),
        baseline=base,
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        points_used=[(int(a), float(b)) for a, b, _ in keep],
        weighted=bool(use_w),
    )
    if fit.lam < 0:
        fit.warnings.append("negative decay rate")
    if fit.A > 1:
        fit.warnings.append("amplitude A exceeds 1")
    return fit


def fit_curve_damping(curve: SuccessCurve, weighted: bool = True) -> DampingFit:
    maxima = find_maxima(curve)
    se = [float(curve.std_err[t]) for t, _ in maxima]
    return fit_damping(maxima, curve.n, se, weighted)


# ------------------------------------------------------------ first maximum


@dataclass
class McConfig:
    """Monte Carlo settings shared by first-maximum and threshold searches."""

    seed: int = 0
    n_trajectories: int | None = None  # None: required_trajectories(params)
    max_trajectories: int = 100_000
    floor: int = 10_000
    chunk_size: int = DEFAULT_CHUNK
    workers: int = 1
    memory_mode: str = "additive"
    extra_iterations: int = 2

    def trajectories_for(self, params: NoiseParams) -> int:
        if self.n_trajectories is not None:
            return self.n_trajectories
        return min(self.max_trajectories, required_trajectories(params, self.floor))


@dataclass
class FirstMaxPoint:
    epsilon: float
    gamma: float
    t1: int | None
    p: float
    stderr: float
    n_traj: int


def first_max_probability(n: int, params: NoiseParams, config: McConfig, n_trajectories: int | None = None) -> FirstMaxPoint:
    """Locate t1 on this parameter point's own curve and report ``P_S(t1)``.

    Without an interior maximum the curve has collapsed to noise; the point
    is reported with ``t1 = None`` and the curve maximum over ``t >= 1``.
    """
    T = noiseless_first_maximum(n) + config.extra_iterations
    N = n_trajectories or config.trajectories_for(params)
    curve = estimate_success_curve(
        n, params, T, N, config.seed,
        chunk_size=config.chunk_size, workers=config.workers, memory_mode=config.memory_mode,
    )
    try:
        t1, p = first_maximum(curve)
    except NoMaximumError:
        i = int(np.argmax(curve.p_success[1:])) + 1
        return FirstMaxPoint(params.epsilon, params.gamma, None, float(curve.p_success[i]), float(curve.std_err[i]), N)
    return FirstMaxPoint(params.epsilon, params.gamma, t1, p, float(curve.std_err[t1]), N)


def epsilon_grid(lo: float, hi: float, per_decade: int = 20) -> np.ndarray:
    k = int(math.ceil(per_decade * math.log10(hi / lo) - 1e-9))
    return lo * 10 ** (np.arange(k + 1) / per_decade)


def first_max_scan(n: int, epsilons: Sequence[float], C: float, config: McConfig) -> list[FirstMaxPoint]:
    return [first_max_probability(n, NoiseParams.from_ratio(e, C), config) for e in epsilons]


def discontinuity_points(points: Sequence[FirstMaxPoint]) -> list[tuple[int, float]]:
    """``(t1, eps)``: the largest grid eps at which t1 still takes each value."""
    best: dict[int, float] = {}
    for pt in points:
        if pt.t1 is not None:
            best[pt.t1] = max(best.get(pt.t1, 0.0), pt.epsilon)
    return sorted(best.items())


def fit_log_drift(points: Sequence[tuple[int, float]]) -> tuple[float, float]:
    """Fit ``t1 = A ln(eps) + B`` through discontinuity points."""
    if len(points) < 2:
        raise FitError("need at least two discontinuity points")
    t = np.array([p[0] for p in points], dtype=float)
    le = np.log([p[1] for p in points])
    A, B = np.polyfit(le, t, 1)
    return float(A), float(B)


# ---------------------------------------------------------------- thresholds


@dataclass
class ThresholdResult:
    n: int
    C: float
    p_threshold: float
    epsilon: float
    bracket: tuple[float, float]
    evaluations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "C": self.C,
            "p_threshold": self.p_threshold,
            "epsilon_th": self.epsilon,
            "bracket": list(self.bracket),
            "evaluations": [asdict(e) for e in self.evaluations],
        }


def solve_threshold(
    n: int,
    C: float,
    p_threshold: float = 0.5,
    config: McConfig | None = None,
    eps_lo: float = 1e-6,
    eps_hi: float = 0.2,
    rel_tol: float = 0.02,
    max_evaluations: int = 60,
) -> ThresholdResult:
    """Bisect (in log eps) for ``P_S(eps, C, n; t1(eps)) = p_threshold``.

    The bracket is found by stepping down from ``eps_hi`` by factors of 4.
    Each midpoint re-locates its own first maximum. If the Monte Carlo
    standard error at the midpoint exceeds half the probability gap across
    the current bracket, the trajectory count is doubled (up to the cap).
    Every evaluation reuses ``config.seed``, so neighbouring points share
    their random numbers.
    """
    config = config or McConfig()
    if not 1.0 / 2 ** n < p_threshold < 1.0:
        raise ValueError("p_threshold must lie in (1/2**n, 1)")
    evals: list[FirstMaxPoint] = []

    def at(eps, N=None):
        pt = first_max_probability(n, NoiseParams.from_ratio(eps, C), config, N)
        evals.append(pt)
        return pt

    hi_pt = at(eps_hi)
    if hi_pt.p >= p_threshold:
        raise ThresholdOutOfRange(f"P_S >= {p_threshold} even at eps = {eps_hi}")
    lo_pt = None
    e = eps_hi
    while e > eps_lo:
        e = max(e / 4.0, eps_lo)
        pt = at(e)
        if pt.p > p_threshold:
            lo_pt = pt
            break
        hi_pt = pt
    if lo_pt is None:
        raise ThresholdOutOfRange(f"P_S <= {p_threshold} even at eps = {eps_lo}")

    while hi_pt.epsilon / lo_pt.epsilon - 1.0 > rel_tol and len(evals) < max_evaluations:
        mid = math.sqrt(lo_pt.epsilon * hi_pt.epsilon)
        N = max(lo_pt.n_traj, hi_pt.n_traj)
        pt = at(mid, N)
        gap = abs(lo_pt.p - hi_pt.p)
        while pt.stderr > 0.5 * gap and N < config.max_trajectories and len(evals) < max_evaluations:
            N = min(2 * N, config.max_trajectories)
            pt = at(mid, N)
        if pt.p > p_threshold:
            lo_pt = pt
        else:
            hi_pt = pt
    # log-linear interpolation inside the final bracket
    a, b = lo_pt, hi_pt
    if a.p != b.p:
        f = (a.p - p_threshold) / (a.p - b.p)
        eps = math.exp(math.log(a.epsilon) + f * (math.log(b.epsilon) - math.log(a.epsilon)))
    else:
        eps = math.sqrt(a.epsilon * b.epsilon)
    return ThresholdResult(n, C, p_threshold, eps, (a.epsilon, b.epsilon), evals)


@dataclass
class ThresholdFit:
    C: float
    points: list
    a: float
    b: float
    covariance: list
    r_squared: float

    def predict(self, n: int) -> float:
        return math.exp(-self.a * n * math.log(2) - self.b)

    def to_dict(self) -> dict:
        return asdict(self)


def fit_threshold_law(thresholds: Sequence[tuple[int, float]], C: float = math.nan) -> ThresholdFit:
    """OLS of ``ln eps_th`` on ``ln N = n ln 2``: slope ``-a``, intercept ``-b``."""
    if len(thresholds) < 3:
        raise FitError("need at least three (n, eps_th) points")
    n = np.array([t[0] for t in thresholds], dtype=float)
    y = np.log([t[1] for t in thresholds])
    x = n * math.log(2)
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov_slope = s2 * np.linalg.inv(X.T @ X)
    # (a, b) = -(slope, intercept): covariance is unchanged
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return ThresholdFit(
        C=C,
        points=[(int(a), float(b)) for a, b in thresholds],
        a=float(-coef[0]),
        b=float(-coef[1]),
        covariance=cov_slope.tolist(),
        r_squared=r2,
    )


def max_qubits(epsilon: float, a: float, b: float) -> int:
    """Largest n with ``exp(-a n ln 2 - b) >= epsilon`` (0 if none)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = math.floor((-b - math.log(epsilon)) / (a * math.log(2)) + 1e-12)
    return max(n, 0)


def epsilon_max(a: float, b_min: float) -> float:
    """Absolute bound ``exp(-b_min - a ln 2)`` (the n = 1 threshold)."""
    return math.exp(-b_min - a * math.log(2))

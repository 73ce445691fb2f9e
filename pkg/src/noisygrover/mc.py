"""Monte Carlo estimation of Grover success curves over noisy trajectories.

Trajectories are simulated in fixed-size chunks. Chunk ``c`` draws from
``RandomStream(master_seed, c)``, so results depend on the chunk size but
never on the number of worker processes; per-chunk sums are reduced in
chunk order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import Circuit, build_grover_gate, build_uniform_superposition, num_ancillas
from .noise import NoiseParams, RandomStream, generator_info, run_layers_batch
from .qstate import marginal_distribution

DEFAULT_CHUNK = 1024
DEFAULT_FLOOR = 10_000
CURVE_DOMAIN = 1


def required_trajectories(params: NoiseParams, floor: int = DEFAULT_FLOOR) -> int:
    """``max(floor, ceil(10 * max(1/eps, 1/gamma)))``; the floor alone when noiseless."""
    inv = [1.0 / p for p in (params.epsilon, params.gamma) if p > 0]
    if not inv:
        return floor
    return max(floor, math.ceil(10 * max(inv) - 1e-9))


@dataclass
class SuccessCurve:
    n: int
    params: NoiseParams
    t_values: np.ndarray
    p_success: np.ndarray
    std_err: np.ndarray
    n_trajectories: int
    master_seed: int
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t_values)

    def rows(self):
        for t, p, s in zip(self.t_values, self.p_success, self.std_err):
            yield {
                "t": int(t),
                "p": float(p),
                "stderr": float(s),
                "n": self.n,
                "epsilon": self.params.epsilon,
                "gamma": self.params.gamma,
                "seed": self.master_seed,
                "n_traj": self.n_trajectories,
            }

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.params.epsilon,
            "gamma": self.params.gamma,
            "seed": self.master_seed,
            "n_traj": self.n_trajectories,
            "t": [int(t) for t in self.t_values],
            "p": [float(p) for p in self.p_success],
            "stderr": [float(s) for s in self.std_err],
            "meta": self.meta,
        }


CURVE_COLUMNS = ("t", "p", "stderr", "n", "epsilon", "gamma", "seed", "n_traj")


@dataclass
class WeightHistogram:
    t: int
    n: int
    mean: np.ndarray          # per data basis state, 2**n values
    std_err: np.ndarray
    weight_mean: np.ndarray   # mean over states of each Hamming weight 0..n
    weight_std_err: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return hamming_weights(self.n)

    def rows(self):
        w = self.weights
        for i in range(1 << self.n):
            yield {
                "t": self.t,
                "index": i,
                "weight": int(w[i]),
                "mean_sq": float(self.mean[i]),
                "stderr": float(self.std_err[i]),
            }


HISTOGRAM_COLUMNS = ("t", "index", "weight", "mean_sq", "stderr")


@lru_cache(maxsize=None)
def hamming_weights(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return np.array([bin(i).count("1") for i in idx])


@lru_cache(maxsize=None)
def _circuits(n: int) -> tuple[Circuit, Circuit]:
    return build_uniform_superposition(n, num_ancillas(n)), build_grover_gate(n)


def _mean_stderr(s1: np.ndarray, s2: np.ndarray, count: int):
    mean = s1 / count
    if count < 2:
        return mean, np.zeros_like(mean)
    var = np.maximum(s2 / count - mean ** 2, 0.0) * count / (count - 1)
    return mean, np.sqrt(var / count)


def _simulate_chunk(job):
    n, params, T, hist_ts, chunk_index, size, seed, memory_mode = job
    init, grover = _circuits(n)
    m = init.num_qubits
    amps = np.zeros((size, 1 << m), dtype=np.complex128)
    amps[:, 0] = 1.0
    gen = None if params.noiseless else RandomStream(seed, chunk_index, CURVE_DOMAIN).generator
    weights = hamming_weights(n)
    counts = np.bincount(weights, minlength=n + 1)
    s1 = np.zeros(T + 1)
    s2 = np.zeros(T + 1)
    hist = {}
    for t in range(T + 1):
        run_layers_batch(amps, init if t == 0 else grover, params, gen, memory_mode)
        dist = marginal_distribution(amps, m, range(n))
        p = dist[:, 0]
        s1[t] = p.sum()
        s2[t] = (p * p).sum()
        if t in hist_ts:
            g = np.stack([dist[:, weights == w].sum(axis=1) for w in range(n + 1)], axis=1) / counts
            hist[t] = (dist.sum(axis=0), (dist * dist).sum(axis=0), g.sum(axis=0), (g * g).sum(axis=0))
    return s1, s2, hist


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _run(n, params, T, hist_ts, n_trajectories, master_seed, chunk_size, workers, memory_mode):
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    if T < 0:
        raise ValueError("T must be >= 0")
    hist_ts = frozenset(int(t) for t in hist_ts)
    if params.noiseless:
        # every trajectory is identical
        sizes = [1]
    else:
        full, rest = divmod(n_trajectories, chunk_size)
        sizes = [chunk_size] * full + ([rest] if rest else [])
    jobs = [(n, params, T, hist_ts, c, s, master_seed, memory_mode) for c, s in enumerate(sizes)]
    parts = _map(_simulate_chunk, jobs, workers)
    scale = n_trajectories if params.noiseless else 1
    s1 = sum(p[0] for p in parts) * scale
    s2 = sum(p[1] for p in parts) * scale
    hist = {}
    for t in hist_ts:
        hist[t] = tuple(sum(p[2][t][i] for p in parts) * scale for i in range(4))
    return s1, s2, hist


def estimate_success_curve(
    n: int,
    params: NoiseParams,
    T: int,
    n_trajectories: int,
    master_seed: int,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    memory_mode: str = "additive",
    convergence_check: bool = False,
) -> SuccessCurve:
    """P_S(t) for t = 0..T, t counting Grover gates after the noisy H layer."""
    if T < 1:
        raise ValueError("T must be >= 1")
    s1, s2, _ = _run(n, params, T, (), n_trajectories, master_seed, chunk_size, workers, memory_mode)
    mean, se = _mean_stderr(s1, s2, n_trajectories)
    meta = {
        "generator": generator_info(),
        "chunk_size": chunk_size,
        "memory_mode": memory_mode,
    }
    if convergence_check:
        d1, d2, _ = _run(n, params, T, (), 2 * n_trajectories, master_seed, chunk_size, workers, memory_mode)
        mean2, _ = _mean_stderr(d1, d2, 2 * n_trajectories)
        rel = float(np.max(np.abs(mean2 - mean) / np.maximum(mean2, 1e-300)))
        meta["convergence_max_rel_change"] = rel
        meta["converged"] = rel < 0.005
    return SuccessCurve(n, params, np.arange(T + 1), np.clip(mean, 0.0, 1.0), se, n_trajectories, master_seed, meta)


def coefficient_histogram(
    n: int,
    params: NoiseParams,
    t_values,
    n_trajectories: int,
    master_seed: int,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    memory_mode: str = "additive",
) -> dict[int, WeightHistogram]:
    """Mean squared data-register coefficients at each requested t."""
    t_values = sorted({int(t) for t in t_values})
    if not t_values or t_values[0] < 0:
        raise ValueError("t_values must be non-negative")
    _, _, hist = _run(n, params, t_values[-1], t_values, n_trajectories, master_seed, chunk_size, workers, memory_mode)
    out = {}
    for t in t_values:
        h1, h2, g1, g2 = hist[t]
        mean, se = _mean_stderr(h1, h2, n_trajectories)
        wmean, wse = _mean_stderr(g1, g2, n_trajectories)
        out[t] = WeightHistogram(t, n, mean, se, wmean, wse)
    return out

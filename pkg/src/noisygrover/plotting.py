"""Matplotlib figures for the CLI's ``--plot`` option (Agg backend, PNG files)."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_damping(curve, fit, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(curve.t_values, curve.p_success, yerr=curve.std_err, fmt="o-", ms=3, lw=0.8, label="P_S(t)")
    if fit is not None:
        t = np.linspace(0, curve.t_values[-1], 200)
        ax.plot(t, fit.A * np.exp(-fit.lam * t) + fit.baseline, "--", label=f"envelope, lambda={fit.lam:.4f}")
    ax.axhline(1 / 2 ** curve.n, color="grey", lw=0.6)
    ax.set_xlabel("Grover iterations t")
    ax.set_ylabel("success probability")
    ax.legend()
    return _save(fig, path)


def plot_first_max(points, path):
    fig, ax1 = plt.subplots(figsize=(6, 4))
    eps = [p.epsilon for p in points]
    ax1.semilogx(eps, [p.p for p in points], "o-", ms=3, label="P_S(t1)")
    ax1.set_xlabel("epsilon")
    ax1.set_ylabel("first-maximum probability")
    ax2 = ax1.twinx()
    ax2.step(eps, [p.t1 if p.t1 is not None else np.nan for p in points], where="mid", color="C1", label="t1")
    ax2.set_ylabel("t1")
    return _save(fig, path)


def plot_coefficients(hists, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for t, h in sorted(hists.items()):
        ax.errorbar(np.arange(h.n + 1), h.weight_mean, yerr=h.weight_std_err, fmt="o-", ms=3, label=f"t={t}")
    n = next(iter(hists.values())).n
    ax.axhline(1 / 2 ** n, color="grey", lw=0.6)
    ax.set_yscale("log")
    ax.set_xlabel("Hamming weight")
    ax.set_ylabel("mean squared coefficient")
    ax.legend()
    return _save(fig, path)


def plot_threshold_law(fit, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.array([p[0] for p in fit.points], dtype=float)
    e = np.array([p[1] for p in fit.points])
    ax.plot(n * math.log(2), np.log(e), "o", label="thresholds")
    x = np.linspace(n.min(), n.max(), 50) * math.log(2)
    ax.plot(x, -fit.a * x - fit.b, "-", label=f"a={fit.a:.3f}, b={fit.b:.3f}")
    ax.set_xlabel("ln N")
    ax.set_ylabel("ln eps_th")
    ax.legend()
    return _save(fig, path)


def plot_encoded(results, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    eps = [r.epsilon for r in results]
    ax.errorbar(eps, [r.encoded_ps for r in results], yerr=[r.encoded_stderr for r in results], fmt="o-", ms=3, label="encoded")
    ax.errorbar(eps, [r.bare_ps for r in results], yerr=[r.bare_stderr for r in results], fmt="s-", ms=3, label="bare")
    ax.set_xscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("success probability")
    ax.legend()
    return _save(fig, path)

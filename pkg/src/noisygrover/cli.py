"""``noisygrover`` command line.

Every subcommand writes plot-ready CSV (or JSON) into ``--out`` with a
provenance header; ``--plot`` additionally renders a PNG next to it.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__, analysis, io, steane
from .circuit import noiseless_success
from .mc import CURVE_COLUMNS, HISTOGRAM_COLUMNS, coefficient_histogram, estimate_success_curve
from .noise import MEMORY_MODES, NoiseParams, generator_info

EXIT_CONFIG = 2
EXIT_THRESHOLD = 3
EXIT_PREP = 4
MAX_N = 12


class ConfigError(ValueError):
    pass


def parse_range(text: str) -> list[int]:
    """``"4"``, ``"2..7"`` or ``"2,3,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            vals = list(range(int(lo), int(hi) + 1))
        else:
            vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad qubit range {text!r}")
    if not vals or min(vals) < 2 or max(vals) > MAX_N:
        raise argparse.ArgumentTypeError(f"n must lie in [2, {MAX_N}]")
    return vals


def parse_n(text: str) -> int:
    vals = parse_range(text)
    if len(vals) != 1:
        raise argparse.ArgumentTypeError("a single qubit count is expected")
    return vals[0]


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}")


def _ratio(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("C must be positive (inf for gamma = 0)")
    return v


def _common(p: argparse.ArgumentParser, seed_required: bool = True):
    p.add_argument("--seed", type=int, required=seed_required, help="master seed")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--trajectories", type=int, default=None, help="N_C override")
    p.add_argument("--chunk-size", type=int, default=1024)
    p.add_argument("--memory-mode", choices=MEMORY_MODES, default="additive")
    p.add_argument("--plot", action="store_true", help="also write a PNG figure")


def _noise(p: argparse.ArgumentParser):
    g = p.add_argument_group("error rates (inverse or direct)")
    g.add_argument("--inv-epsilon", type=float)
    g.add_argument("--inv-gamma", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--gamma", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noisygrover", description="Noisy Grover search experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--paper-suite", action="store_true", help="run the acceptance battery and exit")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("noiseless-check", help="compare noiseless simulation with the closed form")
    p.add_argument("--n", type=parse_range, default=parse_range("2..7"))
    _common(p, seed_required=False)

    p = sub.add_parser("damping", help="success curve and exponential envelope fit")
    p.add_argument("--n", type=parse_n, required=True)
    p.add_argument("--T", type=int, default=40)
    _noise(p)
    _common(p)

    p = sub.add_parser("first-max", help="first maximum location and probability over an epsilon grid")
    p.add_argument("--n", type=parse_range, required=True)
    p.add_argument("--C", type=_ratio, default=1.0)
    p.add_argument("--eps-min", type=float, default=1e-4)
    p.add_argument("--eps-max", type=float, default=1e-1)
    p.add_argument("--per-decade", type=int, default=20)
    _common(p)

    p = sub.add_parser("coefficients", help="mean squared coefficients of the data register")
    p.add_argument("--n", type=parse_n, required=True)
    p.add_argument("--t", type=lambda s: [int(x) for x in s.split(",")], default=[4, 6, 8])
    _noise(p)
    _common(p)

    p = sub.add_parser("threshold", help="epsilon at which the first-maximum probability equals P_th")
    p.add_argument("--n", type=parse_range, required=True)
    p.add_argument("--C", type=_ratio, default=1.0)
    p.add_argument("--p-th", type=float, default=0.5)
    _common(p)

    p = sub.add_parser("threshold-law", help="thresholds over n and the log-linear law fit")
    p.add_argument("--n", type=parse_range, default=parse_range("2..6"))
    p.add_argument("--C", type=_ratio, default=1.0)
    p.add_argument("--p-th", type=float, default=0.5)
    p.add_argument("--hardware-epsilon", type=float, default=1e-5, help="epsilon for the max-qubits bound")
    _common(p)

    p = sub.add_parser("encoded", help="Steane-encoded versus bare n=2 search")
    p.add_argument("--C", type=_ratio, default=1.0)
    p.add_argument("--epsilons", type=parse_float_list, default=list(steane_grid()))
    p.add_argument("--max-restarts", type=int, default=steane.DEFAULT_MAX_RESTARTS)
    p.add_argument("--method", choices=("frames", "dense"), default="frames")
    _common(p)

    p = sub.add_parser("acceptance", aliases=["paper-suite"], help="run the acceptance battery")
    p.add_argument("--only", type=lambda s: [int(x) for x in s.split(",")], default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None, help="also write the verdicts as JSON")
    return ap


def steane_grid():
    return (5e-4, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2)


def _params(args) -> NoiseParams:
    if args.inv_epsilon is not None and args.epsilon is not None:
        raise ConfigError("give epsilon or inv-epsilon, not both")
    if args.inv_gamma is not None and args.gamma is not None:
        raise ConfigError("give gamma or inv-gamma, not both")
    eps = args.epsilon if args.epsilon is not None else (1 / args.inv_epsilon if args.inv_epsilon else 0.0)
    gam = args.gamma if args.gamma is not None else (1 / args.inv_gamma if args.inv_gamma else 0.0)
    return NoiseParams(eps, gam)


def _provenance(args, command: str) -> dict:
    # workers never changes results, so it stays out of the provenance
    skip = {"func", "paper_suite", "out", "workers"}
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip}
    rerun = ["noisygrover", command]
    for k, v in cfg.items():
        if k in ("command", "plot") or v is None or v is False:
            continue
        flag = "--" + k.replace("_", "-")
        if v is True:
            rerun.append(flag)
        else:
            rerun += [flag, ",".join(map(str, v)) if isinstance(v, list) else str(v)]
    return {
        "program": "noisygrover",
        "version": __version__,
        "command": command,
        "config": cfg,
        "generator": generator_info(),
        "rerun": " ".join(rerun),
    }


def _emit(args, name: str, rows, columns, payload: dict | None, prov: dict) -> list[Path]:
    out = args.out
    rows = list(rows)
    if args.format == "json":
        return [io.write_json(out / f"{name}.json", {"rows": rows, **(payload or {})}, prov)]
    paths = [io.write_csv(out / f"{name}.csv", rows, columns, prov)]
    if payload:
        paths.append(io.write_json(out / f"{name}_fit.json", payload, prov))
    return paths


def _mc_config(args) -> analysis.McConfig:
    return analysis.McConfig(seed=args.seed, n_trajectories=args.trajectories, chunk_size=args.chunk_size,
                             workers=args.workers, memory_mode=args.memory_mode)


# ------------------------------------------------------------- commands


def cmd_noiseless_check(args) -> int:
    rows = []
    worst = 0.0
    for n in args.n:
        T = 2 * math.floor(math.pi * math.sqrt(2 ** n) / 4)
        c = estimate_success_curve(n, NoiseParams(0, 0), T, 1, 0)
        dev = max(abs(p - noiseless_success(n, k)) for k, p in enumerate(c.p_success))
        worst = max(worst, dev)
        rows.append({"n": n, "T": T, "max_abs_dev": dev})
        print(f"n={n:2d}  k<={T:3d}  max |P_sim - closed form| = {dev:.2e}")
    _emit(args, "noiseless_check", rows, ("n", "T", "max_abs_dev"), None, _provenance(args, "noiseless-check"))
    return 0 if worst < 1e-9 else 1


def cmd_damping(args) -> int:
    params = _params(args)
    N = args.trajectories or min(100_000, analysis.required_trajectories(params))
    curve = estimate_success_curve(args.n, params, args.T, N, args.seed, chunk_size=args.chunk_size,
                                   workers=args.workers, memory_mode=args.memory_mode)
    prov = _provenance(args, "damping")
    try:
        fit = analysis.fit_curve_damping(curve)
        payload = {"damping_fit": fit.to_dict(),
                   "lambda_model": analysis.lambda_model(params.epsilon, params.gamma, args.n)}
        print(f"lambda_fit = {fit.lam:.5f}  A = {fit.A:.4f}  residual rms = {fit.residual_rms:.4f}")
    except analysis.FitError as exc:
        fit, payload = None, {"damping_fit": None, "error": str(exc)}
        print(f"no damping fit: {exc}", file=sys.stderr)
    _emit(args, "curve", curve.rows(), CURVE_COLUMNS, payload, prov)
    if args.plot:
        from .plotting import plot_damping

        plot_damping(curve, fit, args.out / "curve.png")
    return 0


def cmd_first_max(args) -> int:
    cfg = _mc_config(args)
    grid = analysis.epsilon_grid(args.eps_min, args.eps_max, args.per_decade)
    rows, fits = [], {}
    for n in args.n:
        pts = analysis.first_max_scan(n, grid, args.C, cfg)
        for p in pts:
            rows.append({"n": n, "epsilon": p.epsilon, "gamma": p.gamma, "t1": p.t1, "p": p.p,
                         "stderr": p.stderr, "n_traj": p.n_traj})
        disc = analysis.discontinuity_points(pts)
        fits[n] = {"discontinuities": disc}
        if len(disc) >= 2:
            fits[n]["A"], fits[n]["B"] = analysis.fit_log_drift(disc)
        if args.plot:
            from .plotting import plot_first_max

            plot_first_max(pts, args.out / f"first_max_n{n}.png")
    _emit(args, "first_max", rows, ("n", "epsilon", "gamma", "t1", "p", "stderr", "n_traj"),
          {"drift_fits": fits}, _provenance(args, "first-max"))
    return 0


def cmd_coefficients(args) -> int:
    params = _params(args)
    N = args.trajectories or min(100_000, analysis.required_trajectories(params))
    hists = coefficient_histogram(args.n, params, args.t, N, args.seed, chunk_size=args.chunk_size,
                                  workers=args.workers, memory_mode=args.memory_mode)
    rows = [r for t in sorted(hists) for r in hists[t].rows()]
    payload = {"weight_means": {t: h.weight_mean for t, h in hists.items()},
               "weight_stderr": {t: h.weight_std_err for t, h in hists.items()}}
    _emit(args, "coefficients", rows, HISTOGRAM_COLUMNS, payload, _provenance(args, "coefficients"))
    if args.plot:
        from .plotting import plot_coefficients

        plot_coefficients(hists, args.out / "coefficients.png")
    return 0


def _thresholds(args):
    cfg = _mc_config(args)
    return [analysis.solve_threshold(n, args.C, args.p_th, cfg) for n in args.n]


def _threshold_rows(res):
    for r in res:
        yield {"n": r.n, "C": r.C, "p_threshold": r.p_threshold, "epsilon_th": r.epsilon,
               "bracket_lo": r.bracket[0], "bracket_hi": r.bracket[1], "evaluations": len(r.evaluations)}


THRESHOLD_COLUMNS = ("n", "C", "p_threshold", "epsilon_th", "bracket_lo", "bracket_hi", "evaluations")


def cmd_threshold(args) -> int:
    res = _thresholds(args)
    for r in res:
        print(f"n={r.n}: eps_th = {r.epsilon:.4e}")
    _emit(args, "thresholds", _threshold_rows(res), THRESHOLD_COLUMNS,
          {"solver": [r.to_dict() for r in res]}, _provenance(args, "threshold"))
    return 0


def cmd_threshold_law(args) -> int:
    res = _thresholds(args)
    fit = analysis.fit_threshold_law([(r.n, r.epsilon) for r in res], args.C)
    payload = {
        "law": fit.to_dict(),
        "epsilon_max": analysis.epsilon_max(fit.a, fit.b),
        "max_qubits": analysis.max_qubits(args.hardware_epsilon, fit.a, fit.b),
        "hardware_epsilon": args.hardware_epsilon,
    }
    print(f"a = {fit.a:.4f}  b = {fit.b:.4f}  R^2 = {fit.r_squared:.4f}  "
          f"max qubits at eps={args.hardware_epsilon:g}: {payload['max_qubits']}")
    _emit(args, "threshold_law", _threshold_rows(res), THRESHOLD_COLUMNS, payload, _provenance(args, "threshold-law"))
    if args.plot:
        from .plotting import plot_threshold_law

        plot_threshold_law(fit, args.out / "threshold_law.png")
    return 0


def cmd_encoded(args) -> int:
    N = args.trajectories or 20_000
    res = [steane.run_encoded_experiment(e, args.C, N, args.seed, chunk_size=args.chunk_size, workers=args.workers,
                                         max_restarts=args.max_restarts, memory_mode=args.memory_mode,
                                         method=args.method)
           for e in args.epsilons]
    for r in res:
        print(f"eps={r.epsilon:.2e}: encoded {r.encoded_ps:.4f} +- {r.encoded_stderr:.4f}  "
              f"bare {r.bare_ps:.4f} +- {r.bare_stderr:.4f}  attempts {r.mean_attempts:.2f}")
    _emit(args, "encoded", [r.row() for r in res], steane.ENCODED_COLUMNS,
          {"prep_failures": {r.epsilon: r.prep_failures for r in res}}, _provenance(args, "encoded"))
    if args.plot:
        from .plotting import plot_encoded

        plot_encoded(res, args.out / "encoded.png")
    if any(r.prep_failures > r.n_traj / 2 for r in res):
        _error("preparation-failure", "verified preparation failed for most trajectories")
        return EXIT_PREP
    return 0


def cmd_acceptance(args) -> int:
    from .suite import run_suite

    results = run_suite(getattr(args, "only", None), workers=getattr(args, "workers", 1))
    npass = sum(r.passed for r in results)
    print(f"{npass}/{len(results)} criteria passed")
    out = getattr(args, "out", None)
    if out is not None:
        io.write_json(Path(out) / "acceptance.json",
                      {"results": [{"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail,
                                    "seconds": r.seconds} for r in results]},
                      {"program": "noisygrover", "version": __version__})
    return 0 if npass == len(results) else 1


COMMANDS = {
    "noiseless-check": cmd_noiseless_check,
    "damping": cmd_damping,
    "first-max": cmd_first_max,
    "coefficients": cmd_coefficients,
    "threshold": cmd_threshold,
    "threshold-law": cmd_threshold_law,
    "encoded": cmd_encoded,
    "acceptance": cmd_acceptance,
    "paper-suite": cmd_acceptance,
}


def _error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.paper_suite:
        args.command = "acceptance"
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        if getattr(args, "trajectories", None) is not None and args.trajectories < 1:
            raise ConfigError("--trajectories must be >= 1")
        if getattr(args, "workers", 1) < 1:
            raise ConfigError("--workers must be >= 1")
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    except analysis.ThresholdOutOfRange as exc:
        _error("threshold-out-of-range", str(exc))
        return EXIT_THRESHOLD


if __name__ == "__main__":
    sys.exit(main())

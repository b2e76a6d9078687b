"""Command-line interface: ``eccd {fit,path,bench,profile,gen}``.

Exit codes: 0 success, 1 data or convergence failure, 2 usage error.
Coefficients are always reported on the standardized scale the solver
works in (columns centered, ``||x_j||^2 = n``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .bench import profile_block_size, run_bench
from .data import (
    generate_synthetic,
    load_csv,
    load_libsvm,
    parse_gen_spec,
    standardize,
    write_csv,
    write_libsvm,
)
from .errors import ConfigError, ECCDError
from .families import FamilySpec, Kind
from .oracle import prox_grad_solve
from .path import LambdaPath, build_path, default_min_ratio, lambda_max, solve_path
from .solvers import SolveConfig, solve_single_lambda

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
VERIFY_RTOL = 1e-6


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("data")
    g.add_argument("--input", help="dataset file")
    g.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    g.add_argument("--csv-header", action="store_true", help="CSV input has a header row")
    g.add_argument("--gen", metavar="N,P,RHO,S,SEED", help="generate a synthetic dataset instead of reading one")
    g.add_argument("--seed", type=int, help="override the generator seed of --gen")
    g.add_argument("--family", default="binomial",
                   help="gaussian, binomial, poisson or gamma (default binomial)")
    g.add_argument("--dispersion", type=float, default=1.0)
    p.add_argument("--out", help="write the main output here instead of stdout")

    m = p.add_argument_group("model")
    m.add_argument("--alpha", type=float, default=1.0)
    m.add_argument("--lambda", dest="lam", type=float)
    m.add_argument("--path", type=_floats, metavar="L1,L2,...", help="explicit decreasing lambda grid")
    m.add_argument("--nlambda", type=int, default=100)
    m.add_argument("--lambda-min-ratio", type=float)
    m.add_argument("--no-intercept", action="store_true")

    s = p.add_argument_group("solver")
    s.add_argument("--algorithm", choices=("cd", "bcd", "eccd"), default="eccd")
    s.add_argument("--block-size", type=int, default=8)
    s.add_argument("--tol", type=float, default=1e-7)
    s.add_argument("--max-epochs", type=int, default=10000)
    s.add_argument("--max-objective", type=float, default=1e12)
    s.add_argument("--timings", action="store_true", help="report per-phase timings on stderr")
    s.add_argument("--backend", choices=("numba", "numpy"), default="numba")
    s.add_argument("--no-screening", action="store_true")
    s.add_argument("--no-warm-start", action="store_true")
    s.add_argument("--no-active-cap", action="store_true")
    s.add_argument("--verify", action="store_true",
                   help="cross-check objectives against the proximal-gradient oracle")

    b = p.add_argument_group("bench")
    b.add_argument("--s-list", type=_ints, default=[1, 2, 4, 8, 16, 32])
    b.add_argument("--alpha-list", type=_floats)
    b.add_argument("--algorithms", default="eccd", help="comma-separated subset of cd,bcd,eccd")
    b.add_argument("--mode", choices=("path", "lambda"), default="path")
    b.add_argument("--lambda-ratios", type=_floats, default=[0.1, 0.01, 0.001])
    b.add_argument("--reps", type=int, help="timing repetitions (bench default 3, profile default 100)")
    b.add_argument("--profile-n", type=int, default=100_000)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="eccd", description="Elastic-net GLMs by block coordinate descent.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="fit one lambda, print JSON")
    sub.add_parser("path", parents=[common], help="fit a lambda path, print CSV")
    sub.add_parser("bench", parents=[common], help="block-size / algorithm sweep, print CSV")
    sub.add_parser("profile", parents=[common], help="recommend a block size from link cost")
    sub.add_parser("gen", parents=[common], help="write a synthetic dataset")
    return parser


# ---------------------------------------------------------------------------


def _family(args) -> FamilySpec:
    try:
        return FamilySpec.from_name(args.family, args.dispersion)
    except (ValueError, ConfigError) as exc:
        raise UsageError(str(exc)) from None


def _load(args, family):
    """Raw (unstandardized) dataset from --input or --gen."""
    if bool(args.input) == bool(args.gen):
        raise UsageError("give exactly one of --input or --gen")
    binary = True if family.kind is Kind.BERNOULLI else None
    if args.gen:
        try:
            cfg = parse_gen_spec(args.gen, family)
            if args.seed is not None:
                cfg = replace(cfg, seed=args.seed)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad --gen: {exc}") from None
        d, _ = generate_synthetic(cfg)
        return d
    if args.format == "csv":
        return load_csv(args.input, header=args.csv_header, binary=binary)
    return load_libsvm(args.input, binary=binary)


def _solve_cfg(args, lam: float) -> SolveConfig:
    try:
        return SolveConfig(
            lam=lam, alpha=args.alpha, block_size=args.block_size, tol=args.tol,
            max_epochs=args.max_epochs, algorithm=args.algorithm,
            fit_intercept=not args.no_intercept, active_set_cap=not args.no_active_cap,
            max_objective=args.max_objective, timings=args.timings, backend=args.backend,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _validate(args):
    if args.lam is not None and not (args.lam >= 0 and math.isfinite(args.lam)):
        raise UsageError(f"--lambda must be a finite nonnegative number, got {args.lam}")
    if not 0.0 <= args.alpha <= 1.0:
        raise UsageError(f"--alpha must lie in [0, 1], got {args.alpha}")
    if args.block_size < 1:
        raise UsageError("--block-size must be positive")
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    if args.max_epochs < 1:
        raise UsageError("--max-epochs must be positive")
    if args.nlambda < 1:
        raise UsageError("--nlambda must be positive")
    if args.reps is not None and args.reps < 1:
        raise UsageError("--reps must be positive")
    if args.lambda_min_ratio is not None and not 0 < args.lambda_min_ratio < 1:
        raise UsageError("--lambda-min-ratio must lie in (0, 1)")
    if args.path is not None:
        grid = np.asarray(args.path)
        if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) > 0):
            raise UsageError("--path must be a nonempty, nonnegative, decreasing list")


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _timings_to_stderr(timings: dict):
    sys.stderr.write("timings " + json.dumps({k: round(v, 6) for k, v in timings.items()}) + "\n")


def fit_to_json(fit) -> dict:
    nz = np.flatnonzero(fit.beta)
    return {
        "beta": {str(int(j)): float(fit.beta[j]) for j in nz},
        "beta0": float(fit.beta0),
        "objective": float(fit.objective),
        "deviance": float(fit.deviance),
        "epochs": int(fit.epochs),
        "converged": bool(fit.converged),
        "seconds": float(fit.seconds),
        "lambda": float(fit.lam),
        "alpha": float(fit.alpha),
        "status": fit.status,
    }


def _verify(d, family, fit, fit_intercept) -> dict:
    ref = prox_grad_solve(d, family, fit.lam, fit.alpha, fit_intercept=fit_intercept)
    rel = abs(fit.objective - ref.objective) / max(abs(ref.objective), 1e-300)
    return {"oracle_objective": float(ref.objective), "rel_diff": float(rel),
            "ok": bool(rel <= VERIFY_RTOL)}


def cmd_fit(args) -> int:
    family = _family(args)
    if args.lam is None:
        raise UsageError("fit needs --lambda")
    d = standardize(_load(args, family))
    fit = solve_single_lambda(d, family, _solve_cfg(args, args.lam))
    out = fit_to_json(fit)
    ok = fit.converged and not fit.aborted
    if args.verify:
        out["verify"] = _verify(d, family, fit, not args.no_intercept)
        ok = ok and out["verify"]["ok"]
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    if args.timings:
        _timings_to_stderr(fit.timings)
    return EXIT_OK if ok else EXIT_FAIL


def _grid(args, d, family):
    if args.path is not None:
        vals = np.asarray(args.path, dtype=np.float64)
        vals.setflags(write=False)
        return LambdaPath(vals, float(vals[0]), float(vals[-1] / vals[0]) if vals[0] > 0 else 0.0)
    try:
        lmax = lambda_max(d, family, args.alpha, not args.no_intercept)
    except ConfigError as exc:
        raise UsageError(f"{exc}; pass an explicit --path") from None
    ratio = args.lambda_min_ratio or default_min_ratio(d.n, d.p)
    return build_path(lmax, args.nlambda, ratio)


def path_to_csv(res) -> str:
    coefs = res.coefs
    keep = np.flatnonzero(np.any(coefs != 0, axis=0))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "dev_ratio", "n_active", *(f"beta_{j}" for j in keep)])
    for fit, ratio in zip(res.fits, res.dev_ratios):
        w.writerow([repr(float(fit.lam)), repr(float(ratio)), fit.n_nonzero,
                    *(repr(float(fit.beta[j])) for j in keep)])
    return buf.getvalue()


def read_path_csv(text: str) -> dict:
    """Parse :func:`path_to_csv` output into column arrays."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    cols = {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}
    cols["n_active"] = cols["n_active"].astype(int)
    return cols


def cmd_path(args) -> int:
    family = _family(args)
    d = standardize(_load(args, family))
    grid = _grid(args, d, family)
    res = solve_path(d, family, grid, args.alpha, _solve_cfg(args, float(grid.values[0])),
                     screening=not args.no_screening, warm_start=not args.no_warm_start)
    _emit(path_to_csv(res), args.out)
    if res.stop_reason:
        sys.stderr.write(f"stopped early after {len(res.fits)} lambdas: {res.stop_reason}\n")
    ok = all(f.converged and not f.aborted for f in res.fits)
    if args.verify:
        worst = 0.0
        for f in res.fits:
            worst = max(worst, _verify(d, family, f, not args.no_intercept)["rel_diff"])
        sys.stderr.write(f"verify: max relative objective difference {worst:.3g}\n")
        ok = ok and worst <= VERIFY_RTOL
    if args.timings:
        _timings_to_stderr(res.timings)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(args) -> int:
    family = _family(args)
    d = standardize(_load(args, family))
    algos = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    bad = [a for a in algos if a not in ("cd", "bcd", "eccd")]
    if bad or not algos:
        raise UsageError(f"unknown algorithms {bad}")
    if not args.s_list or min(args.s_list) < 1:
        raise UsageError("--s-list needs positive block sizes")
    alphas = args.alpha_list or [args.alpha]
    if any(not 0 < a <= 1 for a in alphas):
        raise UsageError("bench alphas must lie in (0, 1]")
    report = run_bench(
        d, family, algorithms=algos, s_list=args.s_list, alpha_list=alphas, mode=args.mode,
        lambda_ratios=args.lambda_ratios, reps=args.reps or 3, base=_solve_cfg(args, 1.0),
        K=args.nlambda, min_ratio=args.lambda_min_ratio,
    )
    _emit(report.to_csv(), args.out)
    if args.timings:
        _timings_to_stderr(report.time_breakdown)
    return EXIT_OK


def cmd_profile(args) -> int:
    family = _family(args)
    if args.profile_n < 1 or (args.reps is not None and args.reps < 2):
        raise UsageError("profile needs --profile-n >= 1 and --reps >= 2")
    res = profile_block_size(family, n=args.profile_n, reps=args.reps or 100)
    _emit(json.dumps(res.as_dict()) + "\n", args.out)
    sys.stderr.write(f"C = {res.C:.3g}; recommended block size {res.s_rec}\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    family = _family(args)
    if not args.gen:
        raise UsageError("gen needs --gen N,P,RHO,S,SEED")
    if not args.out:
        raise UsageError("gen needs --out")
    d = _load(args, family)
    if args.format == "csv":
        write_csv(d, args.out, header=args.csv_header)
    else:
        write_libsvm(d, args.out)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "path": cmd_path, "bench": cmd_bench, "profile": cmd_profile, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"eccd: error: {exc}\n")
        return EXIT_USAGE
    except (ECCDError, ValueError, ArithmeticError, OSError) as exc:
        sys.stderr.write(f"eccd: error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

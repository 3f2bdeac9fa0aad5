"""Command-line front end.

    vortex eval --word "X0*Y0" --mode cyclic --spec functionals.json
    vortex sample-check 64 1 --seed 3
    vortex run --preset cfree-basic --out results --threads 4
    vortex report results

Exit codes: 0 success, 1 a check failed, 2 bad input (word, spec, config),
3 inconsistent functional data (omega(1) mismatch, unregistered family,
missing role).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .functionals import FunctionalError, MissingMomentError
from .matrices import StabilizerHaarSampler, unitarity_residual
from .parsing import ParseError, parse_polynomial
from .products import (MODES, MissingRoleError, OmegaUnitMismatchError, UnregisteredFamilyError,
                       context_from_json, evaluate_mode)
from .scalars import format_scalar

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RULE = 0, 1, 2, 3
RESIDUAL_TOL = 1e-10
SAMPLE_Z_MAX = 4.0

log = logging.getLogger("vortex")


def _error(msg: str, code: int) -> int:
    print(f"vortex: {msg}", file=sys.stderr)
    return code


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("VORTEX_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer VORTEX_THREADS=%r", env)
    return 1


# ------------------------------------------------------------------- eval


def cmd_eval(args: argparse.Namespace) -> int:
    mode, _, component = args.mode.partition(".")
    if mode not in MODES:
        return _error(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}", EXIT_INPUT)
    try:
        spec = json.loads(Path(args.spec).read_text())
        ctx = context_from_json(spec)
    except (OSError, json.JSONDecodeError, FunctionalError, KeyError, ValueError) as exc:
        return _error(f"functional spec {args.spec}: {exc}", EXIT_INPUT)
    try:
        poly = parse_polynomial(args.word, ctx.center_fn(mode))
        values = evaluate_mode(ctx, mode, poly)
    except ParseError as exc:
        return _error(f"cannot parse word: {exc}", EXIT_INPUT)
    except OmegaUnitMismatchError as exc:
        return _error(f"cyclic inputs must share omega(1): {exc}", EXIT_RULE)
    except UnregisteredFamilyError as exc:
        return _error(f"every family in the word needs registered functionals: {exc}", EXIT_RULE)
    except MissingRoleError as exc:
        return _error(f"mode {mode!r} needs a functional that is missing: {exc}", EXIT_RULE)
    except MissingMomentError as exc:
        return _error(f"functional spec is too short for this word: {exc}", EXIT_INPUT)
    if component:
        if component not in values:
            return _error(f"mode {mode!r} has components {', '.join(values)}, not {component!r}", EXIT_INPUT)
        print(format_scalar(values[component]))
    elif len(values) == 1:
        print(format_scalar(next(iter(values.values()))))
    else:
        for name, value in values.items():
            print(f"{name} = {format_scalar(value)}")
    return EXIT_OK


# ---------------------------------------------------------- sample-check


def cmd_sample_check(args: argparse.Namespace) -> int:
    N, k = args.N, args.k
    if N < 1 or k < 0 or k >= N:
        return _error(f"need 0 <= k < N, got N={N}, k={k}", EXIT_INPUT)
    if args.trials < 2:
        return _error("need at least 2 trials", EXIT_INPUT)
    rng = np.random.default_rng(args.seed)
    V = np.eye(N, dtype=complex)[:, :k]
    sampler = StabilizerHaarSampler(N, V, rng)
    unit_res = stab_res = 0.0
    diag = np.empty(args.trials, dtype=complex)
    dist = np.empty(args.trials)
    for t in range(args.trials):
        U = sampler.sample()
        if t < 10:
            unit_res = max(unit_res, unitarity_residual(U))
            if k:
                stab_res = max(stab_res, float(np.max(np.linalg.norm(U @ V - V, axis=0))))
        diag[t] = U[k, k]
        dist[t] = np.linalg.norm(U - np.eye(N))
    T = args.trials
    m = diag.mean()
    se_m = float(np.hypot(diag.real.std(ddof=1), diag.imag.std(ddof=1)) / np.sqrt(T))
    sq = np.abs(diag) ** 2
    se_sq = float(sq.std(ddof=1) / np.sqrt(T))
    expect_sq = 1.0 / (N - k)
    z_m = abs(m) / max(se_m, 1e-12)
    z_sq = abs(sq.mean() - expect_sq) / max(se_sq, 1e-12 * (1 + expect_sq))
    ok_res = unit_res < RESIDUAL_TOL and stab_res < RESIDUAL_TOL
    ok_mc = z_m <= SAMPLE_Z_MAX and z_sq <= SAMPLE_Z_MAX
    print(f"stabilizer Haar sampler  N={N}  k={k}  seed={args.seed}  trials={T}")
    print(f"  unitarity residual ||U*U - I||_F       {unit_res:.3e}  (tolerance {RESIDUAL_TOL:.0e})")
    print(f"  stabilizer residual max ||U e_i - e_i||  {stab_res:.3e}  (tolerance {RESIDUAL_TOL:.0e})")
    print(f"  free block dimension                   {N - k}")
    print(f"  mean ||U - I||_F                       {dist.mean():.6f}")
    print(f"  E[U_kk]      {m.real:+.5f}{m.imag:+.5f}i  expected 0          z={z_m:.2f}")
    print(f"  E[|U_kk|^2]  {sq.mean():.6f}  expected {expect_sq:.6f}  z={z_sq:.2f}")
    if N - k == 1:
        print("  near-identity: U is the identity except for one phase on the last coordinate")
    passed = ok_res and ok_mc
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAIL


# ------------------------------------------------------------ run/report


def cmd_run(args: argparse.Namespace) -> int:
    from .experiments import ConfigError, build_config, load_config, render_summary, run_experiment

    if bool(args.config) == bool(args.preset):
        return _error("give exactly one of --config or --preset", EXIT_INPUT)
    try:
        cfg = load_config(args.config, args.seed) if args.config else build_config({"preset": args.preset}, args.seed)
        report = run_experiment(cfg, threads=_threads(args.threads))
    except ConfigError as exc:
        return _error(f"config error: {exc}", EXIT_INPUT)
    except ParseError as exc:
        return _error(f"cannot parse word: {exc}", EXIT_INPUT)
    csv_path, json_path = report.write(args.out, cfg.csv_name, cfg.summary_name)
    print(render_summary(report.summary()))
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_report(args: argparse.Namespace) -> int:
    from .experiments import load_summary, render_summary

    try:
        summary, rows = load_summary(args.path)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        return _error(f"cannot read summary at {args.path}: {exc}", EXIT_INPUT)
    print(render_summary(summary, rows, max_rows=args.max_rows))
    return EXIT_OK if summary.get("passed") else EXIT_FAIL


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vortex", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a product mode on a word")
    p.add_argument("--word", required=True, help='polynomial, e.g. "X0*Y0" or "{X0^2}*(Y0 + 1/2)"')
    p.add_argument("--mode", default="free",
                   help=f"one of {', '.join(MODES)}; append .component to select one value (e.g. cfree.phi)")
    p.add_argument("--spec", required=True, help="JSON file with the functionals of each family")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample-check", help="check the stabilizer Haar sampler")
    p.add_argument("N", type=int, help="dimension")
    p.add_argument("k", type=int, help="number of fixed basis vectors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=2000)
    p.set_defaults(func=cmd_sample_check)

    p = sub.add_parser("run", help="run a Monte Carlo experiment")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--preset", help="named preset instead of a config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--threads", type=int, help="worker threads (default: $VORTEX_THREADS or 1)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="print a stored experiment summary")
    p.add_argument("path", nargs="?", default="results", help="summary JSON or its directory")
    p.add_argument("--max-rows", type=int, default=40)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INPUT
    # experiment progress lines ("[kind seed=...] ...") are part of a run's output
    verbose = args.verbose or args.command == "run"
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``hcx detect|solve|oracle|lawsuite|example-direction``.

Reports are JSON with sorted keys, so identical inputs give byte-identical
output apart from ``wall_time``.  Exit codes: 0 success, 2 input error,
3 not signable, 4 infeasible set, 5 solver non-convergence (1 for a failing
law suite).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import convex_solver as cs
from . import laws
from . import quadratic_hidden as qh

SCHEMA = "hcx-1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NOT_SIGNABLE, EXIT_INFEASIBLE, EXIT_NO_CONVERGENCE = 0, 1, 2, 3, 4, 5

MUTANTS = {"drop-pair": laws.DropPairCompose}


class InputError(ValueError):
    pass


def _clean(obj):
    """Make a result JSON-safe: infinities become text, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        return v if math.isfinite(v) else ("+inf" if v > 0 else "-inf")
    return obj


def _emit(report: dict, out) -> None:
    text = json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False)
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _vector(value, n, name):
    if not isinstance(value, list) or len(value) != n:
        raise InputError(f"{name} must be a list of {n} numbers")
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must contain numbers") from exc
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr


def load_problem(path):
    """Read a problem file; returns ``(problem, oracle_settings, raw_bytes)``."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("problem file must hold a JSON object")
    missing = [k for k in ("dim", "M", "b", "set") if k not in data]
    if missing:
        raise InputError(f"problem file lacks {', '.join(missing)}")
    d = data["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise InputError("dim must be a positive integer")
    upper = _vector(data["M"], d * (d + 1) // 2, "M (upper triangle)")
    b = _vector(data["b"], d, "b")
    if not isinstance(data["set"], dict):
        raise InputError("set must be a JSON object")
    try:
        C = cs.from_json(data["set"])
        P = qh.QuadraticProblem.from_upper_triangle(d, upper, b, C)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, cs.InfeasibleSetError):
            raise
        raise InputError(f"bad set or matrix data: {exc}") from exc
    oracle = data.get("oracle", {}) or {}
    if not isinstance(oracle, dict):
        raise InputError("oracle settings must be a JSON object")
    settings = {"resolution": oracle.get("resolution", 401), "bound": None}
    if not isinstance(settings["resolution"], int) or settings["resolution"] < 2:
        raise InputError("oracle resolution must be an integer >= 2")
    if oracle.get("bound") is not None:
        bound = oracle["bound"]
        if not isinstance(bound, dict) or "lower" not in bound or "upper" not in bound:
            raise InputError('oracle bound must be {"lower": [...], "upper": [...]}')
        settings["bound"] = (_vector(bound["lower"], d, "bound.lower"), _vector(bound["upper"], d, "bound.upper"))
    return P, settings, raw


def _report(args, digest, result, t0) -> dict:
    command = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output", "mutant")}
    return {"schema": SCHEMA, "command": command, "input_digest": digest, "result": result, "wall_time": time.perf_counter() - t0}


def cmd_detect(args) -> int:
    t0 = time.perf_counter()
    P, _, raw = load_problem(args.path)
    result = qh.hidden_convexity_report(P, seed=args.seed, samples=args.samples)
    _emit(_report(args, _digest(raw), result, t0), args.output)
    return EXIT_OK if result["signable"] else EXIT_NOT_SIGNABLE


def _params(args) -> cs.SolverParams:
    try:
        return cs.SolverParams(tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    P, settings, raw = load_problem(args.path)
    digest = _digest(raw)
    code = EXIT_OK
    try:
        report = qh.solve(P, _params(args))
    except cs.InfeasibleSetError as exc:
        _emit(_report(args, digest, {"status": "infeasible", "error": str(exc)}, t0), args.output)
        return EXIT_INFEASIBLE
    except qh.ConvergenceError as exc:
        report, code = exc.report, EXIT_NO_CONVERGENCE
    result = report.to_json()
    if report.status == "not-signable":
        cert = qh.convexity_certificate(P.M, P.b, seed=args.seed, samples=args.samples)
        result["certificate"] = cert.to_json()
        _emit(_report(args, digest, result, t0), args.output)
        return EXIT_NOT_SIGNABLE
    if args.oracle:
        try:
            orc = qh.oracle_grid(P, settings["resolution"], settings["bound"])
        except cs.InfeasibleSetError as exc:
            result["oracle"] = {"error": str(exc)}
        else:
            result["oracle"] = orc.to_json()
            result["gap"] = abs(report.surrogate_value - orc.value) / (1.0 + abs(orc.value))
    _emit(_report(args, digest, result, t0), args.output)
    return code


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    P, settings, raw = load_problem(args.path)
    resolution = args.resolution if args.resolution is not None else settings["resolution"]
    try:
        orc = qh.oracle_grid(P, resolution, settings["bound"])
    except cs.InfeasibleSetError as exc:
        _emit(_report(args, _digest(raw), {"status": "infeasible", "error": str(exc)}, t0), args.output)
        return EXIT_INFEASIBLE
    _emit(_report(args, _digest(raw), orc.to_json(), t0), args.output)
    return EXIT_OK


def cmd_lawsuite(args) -> int:
    t0 = time.perf_counter()
    ops = MUTANTS[args.mutant]() if args.mutant else None
    reports = laws.run_law_suite(args.seed, args.size, args.cases, exhaustive=not args.no_exhaustive, ops=ops)
    passed = all(r.passed for r in reports)
    result = {"passed": passed, "laws": [r.to_json() for r in reports]}
    digest = _digest(json.dumps([args.seed, args.size, args.cases, not args.no_exhaustive]).encode())
    _emit(_report(args, digest, result, t0), args.output)
    return EXIT_OK if passed else EXIT_FAIL


def _matrix_arg(text, name):
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--{name} is not valid JSON: {exc}") from exc
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"--{name} must be a rectangular array of numbers") from exc
    if not np.all(np.isfinite(arr)):
        raise InputError(f"--{name} must be finite")
    return arr


def cmd_example_direction(args) -> int:
    t0 = time.perf_counter()
    A = _matrix_arg(args.A, "A")
    b = _matrix_arg(args.b, "b")
    x = _matrix_arg(args.x, "x")
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or b.ndim != 1 or x.ndim != 1:
        raise InputError("--A must be a matrix, --b and --x vectors")
    try:
        closed = qh.direction_example_eval(A, b, x)
        oracle = qh.direction_oracle(A, b, x)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    result = {"closed_form": closed, "oracle": oracle, "difference": abs(closed - oracle)}
    digest = _digest(json.dumps([A.tolist(), b.tolist(), x.tolist()]).encode())
    _emit(_report(args, digest, result, t0), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hcx", description="Conditional infimum tools and hidden convexity of quadratic problems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
        p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")

    p = sub.add_parser("detect", help="decide whether the quadratic problem has a sign pattern")
    p.add_argument("path")
    p.add_argument("--samples", type=int, default=100_000, help="midpoint search budget when not signable")
    common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("solve", help="solve through the convex surrogate and lift the minimizer")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=cs.SolverParams.tol, help="relative objective change for stopping")
    p.add_argument("--max-iter", type=int, default=cs.SolverParams.max_iter, help="subgradient iterations per start and stage")
    p.add_argument("--oracle", action="store_true", help="also run the grid oracle and report the relative gap")
    p.add_argument("--samples", type=int, default=100_000, help="midpoint search budget when not signable")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="grid minimum of the exact fiber function over the set")
    p.add_argument("path")
    p.add_argument("--resolution", type=int, help="points per axis (default from file, else 401)")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lawsuite", help="run the conditional infimum law suite")
    p.add_argument("--size", type=int, default=5, help="largest random set size (default 5)")
    p.add_argument("--cases", type=int, default=1000, help="random cases per law (default 1000)")
    p.add_argument("--no-exhaustive", action="store_true", help="skip the exhaustive tiny instances")
    p.add_argument("--mutant", choices=sorted(MUTANTS), help=argparse.SUPPRESS)
    common(p)
    p.set_defaults(func=cmd_lawsuite, seed=1)

    p = sub.add_parser("example-direction", help="closed form vs 1-D search for the direction relation example")
    p.add_argument("--A", required=True, help="JSON matrix, p rows by d columns")
    p.add_argument("--b", required=True, help="JSON vector of length p")
    p.add_argument("--x", required=True, help="JSON vector of length d")
    common(p)
    p.set_defaults(func=cmd_example_direction)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"hcx: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except cs.InfeasibleSetError as exc:
        print(f"hcx: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())

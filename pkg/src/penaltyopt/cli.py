"""Command-line front end: solve, check and rate subcommands.

Exit codes: 0 success, 2 input or validation error, 3 solver failure,
4 certificate failure.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import stationarity as _stat
from .direction import ZERO_SLACK
from .errors import (
    DimensionMismatch,
    MissingFeasiblePoint,
    MissingLowerBound,
    ParseError,
    PenaltyOptError,
    UnsupportedKind,
    ValidationError,
    WrongSetShape,
)
from .merit import PENALTY_KINDS
from .problemfile import parse_problem
from .solver import SolverConfig, solve

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CERT = 0, 2, 3, 4
TRACE_HEADER = ["k", "f_val", "dist_val", "dir_value", "step", "backtracks"]
_INPUT_ERRORS = (ParseError, ValidationError, MissingFeasiblePoint, MissingLowerBound,
                 DimensionMismatch, WrongSetShape, UnsupportedKind, OSError)


def fmt(v):
    return f"{v:.17g}"


def _rho_arg(text):
    if text == "auto":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number or 'auto'") from None
    if v < 0:
        raise argparse.ArgumentTypeError("rho must be nonnegative")
    return v


def _vector_arg(text):
    try:
        return np.array([float(t) for t in text.split(",") if t.strip()], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def _nonneg(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def load_problem(path):
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def _stop_eps(eps):
    # eps = 0 is allowed on the command line; the descent loop then stops at
    # the floating-point slack and certification is done at exactly 0
    return eps if eps > 0 else ZERO_SLACK


class _TraceWriter:
    def __init__(self, path):
        self.fh = open(path, "w", newline="", encoding="utf-8") if path else None
        self.w = csv.writer(self.fh) if self.fh else None
        if self.w:
            self.w.writerow(TRACE_HEADER)

    def __call__(self, rec):
        if self.w:
            self.w.writerow([rec.k, fmt(rec.f_val), fmt(rec.dist_val), fmt(rec.dir_value), fmt(rec.step), rec.backtracks])

    def close(self):
        if self.fh:
            self.fh.close()


def _emit(lines, path, out):
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)


def _run_solve(problem, eps, alpha, rho, args, trace=None):
    cfg = SolverConfig(eps=_stop_eps(eps), alpha=alpha, rho=rho, mu=args.mu,
                       max_iters=args.max_iters, trace=trace, kind=args.penalty)
    return solve(problem, cfg, certify_eps=eps)


def cmd_solve(args, out=sys.stdout):
    problem = load_problem(args.problem)
    alpha = problem.alpha if args.alpha is None else args.alpha
    if args.rho is None and args.eps == 0:
        raise ValidationError("automatic rho needs eps > 0")
    trace = _TraceWriter(args.trace)
    try:
        res = _run_solve(problem, args.eps, alpha, args.rho, args, trace)
    finally:
        trace.close()
    lines = res.certificate.as_lines()
    lines.insert(0, f"status: {res.status}")
    lines.append(f"iterations: {res.iterations}")
    lines.append("x: " + ",".join(fmt(v) for v in res.x))
    _emit(lines, args.report, out)
    if res.status != "converged":
        return EXIT_SOLVER
    return EXIT_OK if res.certificate.passed else EXIT_CERT


def cmd_check(args, out=sys.stdout):
    problem = load_problem(args.problem)
    x = args.point
    if x.shape[0] != problem.n:
        raise DimensionMismatch(f"point has {x.shape[0]} entries, problem has {problem.n} variables")
    alpha = problem.alpha if args.alpha is None else args.alpha
    tol = args.eps + ZERO_SLACK
    if args.mode == "def41":
        cert = _stat.certify(problem, x, args.eps, args.rho, alpha, args.penalty)
        _emit(cert.as_lines(), None, out)
        ok = cert.passed
    elif args.mode == "conic":
        feas, stat, lam = _stat.conic_residuals(problem, x, enlarge=args.enlarge)
        lines = [f"feas: {fmt(feas)}", f"stat: {fmt(stat)}"]
        lines.extend(f"lambda[{i}]: {fmt(v)}" for i, v in enumerate(lam))
        _emit(lines, None, out)
        ok = feas <= tol and stat <= tol
    else:
        r = _stat.nlp_kkt_residuals(problem, x)
        feas = float(r.feasibility.max()) if r.feasibility.size else 0.0
        lines = [
            f"stationarity: {fmt(r.stationarity)}",
            f"feasibility: {fmt(feas)}",
            f"sign_violation: {fmt(r.sign_violation)}",
            f"complementarity: {fmt(r.complementarity)}",
            f"min_multiplier: {fmt(r.min_multiplier)}",
        ]
        lines.extend(f"lambda[{i}]: {fmt(v)}" for i, v in enumerate(r.lam))
        lines.extend(f"mu[{i}]: {fmt(v)}" for i, v in enumerate(r.mu))
        _emit(lines, None, out)
        ok = r.max_residual() <= tol
    return EXIT_OK if ok else EXIT_CERT


def rate_slope(eps_values, iters):
    """Least-squares slope of log(iters) against log(1/eps), or None."""
    e = np.asarray(eps_values, dtype=float)
    k = np.asarray(iters, dtype=float)
    if e.size < 2 or np.unique(e).size < 2:
        return None
    return float(np.polyfit(np.log(1.0 / e), np.log(k), 1)[0])


def cmd_rate(args, out=sys.stdout):
    problem = load_problem(args.problem)
    alpha = problem.alpha if args.alpha is None else args.alpha
    eps_list = [float(t) for t in args.eps_list.split(",") if t.strip()]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise ValidationError("eps-list needs positive values")
    rows, code = [], EXIT_OK
    for eps in eps_list:
        res = _run_solve(problem, eps, alpha, args.rho, args)
        rows.append((eps, res.iterations, res.rho))
        if res.status != "converged":
            code = EXIT_SOLVER
        elif not res.certificate.passed and code == EXIT_OK:
            code = EXIT_CERT
    lines = ["eps,iters,rho"] + [f"{fmt(e)},{k},{fmt(r)}" for e, k, r in rows]
    _emit(lines, args.out, out)
    slope = rate_slope([r[0] for r in rows], [r[1] for r in rows])
    out.write(f"slope: {'n/a' if slope is None else fmt(slope)}\n")
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="penaltyopt", description="Distance-penalty solver toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--problem", required=True)
        sp.add_argument("--alpha", type=float, default=None, help="penalty power (default: file value, else 2)")
        sp.add_argument("--penalty", choices=PENALTY_KINDS, default="power")

    s = sub.add_parser("solve", help="run the descent method and certify the result")
    common(s)
    s.add_argument("--eps", type=_nonneg, required=True)
    s.add_argument("--rho", type=_rho_arg, default=None)
    s.add_argument("--mu", type=float, default=0.5)
    s.add_argument("--max-iters", type=int, default=100_000)
    s.add_argument("--trace")
    s.add_argument("--report")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="evaluate stationarity residuals at a point")
    common(c)
    c.add_argument("--point", type=_vector_arg, required=True)
    c.add_argument("--eps", type=_nonneg, required=True)
    c.add_argument("--rho", type=_nonneg, default=0.0)
    c.add_argument("--mode", choices=("def41", "conic", "kkt"), default="def41")
    c.add_argument("--enlarge", type=_nonneg, default=0.0, help="widen the normal cone by this radius (conic mode)")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("rate", help="iteration counts over a sweep of eps values")
    common(r)
    r.add_argument("--eps-list", required=True)
    r.add_argument("--rho", type=_rho_arg, default=None)
    r.add_argument("--mu", type=float, default=0.5)
    r.add_argument("--max-iters", type=int, default=100_000)
    r.add_argument("--out")
    r.set_defaults(func=cmd_rate)
    return p


def _glue_vectors(argv):
    # "--point -1,-1" would otherwise be read as an unknown option
    argv = list(sys.argv[1:] if argv is None else argv)
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--point" and i + 1 < len(argv):
            out.append(f"--point={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_vectors(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args, out=out)
    except _INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PenaltyOptError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as exc:  # noqa: BLE001 - every run must end in a documented code
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Subderivative descent on the penalized merit function."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import stationarity as _stat
from .direction import Direction, direction_search
from .errors import (
    BacktrackExhausted,
    InnerSolveFailure,
    MissingFeasiblePoint,
    MissingLowerBound,
    ValidationError,
)
from .merit import PenaltyFn, check_kind_supported

RHO_FLOOR = 1e-6
PROBE_ITERS = 200


@dataclass
class SolverConfig:
    eps: float
    alpha: float = 2.0
    rho: Optional[float] = None
    mu: float = 0.5
    max_iters: int = 100_000
    max_backtracks: int = 60
    trace: Optional[Callable] = None
    kind: str = "power"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        if not 0 < self.mu < 1:
            raise ValidationError("mu must lie in (0, 1)")
        if self.alpha < 1:
            raise ValidationError("alpha must be >= 1")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValidationError("iteration limits must be positive")
        if self.rho is not None and self.rho < 0:
            raise ValidationError("rho must be nonnegative")


@dataclass
class IterateRecord:
    k: int
    x: np.ndarray
    f_val: float
    dist_val: float
    dir_value: float
    step: float
    backtracks: int


@dataclass
class SolveResult:
    x: np.ndarray
    certificate: "_stat.Certificate"
    trace: list
    status: str
    rho: float
    M: Optional[float] = None
    flags: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.trace)


def select_rho(problem, eps, alpha=None, M=None):
    """rho0 + (phi(x0) + M) / eps**alpha, floored at a small positive value."""
    alpha = problem.alpha if alpha is None else float(alpha)
    if problem.x0 is None:
        raise MissingFeasiblePoint("the rho rule needs a feasible start point x0")
    M = problem.M if M is None else M
    if M is None:
        raise MissingLowerBound("the rho rule needs the lower-bound constant M")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    # (1/eps)**alpha keeps exact decimal cases exact, e.g. 1/0.1**2 != 100
    rho = problem.rho0 + (problem.phi(problem.x0) + M) * (1.0 / eps) ** alpha
    return max(rho, RHO_FLOOR)


def armijo_step(pf, x, w, d_val, cfg, f_x=None):
    """Largest step in {1, mu, mu^2, ...} with f(x + t w) - f(x) < (t/2) d_val."""
    if not d_val < 0:
        raise ValidationError("Armijo search needs a descent value d_val < 0")
    f_x = pf.value(x) if f_x is None else f_x
    t = 1.0
    for b in range(cfg.max_backtracks + 1):
        xn = x + t * w
        fn = pf.value(xn)
        if fn - f_x < 0.5 * t * d_val:
            return t, xn, b
        t *= cfg.mu
    raise BacktrackExhausted(f"no acceptable step after {cfg.max_backtracks} reductions")


def _descend(pf, x, cfg, on_row=None):
    """Core loop. Returns (x, rows, status, last_direction)."""
    rows = []
    f = pf.value(x)
    for k in range(cfg.max_iters):
        d: Direction = direction_search(pf.local(x), stop_below=cfg.eps)
        dist = pf.dist(x)
        if d.lower >= -cfg.eps:
            rec = IterateRecord(k, x.copy(), f, dist, d.value, 0.0, 0)
            rows.append(rec)
            if on_row:
                on_row(rec)
            return x, rows, "converged", d
        if not d.value < 0:
            raise InnerSolveFailure("direction search bracket did not separate from zero")
        step, xn, bt = armijo_step(pf, x, d.w, d.value, cfg, f_x=f)
        rec = IterateRecord(k, x.copy(), f, dist, d.value, step, bt)
        rows.append(rec)
        if on_row:
            on_row(rec)
        x = xn
        f = pf.value(x)
    d = direction_search(pf.local(x), stop_below=cfg.eps)
    rec = IterateRecord(cfg.max_iters, x.copy(), f, pf.dist(x), d.value, 0.0, 0)
    rows.append(rec)
    if on_row:
        on_row(rec)
    return x, rows, "max_iters", d


def estimate_M(problem, cfg):
    """Probe the lower bound of f at rho0 with a short descent run from x0."""
    pf = PenaltyFn(problem, problem.rho0, cfg.kind, cfg.alpha)
    probe = SolverConfig(eps=cfg.eps, alpha=cfg.alpha, rho=problem.rho0, mu=cfg.mu,
                         max_iters=PROBE_ITERS, max_backtracks=cfg.max_backtracks, kind=cfg.kind)
    x = problem.x0.copy()
    try:
        x, _, _, _ = _descend(pf, x, probe)
    except (BacktrackExhausted, InnerSolveFailure):
        pass
    val = pf.value(x)
    return max(0.0, -val)


def solve(problem, cfg: SolverConfig, start=None, certify_eps=None) -> SolveResult:
    """Run subderivative descent and certify the final point.

    With ``cfg.rho`` unset the penalty parameter comes from the selection
    rule; a missing M is then replaced by a probe estimate, flagged as
    unsound. ``certify_eps`` overrides the tolerance used for the final
    certificate (default ``cfg.eps``).
    """
    check_kind_supported(problem, cfg.kind)
    flags = []
    M = problem.M
    if cfg.rho is None:
        if problem.x0 is None:
            raise MissingFeasiblePoint("automatic rho needs a feasible start point x0")
        if M is None:
            M = estimate_M(problem, cfg)
            flags.append("unsound-estimate")
        rho = select_rho(problem, cfg.eps, cfg.alpha, M)
    else:
        rho = float(cfg.rho)
    if start is not None:
        x = np.asarray(start, dtype=float).reshape(-1)
    elif problem.x0 is not None:
        x = problem.x0.copy()
    else:
        raise MissingFeasiblePoint("no start point given and the problem has no x0")
    pf = PenaltyFn(problem, rho, cfg.kind, cfg.alpha)
    x, rows, status, _ = _descend(pf, x, cfg, cfg.trace)
    eps_c = cfg.eps if certify_eps is None else certify_eps
    cert = _stat.certify(problem, x, eps_c, rho, cfg.alpha, cfg.kind)
    if status != "converged":
        cert.flags.append("max-iters")
    cert.flags.extend(flags)
    return SolveResult(x, cert, rows, status, rho, M, flags)

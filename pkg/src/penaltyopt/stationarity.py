"""Approximate stationarity certificates, conic and NLP residuals, multipliers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import nnls

from . import cones as _cones
from . import sets as _sets
from .direction import ZERO_SLACK, direction_search
from .errors import UnsupportedKind, ValidationError, WrongSetShape
from .merit import exact_form_model, make_penalty

MAX_NNLS_M = 32
PG_ITERS = 20_000


@dataclass
class Certificate:
    eps_feas: float
    eps_stat: float
    rho_used: float
    multipliers: Optional[np.ndarray] = None
    kkt_residual: Optional[float] = None
    passed_at: Optional[float] = None
    rho_exact: Optional[float] = None
    flags: list = field(default_factory=list)

    @property
    def passed(self):
        return self.passed_at is not None

    def as_lines(self):
        out = [
            f"eps_feas: {self.eps_feas:.17g}",
            f"eps_stat: {self.eps_stat:.17g}",
            f"rho_used: {self.rho_used:.17g}",
            f"rho_exact: {self.rho_exact:.17g}" if self.rho_exact is not None else "rho_exact: none",
            f"passed_at: {self.passed_at:.17g}" if self.passed_at is not None else "passed_at: none",
        ]
        if self.kkt_residual is not None:
            out.append(f"kkt_residual: {self.kkt_residual:.17g}")
        if self.multipliers is not None:
            out.extend(f"lambda[{i}]: {v:.17g}" for i, v in enumerate(self.multipliers))
        if self.flags:
            out.append("flags: " + ",".join(self.flags))
        return out


def effective_rho(problem, x, rho, alpha=None, kind="power"):
    """Multiplier of dist(F(.); X) that reproduces the merit slope at x.

    At infeasible points the chain rule turns rho * dist**alpha into
    alpha * rho * dist**(alpha-1) times the exact penalty. At feasible points
    with alpha > 1 the penalty is flat to first order.
    """
    alpha = problem.alpha if alpha is None else float(alpha)
    if problem.m == 0:
        return 0.0
    p = problem.constraint_dist(x)
    feasible = p <= _sets.TOL_FEAS
    if kind == "exact" or (kind == "power" and alpha == 1.0):
        return float(rho)
    if kind == "power":
        return 0.0 if feasible else alpha * rho * p ** (alpha - 1.0)
    if kind == "square":
        return 0.0 if feasible else rho * p
    pen = make_penalty(problem, kind, alpha)
    form = pen.subderivative(problem.F.value(x))
    if kind == "l1" and form.cone_terms:
        return float(rho) * max(1.0, max(np.linalg.norm(g) for g in form.linear_candidates))
    return float(rho) * max(np.linalg.norm(g) for g in form.linear_candidates)


def check_approx_stationary(problem, x, eps, rho, alpha=None, kind="power"):
    """Test both approximate-stationarity conditions at x.

    Uses the exact distance penalty with the effective multiplier from
    :func:`effective_rho`; the stationarity residual is the certified lower
    bound of the direction subproblem.
    """
    if rho < 0 or eps < 0:
        raise ValidationError("rho and eps must be nonnegative")
    x = np.asarray(x, dtype=float).reshape(-1)
    feas = problem.constraint_dist(x)
    rho_e = effective_rho(problem, x, rho, alpha, kind)
    d = direction_search(exact_form_model(problem, x, rho_e), stop_below=0.0)
    stat = max(0.0, -d.lower)
    ok = feas <= eps + ZERO_SLACK and stat <= eps + ZERO_SLACK
    return Certificate(feas, stat, float(rho), passed_at=float(eps) if ok else None, rho_exact=rho_e)


def certify(problem, x, eps, rho, alpha=None, kind="power"):
    """Certificate with multipliers attached, as written by the solver."""
    cert = check_approx_stationary(problem, x, eps, rho, alpha, kind)
    x = np.asarray(x, dtype=float).reshape(-1)
    if problem.m == 0:
        return cert
    z = problem.F.value(x)
    pr = problem.X.project(z)
    if pr.distance > _sets.TOL_FEAS:
        lam = cert.rho_exact * (z - pr.candidates[0]) / pr.distance
        cert.multipliers = lam
        if problem.objective.is_smooth and problem.F.is_smooth:
            r = problem.objective.gradient(x) + problem.F.jacobian(x).T @ lam
            cert.kkt_residual = float(np.linalg.norm(r))
        return cert
    try:
        _, stat, lam = conic_residuals(problem, x)
    except (UnsupportedKind, ValidationError):
        return cert
    cert.multipliers = lam
    cert.kkt_residual = stat
    return cert


def _require_smooth(problem):
    if not (problem.objective.is_smooth and problem.F.is_smooth):
        raise ValidationError("conic residuals need smooth objective and constraints")


def _generators(cone):
    """(B, C) with cone = {B mu + C nu : mu >= 0}, or None if not polyhedral."""
    d = cone.dim
    if isinstance(cone, _cones.FullSpace):
        return np.zeros((d, 0)), np.eye(d)
    if isinstance(cone, _cones.ZeroCone):
        return np.zeros((d, 0)), np.zeros((d, 0))
    if isinstance(cone, _cones.SignCone):
        I = np.eye(d)
        pos = [I[:, i] if s == "+" else -I[:, i] for i, s in enumerate(cone.signs) if s in "+-"]
        free = [I[:, i] for i, s in enumerate(cone.signs) if s == "f"]
        return (np.column_stack(pos) if pos else np.zeros((d, 0)),
                np.column_stack(free) if free else np.zeros((d, 0)))
    if isinstance(cone, _cones.Ray):
        return cone.direction.reshape(d, 1), np.zeros((d, 0))
    if isinstance(cone, _cones.Line):
        return np.zeros((d, 0)), cone.direction.reshape(d, 1)
    if isinstance(cone, _cones.SecondOrder) and d == 1:
        return np.array([[float(cone.sign)]]), np.zeros((1, 0))
    if isinstance(cone, _cones.ProductCone):
        Bs, Cs = [], []
        for f in cone.factors:
            g = _generators(f)
            if g is None:
                return None
            Bs.append(g[0])
            Cs.append(g[1])
        return _block_diag(Bs, d), _block_diag(Cs, d)
    return None


def _block_diag(mats, d):
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((d, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def _min_residual_projected(g, A, project, iters=PG_ITERS, tol=1e-14):
    """min over lam in a convex set of |g + A lam|, by accelerated projected gradient."""
    L = float(np.linalg.norm(A, 2)) ** 2
    lam = project(np.zeros(A.shape[1]))
    if L == 0.0:
        return lam
    y, t = lam.copy(), 1.0
    prev = np.inf
    for _ in range(iters):
        new = project(y - A.T @ (g + A @ y) / L)
        obj = float(np.sum((g + A @ new) ** 2))
        if obj > prev:
            y, t = lam.copy(), 1.0
            continue
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        y = new + ((t - 1) / t_next) * (new - lam)
        if np.linalg.norm(new - lam) <= tol * max(1.0, np.linalg.norm(lam)):
            lam = new
            break
        lam, t, prev = new, t_next, obj
    return lam


def conic_residuals(problem, x, enlarge=0.0):
    """(feas, stat, lambda) for the conic form of approximate stationarity.

    At infeasible points lambda is the best nonnegative multiple of the
    normalized projection residual. At feasible points lambda ranges over the
    normal cone, optionally widened by a ball of radius ``enlarge``.
    """
    _require_smooth(problem)
    if not problem.X.is_convex:
        raise UnsupportedKind("conic residuals need a convex constraint set")
    x = np.asarray(x, dtype=float).reshape(-1)
    g = problem.objective.gradient(x)
    if problem.m == 0:
        return 0.0, float(np.linalg.norm(g)), np.zeros(0)
    J = problem.F.jacobian(x)
    z = problem.F.value(x)
    pr = problem.X.project(z)
    y, p = pr.candidates[0], pr.distance
    if p > _sets.TOL_FEAS and enlarge == 0.0:
        nvec = (z - y) / p
        a = J.T @ nvec
        aa = float(a @ a)
        t = max(0.0, -float(g @ a) / aa) if aa > 0 else 0.0
        lam = t * nvec
        return p, float(np.linalg.norm(g + J.T @ lam)), lam
    if p > _sets.TOL_FEAS:
        nvec = (z - y) / p
        normal = _cones.Ray(nvec)
    else:
        normal = problem.X.tangent_cone(y).polar()
    if problem.m > MAX_NNLS_M:
        raise ValidationError(f"multiplier extraction supports at most {MAX_NNLS_M} constraint rows")
    gens = _generators(normal) if enlarge == 0.0 else None
    if gens is not None:
        B, C = gens
        A = np.hstack([J.T @ B, J.T @ C, -(J.T @ C)])
        if A.shape[1] == 0:
            lam = np.zeros(problem.m)
        else:
            coef, _ = nnls(A, -g, maxiter=50 * max(A.shape[1], 1))
            kb, kc = B.shape[1], C.shape[1]
            lam = B @ coef[:kb] + C @ (coef[kb:kb + kc] - coef[kb + kc:])
    else:
        m = problem.m
        if enlarge > 0.0:
            def project(v):
                a = normal.project(v[:m])
                e = v[m:]
                ne = np.linalg.norm(e)
                return np.concatenate([a, e if ne <= enlarge else e * (enlarge / ne)])

            A = np.hstack([J.T, J.T])
            sol = _min_residual_projected(g, A, project)
            lam = sol[:m] + sol[m:]
        else:
            lam = _min_residual_projected(g, J.T, normal.project)
    return p, float(np.linalg.norm(g + J.T @ lam)), lam


class KKTResiduals(NamedTuple):
    stationarity: float
    feasibility: np.ndarray
    sign_violation: float
    complementarity: float
    lam: np.ndarray
    mu: np.ndarray
    min_multiplier: float

    def max_residual(self):
        feas = float(self.feasibility.max()) if self.feasibility.size else 0.0
        return max(self.stationarity, feas, self.sign_violation, self.complementarity)


def _nlp_layout(problem):
    """Boolean mask of inequality rows; raises unless X is orthant/zeros blocks."""
    mask = []
    for _, s in problem.constraints:
        if isinstance(s, _sets.NonpositiveOrthant):
            mask.extend([True] * s.dim)
        elif isinstance(s, _sets.Zeros):
            mask.extend([False] * s.dim)
        else:
            raise WrongSetShape(f"NLP residuals need orthant or zeros sets, got {s.kind}")
    return np.array(mask, dtype=bool)


def nlp_kkt_residuals(problem, x, multipliers=None):
    """Residual groups of the NLP approximate KKT system.

    ``multipliers`` holds one value per constraint row (inequalities and
    equalities in file order); when omitted they are extracted with
    :func:`conic_residuals`.
    """
    _require_smooth(problem)
    ineq = _nlp_layout(problem)
    x = np.asarray(x, dtype=float).reshape(-1)
    if multipliers is None:
        _, _, lam_all = conic_residuals(problem, x) if problem.m else (0, 0, np.zeros(0))
    else:
        lam_all = np.asarray(multipliers, dtype=float).reshape(-1)
        if lam_all.shape[0] != problem.m:
            raise ValidationError(f"expected {problem.m} multipliers, got {lam_all.shape[0]}")
    g = problem.objective.gradient(x)
    Fx = problem.F.value(x)
    stat = float(np.linalg.norm(g + problem.F.jacobian(x).T @ lam_all)) if problem.m else float(np.linalg.norm(g))
    feas = np.where(ineq, np.maximum(Fx, 0.0), np.abs(Fx))
    lam = lam_all[ineq]
    mu = lam_all[~ineq]
    sign = float(max(0.0, -lam.min())) if lam.size else 0.0
    act = Fx[ineq] <= 0.0
    comp = float(np.abs(lam[act] * Fx[ineq][act]).max()) if np.any(act) else 0.0
    min_mult = float(lam.min()) if lam.size else 0.0
    return KKTResiduals(stat, feas, sign, comp, lam, mu, min_mult)


class KappaPrime(NamedTuple):
    satisfied: bool
    kappa_prime: float
    feasible: bool


def kappa_prime_condition(problem, x):
    """Evaluate the subregularity-type condition at x and the implied constant."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if problem.m == 0:
        return KappaPrime(True, 0.0, True)
    z = problem.F.value(x)
    pr = problem.X.project(z)
    if pr.distance <= _sets.TOL_FEAS:
        return KappaPrime(True, 0.0, True)
    if not problem.F.is_smooth:
        raise ValidationError("the condition needs a smooth constraint map")
    J = problem.F.jacobian(x)
    S = min(-float(np.linalg.norm(J.T @ (z - y))) for y in pr.candidates)
    if S < 0.0:
        return KappaPrime(True, pr.distance / -S, False)
    return KappaPrime(False, float("inf"), False)

"""Minimizing a merit subderivative over the closed unit ball.

The local model is a min over finitely many convex branches, each of the
form

    h(w) = <c, w> + sum_i max_{r in R_i} <r, w> + sum_j dist(J_j w; K_j),

which is the support function of C = c + sum conv(R_i) + sum J_j^T (K_j° ∩ B).
Its minimum over the unit ball is -dist(0, C), attained at -z*/|z*| for the
min-norm element z*. Each branch is solved through that dual with an
accelerated projected gradient loop, which yields a certified lower bound
-|z| at every iterate. Branches whose nonsmooth constraint components share
a multi-dimensional cone term are handed to cvxpy instead.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cones as _cones
from .errors import InnerSolveFailure, UnsupportedKind

INNER_TOL = 1e-10
INNER_MAX_ITERS = 10_000
MAX_BRANCHES = 10_000
ZERO_SLACK = 1e-12


@dataclass
class Part:
    c: Optional[np.ndarray] = None
    maxterms: list = field(default_factory=list)
    cones: list = field(default_factory=list)
    coupled: list = field(default_factory=list)


@dataclass
class Branch:
    c: np.ndarray
    maxterms: list
    cones: list
    coupled: list

    def value(self, w):
        v = float(self.c @ w)
        for R in self.maxterms:
            v += float((R @ w).max())
        for J, K in self.cones:
            v += K.dist(J @ w)
        for s, J, K, atoms in self.coupled:
            d = [K.dist(J @ w)] if J is not None else []
            d.extend(float((R @ w).max()) for R in atoms)
            v += s * float(np.linalg.norm(d))
        return v


@dataclass
class Direction:
    w: np.ndarray
    value: float
    lower: float
    branches: int = 1


def _merge(n, parts):
    c = np.zeros(n)
    maxterms, cones, coupled = [], [], []
    for p in parts:
        if p is None:
            continue
        if p.c is not None:
            c = c + p.c
        maxterms.extend(p.maxterms)
        cones.extend(p.cones)
        coupled.extend(p.coupled)
    return Branch(c, maxterms, cones, coupled)


def _reduce_rows(mode, rows, coef=1.0):
    """Alternatives for coef * reduce(rows @ w); reduce is max, min or single."""
    rows = coef * np.asarray(rows, dtype=float)
    if mode == "lin" or rows.shape[0] == 1:
        return [Part(c=rows[0])]
    convex = (mode == "max") == (coef > 0)
    if convex:
        return [Part(maxterms=[rows])]
    return [Part(c=r) for r in rows]


def _atoms(cone, lo):
    """Split a convex cone into (cone, start, stop) atoms, 1-D where the cone is separable."""
    if isinstance(cone, _cones.ProductCone):
        out = []
        for f, a in zip(cone.factors, cone.offsets[:-1]):
            out.extend(_atoms(f, lo + int(a)))
        return out
    if isinstance(cone, _cones.SignCone):
        return [(_cones.SignCone(s), lo + i, lo + i + 1) for i, s in enumerate(cone.signs)]
    if isinstance(cone, (_cones.ZeroCone, _cones.FullSpace)):
        return [(type(cone)(1), lo + i, lo + i + 1) for i in range(cone.dim)]
    return [(cone, lo, lo + cone.dim)]


def _scalar_rows(code, mode, rows):
    """Row sets R with dist(reduce(rows @ w); K) = min over R-choices of max(R @ w).

    ``code`` classifies the one-dimensional cone K. Returns None when the
    term vanishes identically.
    """
    L = np.asarray(rows, dtype=float)
    if mode == "min":
        L = -L
        code = {"-": "+", "+": "-"}.get(code, code)
    if code == "f":
        return None
    zero = np.zeros((1, L.shape[1]))
    if code == "-":
        return [np.vstack([zero, L])]
    if code == "+":
        return [np.vstack([zero, -L[k:k + 1]]) for k in range(L.shape[0])]
    return [np.vstack([L, -L[j:j + 1]]) for j in range(L.shape[0])]


def _cone_alternatives(term, comps, n):
    out = []
    s = term.scale
    for piece in term.cone.pieces():
        block = comps[term.start:term.stop]
        if all(mode == "lin" for mode, _ in block):
            if piece.is_full():
                out.append(None)
                continue
            J = s * np.vstack([rows for _, rows in block])
            out.append(Part(cones=[(J, piece)]))
            continue
        smooth_rows, smooth_cones, choice_sets = [], [], []
        for atom, a, b in _atoms(piece, 0):
            sub = block[a:b]
            if all(mode == "lin" for mode, _ in sub):
                if not atom.is_full():
                    smooth_rows.append(np.vstack([rows for _, rows in sub]))
                    smooth_cones.append(atom)
                continue
            if b - a != 1:
                raise UnsupportedKind(
                    "nonsmooth constraint components are only supported for sets whose "
                    "tangent cones split into one-dimensional factors")
            mode, rows = sub[0]
            alts = _scalar_rows(atom.axis_code(), mode, rows)
            if alts is not None:
                choice_sets.append(alts)
        J = np.vstack(smooth_rows) if smooth_rows else None
        K = _cones.ProductCone(smooth_cones) if smooth_cones else None
        for choice in itertools.product(*choice_sets):
            if not choice:
                out.append(Part(cones=[(s * J, K)]) if J is not None else None)
            elif J is None and len(choice) == 1:
                out.append(Part(maxterms=[s * choice[0]]))
            else:
                out.append(Part(coupled=[(s, J, K, list(choice))]))
    return out


def _candidate_alternatives(g, comps):
    factors = []
    for gi, (mode, rows) in zip(g, comps):
        if gi != 0.0:
            factors.append(_reduce_rows(mode, rows, gi))
    return factors


def enumerate_branches(lm, max_branches=MAX_BRANCHES):
    n = lm.n
    obj_mode, obj_rows = lm.obj
    obj_alts = _reduce_rows(obj_mode, obj_rows)
    factors = [obj_alts]
    if lm.comps:
        cand_alts = []
        for g in lm.form.linear_candidates:
            sub = _candidate_alternatives(g, lm.comps)
            for combo in itertools.product(*sub):
                cand_alts.append(_merge(n, combo))
        cand_parts = [Part(c=b.c, maxterms=b.maxterms) for b in cand_alts]
        factors.append(cand_parts)
        for term in lm.form.cone_terms:
            factors.append(_cone_alternatives(term, lm.comps, n))
    count = 1
    for f in factors:
        count *= max(len(f), 1)
    if count > max_branches:
        raise InnerSolveFailure(f"direction search needs {count} branches, limit is {max_branches}")
    return [_merge(n, combo) for combo in itertools.product(*factors)]


def project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    if v.shape[0] == 1:
        return np.ones(1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    k = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def _unit(z):
    nz = float(np.linalg.norm(z))
    return (-z / nz, nz) if nz > 0 else (np.zeros_like(z), 0.0)


def solve_branch(br, stop_below=0.0, inner_tol=INNER_TOL, max_iters=INNER_MAX_ITERS):
    """Return (w, upper, lower) for min over the unit ball of the branch."""
    if br.coupled:
        return _solve_branch_cvx(br)
    c = br.c
    floor = max(stop_below, ZERO_SLACK)
    if not br.maxterms and not br.cones:
        w, nz = _unit(c)
        if nz <= floor:
            return np.zeros_like(c), 0.0, -nz
        return w, -nz, -nz

    blocks = [R.T for R in br.maxterms] + [J.T for J, _ in br.cones]
    polars = [K.polar() for _, K in br.cones]
    nmax = len(br.maxterms)
    sizes = [B.shape[1] for B in blocks]
    cuts = np.cumsum([0] + sizes)
    Mat = np.hstack(blocks)
    L = float(np.linalg.norm(Mat, 2)) ** 2
    if L == 0.0:
        br2 = Branch(c, [], [], [])
        return solve_branch(br2, stop_below, inner_tol, max_iters)

    def proj(theta):
        out = np.empty_like(theta)
        for i in range(len(blocks)):
            seg = theta[cuts[i]:cuts[i + 1]]
            if i < nmax:
                out[cuts[i]:cuts[i + 1]] = project_simplex(seg)
            else:
                out[cuts[i]:cuts[i + 1]] = _cones.project_cone_ball(polars[i - nmax], seg)
        return out

    theta = np.concatenate([np.full(s, 1.0 / s) if i < nmax else np.zeros(s) for i, s in enumerate(sizes)])
    y = theta.copy()
    t = 1.0
    best = None
    lower = -np.inf
    prev_obj = np.inf
    for _ in range(max_iters):
        z = c + Mat @ theta
        w, nz = _unit(z)
        if nz <= floor:
            return np.zeros_like(c), 0.0, -nz
        upper = br.value(w)
        if best is None or upper < best[1]:
            best = (w, upper)
        # every dual-feasible theta certifies -|c + M theta| as a lower bound
        lower = max(lower, -nz)
        if best[1] - lower <= inner_tol * max(1.0, nz):
            return best[0], best[1], lower
        zy = c + Mat @ y
        new = proj(y - (Mat.T @ zy) / L)
        obj = 0.5 * float(np.sum((c + Mat @ new) ** 2))
        if obj > prev_obj:
            # adaptive restart
            t = 1.0
            y = theta.copy()
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = new + ((t - 1.0) / t_next) * (new - theta)
        theta, t, prev_obj = new, t_next, obj
    # budget spent: the bracket is still valid, only wider than inner_tol
    if best[1] >= 0.0:
        return np.zeros_like(c), 0.0, lower
    return best[0], best[1], lower


def _solve_branch_cvx(br):
    import cvxpy as cp

    n = br.c.shape[0]
    w = cp.Variable(n)
    expr = br.c @ w
    cons = [cp.norm(w, 2) <= 1]
    for R in br.maxterms:
        expr = expr + cp.max(R @ w)
    for J, K in br.cones:
        k = cp.Variable(J.shape[0])
        cons.extend(K.cvx_constraints(k))
        expr = expr + cp.norm(J @ w - k, 2)
    for s, J, K, atoms in br.coupled:
        parts = []
        if J is not None:
            k = cp.Variable(J.shape[0])
            cons.extend(K.cvx_constraints(k))
            parts.append(cp.norm(J @ w - k, 2))
        u = cp.Variable(len(atoms))
        for i, R in enumerate(atoms):
            cons.append(u[i] >= R @ w)
        parts.append(u)
        expr = expr + s * cp.norm(cp.hstack(parts), 2)
    prob = cp.Problem(cp.Minimize(expr), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.SolverError as exc:
        raise InnerSolveFailure(f"conic direction subproblem failed: {exc}") from exc
    if prob.status not in ("optimal", "optimal_inaccurate") or w.value is None:
        raise InnerSolveFailure(f"conic direction subproblem ended with status {prob.status}")
    wv = np.asarray(w.value, dtype=float)
    nw = float(np.linalg.norm(wv))
    if nw > 1.0:
        wv = wv / nw
    upper = br.value(wv)
    lower = float(prob.value) - 1e-7 * (1.0 + abs(float(prob.value)))
    if upper >= 0.0 or nw <= ZERO_SLACK:
        return np.zeros(n), 0.0, min(lower, 0.0)
    return wv, upper, min(lower, upper)


def direction_search(lm, stop_below=0.0, inner_tol=INNER_TOL):
    """Minimize the local model over the closed unit ball.

    Returns a Direction with the minimizer, the model value there and a
    lower bound on the minimum. Ties among branches keep the first one
    found, which is the one built from the smallest piece indices.
    """
    branches = enumerate_branches(lm)
    best_w, best_val = None, np.inf
    lower = np.inf
    for br in branches:
        w, up, lo = solve_branch(br, stop_below, inner_tol)
        lower = min(lower, lo)
        val = lm(w) if np.any(w) else 0.0
        if val < best_val - 1e-15:
            best_w, best_val = w, val
    lower = min(lower, best_val)
    return Direction(best_w, float(best_val), float(lower), len(branches))

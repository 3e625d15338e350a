"""Brute-force numerical oracles used to cross-check the analytic code."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import ResolutionTooCoarse, ValidationError

MAX_GRID_POINTS = 10 ** 8


@dataclass(frozen=True)
class GridSpec:
    t0: float = 0.25
    levels: int = 24
    n_dirs: int = 64
    c: float = 1.0
    tail: int = 8


@dataclass
class LiminfEstimate:
    lower: float
    upper: float
    grid: tuple
    excluded: int = 0


def ball_directions(n, count):
    """0, the signed unit vectors, then Halton points mapped into the unit ball."""
    pts = [np.zeros(n)]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        pts.extend([e, -e])
    pts = pts[:count]
    rest = count - len(pts)
    if rest > 0:
        h = qmc.Halton(d=n, scramble=False).random(rest + 1)[1:]
        u = 2.0 * h - 1.0
        # radial map from the cube onto the ball
        n2 = np.linalg.norm(u, axis=1, keepdims=True)
        ninf = np.abs(u).max(axis=1, keepdims=True)
        u = np.where(n2 > 0, u * ninf / np.where(n2 > 0, n2, 1.0), 0.0)
        pts.extend(u)
    return np.array(pts)


def _batch_eval(f, X, vectorized):
    if vectorized:
        return np.asarray(f(X), dtype=float).reshape(-1)
    out = np.empty(X.shape[0])
    for i, x in enumerate(X):
        try:
            out[i] = float(f(x))
        except (ArithmeticError, ValueError):
            out[i] = np.nan
    return out


def estimate_subderivative(f, x, w, grid: GridSpec = GridSpec(), vectorized=False):
    """Numerical liminf of (f(x + t w') - f(x)) / t for t -> 0 and w' -> w.

    Difference quotients are sampled on dyadic t levels with perturbations
    w' in a ball of radius c*t around w. ``lower`` is the minimum over the
    last ``grid.tail`` levels, ``upper`` the fixed-direction quotient at the
    smallest t. With ``vectorized`` f is called once per level on an array of
    points (one per row).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    fx = float(_batch_eval(f, x[None, :], vectorized)[0])
    if not np.isfinite(fx):
        raise ValidationError("f must be finite at the base point")
    D = ball_directions(x.shape[0], grid.n_dirs)
    ts = grid.t0 * 2.0 ** -np.arange(grid.levels)
    mins = np.empty(grid.levels)
    excluded = 0
    upper = np.nan
    for i, t in enumerate(ts):
        W = w + grid.c * t * D
        vals = _batch_eval(f, x + t * W, vectorized)
        q = (vals - fx) / t
        ok = np.isfinite(q)
        excluded += int((~ok).sum())
        mins[i] = q[ok].min() if ok.any() else np.inf
        if i == grid.levels - 1:
            # D[0] is the zero perturbation, i.e. the fixed direction w
            upper = q[0]
    lower = float(mins[-grid.tail:].min())
    return LiminfEstimate(lower, float(upper), (ts, grid.c * ts), excluded)


def grid_min(f, lower, upper, resolution, vectorized=False, chunk=1_000_000):
    """Exhaustive minimization of f on a regular grid over a box of dimension <= 3."""
    lo = np.asarray(lower, dtype=float).reshape(-1)
    hi = np.asarray(upper, dtype=float).reshape(-1)
    if lo.shape != hi.shape or lo.shape[0] > 3:
        raise ValidationError("grid_min supports boxes of dimension 1 to 3")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValidationError("grid_min needs a bounded box")
    if not resolution > 0:
        raise ValidationError("resolution must be positive")
    counts = np.floor((hi - lo) / resolution + 1e-9).astype(np.int64) + 1
    total = int(np.prod(counts))
    if total > MAX_GRID_POINTS:
        raise ResolutionTooCoarse(f"grid would have {total} points, limit is {MAX_GRID_POINTS}")
    axes = [lo[i] + resolution * np.arange(counts[i]) for i in range(lo.shape[0])]
    best_x, best_v = None, np.inf
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        sub = np.unravel_index(idx, counts)
        P = np.column_stack([axes[d][sub[d]] for d in range(lo.shape[0])])
        v = _batch_eval(f, P, vectorized)
        v = np.where(np.isfinite(v), v, np.inf)
        j = int(np.argmin(v))
        if v[j] < best_v:
            best_x, best_v = P[j].copy(), float(v[j])
    return best_x, best_v


def irregular_fixture(z):
    """f(x, y) = 0 when x**2 <= y and x otherwise (rows or a single point)."""
    z = np.asarray(z, dtype=float)
    x, y = z[..., 0], z[..., 1]
    return np.where(x * x <= y, 0.0, x)

"""Function models (smooth, max-of-smooth, min-of-smooth) and problems."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import sets as _sets
from .errors import DimensionMismatch, GradientMismatch, InfeasibleStart, NonFiniteValue, ValidationError

TOL_ACTIVE = 1e-8
GRAD_CHECK_POINTS = 16
GRAD_CHECK_RTOL = 1e-4


def _vec(x, n):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DimensionMismatch(f"expected {n} inputs, got {x.shape[0]}")
    return x


def _finite(v, what):
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue(f"{what} is not finite")
    return v


class FuncModel:
    dim_in: int
    dim_out: int

    def value(self, x):
        raise NotImplementedError

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.value(x) for x in X]).reshape(X.shape[0], self.dim_out)

    def components(self):
        """Scalar component models, in output order."""
        if self.dim_out == 1:
            return [self]
        raise NotImplementedError

    def active_pieces(self, x):
        """Per output component: (mode, rows) with mode 'lin', 'max' or 'min'.

        The semiderivative of component i at x along w is the mode's reduction
        of ``rows @ w``.
        """
        raise NotImplementedError

    def semiderivative(self, x, w):
        w = _vec(w, self.dim_in)
        out = []
        for mode, rows in self.active_pieces(x):
            v = rows @ w
            out.append(v[0] if mode == "lin" else (v.max() if mode == "max" else v.min()))
        return np.array(out, dtype=float)

    @property
    def is_smooth(self):
        return False


class Smooth(FuncModel):
    """Differentiable map with user-supplied value and Jacobian.

    ``fun`` returns a scalar or a length ``dim_out`` vector, ``jac`` a
    gradient (scalar case) or a ``(dim_out, dim_in)`` matrix. ``fun_batch``
    optionally maps an ``(N, dim_in)`` array to ``(N, dim_out)`` values.
    """

    def __init__(self, fun: Callable, jac: Callable, dim_in: int, dim_out: int = 1,
                 fun_batch: Optional[Callable] = None, source=None):
        self.fun = fun
        self.jac = jac
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.fun_batch = fun_batch
        self.source = source

    @property
    def is_smooth(self):
        return True

    def value(self, x):
        x = _vec(x, self.dim_in)
        v = np.asarray(self.fun(x), dtype=float).reshape(-1)
        if v.shape[0] != self.dim_out:
            raise DimensionMismatch(f"model returned {v.shape[0]} values, expected {self.dim_out}")
        return _finite(v, "function value")

    def value_batch(self, X):
        if self.fun_batch is None:
            return super().value_batch(X)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.fun_batch(X), dtype=float).reshape(X.shape[0], self.dim_out)

    def jacobian(self, x):
        x = _vec(x, self.dim_in)
        J = np.asarray(self.jac(x), dtype=float).reshape(self.dim_out, self.dim_in)
        return _finite(J, "Jacobian")

    def gradient(self, x):
        return self.jacobian(x)[0]

    def components(self):
        if self.dim_out == 1:
            return [self]
        return [_Row(self, i) for i in range(self.dim_out)]

    def active_pieces(self, x):
        J = self.jacobian(x)
        return [("lin", J[i:i + 1]) for i in range(self.dim_out)]

    def semiderivative(self, x, w):
        return self.jacobian(x) @ _vec(w, self.dim_in)

    def __repr__(self):
        return f"Smooth({self.source!r})" if self.source is not None else f"Smooth(dim_in={self.dim_in}, dim_out={self.dim_out})"


def _Row(model, i):
    return Smooth(lambda x: model.value(x)[i], lambda x: model.jacobian(x)[i], model.dim_in, 1,
                  None if model.fun_batch is None else (lambda X: model.value_batch(X)[:, i]))


class _Pieces(FuncModel):
    mode = ""

    def __init__(self, pieces, source=None):
        self.pieces = list(pieces)
        if not self.pieces:
            raise ValidationError("piece list must be nonempty")
        self.dim_in = self.pieces[0].dim_in
        if any(p.dim_in != self.dim_in or p.dim_out != 1 for p in self.pieces):
            raise DimensionMismatch("pieces must be scalar functions of the same inputs")
        self.dim_out = 1
        self.source = source

    def _reduce(self, v, axis=None):
        return v.max(axis=axis) if self.mode == "max" else v.min(axis=axis)

    def piece_values(self, x):
        return np.array([p.value(x)[0] for p in self.pieces])

    def value(self, x):
        return np.array([self._reduce(self.piece_values(x))])

    def value_batch(self, X):
        V = np.column_stack([p.value_batch(X)[:, 0] for p in self.pieces])
        return self._reduce(V, axis=1).reshape(-1, 1)

    def active_indices(self, x):
        v = self.piece_values(x)
        best = self._reduce(v)
        return [i for i, vi in enumerate(v) if abs(vi - best) <= TOL_ACTIVE]

    def active_pieces(self, x):
        rows = np.array([self.pieces[i].gradient(x) for i in self.active_indices(x)])
        return [(self.mode, rows)]

    def __repr__(self):
        return f"{type(self).__name__}({self.pieces!r})"


class MaxOfSmooth(_Pieces):
    mode = "max"


class MinOfSmooth(_Pieces):
    mode = "min"


class Stack(FuncModel):
    """Vector map whose components are scalar models of any class."""

    def __init__(self, comps, dim_in=None):
        self.comps = []
        for c in comps:
            self.comps.extend(c.components())
        if self.comps:
            self.dim_in = self.comps[0].dim_in
        elif dim_in is None:
            raise ValidationError("empty stack needs dim_in")
        else:
            self.dim_in = int(dim_in)
        if any(c.dim_in != self.dim_in for c in self.comps):
            raise DimensionMismatch("stacked components must share inputs")
        self.dim_out = len(self.comps)

    @property
    def is_smooth(self):
        return all(c.is_smooth for c in self.comps)

    def components(self):
        return list(self.comps)

    def value(self, x):
        x = _vec(x, self.dim_in)
        if not self.comps:
            return np.zeros(0)
        return np.concatenate([c.value(x) for c in self.comps])

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.comps:
            return np.zeros((X.shape[0], 0))
        return np.column_stack([c.value_batch(X)[:, 0] for c in self.comps])

    def active_pieces(self, x):
        out = []
        for c in self.comps:
            out.extend(c.active_pieces(x))
        return out

    def jacobian(self, x):
        if not self.is_smooth:
            raise ValidationError("Jacobian requested for a nonsmooth map")
        if not self.comps:
            return np.zeros((0, self.dim_in))
        return np.vstack([c.jacobian(x) for c in self.comps])


def value(f: FuncModel, x):
    return f.value(x)


def semiderivative(f: FuncModel, x, w):
    d = f.semiderivative(x, w)
    return float(d[0]) if f.dim_out == 1 else d


def _smooth_parts(f):
    if isinstance(f, Smooth):
        return [f]
    if isinstance(f, _Pieces):
        return list(f.pieces)
    if isinstance(f, Stack):
        out = []
        for c in f.comps:
            out.extend(_smooth_parts(c))
        return out
    return []


def validation_seed():
    return int(os.environ.get("PENALTY_SOLVER_SEED", "0"))


def validate_gradient(f: FuncModel, rng=None, h=1e-6):
    """Compare every smooth part's Jacobian with central differences.

    Points are drawn from a standard Gaussian. Raises GradientMismatch on the
    first disagreement beyond the relative tolerance.
    """
    rng = np.random.default_rng(validation_seed()) if rng is None else rng
    for part in _smooth_parts(f):
        for _ in range(GRAD_CHECK_POINTS):
            x = rng.standard_normal(part.dim_in)
            J = part.jacobian(x)
            fd = np.empty_like(J)
            for j in range(part.dim_in):
                e = np.zeros(part.dim_in)
                e[j] = h
                fd[:, j] = (part.value(x + e) - part.value(x - e)) / (2 * h)
            scale = max(1.0, float(np.abs(J).max(initial=0.0)), float(np.abs(fd).max(initial=0.0)))
            if np.abs(fd - J).max(initial=0.0) > GRAD_CHECK_RTOL * scale:
                raise GradientMismatch(f"gradient of {part!r} disagrees with finite differences at {x}")


def embed(f: FuncModel, total: int, offset: int, linear=None):
    """``z -> f(z[offset:offset + f.dim_in]) + <linear, z>`` on R^total.

    ``linear`` is one coefficient row per output (or None).
    """
    sl = slice(offset, offset + f.dim_in)
    if isinstance(f, Stack):
        rows = [None] * f.dim_out if linear is None else list(np.atleast_2d(linear))
        return Stack([embed(c, total, offset, r) for c, r in zip(f.comps, rows)], dim_in=total)
    if isinstance(f, _Pieces):
        return type(f)([embed(p, total, offset, linear) for p in f.pieces])
    if not isinstance(f, Smooth):
        raise ValidationError(f"cannot embed {f!r}")
    A = np.zeros((f.dim_out, total)) if linear is None else np.atleast_2d(np.asarray(linear, dtype=float))

    def fun(z):
        return f.value(z[sl]) + A @ z

    def jac(z):
        J = A.copy()
        J[:, sl] += f.jacobian(z[sl])
        return J

    def fun_batch(Z):
        return f.value_batch(Z[:, sl]) + Z @ A.T

    return Smooth(fun, jac, total, f.dim_out, fun_batch)


def constant_model(dim_in, c=0.0):
    return Smooth(lambda x: c, lambda x: np.zeros(dim_in), dim_in, 1,
                  lambda X: np.full((X.shape[0], 1), float(c)))


@dataclass
class Problem:
    """minimize objective(x) subject to constraint maps landing in their sets."""

    objective: FuncModel
    constraints: list = field(default_factory=list)
    x0: Optional[np.ndarray] = None
    M: Optional[float] = None
    rho0: float = 0.0
    alpha: float = 2.0
    source: object = None

    def __post_init__(self):
        self.n = self.objective.dim_in
        if self.objective.dim_out != 1:
            raise ValidationError("objective must be scalar")
        for f, s in self.constraints:
            if f.dim_in != self.n:
                raise DimensionMismatch("constraint inputs must match the objective")
            if f.dim_out != s.dim:
                raise DimensionMismatch(f"constraint has {f.dim_out} outputs but its set has dimension {s.dim}")
        if self.alpha < 1:
            raise ValidationError("alpha must be >= 1")
        if self.rho0 < 0:
            raise ValidationError("rho0 must be nonnegative")
        if self.M is not None and self.M < 0:
            raise ValidationError("M must be nonnegative")
        self.F = Stack([f for f, _ in self.constraints], dim_in=self.n)
        members = [s for _, s in self.constraints]
        if not members:
            self.X = _sets.Zeros(0)
        elif len(members) == 1:
            self.X = members[0]
        else:
            self.X = _sets.Product(members)
        if self.x0 is not None:
            self.x0 = _vec(self.x0, self.n)
            d = self.constraint_dist(self.x0)
            if d > _sets.TOL_FEAS:
                raise InfeasibleStart(f"start point is at distance {d:.3g} from the constraint set")

    @property
    def m(self):
        return self.F.dim_out

    def phi(self, x):
        return float(self.objective.value(x)[0])

    def constraint_dist(self, x):
        if self.m == 0:
            return 0.0
        return self.X.distance(self.F.value(x))


def pull_out(g: FuncModel, F: FuncModel, rho: float):
    """Lift ``g(F(x))`` to ``g(y) + rho * dist(F(x) - y; {0})`` in variables (x, y).

    Returns the penalized function built with the exact distance penalty.
    """
    from .merit import PenaltyFn

    if rho <= 0:
        raise ValidationError("pull-out needs rho > 0")
    if g.dim_out != 1 or g.dim_in != F.dim_out:
        raise DimensionMismatch("g must be scalar on the outputs of F")
    n, m = F.dim_in, F.dim_out
    total = n + m
    obj = embed(g, total, n)
    shift = np.hstack([np.zeros((m, n)), -np.eye(m)])
    Fl = embed(F if isinstance(F, Stack) else Stack([F]), total, 0, shift)
    prob = Problem(obj, [(Fl, _sets.Zeros(m))], alpha=1.0)
    return PenaltyFn(prob, rho, alpha=1.0)

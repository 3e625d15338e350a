"""The penalized merit function phi(x) + rho * penalty(F(x))."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import penalty as _pen
from . import sets as _sets
from .errors import UnsupportedKind, ValidationError

PENALTY_KINDS = ("power", "exact", "square", "lp", "l1")


def _interval_pieces(s):
    """Split an interval-product set into one-dimensional boxes."""
    b = s.interval_bounds()
    if b is None:
        return [s]
    return [_sets.Box(b[0][i:i + 1], b[1][i:i + 1]) for i in range(s.dim)]


def make_penalty(problem, kind="power", alpha=None):
    """Penalty kind acting on F(x) for the problem's target set."""
    alpha = problem.alpha if alpha is None else float(alpha)
    X = problem.X
    if kind == "power":
        return _pen.Power(X, alpha)
    if kind == "exact":
        return _pen.ExactP(X)
    if kind == "square":
        return _pen.HalfSquareQ(X)
    if kind == "lp":
        return _pen.LpPower(X, alpha)
    if kind == "l1":
        members = [s for _, s in problem.constraints]
        blocks = []
        for s in members:
            blocks.extend(_interval_pieces(s))
        if not blocks:
            return _pen.ExactP(X)
        return _pen.SeparableSum([(1.0, _pen.ExactP(b)) for b in blocks])
    raise ValidationError(f"unknown penalty kind {kind!r}; expected one of {', '.join(PENALTY_KINDS)}")


@dataclass
class LocalModel:
    """First-order data of the merit function at one point.

    ``obj`` and each entry of ``comps`` are (mode, rows) pairs as returned by
    the model classes; ``form`` is the penalty subderivative at F(x),
    already multiplied by rho.
    """

    n: int
    obj: tuple
    comps: list
    form: _pen.SubderivativeForm

    def inner(self, w):
        """Componentwise semiderivative of F along w."""
        out = np.empty(len(self.comps))
        for i, (mode, rows) in enumerate(self.comps):
            v = rows @ w
            out[i] = v[0] if mode == "lin" else (v.max() if mode == "max" else v.min())
        return out

    def __call__(self, w):
        w = np.asarray(w, dtype=float).reshape(-1)
        mode, rows = self.obj
        v = rows @ w
        d = v[0] if mode == "lin" else (v.max() if mode == "max" else v.min())
        if self.comps:
            d += self.form(self.inner(w))
        return float(d)


class PenaltyFn:
    """x -> phi(x) + rho * penalty(F(x)) for a Problem."""

    def __init__(self, problem, rho, kind="power", alpha=None):
        if rho < 0:
            raise ValidationError("rho must be nonnegative")
        self.problem = problem
        self.rho = float(rho)
        self.kind = kind
        self.alpha = problem.alpha if alpha is None else float(alpha)
        self.pen = make_penalty(problem, kind, self.alpha) if problem.m else None

    @property
    def n(self):
        return self.problem.n

    def value(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        v = self.problem.phi(x)
        if self.pen is not None and self.rho != 0.0:
            v += self.rho * self.pen.value(self.problem.F.value(x))
        return v

    __call__ = value

    def value_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        v = self.problem.objective.value_batch(X)[:, 0]
        if self.pen is not None and self.rho != 0.0:
            v = v + self.rho * self.pen.value_batch(self.problem.F.value_batch(X))
        return v

    def dist(self, x):
        return self.problem.constraint_dist(x)

    def local(self, x) -> LocalModel:
        x = np.asarray(x, dtype=float).reshape(-1)
        obj = self.problem.objective.active_pieces(x)[0]
        if self.pen is None:
            return LocalModel(self.n, obj, [], _pen.zero_form(0))
        comps = self.problem.F.active_pieces(x)
        form = self.pen.subderivative(self.problem.F.value(x)).scaled(self.rho)
        return LocalModel(self.n, obj, comps, form)

    def subderivative(self, x, w):
        return self.local(x)(w)


def exact_form_model(problem, x, rho_eff):
    """Local model of phi + rho_eff * dist(F(.); X) at x, built from the exact penalty."""
    x = np.asarray(x, dtype=float).reshape(-1)
    obj = problem.objective.active_pieces(x)[0]
    if problem.m == 0:
        return LocalModel(problem.n, obj, [], _pen.zero_form(0))
    comps = problem.F.active_pieces(x)
    form = _pen.ExactP(problem.X).subderivative(problem.F.value(x)).scaled(rho_eff)
    return LocalModel(problem.n, obj, comps, form)


def check_kind_supported(problem, kind):
    if kind == "lp" and problem.m and problem.X.interval_bounds() is None:
        raise UnsupportedKind("the lp penalty needs orthant, zeros or box constraint sets")

"""Distance penalties and their subderivatives.

A penalty kind couples a power law with a target set: ``ExactP`` is the
distance itself, ``HalfSquareQ`` half its square, ``Power`` any power
``alpha >= 1``. ``LpPower`` sums ``|z_i - clamp(z_i)|**alpha`` over an
interval-product set and ``SeparableSum`` adds weighted kinds acting on
consecutive blocks of the argument.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import sets as _sets
from .errors import DimensionMismatch, UnsupportedKind

MAX_CANDIDATES = 4096


@dataclass(frozen=True)
class ConeTerm:
    """``scale * dist(w[start:stop]; cone)``."""

    scale: float
    cone: object
    start: int
    stop: int

    def value(self, w):
        return self.scale * self.cone.dist(w[self.start:self.stop])


@dataclass
class SubderivativeForm:
    """w -> min_g <g, w> + sum of cone terms."""

    linear_candidates: list
    cone_terms: list = field(default_factory=list)

    @property
    def dim(self):
        return self.linear_candidates[0].shape[0]

    def __call__(self, w):
        w = np.asarray(w, dtype=float).reshape(-1)
        lin = min(float(g @ w) for g in self.linear_candidates)
        return lin + sum(t.value(w) for t in self.cone_terms)

    def scaled(self, c):
        c = float(c)
        return SubderivativeForm(
            [c * g for g in self.linear_candidates],
            [ConeTerm(c * t.scale, t.cone, t.start, t.stop) for t in self.cone_terms if c * t.scale != 0.0],
        )


def zero_form(dim):
    return SubderivativeForm([np.zeros(dim)])


def _arr(z, dim):
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != dim:
        raise DimensionMismatch(f"penalty argument has length {z.shape[0]}, expected {dim}")
    return z


class PenaltyKind:
    dim: int

    def value(self, z) -> float:
        raise NotImplementedError

    def value_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.array([self.value(z) for z in Z])

    def subderivative(self, z) -> SubderivativeForm:
        raise NotImplementedError

    def dist(self, z):
        """Distance of ``z`` to the target set (Euclidean, over all blocks)."""
        raise NotImplementedError


class Power(PenaltyKind):
    """dist(z; X) ** alpha."""

    def __init__(self, target, alpha=1.0):
        if alpha < 1:
            raise ValueError("power penalty needs alpha >= 1")
        self.set = target
        self.alpha = float(alpha)
        self.dim = target.dim

    def value(self, z):
        return self.set.distance(_arr(z, self.dim)) ** self.alpha

    def value_batch(self, Z):
        return self.set.dist_batch(Z) ** self.alpha

    def dist(self, z):
        return self.set.distance(_arr(z, self.dim))

    def _factor(self, p):
        # derivative of t -> t**alpha divided by t, i.e. alpha * t**(alpha-2)
        return self.alpha * p ** (self.alpha - 2.0)

    def subderivative(self, z):
        z = _arr(z, self.dim)
        pr = self.set.project(z)
        p = pr.distance
        if p <= _sets.TOL_FEAS:
            if self.alpha > 1.0:
                return zero_form(self.dim)
            y = pr.candidates[0]
            cone = self.set.tangent_cone(y)
            return SubderivativeForm([np.zeros(self.dim)], [ConeTerm(1.0, cone, 0, self.dim)])
        c = self._factor(p)
        return SubderivativeForm([c * (z - y) for y in pr.candidates])

    def __repr__(self):
        return f"{type(self).__name__}({self.set!r}, alpha={self.alpha})"


class ExactP(Power):
    def __init__(self, target):
        super().__init__(target, 1.0)

    def __repr__(self):
        return f"ExactP({self.set!r})"


class HalfSquareQ(Power):
    """0.5 * dist(z; X) ** 2."""

    def __init__(self, target):
        super().__init__(target, 2.0)

    def value(self, z):
        return 0.5 * super().value(z)

    def value_batch(self, Z):
        return 0.5 * super().value_batch(Z)

    def _factor(self, p):
        return 1.0

    def __repr__(self):
        return f"HalfSquareQ({self.set!r})"


class LpPower(PenaltyKind):
    """sum_i |z_i - clamp(z_i)| ** alpha over an interval-product set."""

    def __init__(self, target, alpha):
        if not alpha > 1:
            raise ValueError("LpPower needs alpha > 1")
        bounds = target.interval_bounds()
        if bounds is None:
            raise UnsupportedKind("LpPower is only defined on products of intervals")
        self.set = target
        self.alpha = float(alpha)
        self.lower, self.upper = bounds
        self.dim = target.dim

    def _resid(self, z):
        return z - np.clip(z, self.lower, self.upper)

    def value(self, z):
        r = self._resid(_arr(z, self.dim))
        return float(np.sum(np.abs(r) ** self.alpha))

    def value_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.sum(np.abs(self._resid(Z)) ** self.alpha, axis=1)

    def dist(self, z):
        return float(np.linalg.norm(self._resid(_arr(z, self.dim))))

    def gradient(self, z):
        r = self._resid(_arr(z, self.dim))
        return self.alpha * np.abs(r) ** (self.alpha - 1.0) * np.sign(r)

    def subderivative(self, z):
        return SubderivativeForm([self.gradient(z)])

    def __repr__(self):
        return f"LpPower({self.set!r}, alpha={self.alpha})"


class SeparableSum(PenaltyKind):
    """sum_i weight_i * kind_i(z^i) with z split into consecutive blocks."""

    def __init__(self, terms):
        self.terms = [(float(w), k) for w, k in terms]
        if not self.terms:
            raise ValueError("separable sum needs at least one term")
        if any(w < 0 for w, _ in self.terms):
            raise ValueError("separable sum weights must be nonnegative")
        dims = [k.dim for _, k in self.terms]
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.dim = int(self.offsets[-1])

    def _blocks(self, z):
        return [z[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def value(self, z):
        z = _arr(z, self.dim)
        return float(sum(w * k.value(b) for (w, k), b in zip(self.terms, self._blocks(z))))

    def value_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        tot = np.zeros(Z.shape[0])
        for (w, k), a, b in zip(self.terms, self.offsets[:-1], self.offsets[1:]):
            tot += w * k.value_batch(Z[:, a:b])
        return tot

    def dist(self, z):
        z = _arr(z, self.dim)
        return float(np.sqrt(sum(k.dist(b) ** 2 for (_, k), b in zip(self.terms, self._blocks(z)))))

    def subderivative(self, z):
        z = _arr(z, self.dim)
        per_block = []
        cone_terms = []
        for (w, k), a, b in zip(self.terms, self.offsets[:-1], self.offsets[1:]):
            form = k.subderivative(z[a:b]).scaled(w)
            lifted = []
            for g in form.linear_candidates:
                full = np.zeros(self.dim)
                full[a:b] = g
                lifted.append(full)
            per_block.append(lifted)
            cone_terms.extend(ConeTerm(t.scale, t.cone, a + t.start, a + t.stop) for t in form.cone_terms)
        n = int(np.prod([len(c) for c in per_block]))
        if n > MAX_CANDIDATES:
            raise UnsupportedKind(f"separable sum has {n} gradient candidates, limit is {MAX_CANDIDATES}")
        cands = [np.sum(combo, axis=0) for combo in itertools.product(*per_block)]
        return SubderivativeForm(cands, cone_terms)

    def __repr__(self):
        return f"SeparableSum({self.terms!r})"


def value(pk: PenaltyKind, z):
    return pk.value(z)


def subderivative(pk: PenaltyKind, z) -> SubderivativeForm:
    return pk.subderivative(z)


def _is_half_square(pk):
    if isinstance(pk, HalfSquareQ):
        return True
    return isinstance(pk, SeparableSum) and all(isinstance(k, HalfSquareQ) for _, k in pk.terms)


def gradient_if_unique(pk: PenaltyKind, z):
    """Gradient z - proj(z) of a half-squared distance, or None when proj is not a singleton."""
    if not _is_half_square(pk):
        raise UnsupportedKind("gradient_if_unique needs a half-squared distance penalty")
    z = _arr(z, pk.dim)
    if isinstance(pk, HalfSquareQ):
        pr = pk.set.project(z)
        return z - pr.candidates[0] if len(pr.candidates) == 1 else None
    parts = []
    for (w, k), a, b in zip(pk.terms, pk.offsets[:-1], pk.offsets[1:]):
        g = gradient_if_unique(k, z[a:b])
        if g is None:
            return None
        parts.append(w * g)
    return np.concatenate(parts)


def descent_constant(pk: PenaltyKind):
    """Constant c in q(y) <= q(x) + dq(x)(y - x) + c/2 |y - x|^2."""
    if isinstance(pk, HalfSquareQ):
        return 1.0
    if _is_half_square(pk):
        return len(pk.terms) * max(w for w, _ in pk.terms)
    raise UnsupportedKind("descent estimate needs a half-squared distance penalty")


def descent_gap(pk: PenaltyKind, x, y):
    """q(y) - q(x) - dq(x)(y - x) - c/2 |y - x|^2; never positive."""
    c = descent_constant(pk)
    x = _arr(x, pk.dim)
    y = _arr(y, pk.dim)
    if np.array_equal(x, y):
        return 0.0
    d = y - x
    return pk.value(y) - pk.value(x) - pk.subderivative(x)(d) - 0.5 * c * float(d @ d)

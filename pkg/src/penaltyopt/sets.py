"""Closed target sets with projection, distance and tangent-cone oracles."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import cones
from .errors import (
    DimensionMismatch,
    NonFiniteProjection,
    PointNotOnSet,
    UnsupportedKind,
    UnsupportedTangent,
)

TOL_PROJ = 1e-10
TOL_FEAS = 1e-9


@dataclass(frozen=True)
class ProjectionResult:
    candidates: tuple
    distance: float


def _check(x, dim):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != dim:
        raise DimensionMismatch(f"point has length {x.shape[0]}, set has dimension {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    return x


def _unique_rows(rows, tol=TOL_PROJ):
    out = []
    for r in rows:
        if not any(np.linalg.norm(r - o) <= tol for o in out):
            out.append(r)
    return out


class ClosedSet:
    dim: int
    is_convex = True
    kind = ""

    def project(self, x) -> ProjectionResult:
        raise NotImplementedError

    def distance(self, x) -> float:
        return self.project(x).distance

    def dist_batch(self, Z):
        """Distances for every row of ``Z``."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.array([self.distance(z) for z in Z])

    def contains(self, x, tol=TOL_FEAS):
        return self.distance(x) <= tol

    def tangent_cone(self, y) -> cones.Cone:
        raise UnsupportedTangent(f"no tangent cone formula for {self.kind}")

    def interval_bounds(self):
        """(lower, upper) arrays when the set is a product of intervals, else None."""
        return None

    def sample(self, rng, n):
        raise NotImplementedError

    def descriptor(self):
        raise NotImplementedError

    def _on_set(self, y):
        y = _check(y, self.dim)
        if not self.contains(y):
            raise PointNotOnSet(f"point is at distance {self.distance(y):.3g} from the {self.kind} set")
        return y


class _Intervals(ClosedSet):
    """Shared logic for sets that are products of closed intervals."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float).reshape(-1)
        self.upper = np.asarray(upper, dtype=float).reshape(-1)
        if self.lower.shape != self.upper.shape:
            raise DimensionMismatch("lower and upper bounds differ in length")
        if np.any(self.lower > self.upper):
            raise ValueError("box needs lower <= upper")
        self.dim = self.lower.shape[0]

    def project(self, x):
        x = _check(x, self.dim)
        y = np.clip(x, self.lower, self.upper)
        return ProjectionResult((y,), float(np.linalg.norm(x - y)))

    def dist_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.linalg.norm(Z - np.clip(Z, self.lower, self.upper), axis=1)

    def tangent_cone(self, y):
        y = self._on_set(y)
        signs = []
        for yi, lo, hi in zip(y, self.lower, self.upper):
            at_lo = abs(yi - lo) <= TOL_FEAS
            at_hi = abs(yi - hi) <= TOL_FEAS
            if lo == hi or (at_lo and at_hi):
                signs.append("0")
            elif at_lo:
                signs.append("+")
            elif at_hi:
                signs.append("-")
            else:
                signs.append("f")
        return cones.SignCone(signs)

    def interval_bounds(self):
        return self.lower, self.upper

    def sample(self, rng, n):
        lo, hi = self.lower, self.upper
        g = np.abs(rng.standard_normal((n, self.dim)))
        a = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0) - 1.0)
        b = np.where(np.isfinite(hi), hi, a + 2.0)
        u = a + (b - a) * rng.random((n, self.dim))
        u = np.where(np.isfinite(lo) & ~np.isfinite(hi), lo + g, u)
        u = np.where(~np.isfinite(lo) & np.isfinite(hi), hi - g, u)
        u = np.where(~np.isfinite(lo) & ~np.isfinite(hi), rng.standard_normal((n, self.dim)), u)
        # put some samples on the faces so boundary cases get exercised
        face = rng.random((n, self.dim)) < 0.2
        pick_lo = rng.random((n, self.dim)) < 0.5
        u = np.where(face & pick_lo & np.isfinite(lo), lo, u)
        u = np.where(face & ~pick_lo & np.isfinite(hi), hi, u)
        return u


class NonpositiveOrthant(_Intervals):
    kind = "orthant-"

    def __init__(self, dim):
        dim = int(dim)
        super().__init__(np.full(dim, -np.inf), np.zeros(dim))

    def descriptor(self):
        return "orthant-"

    def __repr__(self):
        return f"NonpositiveOrthant({self.dim})"


class Zeros(_Intervals):
    kind = "zeros"

    def __init__(self, dim):
        dim = int(dim)
        super().__init__(np.zeros(dim), np.zeros(dim))

    def descriptor(self):
        return "zeros"

    def __repr__(self):
        return f"Zeros({self.dim})"


class Box(_Intervals):
    kind = "box"

    def descriptor(self):
        enc = lambda v: [float(t) if np.isfinite(t) else ("inf" if t > 0 else "-inf") for t in v]
        return {"kind": "box", "lower": enc(self.lower), "upper": enc(self.upper)}

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class Ball(ClosedSet):
    kind = "ball"

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float).reshape(-1)
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        self.dim = self.center.shape[0]

    def project(self, x):
        x = _check(x, self.dim)
        d = x - self.center
        nd = float(np.linalg.norm(d))
        if nd <= self.radius:
            return ProjectionResult((x.copy(),), 0.0)
        return ProjectionResult((self.center + self.radius * d / nd,), nd - self.radius)

    def dist_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.maximum(np.linalg.norm(Z - self.center, axis=1) - self.radius, 0.0)

    def tangent_cone(self, y):
        y = self._on_set(y)
        if self.radius == 0.0:
            return cones.ZeroCone(self.dim)
        d = y - self.center
        if np.linalg.norm(d) < self.radius - TOL_FEAS:
            return cones.FullSpace(self.dim)
        return cones.HalfSpace(d)

    def sample(self, rng, n):
        g = rng.standard_normal((n, self.dim))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        r = self.radius * rng.random(n) ** (1.0 / max(self.dim, 1))
        r[rng.random(n) < 0.2] = self.radius
        return self.center + r[:, None] * g

    def descriptor(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Ball({self.center.tolist()}, {self.radius})"


class Sphere(ClosedSet):
    kind = "sphere"
    is_convex = False

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float).reshape(-1)
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        self.dim = self.center.shape[0]
        self.is_convex = self.radius == 0.0

    def project(self, x):
        x = _check(x, self.dim)
        d = x - self.center
        nd = float(np.linalg.norm(d))
        if self.radius == 0.0:
            return ProjectionResult((self.center.copy(),), nd)
        if nd == 0.0:
            if self.dim == 1:
                c = self.center
                return ProjectionResult((c - self.radius, c + self.radius), self.radius)
            raise NonFiniteProjection("every point of the sphere is nearest to its center")
        return ProjectionResult((self.center + self.radius * d / nd,), abs(nd - self.radius))

    def distance(self, x):
        x = _check(x, self.dim)
        return abs(float(np.linalg.norm(x - self.center)) - self.radius)

    def dist_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.abs(np.linalg.norm(Z - self.center, axis=1) - self.radius)

    def tangent_cone(self, y):
        y = self._on_set(y)
        if self.radius == 0.0:
            return cones.ZeroCone(self.dim)
        if self.dim == 1:
            return cones.ZeroCone(1)
        return cones.Hyperplane(y - self.center)

    def sample(self, rng, n):
        g = rng.standard_normal((n, self.dim))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        return self.center + self.radius * g

    def descriptor(self):
        return {"kind": "sphere", "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Sphere({self.center.tolist()}, {self.radius})"


class FiniteSet(ClosedSet):
    kind = "finite"

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[0] == 0:
            raise ValueError("finite set needs at least one point")
        self.points = np.array(_unique_rows(list(pts), tol=0.0))
        self.dim = self.points.shape[1]
        self.is_convex = self.points.shape[0] == 1

    def project(self, x):
        x = _check(x, self.dim)
        d = np.linalg.norm(self.points - x, axis=1)
        m = float(d.min())
        cands = tuple(self.points[i].copy() for i in np.flatnonzero(d <= m + TOL_PROJ))
        return ProjectionResult(cands, m)

    def dist_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        d = np.linalg.norm(Z[:, None, :] - self.points[None, :, :], axis=2)
        return d.min(axis=1)

    def tangent_cone(self, y):
        self._on_set(y)
        return cones.ZeroCone(self.dim)

    def sample(self, rng, n):
        return self.points[rng.integers(0, self.points.shape[0], n)].copy()

    def descriptor(self):
        return {"kind": "finite", "points": self.points.tolist()}

    def __repr__(self):
        return f"FiniteSet({self.points.tolist()})"


class Lorentz(ClosedSet):
    """{(u, t) : ||u|| <= t}, with t the last coordinate."""

    kind = "lorentz"

    def __init__(self, dim):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("Lorentz cone needs dimension >= 1")
        self._cone = cones.SecondOrder(self.dim, 1)

    def project(self, x):
        x = _check(x, self.dim)
        y = self._cone.project(x)
        return ProjectionResult((y,), float(np.linalg.norm(x - y)))

    def dist_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        u, t = Z[:, :-1], Z[:, -1]
        nu = np.linalg.norm(u, axis=1)
        inside = nu <= t
        below = nu <= -t
        # distance to the boundary ray for the remaining points
        mid = np.abs(nu - t) / np.sqrt(2.0)
        return np.where(inside, 0.0, np.where(below, np.linalg.norm(Z, axis=1), mid))

    def tangent_cone(self, y):
        y = self._on_set(y)
        u, t = y[:-1], y[-1]
        nu = float(np.linalg.norm(u))
        if nu < t - TOL_FEAS:
            return cones.FullSpace(self.dim)
        # on-set points with u ~ 0 that are not interior lie within 2 tol of the apex
        if nu <= TOL_FEAS and abs(t) <= 2.0 * TOL_FEAS:
            return cones.SecondOrder(self.dim, 1)
        if nu > TOL_FEAS:
            n = np.empty(self.dim)
            n[:-1] = u / nu
            n[-1] = -1.0
            return cones.HalfSpace(n)
        raise UnsupportedTangent("Lorentz tangent cone needs an interior, apex or smooth boundary point")

    def sample(self, rng, n):
        u = rng.standard_normal((n, self.dim - 1))
        nu = np.linalg.norm(u, axis=1)
        slack = np.abs(rng.standard_normal(n))
        slack[rng.random(n) < 0.2] = 0.0
        t = nu + slack
        out = np.column_stack([u, t])
        out[rng.random(n) < 0.05] = 0.0
        return out

    def descriptor(self):
        return "lorentz"

    def __repr__(self):
        return f"Lorentz({self.dim})"


class Product(ClosedSet):
    kind = "product"

    def __init__(self, members):
        self.members = tuple(members)
        if not self.members:
            raise ValueError("product needs at least one member")
        dims = [m.dim for m in self.members]
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.dim = int(self.offsets[-1])
        self.is_convex = all(m.is_convex for m in self.members)

    def split(self, x):
        return [x[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def project(self, x):
        x = _check(x, self.dim)
        parts = [m.project(p) for m, p in zip(self.members, self.split(x))]
        cands = tuple(np.concatenate(c) for c in itertools.product(*(p.candidates for p in parts)))
        dist = float(np.sqrt(sum(p.distance ** 2 for p in parts)))
        return ProjectionResult(cands, dist)

    def distance(self, x):
        x = _check(x, self.dim)
        return float(np.sqrt(sum(m.distance(p) ** 2 for m, p in zip(self.members, self.split(x)))))

    def dist_batch(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        tot = np.zeros(Z.shape[0])
        for m, a, b in zip(self.members, self.offsets[:-1], self.offsets[1:]):
            tot += m.dist_batch(Z[:, a:b]) ** 2
        return np.sqrt(tot)

    def tangent_cone(self, y):
        y = self._on_set(y)
        return cones.ProductCone(m.tangent_cone(p) for m, p in zip(self.members, self.split(y)))

    def interval_bounds(self):
        bounds = [m.interval_bounds() for m in self.members]
        if any(b is None for b in bounds):
            return None
        return np.concatenate([b[0] for b in bounds]), np.concatenate([b[1] for b in bounds])

    def sample(self, rng, n):
        return np.hstack([m.sample(rng, n) for m in self.members])

    def descriptor(self):
        return {"kind": "product", "members": [_member_desc(m) for m in self.members]}

    def __repr__(self):
        return f"Product({list(self.members)!r})"


class Union(ClosedSet):
    kind = "union"

    def __init__(self, members):
        self.members = tuple(members)
        if not self.members:
            raise ValueError("union needs at least one member")
        if not all(m.is_convex for m in self.members):
            raise ValueError("union members must be convex")
        self.dim = self.members[0].dim
        if any(m.dim != self.dim for m in self.members):
            raise DimensionMismatch("union members must share a dimension")
        self.is_convex = len(self.members) == 1

    def project(self, x):
        x = _check(x, self.dim)
        parts = [m.project(x) for m in self.members]
        best = min(p.distance for p in parts)
        cands = [c for p in parts if p.distance <= best + TOL_PROJ for c in p.candidates]
        return ProjectionResult(tuple(_unique_rows(cands)), best)

    def distance(self, x):
        x = _check(x, self.dim)
        return min(m.distance(x) for m in self.members)

    def dist_batch(self, Z):
        return np.min([m.dist_batch(Z) for m in self.members], axis=0)

    def tangent_cone(self, y):
        y = self._on_set(y)
        live = [m.tangent_cone(y) for m in self.members if m.contains(y)]
        return live[0] if len(live) == 1 else cones.UnionCone(live)

    def sample(self, rng, n):
        which = rng.integers(0, len(self.members), n)
        out = np.empty((n, self.dim))
        for i, m in enumerate(self.members):
            idx = np.flatnonzero(which == i)
            if idx.size:
                out[idx] = m.sample(rng, idx.size)
        return out

    def descriptor(self):
        return {"kind": "union", "members": [_member_desc(m) for m in self.members]}

    def __repr__(self):
        return f"Union({list(self.members)!r})"


def _member_desc(m):
    d = m.descriptor()
    if isinstance(d, str):
        return {"kind": d, "dim": m.dim}
    return d


def project(s: ClosedSet, x) -> ProjectionResult:
    return s.project(x)


def tangent_dist(s: ClosedSet, x_on_set, w):
    """Euclidean distance from ``w`` to the tangent cone of ``s`` at ``x_on_set``."""
    w = _check(w, s.dim)
    return s.tangent_cone(x_on_set).dist(w)


def normal_cone_residual(s: ClosedSet, y_on_set, lam):
    """Distance from ``lam`` to the normal cone of a convex set at ``y_on_set``."""
    if not s.is_convex:
        raise UnsupportedKind(f"normal cone of a nonconvex {s.kind} set is not supported")
    lam = _check(lam, s.dim)
    return s.tangent_cone(y_on_set).polar().dist(lam)


def from_descriptor(desc, dim=None) -> ClosedSet:
    """Build a set from a problem-file descriptor.

    ``desc`` is a kind tag (dimension taken from ``dim``) or a dict with a
    ``kind`` key and the kind's parameters.
    """
    if isinstance(desc, str):
        desc = {"kind": desc}
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValueError(f"bad set descriptor {desc!r}")
    kind = desc["kind"]
    d = desc.get("dim", dim)
    if kind in ("orthant-", "zeros", "lorentz"):
        if d is None:
            raise ValueError(f"set '{kind}' needs a dimension")
        return {"orthant-": NonpositiveOrthant, "zeros": Zeros, "lorentz": Lorentz}[kind](int(d))
    if kind == "box":
        lo = np.array([float(v) for v in desc["lower"]])
        hi = np.array([float(v) for v in desc["upper"]])
        return Box(lo, hi)
    if kind in ("ball", "sphere"):
        cls = Ball if kind == "ball" else Sphere
        return cls(desc["center"], desc["radius"])
    if kind == "finite":
        return FiniteSet(desc["points"])
    if kind in ("product", "union"):
        members = [from_descriptor(m) for m in desc["members"]]
        return Product(members) if kind == "product" else Union(members)
    raise ValueError(f"unknown set kind {kind!r}")

"""Closed cones that arise as tangent or normal cones of the built-in sets.

Every convex cone here has a closed-form Euclidean projection and a polar
cone of the same family, which is what the direction search and the
multiplier extraction need. :class:`UnionCone` is the only nonconvex one; it
supports distances but must be split into :meth:`Cone.pieces` before any
convex machinery is applied.
"""
from __future__ import annotations

import itertools

import numpy as np

from .errors import DimensionMismatch, UnsupportedKind


def _vec(v, dim):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != dim:
        raise DimensionMismatch(f"expected a vector of length {dim}, got {v.shape[0]}")
    return v


def _span_constraints(u, d, nonneg):
    # u = t d, written without an auxiliary variable via an orthogonal basis
    if not np.any(d):
        return [u == 0]
    basis = np.linalg.svd(d.reshape(1, -1))[2][1:]
    out = [basis @ u == 0] if basis.shape[0] else []
    if nonneg:
        out.append(d @ u >= 0)
    return out


class Cone:
    dim: int
    is_convex = True

    def project(self, v):
        raise NotImplementedError

    def dist(self, v):
        v = _vec(v, self.dim)
        return float(np.linalg.norm(v - self.project(v)))

    def polar(self) -> "Cone":
        raise NotImplementedError

    def pieces(self):
        """Convex cones whose union is this cone."""
        return [self]

    def is_full(self):
        """True when the cone is the whole space (its polar is {0})."""
        return False

    def axis_code(self):
        """Classify a one-dimensional convex cone as 'f' (R), '-', '+' or '0'."""
        raise UnsupportedKind(f"{type(self).__name__} has no axis code")

    def cvx_constraints(self, u):
        """cvxpy constraints expressing ``u`` in the cone."""
        raise UnsupportedKind(f"{type(self).__name__} has no cvxpy encoding")


class FullSpace(Cone):
    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, v):
        return _vec(v, self.dim).copy()

    def dist(self, v):
        return 0.0

    def polar(self):
        return ZeroCone(self.dim)

    def is_full(self):
        return True

    def axis_code(self):
        return "f"

    def cvx_constraints(self, u):
        return []

    def __repr__(self):
        return f"FullSpace({self.dim})"


class ZeroCone(Cone):
    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, v):
        _vec(v, self.dim)
        return np.zeros(self.dim)

    def polar(self):
        return FullSpace(self.dim)

    def is_full(self):
        return self.dim == 0

    def axis_code(self):
        return "0"

    def cvx_constraints(self, u):
        return [u == 0] if self.dim else []

    def __repr__(self):
        return f"ZeroCone({self.dim})"


_SIGN_POLAR = {"f": "0", "0": "f", "-": "+", "+": "-"}


class SignCone(Cone):
    """Product of the one-dimensional cones R, R-, R+ and {0}.

    ``signs`` holds one code per coordinate: 'f' free, '-' nonpositive,
    '+' nonnegative, '0' zero.
    """

    def __init__(self, signs):
        self.signs = tuple(signs)
        if any(s not in _SIGN_POLAR for s in self.signs):
            raise ValueError(f"bad sign codes {self.signs!r}")
        self.dim = len(self.signs)
        codes = np.array([c for c in self.signs]) if self.dim else np.array([], dtype="<U1")
        self._lo = np.where((codes == "+") | (codes == "0"), 0.0, -np.inf)
        self._hi = np.where((codes == "-") | (codes == "0"), 0.0, np.inf)

    def project(self, v):
        return np.clip(_vec(v, self.dim), self._lo, self._hi)

    def polar(self):
        return SignCone(_SIGN_POLAR[s] for s in self.signs)

    def is_full(self):
        return all(s == "f" for s in self.signs)

    def axis_code(self):
        if self.dim != 1:
            return super().axis_code()
        return self.signs[0]

    def cvx_constraints(self, u):
        out = []
        for i, s in enumerate(self.signs):
            if s == "-":
                out.append(u[i] <= 0)
            elif s == "+":
                out.append(u[i] >= 0)
            elif s == "0":
                out.append(u[i] == 0)
        return out

    def __repr__(self):
        return f"SignCone({''.join(self.signs)!r})"


class HalfSpace(Cone):
    """{v : <v, normal> <= 0}."""

    def __init__(self, normal):
        self.normal = np.asarray(normal, dtype=float).reshape(-1)
        self.dim = self.normal.shape[0]
        self._nn = float(self.normal @ self.normal)

    def project(self, v):
        v = _vec(v, self.dim)
        if self._nn == 0.0:
            return v.copy()
        s = float(v @ self.normal)
        return v - max(s, 0.0) / self._nn * self.normal

    def polar(self):
        return Ray(self.normal)

    def is_full(self):
        return self._nn == 0.0

    def axis_code(self):
        if self.dim != 1:
            return super().axis_code()
        n = self.normal[0]
        return "f" if n == 0 else ("-" if n > 0 else "+")

    def cvx_constraints(self, u):
        return [self.normal @ u <= 0]

    def __repr__(self):
        return f"HalfSpace({self.normal.tolist()})"


class Ray(Cone):
    """{t * direction : t >= 0}."""

    def __init__(self, direction):
        self.direction = np.asarray(direction, dtype=float).reshape(-1)
        self.dim = self.direction.shape[0]
        self._nn = float(self.direction @ self.direction)

    def project(self, v):
        v = _vec(v, self.dim)
        if self._nn == 0.0:
            return np.zeros(self.dim)
        s = float(v @ self.direction)
        return max(s, 0.0) / self._nn * self.direction

    def polar(self):
        return HalfSpace(self.direction)

    def axis_code(self):
        if self.dim != 1:
            return super().axis_code()
        d = self.direction[0]
        return "0" if d == 0 else ("+" if d > 0 else "-")

    def cvx_constraints(self, u):
        return _span_constraints(u, self.direction, nonneg=True)

    def __repr__(self):
        return f"Ray({self.direction.tolist()})"


class Hyperplane(Cone):
    """{v : <v, normal> = 0}."""

    def __init__(self, normal):
        self.normal = np.asarray(normal, dtype=float).reshape(-1)
        self.dim = self.normal.shape[0]
        self._nn = float(self.normal @ self.normal)

    def project(self, v):
        v = _vec(v, self.dim)
        if self._nn == 0.0:
            return v.copy()
        return v - float(v @ self.normal) / self._nn * self.normal

    def polar(self):
        return Line(self.normal)

    def is_full(self):
        return self._nn == 0.0

    def axis_code(self):
        if self.dim != 1:
            return super().axis_code()
        return "f" if self.normal[0] == 0 else "0"

    def cvx_constraints(self, u):
        return [self.normal @ u == 0]

    def __repr__(self):
        return f"Hyperplane({self.normal.tolist()})"


class Line(Cone):
    """{t * direction : t real}."""

    def __init__(self, direction):
        self.direction = np.asarray(direction, dtype=float).reshape(-1)
        self.dim = self.direction.shape[0]
        self._nn = float(self.direction @ self.direction)

    def project(self, v):
        v = _vec(v, self.dim)
        if self._nn == 0.0:
            return np.zeros(self.dim)
        return float(v @ self.direction) / self._nn * self.direction

    def polar(self):
        return Hyperplane(self.direction)

    def axis_code(self):
        if self.dim != 1:
            return super().axis_code()
        return "0" if self.direction[0] == 0 else "f"

    def cvx_constraints(self, u):
        return _span_constraints(u, self.direction, nonneg=False)

    def __repr__(self):
        return f"Line({self.direction.tolist()})"


class SecondOrder(Cone):
    """Second-order cone {(u, t) : ||u|| <= sign * t}, last coordinate is t.

    ``sign=-1`` gives the polar of the usual Lorentz cone.
    """

    def __init__(self, dim, sign=1):
        self.dim = int(dim)
        self.sign = 1 if sign >= 0 else -1

    def project(self, v):
        v = _vec(v, self.dim)
        u, t = v[:-1], self.sign * v[-1]
        nu = float(np.linalg.norm(u))
        if nu <= t:
            return v.copy()
        if nu <= -t:
            return np.zeros(self.dim)
        a = 0.5 * (t + nu)
        out = np.empty(self.dim)
        out[:-1] = a * u / nu
        out[-1] = self.sign * a
        return out

    def polar(self):
        return SecondOrder(self.dim, -self.sign)

    def axis_code(self):
        if self.dim != 1:
            return super().axis_code()
        return "+" if self.sign > 0 else "-"

    def cvx_constraints(self, u):
        import cvxpy as cp

        if self.dim == 1:
            return [self.sign * u[0] >= 0]
        return [cp.SOC(self.sign * u[-1], u[:-1])]

    def __repr__(self):
        return f"SecondOrder({self.dim}, sign={self.sign})"


class ProductCone(Cone):
    def __init__(self, factors):
        self.factors = tuple(factors)
        self.dims = [f.dim for f in self.factors]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)]).astype(int)
        self.dim = int(self.offsets[-1])
        self.is_convex = all(f.is_convex for f in self.factors)

    def _split(self, v):
        return [v[self.offsets[i]:self.offsets[i + 1]] for i in range(len(self.factors))]

    def project(self, v):
        if not self.is_convex:
            raise UnsupportedKind("projection onto a nonconvex product cone")
        v = _vec(v, self.dim)
        if not self.factors:
            return v.copy()
        return np.concatenate([f.project(p) for f, p in zip(self.factors, self._split(v))])

    def dist(self, v):
        v = _vec(v, self.dim)
        parts = [f.dist(p) for f, p in zip(self.factors, self._split(v))]
        return float(np.sqrt(sum(d * d for d in parts)))

    def polar(self):
        return ProductCone(f.polar() for f in self.factors)

    def pieces(self):
        return [ProductCone(combo) for combo in itertools.product(*(f.pieces() for f in self.factors))]

    def is_full(self):
        return all(f.is_full() for f in self.factors)

    def axis_code(self):
        live = [f for f in self.factors if f.dim]
        if self.dim != 1 or len(live) != 1:
            return super().axis_code()
        return live[0].axis_code()

    def cvx_constraints(self, u):
        out = []
        for f, (a, b) in zip(self.factors, zip(self.offsets[:-1], self.offsets[1:])):
            if b > a:
                out.extend(f.cvx_constraints(u[a:b]))
        return out

    def __repr__(self):
        return f"ProductCone({list(self.factors)!r})"


class UnionCone(Cone):
    """Finite union of cones; distance is the minimum over the members."""

    is_convex = False

    def __init__(self, members):
        self.members = tuple(members)
        if not self.members:
            raise ValueError("UnionCone needs at least one member")
        self.dim = self.members[0].dim

    def project(self, v):
        raise UnsupportedKind("projection onto a union of cones is multi-valued")

    def dist(self, v):
        return min(m.dist(v) for m in self.members)

    def polar(self):
        raise UnsupportedKind("polar of a union of cones is not used")

    def pieces(self):
        out = []
        for m in self.members:
            out.extend(m.pieces())
        return out

    def is_full(self):
        return any(m.is_full() for m in self.members)

    def __repr__(self):
        return f"UnionCone({list(self.members)!r})"


def project_cone_ball(cone, v):
    """Projection of ``v`` onto ``cone`` intersected with the unit ball.

    For a closed convex cone K the projection onto K ∩ B is the projection
    onto K rescaled into the ball.
    """
    p = cone.project(v)
    n = float(np.linalg.norm(p))
    if n > 1.0:
        p = p / n
    return p

"""Shared fixtures: one instance of every set kind and the penalty forms over them."""
import os

import numpy as np

from penaltyopt import penalty as P
from penaltyopt import sets as S


def seed():
    return int(os.environ.get("PENALTY_SOLVER_SEED", "20240607"))


def rng(offset=0):
    return np.random.default_rng(seed() + offset)


def set_catalog():
    return {
        "orthant": S.NonpositiveOrthant(2),
        "zeros": S.Zeros(2),
        "box": S.Box([-1.0, 0.0], [1.0, 2.0]),
        "ball": S.Ball([0.5, -0.5], 1.5),
        "sphere": S.Sphere([0.0, 0.0], 1.0),
        "finite": S.FiniteSet([[-1.0, 0.0], [1.0, 0.0], [0.0, 2.0]]),
        "lorentz": S.Lorentz(3),
        "product": S.Product([S.NonpositiveOrthant(1), S.Ball([0.0, 0.0], 1.0)]),
        "union": S.Union([S.Ball([-1.0, 0.0], 1.0), S.Box([0.5, -1.0], [2.0, 1.0])]),
    }


INTERVAL_KINDS = ("orthant", "zeros", "box")


def penalty_catalog():
    """(label, PenaltyKind) for every form paired with every set it supports."""
    out = []
    for name, s in set_catalog().items():
        out.append((f"exact-{name}", P.ExactP(s)))
        out.append((f"square-{name}", P.HalfSquareQ(s)))
        out.append((f"power3-{name}", P.Power(s, 3.0)))
        if name in INTERVAL_KINDS:
            out.append((f"lp3-{name}", P.LpPower(s, 3.0)))
    cat = set_catalog()
    out.append(("separable", P.SeparableSum([(1.0, P.HalfSquareQ(cat["ball"])), (2.0, P.ExactP(cat["finite"]))])))
    out.append(("separable-sq", P.SeparableSum([(1.0, P.HalfSquareQ(cat["sphere"])), (0.5, P.HalfSquareQ(cat["orthant"]))])))
    return out


def points_near(s, gen, n):
    """Mix of points in the set, on its boundary and outside it."""
    k = n // 3
    inside = s.sample(gen, k)
    raw = 2.0 * gen.standard_normal((n - 2 * k, s.dim))
    boundary = np.array([s.project(z).candidates[0] for z in 2.0 * gen.standard_normal((k, s.dim)) + 0.1])
    return np.vstack([inside, boundary, raw])


def blocks_of(pk):
    if isinstance(pk, P.SeparableSum):
        return [k.set for _, k in pk.terms]
    return [pk.set]


def points_for(pk, gen, n):
    return np.hstack([points_near(s, gen, n) for s in blocks_of(pk)])

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from penaltyopt import model as Mo
from penaltyopt import oracle
from penaltyopt import sets as S
from penaltyopt.errors import DimensionMismatch, GradientMismatch, InfeasibleStart, ValidationError
from penaltyopt.expr import compile_expr


def sq():
    return Smooth1(lambda x: x[0] ** 2, lambda x: [2 * x[0]])


def Smooth1(f, g):
    return Mo.Smooth(f, g, 1)


def lin(a, b):
    return Smooth1(lambda x: a * x[0] + b, lambda x: [a])


def test_value_examples():
    assert Mo.value(sq(), [3.0])[0] == 9.0
    assert Mo.value(Mo.MinOfSmooth([lin(1, 0), lin(-1, 2)]), [3.0])[0] == -1.0
    assert Mo.value(Mo.MaxOfSmooth([lin(1, 0), lin(-1, 0)]), [-2.0])[0] == 2.0


def test_semiderivative_examples():
    assert Mo.semiderivative(Mo.MaxOfSmooth([lin(1, 0), lin(-1, 0)]), [0.0], [1.0]) == 1.0
    assert Mo.semiderivative(Mo.MinOfSmooth([lin(1, 0), lin(-1, 2)]), [1.0], [1.0]) == -1.0
    assert Mo.semiderivative(sq(), [3.0], [2.0]) == 12.0


def test_pull_out_assembly():
    pf = Mo.pull_out(Smooth1(lambda y: y[0], lambda y: [1.0]), sq(), 2.0)
    assert pf.value([1.0, 0.0]) == 2.0
    g = np.random.default_rng(0)
    for x, y in g.standard_normal((20, 2)):
        assert pf.value([x, y]) == pytest.approx(y + 2 * abs(x * x - y), abs=1e-12)


def test_pull_out_semiderivative_matches_oracle():
    pf = Mo.pull_out(Smooth1(lambda y: y[0], lambda y: [1.0]), sq(), 2.0)
    for x, w in [([1.0, 1.0], [0.0, 1.0]), ([1.0, 1.0], [1.0, -0.5]), ([0.5, 2.0], [1.0, 1.0])]:
        est = oracle.estimate_subderivative(pf.value_batch, x, w, vectorized=True)
        assert pf.subderivative(np.array(x), np.array(w)) == pytest.approx(est.lower, abs=1e-3)


def test_pull_out_on_graph_is_exact():
    g = Smooth1(lambda y: np.sin(y[0]), lambda y: [np.cos(y[0])])
    pf = Mo.pull_out(g, sq(), 5.0)
    for x in np.linspace(-2, 2, 9):
        assert pf.value([x, x * x]) == np.sin(x * x)


def test_validate_gradient_catches_wrong_jacobian():
    bad = Smooth1(lambda x: x[0] ** 3, lambda x: [2 * x[0]])
    with pytest.raises(GradientMismatch):
        Mo.validate_gradient(bad)
    Mo.validate_gradient(Smooth1(lambda x: x[0] ** 3, lambda x: [3 * x[0] ** 2]))


def test_problem_checks():
    obj = sq()
    with pytest.raises(InfeasibleStart):
        Mo.Problem(obj, [(lin(1, 0), S.NonpositiveOrthant(1))], x0=np.array([1.0]))
    with pytest.raises(DimensionMismatch):
        Mo.Problem(obj, [(lin(1, 0), S.NonpositiveOrthant(2))])
    with pytest.raises(ValidationError):
        Mo.Problem(obj, alpha=0.5)
    p = Mo.Problem(obj, [(lin(1, 0), S.NonpositiveOrthant(1)), (lin(1, 1), S.Zeros(1))], x0=[-1.0])
    assert p.m == 2 and p.constraint_dist([-1.0]) == 0.0


def test_min_of_smooth_tie_uses_all_active_pieces():
    f = Mo.MinOfSmooth([lin(1, 0), lin(-1, 2), lin(3, 5)])
    assert f.active_indices([1.0]) == [0, 1]


# -- properties ---------------------------------------------------------------

FIXTURES = {
    "smooth": "x1^2 - 3*x1*x2 + x2^3",
    "max": "max(x1 - x2, x1^2, 0.5*x2)",
    "min": "min(x1 + x2, x1^2 - 1, x2^2)",
    "abs": "abs(x1 - 2*x2) + x1",
}
seeds = st.integers(0, 2 ** 31)


def _at_kink(f, g):
    # half of the samples sit on a point where two pieces tie
    x = g.standard_normal(2)
    if isinstance(f, Mo._Pieces) and g.random() < 0.5:
        a, b = f.pieces[0], f.pieces[1]
        # move along x1 to a root of a - b using a few secant steps
        for _ in range(50):
            d = a.value(x)[0] - b.value(x)[0]
            s = a.gradient(x)[0] - b.gradient(x)[0]
            if abs(d) < 1e-13 or s == 0:
                break
            x[0] -= d / s
    return x


@pytest.mark.parametrize("name", sorted(FIXTURES))
@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_semiderivative_matches_oracle(name, seed):
    _, f = compile_expr(FIXTURES[name], 2)
    g = np.random.default_rng(seed)
    x = _at_kink(f, g)
    w = g.standard_normal(2)
    fun = lambda X: f.value_batch(X)[:, 0]
    est = oracle.estimate_subderivative(fun, x, w, vectorized=True)
    assert Mo.semiderivative(f, x, w) == pytest.approx(est.lower, abs=1e-3)


@pytest.mark.parametrize("name", sorted(FIXTURES))
@settings(max_examples=30, deadline=None)
@given(seed=seeds, t=st.floats(0, 20))
def test_semiderivative_homogeneous(name, seed, t):
    _, f = compile_expr(FIXTURES[name], 2)
    g = np.random.default_rng(seed)
    x, w = _at_kink(f, g), g.standard_normal(2)
    assert Mo.semiderivative(f, x, t * w) == pytest.approx(t * Mo.semiderivative(f, x, w), rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_smooth_semiderivative_linear(seed, a, b):
    _, f = compile_expr(FIXTURES["smooth"], 2)
    g = np.random.default_rng(seed)
    x, u, v = g.standard_normal((3, 2))
    lhs = Mo.semiderivative(f, x, a * u + b * v)
    assert lhs == pytest.approx(a * Mo.semiderivative(f, x, u) + b * Mo.semiderivative(f, x, v), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("name, sign", [("min", -1), ("max", 1)])
@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_pieces_bound_semiderivative(name, sign, seed):
    _, f = compile_expr(FIXTURES[name], 2)
    g = np.random.default_rng(seed)
    x, w = _at_kink(f, g), g.standard_normal(2)
    d = Mo.semiderivative(f, x, w)
    for i in f.active_indices(x):
        assert sign * (d - f.pieces[i].gradient(x) @ w) >= -1e-12

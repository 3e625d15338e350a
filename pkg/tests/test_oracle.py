import numpy as np
import pytest

from penaltyopt import oracle
from penaltyopt import penalty as P
from penaltyopt import sets as S
from penaltyopt.errors import ResolutionTooCoarse, ValidationError


def test_smooth_quadratic():
    est = oracle.estimate_subderivative(lambda x: x[0] ** 2, [1.0], [1.0])
    assert abs(est.lower - 2.0) <= 1e-3 and abs(est.upper - 2.0) <= 1e-3


def test_abs_at_kink():
    est = oracle.estimate_subderivative(lambda x: abs(x[0]), [0.0], [-1.0])
    assert abs(est.lower - 1.0) <= 1e-3


def test_irregular_fixture_liminf_and_fixed_quotient():
    est = oracle.estimate_subderivative(oracle.irregular_fixture, [0.0, 0.0], [1.0, 0.0], vectorized=True)
    assert abs(est.lower) <= 5e-2
    assert abs(est.upper - 1.0) <= 5e-2


def test_lower_never_exceeds_upper():
    g = np.random.default_rng(1)
    f = lambda x: np.sin(3 * x[0]) * x[1] + abs(x[0] - x[1])
    for x, w in zip(g.standard_normal((20, 2)), g.standard_normal((20, 2))):
        est = oracle.estimate_subderivative(f, x, w)
        assert est.lower <= est.upper


@pytest.mark.parametrize("f, x, w", [
    (lambda x: x[0] ** 2, [1.0], [1.0]),
    (lambda x: abs(x[0]), [0.0], [-1.0]),
    (oracle.irregular_fixture, [0.0, 0.0], [1.0, 0.0]),
])
def test_shrinking_radius_does_not_widen_gap(f, x, w):
    gaps = []
    for c in (1.0, 0.5, 0.25, 0.0):
        est = oracle.estimate_subderivative(f, x, w, oracle.GridSpec(c=c))
        gaps.append(est.upper - est.lower)
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))


def test_smooth_matches_gradient():
    g = np.random.default_rng(2)
    f = lambda x: x[0] ** 3 - 2 * x[0] * x[1] + np.exp(x[1])
    grad = lambda x: np.array([3 * x[0] ** 2 - 2 * x[1], -2 * x[0] + np.exp(x[1])])
    for x, w in zip(g.standard_normal((20, 2)), g.standard_normal((20, 2))):
        est = oracle.estimate_subderivative(f, x, w)
        assert abs(est.lower - grad(x) @ w) <= 1e-3


def test_nonfinite_samples_are_excluded():
    f = lambda x: 1.0 / x[0] if x[0] < 0.3 else np.nan
    est = oracle.estimate_subderivative(f, [0.25], [1.0], oracle.GridSpec(levels=4, tail=4))
    assert est.excluded > 0 and np.isfinite(est.lower)


def test_base_point_must_be_finite():
    with pytest.raises(ValidationError):
        oracle.estimate_subderivative(lambda x: np.inf, [0.0], [1.0])


def test_grid_min_quadratic():
    x, v = oracle.grid_min(lambda x: (x[0] - 0.3) ** 2, [0.0], [1.0], 1e-3)
    assert abs(x[0] - 0.3) <= 1e-3 and v <= 1e-12


def test_grid_min_penalty_fixture_within_one_cell():
    f = lambda X: X[:, 0] + 101 * np.maximum(1 - X[:, 0], 0.0) ** 2
    x, _ = oracle.grid_min(f, [0.0], [2.0], 1e-5, vectorized=True)
    assert abs(x[0] - (1 - 1 / 202)) <= 1e-5


def test_grid_min_two_minimizers():
    q = P.HalfSquareQ(S.FiniteSet([[-1.0], [1.0]]))
    x, v = oracle.grid_min(q.value_batch, [-2.0], [2.0], 1e-3, vectorized=True)
    assert abs(abs(x[0]) - 1.0) <= 1e-9 and v <= 1e-18


def test_grid_min_limits():
    with pytest.raises(ResolutionTooCoarse):
        oracle.grid_min(lambda x: 0.0, [0, 0, 0], [1, 1, 1], 1e-3)
    with pytest.raises(ValidationError):
        oracle.grid_min(lambda x: 0.0, [0, 0, 0, 0], [1, 1, 1, 1], 0.5)
    with pytest.raises(ValidationError):
        oracle.grid_min(lambda x: 0.0, [0], [np.inf], 0.5)


def test_ball_directions_layout():
    D = oracle.ball_directions(3, 64)
    assert D.shape == (64, 3)
    np.testing.assert_array_equal(D[0], 0.0)
    np.testing.assert_array_equal(D[1], [1, 0, 0])
    assert np.all(np.linalg.norm(D, axis=1) <= 1 + 1e-12)

import math

import numpy as np
import pytest
from conftest import angle_oracle, nonzero_vectors, vector_tuples
from hypothesis import given
from hypothesis import strategies as st

from lipschitz_rl import ConfigError, DimensionError, DomainError
from lipschitz_rl.metric import (
    MetricConfig,
    StateActionPair,
    angular_distance,
    distance_to_set,
    eps_distance,
    euclidean_distance,
    paired_angular,
    paired_eps,
    pairwise_eps,
    pairwise_product,
    product_distance,
)


@pytest.mark.parametrize("u, v, want", [
    ((1, 0), (1, 0), 0.0),
    ((1, 0), (0, 1), 0.5),
    ((1, 0), (-1, 0), 1.0),
])
def test_angular_examples(u, v, want):
    assert angular_distance(u, v) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("u, v, want", [
    ((1, 0), (1, 0), 0.0),
    ((1, 0), (2, 0), 1.0),
    ((3, 0), (0, 4), 5.0),
])
def test_euclidean_examples(u, v, want):
    assert euclidean_distance(u, v) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("eps", [0.0, 0.1, 0.5, 2.0])
def test_eps_distance_examples(eps):
    cfg = MetricConfig(eps)
    assert eps_distance((1, 0), (2, 0), cfg) == pytest.approx(eps, abs=1e-15)
    assert eps_distance((1, 0), (-1, 0), cfg) == pytest.approx(1 + 2 * eps, abs=1e-15)
    assert eps_distance((2, 0), (-1, 0), cfg) == pytest.approx(1 + 3 * eps, abs=1e-15)


def test_product_distance_examples():
    cfg = MetricConfig(0.1)
    a = np.array([1.0, 1.0])
    p = StateActionPair(np.array([1.0, 0.0]), a)
    assert product_distance(p, p, cfg) == 0.0
    q = StateActionPair(np.array([2.0, 0.0]), a)
    assert product_distance(p, q, cfg) == pytest.approx(0.1, abs=1e-15)
    s = np.array([3.0, -1.0])
    r1 = StateActionPair(s, np.array([1.0, 0.0]))
    r2 = StateActionPair(s, np.array([-1.0, 0.0]))
    assert product_distance(r1, r2, cfg) == pytest.approx(1.2, abs=1e-15)


def test_pairwise_product_matches_pair_sum():
    rng = np.random.default_rng(3)
    X, Y = rng.normal(size=(4, 5)), rng.normal(size=(6, 5))
    D = pairwise_product(X, Y, 0.3, split=3)
    cfg = MetricConfig(0.3)
    for i in range(4):
        for j in range(6):
            want = product_distance(StateActionPair(X[i, :3], X[i, 3:]),
                                    StateActionPair(Y[j, :3], Y[j, 3:]), cfg)
            assert D[i, j] == want


def test_distance_to_set_examples():
    S = [(1, 0), (2, 0)]
    assert distance_to_set((2, 0), S, "eps", MetricConfig(0.5)) == 0.0
    assert distance_to_set((-1, 0), S, "eps", MetricConfig(0.5)) == pytest.approx(2.0)
    assert distance_to_set((0, 1), S, "angular") == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        distance_to_set((0, 1), S, "manhattan")


def test_invalid_inputs():
    with pytest.raises(DomainError):
        angular_distance((0, 0), (1, 0))
    with pytest.raises(DimensionError):
        eps_distance((1, 0), (1, 0, 0), MetricConfig())
    with pytest.raises(DomainError):
        eps_distance((math.nan, 1), (1, 0), MetricConfig())
    with pytest.raises(ConfigError):
        MetricConfig(-0.1)
    with pytest.raises(ConfigError):
        MetricConfig(math.inf)


def test_batch_matches_single_pair_bitwise():
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=(7, 4)), rng.normal(size=(9, 4))
    D = pairwise_eps(X, Y, 0.1)
    cfg = MetricConfig(0.1)
    assert all(D[i, j] == eps_distance(X[i], Y[j], cfg) for i in range(7) for j in range(9))


@given(vector_tuples(2))
def test_angle_agrees_with_arccos_oracle(uv):
    u, v = uv
    # arccos loses precision near 0 and 1, so the oracle is only trusted to ~1e-7
    assert angular_distance(u, v) == pytest.approx(angle_oracle(u, v), abs=1e-7)


@given(vector_tuples(3), st.floats(0.0, 5.0))
def test_metric_axioms(uvw, eps):
    u, v, w = uvw
    cfg = MetricConfig(eps)
    d = lambda a, b: eps_distance(a, b, cfg)  # noqa: E731
    assert d(u, v) == d(v, u)
    assert d(u, w) <= d(u, v) + d(v, w) + 1e-9
    assert 0.0 <= angular_distance(u, v) <= 1.0
    assert d(u, u) == 0.0


@given(vector_tuples(2), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_angle_scale_invariant(uv, a, b):
    u, v = uv
    assert angular_distance(a * u, b * v) == pytest.approx(angular_distance(u, v), abs=1e-9)


@given(nonzero_vectors(), st.floats(0.01, 3.0))
def test_eps_separates_collinear_points(u, eps):
    # same direction, different length: only the Euclidean term is left
    d = eps_distance(u, 2 * u, MetricConfig(eps))
    assert d == pytest.approx(eps * np.linalg.norm(u), rel=1e-12)
    assert d > 0


@given(st.floats(1e-300, 1e-6), st.integers(2, 8), st.floats(0.0, 1.0))
def test_antipodal_points_stay_far_apart(alpha, n, eps):
    b = np.zeros(n)
    b[0] = alpha
    assert eps_distance(b, -b, MetricConfig(eps)) >= 1.0


def test_paired_distances_match_the_diagonal():
    rng = np.random.default_rng(5)
    X, Y = rng.normal(size=(20, 6)), rng.normal(size=(20, 6))
    assert np.array_equal(paired_eps(X, Y, 0.25), np.diag(pairwise_eps(X, Y, 0.25)))
    assert np.array_equal(paired_angular(X, Y), np.diag(pairwise_eps(X, Y, 0.0)))
    with pytest.raises(DimensionError):
        paired_eps(X, Y[:3], 0.1)

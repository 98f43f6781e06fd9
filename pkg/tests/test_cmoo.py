import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coalopt.cmoo import (
    MooConfig,
    cmoo_optimize,
    crowding_distance,
    dominance_matrix,
    epsilon_schedule,
    nondominated_sort,
    polynomial_mutation,
    sbx,
)
from coalopt.cso import ConfigurationError, stream
from coalopt.pareto import hypervolume, nondominated_mask


def linear_toy(X):
    """f1 = x0, f2 = 1 - x0 - mean(x1..); front f2 = 1 - f1 on [0, 1]."""
    return np.c_[X[:, 0], 1.0 - X[:, 0] - X[:, 1:].mean(axis=1)], np.zeros(len(X))


def constrained_toy(X):
    """Maximize (x0, x1) subject to sum(x) <= 1; front x0 + x1 = 1."""
    return X[:, :2].copy(), np.maximum(0.0, X.sum(axis=1) - 1.0)


def brute_dominates(fa, va, fb, vb, eps):
    va = 0.0 if va <= eps else va
    vb = 0.0 if vb <= eps else vb
    if va == 0 and vb == 0:
        return all(x >= y for x, y in zip(fa, fb)) and any(x > y for x, y in zip(fa, fb))
    if va == 0:
        return True
    if vb == 0:
        return False
    return va < vb


def brute_ranks(F, V, eps):
    n = len(F)
    ranks = [-1] * n
    remaining = set(range(n))
    r = 0
    while remaining:
        front = [i for i in remaining if not any(brute_dominates(F[j], V[j], F[i], V[i], eps) for j in remaining if j != i)]
        for i in front:
            ranks[i] = r
        remaining -= set(front)
        r += 1
    return ranks


points = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        arrays(np.float64, (n, 2), elements=st.integers(0, 4).map(float)),
        arrays(np.float64, (n,), elements=st.sampled_from([0.0, 0.0, 0.05, 0.1, 0.3])),
        st.sampled_from([0.0, 0.06, 0.2]),
    )
)


@settings(max_examples=200)
@given(points)
def test_dominance_and_sort_match_brute_force(data):
    F, V, eps = data
    D = dominance_matrix(F, V, eps)
    for i in range(len(F)):
        for j in range(len(F)):
            assert D[i, j] == brute_dominates(F[i], V[i], F[j], V[j], eps)
    assert nondominated_sort(F, V, eps).tolist() == brute_ranks(F, V, eps)


def test_unconstrained_sort_example():
    F = np.array([[3, 1], [1, 3], [2, 2], [1, 1], [0, 0], [2, 1]], dtype=float)
    assert nondominated_sort(F).tolist() == [0, 0, 0, 2, 3, 1]


def test_crowding_distance_example():
    F = np.array([[0.0, 4.0], [1.0, 3.0], [3.0, 1.0], [4.0, 0.0]])
    d = crowding_distance(F)
    assert np.isinf(d[0]) and np.isinf(d[3])
    # interior: sum over objectives of neighbour gap / span
    assert d[1] == pytest.approx(3 / 4 + 3 / 4)
    assert d[2] == pytest.approx(3 / 4 + 3 / 4)
    assert np.all(np.isinf(crowding_distance(F[:2])))


def test_epsilon_schedule():
    assert epsilon_schedule(0.4, 0, 100, 2.0) == 0.4
    assert epsilon_schedule(0.4, 50, 100, 2.0) == pytest.approx(0.1)
    assert epsilon_schedule(0.4, 100, 100, 2.0) == 0.0
    assert epsilon_schedule(0.4, 150, 100, 2.0) == 0.0


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_variation_operators_respect_bounds(seed):
    rng = stream(seed, 0)
    lower, upper = np.full(6, 0.24), np.full(6, 7.0)
    p1 = lower + rng.random(6) * (upper - lower)
    p2 = lower + rng.random(6) * (upper - lower)
    c1, c2 = sbx(p1, p2, lower, upper, 20.0, 1.0, rng)
    m = polynomial_mutation(c1, lower, upper, 20.0, 1.0, rng)
    for x in (c1, c2, m):
        assert np.all(x >= lower) and np.all(x <= upper)


def test_sbx_identical_parents_and_zero_mutation_rate():
    rng = stream(1, 0)
    lo, hi = np.zeros(4), np.ones(4)
    p = np.array([0.1, 0.5, 0.9, 0.3])
    c1, c2 = sbx(p, p, lo, hi, 20.0, 1.0, rng)
    np.testing.assert_array_equal(c1, p)
    np.testing.assert_array_equal(c2, p)
    np.testing.assert_array_equal(polynomial_mutation(p, lo, hi, 20.0, 0.0, rng), p)


def test_sbx_children_preserve_mean_without_clipping():
    rng = stream(2, 0)
    lo, hi = np.full(3, -100.0), np.full(3, 100.0)
    p1, p2 = np.array([1.0, 2.0, 3.0]), np.array([2.0, 0.0, 5.0])
    c1, c2 = sbx(p1, p2, lo, hi, 20.0, 1.0, rng)
    # with far bounds the bounded spread factor is symmetric to ~1e-9
    np.testing.assert_allclose(c1 + c2, p1 + p2, atol=1e-6)


@pytest.mark.parametrize("seed", [0, 1])
def test_linear_toy_hypervolume(seed):
    res = cmoo_optimize(linear_toy, np.zeros(5), np.ones(5), MooConfig(50, 5000, seed))
    ref = np.array([0.0, -1.0])
    F = res.F[np.all(res.F >= ref, axis=1)]
    # area under f2 = 1 - f1 above -1 on [0, 1]
    assert hypervolume(F, ref) >= 0.95 * 1.5


def test_constrained_toy_front_is_feasible_and_nondominated():
    res = cmoo_optimize(constrained_toy, np.zeros(4), np.ones(4), MooConfig(40, 4000, 3), reference_point=np.zeros(2))
    assert not res.empty
    _, V = constrained_toy(res.X)
    assert np.all(V == 0.0)
    assert np.all(nondominated_mask(res.F))
    np.testing.assert_array_equal(res.F, constrained_toy(res.X)[0])
    assert hypervolume(res.F, np.zeros(2)) >= 0.8 * 0.5
    assert res.evaluations <= 4000
    hv = [h["archive_hypervolume"] for h in res.history]
    assert all(b >= a - 1e-12 for a, b in zip(hv, hv[1:]))


def test_budget_and_history():
    calls = []

    def f(X):
        calls.append(len(X))
        return linear_toy(X)

    seen = []
    res = cmoo_optimize(f, np.zeros(3), np.ones(3), MooConfig(10, 115, 0), progress=seen.append)
    assert sum(calls) == res.evaluations <= 115
    assert seen == res.history
    assert res.history[-1]["evaluations"] == res.evaluations
    assert [h["epsilon"] for h in res.history][-1] <= res.history[0]["epsilon"]


def test_deterministic():
    cfg = MooConfig(12, 300, 5)
    a = cmoo_optimize(constrained_toy, np.zeros(3), np.ones(3), cfg)
    b = cmoo_optimize(constrained_toy, np.zeros(3), np.ones(3), cfg)
    np.testing.assert_array_equal(a.X, b.X)
    assert a.history == b.history


def test_infeasible_problem_returns_empty_front():
    res = cmoo_optimize(lambda X: (X[:, :2], 1.0 + X[:, 0]), np.zeros(3), np.ones(3), MooConfig(10, 200, 1))
    assert res.empty
    assert res.best_violation == pytest.approx(1.0, abs=0.05)


def test_degenerate_box_terminates():
    # every child equals its parents: no new evaluations, the run must still stop
    res = cmoo_optimize(linear_toy, np.full(3, 0.5), np.full(3, 0.5), MooConfig(8, 1000, 0))
    assert res.evaluations == 1
    assert len(res.F) == 1


@pytest.mark.parametrize("kw", [{"population": 4}, {"max_evaluations": 50}, {"relaxation_decay": 0.0}, {"seed": -3}])
def test_config_validation(kw):
    args = {"population": 40, "max_evaluations": 400}
    args.update(kw)
    with pytest.raises(ConfigurationError):
        MooConfig(**args)

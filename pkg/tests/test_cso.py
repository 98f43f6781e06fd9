import math

import numpy as np
import pytest
from conftest import lp_max_weighted

from coalopt.coalition import grand_coalition
from coalopt.cso import ConfigurationError, OptimizerConfig, better, cso_maximize, stream
from coalopt.objective import Evaluator


def sphere(X):
    return -np.sum(X**2, axis=1), np.zeros(len(X))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sphere_15d(seed):
    lo, hi = -5.12 * np.ones(15), 5.12 * np.ones(15)
    res = cso_maximize(sphere, lo, hi, OptimizerConfig(50, 5000, seed, 0.1, seed_lower_corner=False))
    assert -res.best.fitness < 1e-2
    assert res.evaluations <= 5000


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ((5.0, 0.0), (9.0, 0.0), False),
        ((9.0, 0.0), (5.0, 0.0), True),
        ((1.0, 0.0), (99.0, 0.1), True),
        ((99.0, 0.1), (1.0, 0.0), False),
        ((1.0, 0.1), (99.0, 0.2), True),
        ((99.0, 0.2), (1.0, 0.1), False),
        ((3.0, 0.0), (3.0, 0.0), False),
    ],
)
def test_feasibility_rules(a, b, expected):
    assert better(*a, *b) is expected


def test_budget_accounting():
    calls = []

    def f(X):
        calls.append(len(X))
        return sphere(X)

    res = cso_maximize(f, -np.ones(3), np.ones(3), OptimizerConfig(10, 103, 4))
    assert calls[0] == 10 and all(c == 5 for c in calls[1:])
    assert sum(calls) == res.evaluations
    # stops before a generation would exceed the budget
    assert res.evaluations <= 103 < res.evaluations + 5
    assert [h["evaluations"] for h in res.history] == list(np.cumsum(calls))


def test_history_is_monotone_and_reported():
    seen = []
    res = cso_maximize(sphere, -np.ones(4), np.ones(4), OptimizerConfig(8, 200, 1), progress=seen.append)
    assert seen == res.history
    values = [h["best_value"] for h in res.history]
    assert values == sorted(values)
    assert [h["generation"] for h in res.history] == list(range(len(res.history)))


def test_deterministic_given_seed():
    cfg = OptimizerConfig(12, 600, 77)
    a = cso_maximize(sphere, -np.ones(5), np.ones(5), cfg)
    b = cso_maximize(sphere, -np.ones(5), np.ones(5), cfg)
    np.testing.assert_array_equal(a.best.position, b.best.position)
    assert a.history == b.history
    c = cso_maximize(sphere, -np.ones(5), np.ones(5), OptimizerConfig(12, 600, 78))
    assert not np.array_equal(a.best.position, c.best.position)


def test_streams_are_independent_of_call_order():
    x1 = stream(5, 1, 2).random(3)
    stream(5, 9, 9).random(100)
    np.testing.assert_array_equal(stream(5, 1, 2).random(3), x1)


def test_positions_stay_in_bounds():
    def f(X):
        assert np.all(X >= 0.0) and np.all(X <= 2.0)
        return X.sum(axis=1), np.zeros(len(X))

    res = cso_maximize(f, np.zeros(6), 2 * np.ones(6), OptimizerConfig(10, 500, 3))
    assert res.best.fitness == pytest.approx(12.0, abs=0.05)


def test_lower_corner_seeded():
    firsts = []

    def f(X):
        if not firsts:
            firsts.append(X[0].copy())
        return X.sum(axis=1), np.zeros(len(X))

    cso_maximize(f, np.full(3, 0.24), np.full(3, 7.0), OptimizerConfig(4, 4, 0))
    np.testing.assert_array_equal(firsts[0], [0.24, 0.24, 0.24])


def test_constrained_disk():
    # maximize x + y on the unit disk: optimum sqrt(2)
    def f(X):
        return X.sum(axis=1), np.maximum(0.0, (X**2).sum(axis=1) - 1.0)

    res = cso_maximize(f, np.zeros(2), np.ones(2), OptimizerConfig(20, 2000, 9))
    assert res.feasible
    assert res.best.fitness == pytest.approx(math.sqrt(2), abs=2e-3)


def test_infeasible_problem_reports_least_violation():
    def f(X):
        return X.sum(axis=1), 1.0 + X[:, 0]

    res = cso_maximize(f, np.zeros(2), np.ones(2), OptimizerConfig(10, 300, 2))
    assert not res.feasible
    assert res.best.violation == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize(
    "kw",
    [{"population": 5}, {"population": 2}, {"max_evaluations": 10}, {"phi": 1.5}, {"seed": -1}, {"seed": 2**64}],
)
def test_config_validation(kw):
    args = {"population": 20, "max_evaluations": 100, "seed": 0}
    args.update(kw)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(**args)


def test_bad_bounds():
    with pytest.raises(ConfigurationError):
        cso_maximize(sphere, np.ones(2), np.zeros(2), OptimizerConfig(4, 8, 0))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_grand_coalition_against_lp_oracle(small, seed):
    _, model, bounds, resp = small
    ev = Evaluator(model, bounds, grand_coalition(3), response=resp)
    lp, _ = lp_max_weighted(resp, bounds, np.full(ev.n_design, bounds.interval_length))
    lo, hi = ev.box()
    res = cso_maximize(ev.scalarized([1.0]), lo, hi, OptimizerConfig(50, 5000, seed))
    assert res.feasible
    # a feasible point can never beat the exact optimum, and CSO should get close to it
    assert res.best.fitness <= lp + 1e-9
    assert res.best.fitness >= 0.99 * lp
    assert ev.n_evaluations == res.evaluations

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coalopt.coalition import CoalitionStructure, singletons
from coalopt.objective import check_weights
from coalopt.pareto import (
    FrontError,
    FrontPoint,
    ParetoFront,
    dominates,
    filter_nondominated,
    hypervolume,
    nondominated_mask,
    select_max_agent,
    select_max_total,
    weight_grid,
)


def union_volume(F, r):
    """Inclusion-exclusion over all subsets of boxes [r, p]."""
    total = 0.0
    for k in range(1, len(F) + 1):
        for subset in combinations(range(len(F)), k):
            corner = np.min(F[list(subset)], axis=0)
            total += (-1) ** (k + 1) * float(np.prod(corner - r))
    return total


def point(values, **kw):
    return FrontPoint(np.asarray(values, dtype=float), np.zeros((len(values), 1)), "wsm", **kw)


@pytest.mark.parametrize("m, inc, count", [(1, 0.1, 1), (2, 0.1, 11), (3, 0.2, 21), (3, 0.1, 66), (4, 0.25, 35), (2, 0.5, 3)])
def test_weight_grid_sizes(m, inc, count):
    grid = weight_grid(m, inc)
    k = round(1 / inc)
    assert len(grid) == count == math.comb(k + m - 1, m - 1)
    assert len(set(grid)) == len(grid)
    for w in grid:
        check_weights(np.array(w), m)


def test_weight_grid_order_and_values():
    grid = weight_grid(2, 0.1)
    assert grid[0] == (0.0, 1.0) and grid[-1] == (1.0, 0.0)
    assert [w[0] for w in grid] == sorted(w[0] for w in grid)
    assert grid[3] == (0.3, 0.7)
    g3 = weight_grid(3, 0.2)
    assert g3 == sorted(g3)
    assert (0.0, 0.0, 1.0) in g3 and (0.2, 0.4, 0.4) in g3


@pytest.mark.parametrize("m, inc", [(0, 0.1), (2, 0.3), (2, 0.0), (2, -0.5)])
def test_weight_grid_errors(m, inc):
    with pytest.raises(FrontError):
        weight_grid(m, inc)


def test_dominates():
    assert dominates([2, 2], [1, 2])
    assert not dominates([2, 2], [2, 2])
    assert not dominates([3, 1], [1, 3])


@settings(max_examples=200)
@given(arrays(np.float64, st.tuples(st.integers(0, 15), st.integers(1, 3)), elements=st.integers(0, 5).map(float)))
def test_nondominated_mask_matches_brute_force(F):
    mask = nondominated_mask(F)
    for i in range(len(F)):
        dominated = any(dominates(F[j], F[i]) for j in range(len(F)))
        duplicate = any(np.array_equal(F[j], F[i]) for j in range(i))
        assert mask[i] == (not dominated and not duplicate)


def test_filter_keeps_order_and_objects():
    pts = [point([1, 3]), point([2, 2]), point([1, 1]), point([2, 2]), point([3, 0])]
    kept = filter_nondominated(pts)
    assert [p.values.tolist() for p in kept] == [[1, 3], [2, 2], [3, 0]]
    assert kept[1] is pts[1]
    arr = filter_nondominated(np.array([[1.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_array_equal(arr, [[1.0, 1.0]])
    assert filter_nondominated([]) == []


@settings(max_examples=150, deadline=None)
@given(
    st.integers(2, 3).flatmap(
        lambda m: arrays(np.float64, st.tuples(st.integers(1, 7), st.just(m)), elements=st.integers(0, 6).map(float))
    )
)
def test_hypervolume_matches_inclusion_exclusion(F):
    r = np.zeros(F.shape[1])
    assert hypervolume(F, r) == pytest.approx(union_volume(F, r), abs=1e-9)


def test_hypervolume_known_values():
    assert hypervolume(np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]]), [0.0, 0.0]) == 6.0
    assert hypervolume(np.array([[1.0, 1.0, 1.0]]), [0.0, 0.0, 0.0]) == 1.0
    assert hypervolume(np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]), [0, 0, 0]) == 4.0
    assert hypervolume(np.empty((0, 2)), [0, 0]) == 0.0
    assert hypervolume([point([2, 3])], [1, 1]) == 2.0


def test_hypervolume_errors():
    with pytest.raises(FrontError):
        hypervolume(np.array([[1.0, -1.0]]), [0.0, 0.0])
    with pytest.raises(FrontError):
        hypervolume(np.ones((2, 4)), np.zeros(4))
    with pytest.raises(FrontError):
        hypervolume(np.ones((2, 2)), np.zeros(3))


def test_select_max_total_first_on_ties():
    front = ParetoFront([point([1, 5]), point([4, 2]), point([3, 3])], singletons(2))
    assert select_max_total(front) is front.points[0]
    with pytest.raises(FrontError):
        select_max_total(ParetoFront([], singletons(2)))


def test_select_max_agent_uses_coalition_of_agent():
    cs = CoalitionStructure.from_key((0, 1, 1))
    pts = [point([5, 1]), point([2, 9]), point([5, 3]), point([5, 3])]
    front = ParetoFront(pts, cs)
    # W1 alone: best first value, tie broken by total, then first index
    assert select_max_agent(front, 0) is pts[2]
    # W3 shares a coalition with W2
    assert select_max_agent(front, 2) is pts[1]
    with pytest.raises(FrontError):
        select_max_agent(front, 3)
    with pytest.raises(FrontError):
        select_max_agent(ParetoFront([], cs), 0)


def test_front_point_total_and_matrix():
    p = point([0.1, 0.2, 0.3])
    assert p.total == 0.6
    front = ParetoFront([p], singletons(3))
    assert front.objective_matrix().shape == (1, 3)
    assert ParetoFront([], singletons(3)).objective_matrix().shape == (0, 3)

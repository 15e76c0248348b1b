import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from grassdict import transport
from grassdict.errors import ContractError


def lp_oracle(cost, a, b):
    """Optimal transport cost from a generic LP solver."""
    m, n = cost.shape
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1
    for j in range(n):
        a_eq[m + j, j::n] = 1
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=np.r_[a, b], bounds=(0, None), method="highs")
    return res.fun


def random_weights(rng, n):
    w = rng.uniform(0.05, 1.0, n)
    return w / w.sum()


def check_marginals(plan, a, b):
    assert np.all(plan >= 0)
    np.testing.assert_allclose(plan.sum(axis=1), a, atol=1e-9)
    np.testing.assert_allclose(plan.sum(axis=0), b, atol=1e-9)


def test_check_weights():
    with pytest.raises(ContractError):
        transport.check_weights([0.5, 0.6], "w")
    with pytest.raises(ContractError):
        transport.check_weights([1.5, -0.5], "w")
    with pytest.raises(ContractError):
        transport.check_weights([], "w")


def test_assignment_matches_permutations(rng):
    for n in range(1, 7):
        cost = rng.random((n, n))
        plan = transport.assignment_plan(cost)
        best = min(cost[np.arange(n), list(p)].sum() for p in itertools.permutations(range(n)))
        assert np.sum(plan * cost) == pytest.approx(best / n, abs=1e-12)
        check_marginals(plan, np.full(n, 1 / n), np.full(n, 1 / n))


@pytest.mark.parametrize("shape", [(1, 1), (1, 4), (3, 2), (4, 4), (5, 7), (8, 3)])
def test_simplex_matches_lp(rng, shape):
    for _ in range(5):
        cost = rng.random(shape)
        a, b = random_weights(rng, shape[0]), random_weights(rng, shape[1])
        plan = transport.transport_simplex(cost, a, b)
        check_marginals(plan, a, b)
        assert np.sum(plan * cost) == pytest.approx(lp_oracle(cost, a, b), abs=1e-9)


def test_simplex_degenerate_weights(rng):
    # equal uniform weights make north-west-corner solutions degenerate
    cost = rng.integers(0, 3, size=(5, 5)).astype(float)
    a = b = np.full(5, 0.2)
    plan = transport.transport_simplex(cost, a, b)
    check_marginals(plan, a, b)
    assert np.sum(plan * cost) == pytest.approx(lp_oracle(cost, a, b), abs=1e-9)


def test_optimal_plan_dispatch(rng):
    cost = rng.random((4, 4))
    u = np.full(4, 0.25)
    np.testing.assert_allclose(
        np.sum(transport.optimal_plan(cost, u, u) * cost), lp_oracle(cost, u, u), atol=1e-12
    )


def bottleneck_oracle(cost, a, b):
    """Smallest threshold t such that costs <= t admit a feasible plan (by LP)."""
    for t in np.unique(cost):
        masked = np.where(cost <= t, 0.0, 1.0)
        if lp_oracle(masked, a, b) <= 1e-12:
            return t
    raise AssertionError("unreachable")


def test_bottleneck_uniform(rng):
    for n in range(1, 6):
        cost = rng.random((n, n))
        plan, value = transport.bottleneck_plan(cost, np.full(n, 1 / n), np.full(n, 1 / n))
        best = min(cost[np.arange(n), list(p)].max() for p in itertools.permutations(range(n)))
        assert value == best
        check_marginals(plan, np.full(n, 1 / n), np.full(n, 1 / n))
        assert cost[plan > 0].max() == value


def test_bottleneck_weighted(rng):
    for _ in range(10):
        cost = rng.random((3, 5))
        a, b = random_weights(rng, 3), random_weights(rng, 5)
        plan, value = transport.bottleneck_plan(cost, a, b)
        check_marginals(plan, a, b)
        assert value == bottleneck_oracle(cost, a, b)
        assert cost[plan > 1e-12].max() <= value


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6), n=st.integers(1, 6))
def test_simplex_property(seed, m, n):
    rng = np.random.default_rng(seed)
    cost = rng.random((m, n))
    a, b = random_weights(rng, m), random_weights(rng, n)
    plan = transport.transport_simplex(cost, a, b)
    check_marginals(plan, a, b)
    assert np.sum(plan * cost) <= lp_oracle(cost, a, b) + 1e-9

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from msddp.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp


def random_lp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    mu = int(rng.integers(0, 5))
    me = int(rng.integers(0, 3))
    c = rng.normal(size=n)
    A_ub = rng.normal(size=(mu, n))
    A_eq = rng.normal(size=(me, n))
    x0 = rng.uniform(-1, 1, size=n)
    b_ub = A_ub @ x0 + rng.uniform(0, 1, size=mu)
    b_eq = A_eq @ x0
    lower = np.where(rng.random(n) < 0.8, -2.0, -np.inf)
    upper = np.where(rng.random(n) < 0.8, 2.0, np.inf)
    return c, A_ub, b_ub, A_eq, b_eq, lower, upper


@given(st.integers(0, 10_000))
def test_matches_highs(seed):
    c, A_ub, b_ub, A_eq, b_eq, lower, upper = random_lp(seed)
    ours = solve_lp(c, A_ub, b_ub, A_eq, b_eq, lower, upper)
    ref = linprog(c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=A_eq if len(b_eq) else None, b_eq=b_eq if len(b_eq) else None,
                  bounds=list(zip(lower, [None if np.isinf(u) else u for u in upper])),
                  method="highs")
    if ref.status == 3:
        assert ours.status == UNBOUNDED
        return
    assert ref.status == 0
    assert ours.status == OPTIMAL
    assert ours.value == pytest.approx(ref.fun, abs=1e-7)
    # strong duality through the reported sensitivities
    assert ours.dual_value == pytest.approx(ours.value, abs=1e-7)


@given(st.integers(0, 10_000))
def test_duals_are_rhs_sensitivities(seed):
    c, A_ub, b_ub, A_eq, b_eq, lower, upper = random_lp(seed)
    base = solve_lp(c, A_ub, b_ub, A_eq, b_eq, lower, upper)
    if base.status != OPTIMAL:
        return
    h = 1e-6
    for i in range(len(b_ub)):
        bumped = b_ub.copy()
        bumped[i] += h
        r = solve_lp(c, A_ub, bumped, A_eq, b_eq, lower, upper)
        fd = (r.value - base.value) / h
        # one-sided difference can only disagree at a degenerate vertex
        assert base.ub_duals[i] <= 1e-9
        if abs(fd - base.ub_duals[i]) > 1e-4:
            down = b_ub.copy()
            down[i] -= h
            r2 = solve_lp(c, A_ub, down, A_eq, b_eq, lower, upper)
            lo, hi = sorted(((base.value - r2.value) / h, fd))
            assert lo - 1e-4 <= base.ub_duals[i] <= hi + 1e-4


def test_infeasible_and_unbounded():
    assert solve_lp([1.0], A_ub=[[1.0]], b_ub=[-1.0], lower=[0.0]).status == INFEASIBLE
    assert solve_lp([-1.0], lower=[0.0]).status == UNBOUNDED
    assert solve_lp([1.0], lower=[1.0], upper=[0.0]).status == INFEASIBLE


def test_redundant_equalities():
    r = solve_lp([1.0, 1.0], A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0])
    assert r.status == OPTIMAL and r.value == pytest.approx(1.0)


def test_free_and_one_sided_bounds():
    r = solve_lp([1.0, -1.0], A_ub=[[-1.0, 0.0], [0.0, 1.0]], b_ub=[3.0, 4.0],
                 lower=[-np.inf, -np.inf], upper=[np.inf, np.inf])
    assert r.status == OPTIMAL
    np.testing.assert_allclose(r.x, [-3.0, 4.0])


def test_deterministic():
    args = random_lp(4)
    a, b = solve_lp(*args), solve_lp(*args)
    assert a.value == b.value and np.array_equal(a.x, b.x)
    assert np.array_equal(a.eq_duals, b.eq_duals) and np.array_equal(a.ub_duals, b.ub_duals)

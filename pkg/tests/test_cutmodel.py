import numpy as np
import pytest
from hypothesis import given, strategies as st

from msddp.cutmodel import (Cut, CutPool, add_cut, dump_pools, empirical_gradient_bound,
                            initial_floor, initial_pools, load_pools, pool_eval, pool_from_dict,
                            pool_to_dict)
from msddp.model import Instance, Realization, StageShape


def test_pool_eval_examples():
    empty = CutPool(2, 1, 0.0)
    assert pool_eval(empty, [0.3]) == 0.0 and pool_eval(empty, [-7.0]) == 0.0
    one = add_cut(empty, Cut([0.5], 1.0, [2.0]))
    assert pool_eval(one, [1.0]) == pytest.approx(2.0)
    absx = add_cut(add_cut(CutPool(2, 1, -5.0), Cut([1.0], 1.0, [1.0])), Cut([-1.0], 1.0, [-1.0]))
    assert pool_eval(absx, [0.0]) == 0.0
    with pytest.raises(ValueError):
        pool_eval(absx, [0.0, 1.0])


def test_add_cut_leaves_old_version():
    p0 = CutPool(2, 1, 0.0)
    p1 = add_cut(p0, Cut([0.5], 1.0, [2.0]))
    assert len(p0) == 0 and len(p1) == 1
    with pytest.raises(ValueError):
        add_cut(p0, Cut([0.5, 0.1], 1.0, [2.0, 0.0]))


def test_dominated_cut_changes_nothing():
    rng = np.random.default_rng(0)
    p = add_cut(CutPool(2, 2, 0.0), Cut([0.0, 0.0], 1.0, [1.0, -1.0]))
    q = add_cut(p, Cut([0.0, 0.0], -10.0, [0.5, 0.5]))
    for x in rng.uniform(-1, 1, size=(100, 2)):
        assert pool_eval(q, x) == pool_eval(p, x)


def test_anchor_tightness():
    p = add_cut(CutPool(2, 1, 0.0), Cut([0.3], 4.0, [1.0]))
    assert pool_eval(p, [0.3]) == 4.0


cuts = st.lists(st.tuples(st.floats(-1, 1), st.floats(-3, 3), st.floats(-4, 4)),
                min_size=1, max_size=12)


@given(cuts)
def test_monotone_versions_and_convexity(spec):
    rng = np.random.default_rng(len(spec))
    probes = rng.uniform(-1, 1, size=(30, 1))
    pool = CutPool(2, 1, -2.0)
    prev = np.array([pool_eval(pool, x) for x in probes])
    for k, (a, v, g) in enumerate(spec):
        pool = add_cut(pool, Cut([a], v, [g], k))
        cur = np.array([pool_eval(pool, x) for x in probes])
        assert np.all(cur >= prev)
        assert np.all(cur >= v + g * (probes[:, 0] - a) - 1e-12)
        prev = cur
    for x, y in zip(probes[:-1], probes[1:]):
        assert pool_eval(pool, (x + y) / 2) <= (pool_eval(pool, x) + pool_eval(pool, y)) / 2 + 1e-12


def test_initial_floor_examples():
    s = [StageShape(1, 0, 0, [0.0], [1.0]), StageShape(1, 0, 0, [0.0], [2.0]),
         StageShape(1, 0, 0, [-1.0], [1.0])]
    reals = [[Realization.create([1.0])],
             [Realization.create([1.0], n_prev=1), Realization.create([3.0], n_prev=1)],
             [Realization.create([2.0], n_prev=1), Realization.create([-1.0], n_prev=1)]]
    inst = Instance(3, 0.5, s, reals)
    # stage T: min over scenarios of min over [-1, 1] of c x
    assert initial_floor(inst, 3) == pytest.approx(-2.0)
    # nonnegative costs on a nonnegative box, discounted tail
    assert initial_floor(inst, 2) == pytest.approx(0.0 + 0.5 * -2.0)
    assert initial_floor(inst, 4) == 0.0
    pools = initial_pools(inst)
    assert pools[0] is None and pools[1] is None and pools[4].floor == 0.0


def test_initial_floor_rejects_unbounded_box():
    s = [StageShape(1, 0, 0, [0.0], [1.0]), StageShape(1, 0, 0, [0.0], [np.inf])]
    inst = Instance(2, 1.0, s, [[Realization.create([1.0])], [Realization.create([1.0], n_prev=1)]])
    with pytest.raises(ValueError):
        initial_floor(inst, 2)


def test_json_round_trip(tmp_path, tiny_saa):
    p = add_cut(initial_pools(tiny_saa)[2], Cut([0.25], 1.5, [-0.5], 3))
    d = pool_to_dict(p)
    assert set(d) == {"stage", "floor", "cuts"}
    assert set(d["cuts"][0]) == {"anchor", "intercept", "gradient", "born"}
    back = pool_from_dict(d)
    assert back.cuts == p.cuts or all(
        np.array_equal(a.gradient, b.gradient) and a.intercept == b.intercept
        for a, b in zip(back.cuts, p.cuts))
    pools = initial_pools(tiny_saa)[:2] + (p,) + initial_pools(tiny_saa)[3:]
    dump_pools(pools, tmp_path / "pools.json")
    loaded = load_pools(tiny_saa, tmp_path / "pools.json")
    assert pool_eval(loaded[2], [0.6]) == pool_eval(p, [0.6])


def test_empirical_gradient_bound():
    p = add_cut(add_cut(CutPool(2, 2, 0.0), Cut([0, 0], 0, [1.0, -2.0])), Cut([0, 0], 0, [0.5, 0.5]))
    assert empirical_gradient_bound(p) == 3.0
    assert empirical_gradient_bound(CutPool(2, 2, 0.0)) == 0.0


def test_cut_rejects_non_finite():
    with pytest.raises(ValueError):
        Cut([0.0], np.inf, [1.0])

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from msddp.generators import GeneratorSpec, InventorySampler, generate_instance
from msddp.model import (Instance, Realization, SolveConfig, StageShape, ToleranceSchedule,
                         build_saa, dumps_instance, epsilon_schedule, estimate_lipschitz,
                         instance_from_dict, instance_to_dict, validate_instance)


def test_valid_inventory_instance(tiny_saa):
    assert validate_instance(tiny_saa) == []


def test_wrong_B_columns_reported(tiny_saa):
    bad = tiny_saa.scenarios[1][0]
    broken = Realization(bad.A, bad.B, bad.b, bad.c, bad.G, np.zeros((bad.G.shape[0], 3)), bad.q)
    scen = [list(s) for s in tiny_saa.scenarios]
    scen[1][0] = broken
    inst = Instance(tiny_saa.T, tiny_saa.lam, tiny_saa.stages, scen)
    v = validate_instance(inst)
    assert len(v) == 1 and v[0].kind == "dimension" and v[0].stage == 2


def test_two_first_stage_scenarios_reported(tiny_saa):
    scen = [list(s) for s in tiny_saa.scenarios]
    scen[0] = scen[0] * 2
    v = validate_instance(Instance(3, 1.0, tiny_saa.stages, scen))
    assert [x.kind for x in v] == ["first-stage"]


def test_non_finite_and_discount_reported(tiny_saa):
    r = tiny_saa.scenarios[2][1]
    scen = [list(s) for s in tiny_saa.scenarios]
    scen[2][1] = Realization(r.A, r.B, r.b, np.array([np.nan]), r.G, r.Q, r.q)
    v = validate_instance(Instance(3, 1.5, tiny_saa.stages, scen))
    assert {x.kind for x in v} == {"discount", "non-finite"}


def test_epsilon_examples():
    np.testing.assert_allclose(epsilon_schedule(0.1, 1, 1, 1.0, 4), [0.6, 0.4, 0.2, 0.0])
    np.testing.assert_allclose(epsilon_schedule(0.25, 2, 2, 0.5, 3), [1.5, 1.0, 0.0])
    e = epsilon_schedule([0.3, 0.7], [2.0, 5.0], [1.0, 5.0], 0.9, 2)
    assert e[1] == 0 and e[0] == pytest.approx(3.0 * 0.3)


def test_epsilon_rejects_negative():
    with pytest.raises(ValueError):
        epsilon_schedule(-0.1, 1, 1, 1.0, 3)
    with pytest.raises(ValueError):
        epsilon_schedule(0.1, 1, 1, 0.0, 3)


@given(st.integers(2, 8), st.floats(0.05, 1.0),
       st.lists(st.floats(0, 3), min_size=8, max_size=8),
       st.lists(st.floats(0, 3), min_size=8, max_size=8),
       st.lists(st.floats(0, 1), min_size=8, max_size=8))
def test_epsilon_recursion_and_closed_form(T, lam, M, Mu, delta):
    M, Mu, delta = (np.array(v[:T]) for v in (M, Mu, delta))
    eps = epsilon_schedule(delta, M, Mu, lam, T)
    assert eps[-1] == 0
    for t in range(1, T):
        assert eps[t - 1] == pytest.approx((M[t - 1] + Mu[t - 1]) * delta[t - 1] + lam * eps[t],
                                           rel=1e-12, abs=1e-14)
    for t in range(T):
        closed = sum((M[tau] + Mu[tau]) * delta[tau] * lam ** (tau - t) for tau in range(t, T - 1))
        assert eps[t] == pytest.approx(closed, rel=1e-12, abs=1e-14)


@given(st.integers(2, 10), st.floats(0.05, 1.0), st.floats(0.01, 5), st.floats(1e-3, 1))
def test_uniform_parameter_bounds(T, lam, M, e):
    eps = epsilon_schedule(e, M, M, lam, T)
    horizon = min(1 / (1 - lam) if lam < 1 else np.inf, T - 1)
    assert eps[0] <= 2 * M * horizon * e * (1 + 1e-12)
    total = float(np.sum(lam ** np.arange(T) * eps))
    sq = min(1 / (1 - lam) ** 2 if lam < 1 else np.inf, T * (T - 1) / 2)
    assert total <= 2 * M * sq * e * (1 + 1e-12)


def test_schedule_validates_recursion():
    s = ToleranceSchedule.from_lipschitz(0.1, 1.0, T=4)
    np.testing.assert_allclose(s.eps, [0.6, 0.4, 0.2, 0.0])
    assert s.gap_threshold() == pytest.approx(1.2)
    with pytest.raises(ValueError):
        ToleranceSchedule(s.delta, s.eps + 0.1 * (s.eps > 0), s.M, s.M_under)


def test_solve_config_invariants():
    s = ToleranceSchedule.from_lipschitz(0.1, 1.0, T=3)
    for bad in ({"max_iterations": 0}, {"lp_tolerance": 0.0}, {"forward_replicas": 0}):
        with pytest.raises(ValueError):
            SolveConfig(s, **bad)


def test_build_saa_deterministic_and_distinct():
    spec = GeneratorSpec("inventory", 3, (1, 2, 2), 1, seed=7)
    a = build_saa(InventorySampler(spec), [1, 2, 2], 7)
    b = build_saa(InventorySampler(spec), [1, 2, 2], 7)
    assert dumps_instance(a) == dumps_instance(b)
    for t in (1, 2):
        r0, r1 = a.scenarios[t]
        assert not np.array_equal(r0.c, r1.c)
    single = build_saa(InventorySampler(spec), [1, 1, 1], 7)
    assert single.is_single_scenario


def test_build_saa_rejects_bad_counts_and_shapes():
    spec = GeneratorSpec("inventory", 3, (1, 2, 2), 1, seed=7)
    with pytest.raises(ValueError):
        build_saa(InventorySampler(spec), [2, 2, 2], 0)

    class Broken(InventorySampler):
        def sample(self, t, rng):
            r = super().sample(t, rng)
            return Realization.create(np.append(r.c, 1.0)) if t == 2 else r

    with pytest.raises(ValueError, match="stage 2"):
        build_saa(Broken(spec), [1, 1, 1], 0)


def test_estimate_lipschitz_examples():
    s = [StageShape(1, 0, 0, [0.0], [1.0])] * 2
    zero = Instance(2, 1.0, s, [[Realization.create([0.0])],
                                [Realization.create([0.0], n_prev=1)]])
    np.testing.assert_allclose(estimate_lipschitz(zero, 5), 0.0)
    three = Instance(2, 1.0, s, [[Realization.create([3.0])],
                                 [Realization.create([0.0], n_prev=1)]])
    assert estimate_lipschitz(three, 5)[0] >= 3.0 - 1e-9
    with pytest.raises(ValueError):
        estimate_lipschitz(three, 0)


def test_json_round_trip(tiny_saa):
    text = dumps_instance(tiny_saa)
    back = instance_from_dict(json.loads(text))
    assert dumps_instance(back) == text
    d = instance_to_dict(tiny_saa)
    assert set(d) == {"T", "lambda", "stages", "scenarios"}
    assert set(d["stages"][0]) == {"n", "m", "p", "lower", "upper"}


def test_json_without_inequalities_means_p_zero():
    d = {"T": 2, "lambda": 1.0,
         "stages": [{"n": 1, "m": 0, "lower": [0], "upper": [1]},
                    {"n": 1, "m": 1, "lower": [0], "upper": [1]}],
         "scenarios": [[{"A": [], "B": [], "b": [], "c": [1.0]}],
                       [{"A": [[1.0]], "B": [[1.0]], "b": [0.0], "c": [2.0]}]]}
    inst = instance_from_dict(d)
    assert validate_instance(inst) == []
    assert inst.stages[1].p == 0 and inst.scenarios[1][0].G.shape == (0, 1)

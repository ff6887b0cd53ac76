import numpy as np
import pytest

from msddp._passes import SaturatedSet, aggregate_cut, argmax_lowest, distance_to_saturated
from msddp.cutmodel import initial_pools, pool_eval
from msddp.ddp import ddp_solve
from msddp.eddp import capacity_bound, eddp_backward, eddp_forward, eddp_solve
from msddp.generators import GeneratorSpec, generate_instance
from msddp.model import Realization
from msddp.oracle import extensive_form_value, first_stage_objective, value_function
from msddp.subproblem import StageSolution

from conftest import make_config


def test_distance_examples():
    s = SaturatedSet(1, 0.1)
    assert distance_to_saturated(s, [0.4]) == np.inf
    s.add([0.0], 0.0, 1)
    s.add([1.0], 0.0, 1)
    assert distance_to_saturated(s, [0.4]) == pytest.approx(0.4)
    assert distance_to_saturated(s, [0.4], last_stage=True) == 0.0
    s2 = SaturatedSet(1, 0.1, [(np.array([0.0, 0.0]), 0.0, 1)])
    assert distance_to_saturated(s2, [0.3, -0.5]) == pytest.approx(0.5)


def test_argmax_ties_to_lowest():
    assert argmax_lowest([0.2, 0.5, 0.5]) == 1
    assert argmax_lowest([np.inf, np.inf]) == 0
    assert argmax_lowest([0.0, np.inf, 1.0]) == 1


def test_aggregate_cut_is_the_mean():
    real = Realization.create([1.0], n_prev=1, A=[[1.0]], B=[[1.0]], b=[0.0])
    sols = [StageSolution("optimal", np.array([0.0]), 0.0, v, np.array([-g]), np.zeros(0),
                          np.zeros(0), v) for v, g in ((1.0, 1.0), (3.0, 3.0))]
    cut = aggregate_cut(sols, [real, real], [0.5], 4)
    assert cut.intercept == 2.0 and cut.gradient.tolist() == [2.0] and cut.born == 4


def test_single_scenario_matches_ddp(tiny_det):
    cfg = make_config(tiny_det, delta=0.05)
    e = eddp_solve(tiny_det, cfg)
    d = ddp_solve(tiny_det, cfg)
    n = min(len(e.paths), len(d.paths))
    for a, b in zip(e.paths[:n], d.paths[:n]):
        for x, y in zip(a.states, b.states):
            assert np.array_equal(x, y)


def test_forward_picks_most_distant(tiny_saa):
    cfg = make_config(tiny_saa)
    pools = initial_pools(tiny_saa)
    sets = (None, SaturatedSet(1, 0.1), SaturatedSet(2, 0.1))
    path = eddp_forward(tiny_saa, pools, sets, cfg)
    assert path.distances[0] == np.inf
    for t in (2,):
        d = path.candidate_distances[t - 1]
        assert path.indices[t - 1] == argmax_lowest(d)


def test_first_iteration_appends_stage_T_minus_1(tiny_saa):
    cfg = make_config(tiny_saa)
    pools = initial_pools(tiny_saa)
    sets = (None, SaturatedSet(1, 0.1), SaturatedSet(2, 0.1))
    path = eddp_forward(tiny_saa, pools, sets, cfg)
    new_pools, new_sets, admitted = eddp_backward(tiny_saa, path, pools, sets, cfg, 1)
    assert admitted == [2]
    assert len(new_sets[2]) == 1 and len(sets[2]) == 0
    assert np.array_equal(new_sets[2].states[0], path.states[1])
    assert all(len(new_pools[t]) == 1 for t in (2, 3))


@pytest.mark.parametrize("seed", range(4))
def test_converges_within_capacity_with_quality(seed):
    inst = generate_instance(GeneratorSpec("inventory", 3, (1, 2, 2), 1, seed=seed))
    cfg = make_config(inst, delta=0.25, max_iterations=100)
    res = eddp_solve(inst, cfg)
    assert res.converged and res.iterations <= capacity_bound(inst, 0.25) + 1
    fstar, _ = extensive_form_value(inst)
    assert first_stage_objective(inst, res.x1) - fstar <= cfg.schedule.eps[0] + 1e-7
    assert res.lb <= fstar + 1e-7


@pytest.mark.parametrize("seed", range(3))
def test_saturated_members_are_saturated_and_separated(seed):
    inst = generate_instance(GeneratorSpec("inventory", 4, (1, 2, 2, 2), 2, seed=50 + seed))
    cfg = make_config(inst, delta=0.3, max_iterations=60)
    res = eddp_solve(inst, cfg)
    for t in range(1, inst.T):
        sset = res.sets[t]
        assert len(sset) <= (inst.stages[t - 1].diameter / sset.delta + 1) ** inst.stages[t - 1].n
        pts = sset.states
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                assert np.max(np.abs(pts[a] - pts[b])) > sset.delta
        for x, eps, _ in sset.points:
            gap = value_function(inst, t + 1, x) - pool_eval(res.pools[t + 1], x)
            assert gap <= eps + 1e-7


def test_capacity_bound_value(tiny_saa):
    # two stages with a unit box, delta 0.25: (1 / 0.25 + 1) per stage
    assert capacity_bound(tiny_saa, 0.25) == 10.0

import numpy as np
import pytest

from msddp.cutmodel import Cut, CutPool, add_cut
from msddp.generators import GeneratorSpec, generate_instance
from msddp.model import Instance, Realization, StageShape
from msddp.oracle import (ExactValueFunction, OracleError, SizeGuardError, audit_cut_validity,
                          exact_value_grid, extensive_form_value, first_stage_objective,
                          grid_first_stage_value, scenario_paths, value_function)
import msddp.oracle as oracle


def _two_stage(lam):
    # stage 1 picks x in [0, 1] with cost -x; stage 2 pays 2 * x via y = x
    s = [StageShape(1, 0, 0, [0.0], [1.0]), StageShape(1, 1, 0, [0.0], [1.0])]
    r = [[Realization.create([-1.0])],
         [Realization.create([2.0], n_prev=1, A=[[1.0]], B=[[1.0]], b=[0.0]),
          Realization.create([0.0], n_prev=1, A=[[1.0]], B=[[1.0]], b=[0.0])]]
    return Instance(2, lam, s, r)


def test_hand_solved_examples():
    # expected second-stage cost is x, so F = -x + lam * x
    F, x1 = extensive_form_value(_two_stage(1.0))
    assert F == pytest.approx(0.0, abs=1e-12)
    F, x1 = extensive_form_value(_two_stage(0.5))
    assert F == pytest.approx(-0.5) and x1 == pytest.approx([1.0])
    F, x1 = extensive_form_value(_two_stage(0.0))
    assert F == pytest.approx(-1.0)
    inst = _two_stage(0.5)
    assert value_function(inst, 2, [0.3]) == pytest.approx(0.3)
    assert value_function(inst, 3, [0.3]) == 0.0
    assert first_stage_objective(inst, [1.0]) == pytest.approx(-0.5)
    assert first_stage_objective(inst, [2.0]) == np.inf
    with pytest.raises(ValueError):
        value_function(inst, 1, [])


def test_scenario_paths_cover_tree(tiny_saa):
    paths = list(scenario_paths(tiny_saa))
    assert len(paths) == 4 and sum(p.probability for p in paths) == pytest.approx(1.0)


def test_grid_agrees_with_extensive_form(tiny_saa):
    F, _ = extensive_form_value(tiny_saa)
    value, bound = grid_first_stage_value(tiny_saa, 16, M=2.0)
    assert F - 1e-9 <= value <= F + bound + 1e-9


def test_grid_nodes_match_exact_values(tiny_saa):
    g = exact_value_grid(tiny_saa, 3, 8)
    assert g.error_bound == 0.0
    for x, v in zip(g.nodes, g.values):
        assert v == pytest.approx(value_function(tiny_saa, 3, x), abs=1e-9)
    g2 = exact_value_grid(tiny_saa, 2, 8, M=2.0)
    for x, v in zip(g2.nodes, g2.values):
        exact = value_function(tiny_saa, 2, x)
        assert exact - 1e-9 <= v <= exact + g2.error_bound + 1e-9


def test_bound_halves_with_resolution(tiny_saa):
    b = [exact_value_grid(tiny_saa, 2, r, M=2.0).error_bound for r in (4, 8, 16)]
    assert b[1] == pytest.approx(b[0] / 2) and b[2] == pytest.approx(b[1] / 2)


def test_audit_finds_corrupted_cut(tiny_saa):
    exact = ExactValueFunction(tiny_saa, 3)
    x = np.array([0.5])
    v = value_function(tiny_saa, 3, x)
    good = add_cut(CutPool(3, 1, -10.0), Cut(x, v, [0.0]))
    bad = add_cut(CutPool(3, 1, -10.0), Cut(x, v + 1.0, [0.0]))
    assert audit_cut_validity(good, exact, probes=[x]) == pytest.approx(0.0, abs=1e-9)
    assert audit_cut_validity(bad, exact, probes=[x]) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        audit_cut_validity(CutPool(2, 1, 0.0), exact)


def test_guards(monkeypatch, tiny_saa):
    monkeypatch.setattr(oracle, "MAX_TREE_VARIABLES", 3)
    with pytest.raises(SizeGuardError):
        extensive_form_value(tiny_saa)
    monkeypatch.undo()
    hydro = generate_instance(GeneratorSpec("hydro-toy", 2, (1, 2), 3, seed=0))
    with pytest.raises(SizeGuardError):
        exact_value_grid(hydro, 2, 4)
    with pytest.raises(ValueError):
        exact_value_grid(tiny_saa, 2, 0)


def test_infeasible_tree_raises():
    s = [StageShape(1, 0, 0, [0.0], [1.0]), StageShape(1, 1, 0, [0.0], [1.0])]
    r = [[Realization.create([1.0])],
         [Realization.create([1.0], n_prev=1, A=[[1.0]], B=[[1.0]], b=[5.0])]]
    with pytest.raises(OracleError, match="infeasible"):
        extensive_form_value(Instance(2, 1.0, s, r))

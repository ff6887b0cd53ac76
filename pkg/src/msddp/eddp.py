"""Explorative DDP: solve every scenario forward, follow the least-explored one."""
from __future__ import annotations

from typing import Callable

import numpy as np

from ._passes import (BUDGET, CONVERGED, Clock, ForwardPath, IterationEvent, SaturatedSet,
                      SolveResult, admit_saturated, argmax_lowest, backward_pass,
                      distance_to_saturated, forward_pass, initial_sets, saturation_counts,
                      start_pools)
from .model import Instance, SolveConfig
from .records import IterationRecord

__all__ = ["SaturatedSet", "distance_to_saturated", "eddp_forward", "eddp_backward",
           "eddp_solve", "capacity_bound"]


def _most_distant(t, candidates, distances):
    return candidates[argmax_lowest(distances)]


def eddp_forward(inst: Instance, pools_km1: tuple, sets_km1: tuple,
                 config: SolveConfig) -> ForwardPath:
    """Solve all N_t candidates per stage and keep the one farthest from S_t.

    ``path.distances[0]`` is g_1(x_1), the quantity tested for termination.
    """
    return forward_pass(inst, pools_km1, config, _most_distant, sets_km1, explore_all=True)


def eddp_backward(inst: Instance, path: ForwardPath, pools_km1: tuple, sets_km1: tuple,
                  config: SolveConfig, k: int = 0):
    """Aggregate cuts for stages T..2 and the saturated-set update.

    Returns (pools_k, sets_k, admitted stages).
    """
    pools, _ = backward_pass(inst, path, pools_km1, config, k)
    sets, admitted = admit_saturated(inst, path, sets_km1, config, k)
    return pools, sets, admitted


def capacity_bound(inst: Instance, delta) -> float:
    """sum over t = 1..T-1 of (D_t / delta_t + 1)^{n_t}, D_t the l-inf box diameter."""
    delta = np.broadcast_to(np.asarray(delta, float), (inst.T,))
    return float(sum((inst.stages[t].diameter / delta[t] + 1.0) ** inst.stages[t].n
                     for t in range(inst.T - 1)))


def eddp_solve(inst: Instance, config: SolveConfig, pools: tuple | None = None,
               on_iteration: Callable | None = None) -> SolveResult:
    """Run until g_1(x_1) <= delta_0 (taken equal to delta_1) or the budget ends."""
    delta0 = float(config.schedule.delta[0])
    pools = start_pools(inst, pools)
    sets = initial_sets(inst, config)
    history, paths = [], []
    clock = Clock()
    status = BUDGET
    for k in range(1, config.max_iterations + 1):
        path = eddp_forward(inst, pools, sets, config)
        rec = IterationRecord(k=k, lb=path.lb, g1=path.distances[0],
                              saturation=saturation_counts(sets),
                              indices=tuple(path.indices), states=tuple(path.states),
                              path_cost=path.cost(inst.lam))
        history.append(rec)
        paths.append(path)
        if path.distances[0] <= delta0:
            status = CONVERGED
            rec.wall_time = clock()
            if on_iteration:
                on_iteration(IterationEvent(k, [path], pools, None, sets, [], rec))
            break
        before = pools
        pools, sets, admitted = eddp_backward(inst, path, pools, sets, config, k)
        rec.q = int(bool(admitted))
        rec.wall_time = clock()
        if on_iteration:
            on_iteration(IterationEvent(k, [path], before, pools, sets, admitted, rec))
    last = paths[-1]
    return SolveResult(status, pools, history, sets, last.x1, last.lb, np.nan, paths)

"""Dual dynamic programming for single-scenario (deterministic) instances."""
from __future__ import annotations

from typing import Callable

import numpy as np

from ._passes import (BUDGET, CONVERGED, Clock, ForwardPath, IterationEvent, SolveResult,
                      admit_saturated, backward_pass, forward_pass, initial_sets,
                      saturation_counts, start_pools)
from .model import Instance, SolveConfig
from .records import IterationRecord


def _first(t, candidates, distances):
    return 0


def ddp_forward(inst: Instance, pools_km1: tuple, config: SolveConfig,
                sets: tuple | None = None) -> ForwardPath:
    """x_t in Argmin c_t x + lam * V_{t+1}^{k-1}(x) over X_t(x_{t-1}), t = 1..T."""
    return forward_pass(inst, pools_km1, config, _first, sets)


def ddp_backward(inst: Instance, path: ForwardPath, pools_km1: tuple, config: SolveConfig,
                 k: int = 0) -> tuple:
    """One cut per stage T..2 anchored at x_{t-1}; returns the k-version pools."""
    return backward_pass(inst, path, pools_km1, config, k)[0]


def ddp_solve(inst: Instance, config: SolveConfig, pools: tuple | None = None,
              on_iteration: Callable | None = None) -> SolveResult:
    """Iterate forward/backward until path cost - lb <= the schedule's gap target.

    The gap is checked right after the forward phase, so the last iteration
    adds no cuts. Saturated sets are kept as telemetry only; they never
    influence the iterates.
    """
    if not inst.is_single_scenario:
        raise ValueError("DDP needs a single-scenario instance (N_t = 1 for all t)")
    threshold = max(config.threshold(), config.lp_tolerance)
    pools = start_pools(inst, pools)
    sets = initial_sets(inst, config)
    history, paths = [], []
    ub = np.inf
    clock = Clock()
    status = BUDGET
    for k in range(1, config.max_iterations + 1):
        path = ddp_forward(inst, pools, config, sets)
        cost = path.cost(inst.lam)
        ub = min(ub, cost)
        gap = cost - path.lb
        rec = IterationRecord(k=k, lb=path.lb, ub=ub, gap=gap, g1=path.distances[0],
                              saturation=saturation_counts(sets),
                              indices=tuple(path.indices), states=tuple(path.states),
                              path_cost=cost)
        history.append(rec)
        paths.append(path)
        if gap <= threshold:
            status = CONVERGED
            rec.wall_time = clock()
            if on_iteration:
                on_iteration(IterationEvent(k, [path], pools, None, sets, [], rec))
            break
        before = pools
        pools, _ = backward_pass(inst, path, pools, config, k)
        sets, admitted = admit_saturated(inst, path, sets, config, k)
        rec.q = int(bool(admitted))
        rec.wall_time = clock()
        if on_iteration:
            on_iteration(IterationEvent(k, [path], before, pools, sets, admitted, rec))
    last = paths[-1]
    return SolveResult(status, pools, history, sets, last.x1, last.lb, ub, paths)

"""Stochastic DDP with sampled forward paths and an optional multi-replica upper bound."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._passes import (BUDGET, CONVERGED, Clock, ForwardPath, IterationEvent, SolveResult,
                      admit_saturated, backward_pass, forward_pass, initial_sets,
                      merge_cut_batches, pmap, saturation_counts, start_pools)
from .model import Instance, SolveConfig
from .records import IterationRecord

STOP_MODES = ("distance", "statistical", "budget")


class SelectionStream:
    """Reproducible scenario indices i_t^k, one independent sub-stream per (k, replica).

    Index draws for iteration k and replica r come from
    ``SeedSequence(seed, spawn_key=(k, r))``, so the result does not depend on
    the order in which replicas are processed. Stage 1 always gets index 0.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def indices(self, k: int, counts, replica: int = 0) -> list:
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(k, replica)))
        return [0] + [int(rng.integers(N)) for N in counts[1:]]


@dataclass(frozen=True)
class UpperBoundEstimate:
    replicas: np.ndarray
    mean: float
    sample_std: float
    paths: tuple

    @property
    def L(self) -> int:
        return self.replicas.size


def sddp_forward(inst: Instance, pools_km1: tuple, stream: SelectionStream,
                 config: SolveConfig, k: int = 1, replica: int = 0, sets: tuple | None = None,
                 audit: bool = False) -> ForwardPath:
    """One sampled forward path.

    In audit mode all N_t candidates are solved as well, purely to record
    their distances to the saturated sets; the path itself is unchanged.
    """
    idx = stream.indices(k, inst.counts, replica)

    def choose(t, candidates, distances):
        return idx[t - 1]

    return forward_pass(inst, pools_km1, config, choose, sets, explore_all=audit)


def sddp_backward(inst: Instance, path: ForwardPath, pools_km1: tuple, config: SolveConfig,
                  k: int = 0) -> tuple:
    return backward_pass(inst, path, pools_km1, config, k)[0]


def estimate_upper_bound(inst: Instance, pools_km1: tuple, stream: SelectionStream, L: int,
                         config: SolveConfig, k: int = 1, sets=None,
                         audit: bool = False) -> UpperBoundEstimate:
    """L independent forward paths; mean and sample std of their discounted costs."""
    if L < 1:
        raise ValueError("L must be >= 1")
    paths = pmap(lambda r: sddp_forward(inst, pools_km1, stream, config, k, r, sets,
                                        audit and r == 0),
                 range(L), config.threads)
    costs = np.array([p.cost(inst.lam) for p in paths])
    std = float(np.std(costs, ddof=1)) if L > 1 else 0.0
    return UpperBoundEstimate(costs, float(np.mean(costs)), std, tuple(paths))


def enumerate_policy_cost(inst: Instance, pools: tuple, config: SolveConfig) -> float:
    """Exact expected cost of the policy induced by ``pools`` over the whole tree."""
    from .subproblem import solve_stage

    def go(t, chi):
        if t > inst.T:
            return 0.0
        shape = inst.stages[t - 1]
        total = 0.0
        for i, real in enumerate(inst.scenarios[t - 1]):
            sol = solve_stage(shape, real, chi, pools[t + 1], inst.lam, config.lp_tolerance,
                              stage=t, scenario=i)
            total += float(real.c @ sol.x) + inst.lam * go(t + 1, sol.x)
        return total / len(inst.scenarios[t - 1])

    return go(1, np.zeros(0))


def average_distances(inst: Instance, path: ForwardPath) -> tuple:
    """g-bar_t = mean over candidates of their distance to S_t, t = 1..T-1."""
    return tuple(float(np.mean(path.candidate_distances[t])) for t in range(inst.T - 1))


def sddp_solve(inst: Instance, config: SolveConfig, stop: str = "statistical",
               audit: bool = False, z: float = 1.96, pools: tuple | None = None,
               on_iteration: Callable | None = None) -> SolveResult:
    """Sampled-path DDP with one of three stopping rules.

    distance
        stop once every stage has g-bar_t <= delta_t; implies ``audit``.
    statistical
        stop once ub_mean + z * std / sqrt(L) - lb <= the gap target.
    budget
        always run ``config.max_iterations`` iterations.

    Each of the L replicas runs its backward pass from the k-1 models and
    the cut batches are merged in replica order. Saturation bookkeeping
    follows replica 0.
    """
    if stop not in STOP_MODES:
        raise ValueError(f"stop must be one of {STOP_MODES}")
    audit = audit or stop == "distance"
    L = config.forward_replicas
    threshold = max(config.threshold(), config.lp_tolerance)
    delta = config.schedule.delta
    stream = SelectionStream(config.seed)
    pools = start_pools(inst, pools)
    sets = initial_sets(inst, config)
    history, paths = [], []
    clock = Clock()
    status = BUDGET
    for k in range(1, config.max_iterations + 1):
        est = estimate_upper_bound(inst, pools, stream, L, config, k, sets, audit)
        path = est.paths[0]
        lb = path.lb
        gbar = average_distances(inst, path) if audit else None
        rec = IterationRecord(k=k, lb=lb, ub=est.mean, ub_mean=est.mean, ub_std=est.sample_std,
                              gap=est.mean - lb, g1=path.distances[0],
                              saturation=saturation_counts(sets), indices=tuple(path.indices),
                              states=tuple(path.states), gbar=gbar,
                              path_cost=float(est.replicas[0]))
        history.append(rec)
        paths.append(path)
        if stop == "distance":
            done = all(g <= delta[t] for t, g in enumerate(gbar))
        elif stop == "statistical":
            done = est.mean + z * est.sample_std / np.sqrt(L) - lb <= threshold
        else:
            done = False
        if done:
            status = CONVERGED
            rec.q = 0
            rec.wall_time = clock()
            if on_iteration:
                on_iteration(IterationEvent(k, list(est.paths), pools, None, sets, [], rec))
            break
        before = pools
        updated = pmap(lambda p: backward_pass(inst, p, before, config, k)[0], est.paths,
                       config.threads)
        pools = merge_cut_batches(before, updated)
        sets, admitted = admit_saturated(inst, path, sets, config, k)
        rec.q = int(bool(admitted))
        rec.wall_time = clock()
        if on_iteration:
            on_iteration(IterationEvent(k, list(est.paths), before, pools, sets, admitted, rec))
    last = paths[-1]
    return SolveResult(status, pools, history, sets, last.x1, last.lb,
                       history[-1].ub_mean, paths)

"""Forward and backward passes shared by the DDP, EDDP and SDDP drivers.

Keeping one implementation is what makes the N_t = 1 reductions between the
three methods exact rather than approximate.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cutmodel import Cut, add_cut, initial_pools, replace_pool
from .model import Instance, SolveConfig
from .subproblem import StageSolution, solve_stage, value_gradient

CONVERGED = "converged"
BUDGET = "budget"


def pmap(fn, items, threads: int = 1) -> list:
    """Ordered map, optionally on a thread pool; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# --- saturated sets ---------------------------------------------------------

@dataclass
class SaturatedSet:
    """States of stage t already known to be eps_t-saturated.

    Members are pairwise more than ``delta`` apart in l-inf.
    """
    stage: int
    delta: float
    points: list = field(default_factory=list)  # (state, eps, iteration)

    def __len__(self):
        return len(self.points)

    @property
    def states(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    def copy(self) -> "SaturatedSet":
        return SaturatedSet(self.stage, self.delta, list(self.points))

    def add(self, x, eps: float, k: int) -> None:
        self.points.append((np.asarray(x, float).copy(), float(eps), int(k)))


def distance_to_saturated(sset: SaturatedSet | None, x, last_stage: bool = False) -> float:
    """min over members of ||s - x||_inf; +inf if empty; 0 at the last stage."""
    if last_stage or sset is None:
        return 0.0
    if not sset.points:
        return np.inf
    diff = np.abs(sset.states - np.asarray(x, float)[None, :])
    return float(diff.max(axis=1).min())


def initial_sets(inst: Instance, config: SolveConfig) -> tuple:
    """S_1 .. S_{T-1}, indexed by stage (slot 0 unused)."""
    delta = config.schedule.delta
    return (None,) + tuple(SaturatedSet(t, float(delta[t - 1])) for t in range(1, inst.T))


def stage_distance(inst: Instance, sets: tuple, t: int, x) -> float:
    return distance_to_saturated(sets[t] if t < inst.T else None, x, last_stage=(t == inst.T))


# --- forward ----------------------------------------------------------------

@dataclass
class ForwardPath:
    states: list            # x_1 .. x_T
    indices: list           # chosen scenario per stage (0-based)
    stage_costs: list       # c_{t,i_t} @ x_t
    model_values: list      # optimal value of each chosen stage problem
    distances: list = field(default_factory=list)  # g_t(x_t), t = 1..T
    candidates: list = field(default_factory=list)  # per stage: list of x~_ti (when solved)
    candidate_distances: list = field(default_factory=list)

    def cost(self, lam: float) -> float:
        return float(sum(lam ** t * h for t, h in enumerate(self.stage_costs)))

    @property
    def lb(self) -> float:
        """First-stage model value, a lower bound on F*."""
        return self.model_values[0]

    @property
    def x1(self) -> np.ndarray:
        return self.states[0]


def solve_candidates(inst, t, chi, pools, config, scenarios) -> list:
    shape = inst.stages[t - 1]
    reals = inst.scenarios[t - 1]
    return pmap(lambda i: solve_stage(shape, reals[i], chi, pools[t + 1], inst.lam,
                                      config.lp_tolerance, stage=t, scenario=i),
                scenarios, config.threads)


def forward_pass(inst: Instance, pools: tuple, config: SolveConfig, choose: Callable,
                 sets: tuple | None = None, explore_all: bool = False) -> ForwardPath:
    """Generic forward phase against the k-1 models ``pools``.

    ``choose(t, candidate_indices, distances)`` picks the scenario index at
    stage t. With ``explore_all`` every scenario is solved and its distance
    to the saturated set recorded; otherwise ``choose`` is called with
    ``candidate_indices=None`` and only the chosen scenario is solved.
    """
    path = ForwardPath([], [], [], [])
    chi = np.zeros(0)
    for t in range(1, inst.T + 1):
        N = inst.counts[t - 1]
        if explore_all:
            sols = solve_candidates(inst, t, chi, pools, config, range(N))
            dists = [stage_distance(inst, sets, t, s.x) if sets is not None else 0.0 for s in sols]
            i = choose(t, list(range(N)), dists)
            sol = sols[i]
            path.candidates.append([s.x for s in sols])
            path.candidate_distances.append(dists)
            dist = dists[i]
        else:
            i = choose(t, None, None)
            sol = solve_candidates(inst, t, chi, pools, config, [i])[0]
            dist = stage_distance(inst, sets, t, sol.x) if sets is not None else 0.0
        real = inst.scenarios[t - 1][i]
        path.states.append(sol.x)
        path.indices.append(i)
        path.stage_costs.append(float(real.c @ sol.x))
        path.model_values.append(sol.value)
        path.distances.append(dist)
        chi = sol.x
    return path


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the maximum, ties to the lowest index (inf counts as maximal)."""
    best, arg = -np.inf, 0
    for i, v in enumerate(values):
        if v > best:
            best, arg = v, i
    return arg


# --- backward ---------------------------------------------------------------

def aggregate_cut(solutions: Sequence[StageSolution], reals, chi, born: int) -> Cut:
    """Average value and gradient over the N_t scenario solutions at chi."""
    values = np.array([s.value for s in solutions])
    grads = np.array([value_gradient(s, r) for s, r in zip(solutions, reals)])
    return Cut(np.asarray(chi, float), float(np.mean(values)), grads.mean(axis=0), born)


def backward_pass(inst: Instance, path: ForwardPath, pools: tuple, config: SolveConfig,
                  k: int):
    """Add one aggregate cut per stage T..2 at the forward states.

    Stage t uses the already-updated model of stage t+1. Returns the new pools
    and the averaged values (1/N_t) sum_i nu_ti(x_{t-1}) keyed by stage.
    """
    values = {}
    for t in range(inst.T, 1, -1):
        chi = path.states[t - 2]
        reals = inst.scenarios[t - 1]
        sols = solve_candidates(inst, t, chi, pools, config, range(len(reals)))
        cut = aggregate_cut(sols, reals, chi, k)
        values[t] = cut.intercept
        pools = replace_pool(pools, t, add_cut(pools[t], cut))
    return pools, values


def merge_cut_batches(base: tuple, updated: Sequence[tuple]) -> tuple:
    """Append, in replica order, the cuts each replica added on top of ``base``."""
    pools = base
    for upd in updated:
        for t in range(2, len(base)):
            for cut in upd[t].cuts[len(base[t].cuts):]:
                pools = replace_pool(pools, t, add_cut(pools[t], cut))
    return pools


def admit_saturated(inst: Instance, path: ForwardPath, sets: tuple, config: SolveConfig,
                    k: int) -> tuple:
    """Saturation bookkeeping after a backward pass.

    x_{t-1} joins S_{t-1} when the next state was close to S_t (g_t(x_t) <=
    delta_t, always true at t = T) and x_{t-1} was itself distinguishable
    (g_{t-1}(x_{t-1}) > delta_{t-1}). The second condition is what keeps the
    members of each set separated. Returns the new sets and admitted stages.
    """
    delta, eps = config.schedule.delta, config.schedule.eps
    new = tuple(None if s is None else s.copy() for s in sets)
    admitted = []
    for t in range(inst.T, 1, -1):
        close = t == inst.T or path.distances[t - 1] <= delta[t - 1]
        fresh = path.distances[t - 2] > delta[t - 2]
        if close and fresh:
            new[t - 1].add(path.states[t - 2], eps[t - 2], k)
            admitted.append(t - 1)
    return new, admitted


@dataclass
class IterationEvent:
    """Passed to ``on_iteration`` callbacks after each iteration."""
    k: int
    paths: list
    pools_before: tuple
    pools_after: tuple | None    # None when the iteration stopped before backward
    sets: tuple | None
    admitted: list
    record: object


@dataclass
class SolveResult:
    status: str
    pools: tuple
    history: list
    sets: tuple | None
    x1: np.ndarray
    lb: float
    ub: float
    paths: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def saturation_counts(sets) -> tuple:
    if sets is None:
        return ()
    return tuple(len(s) for s in sets[1:])


class Clock:
    def __init__(self):
        self.t0 = time.perf_counter()

    def __call__(self) -> float:
        return time.perf_counter() - self.t0


def start_pools(inst: Instance, pools=None) -> tuple:
    return initial_pools(inst) if pools is None else pools

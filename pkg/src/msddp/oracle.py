"""Brute-force ground truth for small SAA instances.

Two independent routes are provided:

* the extensive form, one LP over every node of the scenario tree, solved
  with HiGHS (scipy); this gives F*, exact V_t(chi) and F_11(x_1);
* a backward grid recursion for states of dimension <= 2, where the
  continuation is the convex-combination (lambda) envelope of node values.

Neither route uses the package's own simplex, so agreement with the solvers
is a genuine cross-check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .cutmodel import CutPool, pool_eval
from .model import Instance

MAX_TREE_VARIABLES = 100_000
MAX_GRID_DIM = 2


class OracleError(RuntimeError):
    pass


class SizeGuardError(OracleError):
    pass


@dataclass(frozen=True)
class ScenarioTreePath:
    indices: tuple  # (i_2, ..., i_T), 0-based
    probability: float


def scenario_paths(inst: Instance) -> Iterator[ScenarioTreePath]:
    """All root-to-leaf paths of the SAA tree with their equal weights."""
    counts = inst.counts[1:]
    prob = 1.0 / float(np.prod(counts))
    for idx in itertools.product(*(range(N) for N in counts)):
        yield ScenarioTreePath(tuple(idx), prob)


def _highs(c, A_ub, b_ub, A_eq, b_eq, bounds, tol):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds",
                  options={"primal_feasibility_tolerance": tol,
                           "dual_feasibility_tolerance": tol})
    if res.status == 2:
        raise OracleError("oracle LP infeasible (recourse violated somewhere in the tree)")
    if res.status != 0:
        raise OracleError(f"oracle LP failed: {res.message}")
    return res


def _tree_lp(inst: Instance, start: int, chi, tol):
    """Deterministic equivalent of stages start..T with fixed incoming state chi."""
    T, lam = inst.T, inst.lam
    counts = inst.counts
    # nodes per level, each node = (stage, scenario, parent index or -1, prob)
    levels = []
    prev = [(-1, 1.0)]
    for t in range(start, T + 1):
        N = counts[t - 1]
        level = [(parent, pprob / N, i) for parent, (_, pprob) in enumerate(prev) for i in range(N)]
        levels.append(level)
        prev = [(i, pr) for _, pr, i in level]
    nvar = sum(len(lv) * inst.stages[start + d - 1].n for d, lv in enumerate(levels))
    if nvar > MAX_TREE_VARIABLES:
        raise SizeGuardError(f"extensive form needs {nvar} variables > {MAX_TREE_VARIABLES}")

    cost = np.zeros(nvar)
    lo, hi = np.zeros(nvar), np.zeros(nvar)
    eq_rows, eq_cols, eq_vals, eq_rhs = [], [], [], []
    ub_rows, ub_cols, ub_vals, ub_rhs = [], [], [], []
    chi = np.zeros(0) if chi is None else np.asarray(chi, float)
    offset, prev_offsets = 0, None
    for d, level in enumerate(levels):
        t = start + d
        shape = inst.stages[t - 1]
        n = shape.n
        n_prev = inst.n_prev(t)
        offsets = []
        for parent, prob, i in level:
            r = inst.scenarios[t - 1][i]
            cols = np.arange(offset, offset + n)
            cost[cols] = lam ** d * prob * r.c
            lo[cols], hi[cols] = shape.lower, shape.upper
            pcols = None if d == 0 else np.arange(prev_offsets[parent], prev_offsets[parent] + n_prev)
            for rows, cols_, vals, rhs, M, L, const in (
                    (eq_rows, eq_cols, eq_vals, eq_rhs, r.A, r.B, r.b),
                    (ub_rows, ub_cols, ub_vals, ub_rhs, r.G, r.Q, r.q)):
                for j in range(M.shape[0]):
                    row = len(rhs)
                    nz = np.flatnonzero(M[j])
                    rows += [row] * nz.size
                    cols_ += (cols[nz]).tolist()
                    vals += M[j, nz].tolist()
                    if d == 0:
                        rhs.append(float(L[j] @ chi + const[j]) if n_prev else float(const[j]))
                    else:
                        lz = np.flatnonzero(L[j])
                        rows += [row] * lz.size
                        cols_ += pcols[lz].tolist()
                        vals += (-L[j, lz]).tolist()
                        rhs.append(float(const[j]))
            offsets.append(offset)
            offset += n
        prev_offsets = offsets
    A_eq = sp.csr_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(eq_rhs), nvar)) if eq_rhs else None
    A_ub = sp.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(ub_rhs), nvar)) if ub_rhs else None
    res = _highs(cost, A_ub, ub_rhs or None, A_eq, eq_rhs or None, np.column_stack([lo, hi]), tol)
    return float(res.fun), res.x


def extensive_form_value(inst: Instance, tol: float = 1e-9):
    """Return (F*, x_1*) for the whole SAA problem."""
    value, x = _tree_lp(inst, 1, None, tol)
    return value, x[:inst.stages[0].n].copy()


def value_function(inst: Instance, t: int, chi, tol: float = 1e-9) -> float:
    """Exact V_t(chi) for t = 2..T+1 (V_{T+1} = 0)."""
    if t == inst.T + 1:
        return 0.0
    if not 2 <= t <= inst.T:
        raise ValueError(f"no value function at stage {t}")
    return _tree_lp(inst, t, chi, tol)[0]


def first_stage_objective(inst: Instance, x1, tol: float = 1e-9) -> float:
    """F_11(x_1) = c_1 @ x_1 + lam * V_2(x_1), +inf if x_1 violates stage-1 rows."""
    x1 = np.asarray(x1, float)
    r, shape = inst.scenarios[0][0], inst.stages[0]
    viol = max(np.max(np.abs(r.A @ x1 - r.b), initial=0.0),
               np.max(r.G @ x1 - r.q, initial=0.0),
               np.max(shape.lower - x1, initial=0.0), np.max(x1 - shape.upper, initial=0.0))
    if viol > 1e-7:
        return np.inf
    return float(r.c @ x1) + inst.lam * value_function(inst, 2, x1, tol)


# --- grid recursion ---------------------------------------------------------

def _lattice(lower, upper, res):
    axes = [np.linspace(lo, hi, res + 1) for lo, hi in zip(lower, upper)]
    return np.array(list(itertools.product(*axes)), dtype=float)


@dataclass(frozen=True)
class GridValueFunction:
    """V_t on a lattice over the stage t-1 box.

    ``values`` over-estimate V_t at the nodes by at most ``error_bound``
    (0 at t = T). ``resolution`` is the number of intervals per axis.
    """
    inst: Instance
    stage: int
    resolution: int
    nodes: np.ndarray
    values: np.ndarray
    error_bound: float
    step: float
    next: "GridValueFunction | None"
    lipschitz: float

    def evaluate(self, chi, tol: float = 1e-9) -> float:
        """V_t at an arbitrary state via one stage LP over the next grid."""
        return _stage_value(self.inst, self.stage, chi, self.next, tol)

    def interpolate(self, chi, tol: float = 1e-9) -> float:
        """Convex-combination envelope of the node values at chi."""
        return _envelope(self.nodes, self.values, chi, tol)


def _envelope(nodes, values, x, tol):
    G = nodes.shape[0]
    A_eq = np.vstack([nodes.T, np.ones((1, G))])
    b_eq = np.append(np.asarray(x, float), 1.0)
    return float(_highs(values, None, None, A_eq, b_eq, (0, None), tol).fun)


def _stage_value(inst, t, chi, cont: "GridValueFunction | None", tol):
    """(1/N_t) sum_i min c x + lam * envelope_{t+1}(x) over X_t(chi, xi_ti)."""
    shape = inst.stages[t - 1]
    n = shape.n
    chi = np.asarray(chi, float)
    total = 0.0
    G = 0 if cont is None else cont.nodes.shape[0]
    for r in inst.scenarios[t - 1]:
        c = np.concatenate([r.c, inst.lam * cont.values if G else []])
        A_eq = [np.hstack([r.A, np.zeros((r.A.shape[0], G))])]
        b_eq = [r.B @ chi + r.b]
        if G:
            A_eq.append(np.hstack([np.eye(n), -cont.nodes.T]))
            b_eq.append(np.zeros(n))
            A_eq.append(np.concatenate([np.zeros(n), np.ones(G)])[None, :])
            b_eq.append([1.0])
        A_eq, b_eq = np.vstack(A_eq), np.concatenate(b_eq)
        A_ub = np.hstack([r.G, np.zeros((r.G.shape[0], G))]) if r.G.shape[0] else None
        b_ub = r.Q @ chi + r.q if r.G.shape[0] else None
        bounds = list(zip(shape.lower, shape.upper)) + [(0, None)] * G
        res = _highs(c, A_ub, b_ub, A_eq if A_eq.shape[0] else None,
                     b_eq if A_eq.shape[0] else None, bounds, tol)
        total += res.fun
    return total / len(inst.scenarios[t - 1])


def exact_value_grid(inst: Instance, t: int, resolution: int, M=None,
                     tol: float = 1e-9) -> GridValueFunction:
    """Grid model of V_t built by backward recursion from V_{T+1} = 0.

    ``M`` gives Lipschitz bounds used for the reported error: a scalar or a
    per-stage sequence (entry tau-1 bounds V_tau). When omitted, the largest
    difference quotient between lattice neighbours of each grid is used, which
    is an estimate rather than a bound.
    """
    if not 2 <= t <= inst.T:
        raise ValueError(f"no value function at stage {t}")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    for tau in range(t - 1, inst.T):
        if inst.stages[tau - 1].n > MAX_GRID_DIM:
            raise SizeGuardError(f"grid oracle supports state dimension <= {MAX_GRID_DIM}, "
                                 f"stage {tau} has {inst.stages[tau - 1].n}")
    grid = None
    for tau in range(inst.T, t - 1, -1):
        box = inst.stages[tau - 2]
        nodes = _lattice(box.lower, box.upper, resolution)
        values = np.array([_stage_value(inst, tau, x, grid, tol) for x in nodes])
        step = box.diameter / resolution
        if grid is None:
            bound = 0.0
        else:
            L = _lipschitz_for(M, tau + 1, grid)
            bound = inst.lam * (L * grid.step + grid.error_bound)
        own_L = _lipschitz_for(M, tau, None, nodes, values)
        grid = GridValueFunction(inst, tau, resolution, nodes, values, bound, step, grid, own_L)
    return grid


def _lipschitz_for(M, tau, grid, nodes=None, values=None):
    if M is not None:
        return float(np.ravel(M)[tau - 1]) if np.ndim(M) else float(M)
    if grid is not None:
        return grid.lipschitz
    best = 0.0
    for a in range(len(nodes)):
        d = np.max(np.abs(nodes[a + 1:] - nodes[a]), axis=1)
        ok = d > 0
        if np.any(ok):
            best = max(best, float(np.max(np.abs(values[a + 1:][ok] - values[a]) / d[ok])))
    return best


def grid_first_stage_value(inst: Instance, resolution: int, M=None, tol: float = 1e-9):
    """First-stage value with the grid model of V_2 as continuation; >= F*."""
    g2 = exact_value_grid(inst, 2, resolution, M, tol)
    value = _stage_value(inst, 1, np.zeros(0), g2, tol)
    bound = inst.lam * (g2.lipschitz * g2.step + g2.error_bound)
    return value, bound


@dataclass(frozen=True)
class ExactValueFunction:
    """V_t through the extensive form; interchangeable with a grid in audits."""
    inst: Instance
    stage: int
    error_bound: float = 0.0

    def evaluate(self, chi, tol: float = 1e-9) -> float:
        return value_function(self.inst, self.stage, chi, tol)


def audit_cut_validity(pool: CutPool, gvf: "GridValueFunction | ExactValueFunction", probes=100, seed: int = 0,
                       tol: float = 1e-9) -> float:
    """max over probe states of pool_eval(x) - V_t(x); <= 0 for a valid model.

    ``probes`` is either a count (uniform draws in the stage t-1 box) or an
    array of states. V_t is taken from ``gvf.evaluate``, which over-estimates
    it by at most ``gvf.error_bound`` (exact at t = T).
    """
    if pool.stage != gvf.stage:
        raise ValueError(f"pool is for stage {pool.stage}, grid for stage {gvf.stage}")
    if np.ndim(probes) == 0:
        box = gvf.inst.stages[gvf.stage - 2]
        pts = np.random.default_rng(seed).uniform(box.lower, box.upper,
                                                  size=(int(probes), box.n))
    else:
        pts = np.atleast_2d(np.asarray(probes, float))
    return max(pool_eval(pool, x) - gvf.evaluate(x, tol) for x in pts)

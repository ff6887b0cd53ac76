"""Dense two-phase simplex with Bland's anti-cycling rule.

This is the reference engine behind every stage subproblem. It is meant for
desk-scale problems (tens of columns, up to a few hundred rows) where exact
basic solutions and dual multipliers matter more than speed.

The problem solved is::

    min  c @ z
    s.t. A_ub @ z <= b_ub
         A_eq @ z == b_eq
         lower <= z <= upper

Dual multipliers are reported as right-hand-side sensitivities: ``eq_duals[i]``
is d(value)/d(b_eq[i]) and ``ub_duals[i]`` is d(value)/d(b_ub[i]) (so
``ub_duals <= 0`` at an optimum).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpResult:
    status: str
    x: np.ndarray | None
    value: float
    eq_duals: np.ndarray
    ub_duals: np.ndarray
    dual_value: float
    iterations: int


class _Tableau:
    """Full simplex tableau over the standard-form columns plus artificials."""

    def __init__(self, M, rhs, basis, tol):
        self.T = M.copy()
        self.rhs = rhs.copy()
        self.basis = list(basis)
        self.tol = tol
        self.iterations = 0

    def pivot(self, r, e):
        T, rhs = self.T, self.rhs
        piv = T[r, e]
        T[r] /= piv
        rhs[r] /= piv
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        rhs -= col * rhs[r]
        T[:, e] = 0.0
        T[r, e] = 1.0
        self.basis[r] = e
        self.iterations += 1

    def run(self, cost, allowed, max_iter):
        """Bland's rule: lowest-index improving column, lowest-index leaving var."""
        tol = self.tol
        while True:
            if self.iterations >= max_iter:
                raise RuntimeError("simplex iteration limit reached")
            cb = cost[self.basis]
            reduced = cost - cb @ self.T
            candidates = np.flatnonzero((reduced < -tol) & allowed)
            if candidates.size == 0:
                return OPTIMAL
            e = int(candidates[0])
            col = self.T[:, e]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                return UNBOUNDED
            ratios = self.rhs[rows] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, e)


def _column_map(lower, upper):
    """Express z = offset + S @ w with w >= 0; returns (S, offset, bound_rows).

    bound_rows lists (w column, width) pairs for finite two-sided bounds.
    """
    n = lower.size
    cols = []
    offset = np.zeros(n)
    bound_rows = []
    for j in range(n):
        lo, hi = lower[j], upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    S = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        S[j, k] = s
    return S, offset, bound_rows


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lower=None,
             upper=None, tol=1e-9, max_iter=50_000) -> LpResult:
    """Solve a small LP exactly (up to floating point) by two-phase simplex.

    Pivoting is deterministic, so identical inputs always return identical
    results.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float).ravel()
    lower = np.zeros(n) if lower is None else np.asarray(lower, float).ravel()
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, float).ravel()
    if np.any(lower > upper):
        return _failure(INFEASIBLE, A_eq.shape[0], A_ub.shape[0])

    S, offset, bound_rows = _column_map(lower, upper)
    nw = S.shape[1]
    me, mu, mb = A_eq.shape[0], A_ub.shape[0], len(bound_rows)
    m = me + mu + mb
    n_slack = mu + mb

    # standard form rows: [eq; ub; bounds] over columns [w, slacks]
    A = np.zeros((m, nw + n_slack))
    rhs = np.zeros(m)
    A[:me, :nw] = A_eq @ S
    rhs[:me] = b_eq - A_eq @ offset
    A[me:me + mu, :nw] = A_ub @ S
    rhs[me:me + mu] = b_ub - A_ub @ offset
    for k, (col, width) in enumerate(bound_rows):
        A[me + mu + k, col] = 1.0
        rhs[me + mu + k] = width
    A[me:, nw:] = np.eye(n_slack)
    cost = np.concatenate([c @ S, np.zeros(n_slack)])
    const = float(c @ offset)

    sign = np.where(rhs < 0, -1.0, 1.0)
    A *= sign[:, None]
    rhs *= sign

    # initial basis: slack where it enters with +1, artificial otherwise
    n_struct = A.shape[1]
    needs_art = [i for i in range(m) if i < me or sign[i] < 0]
    n_art = len(needs_art)
    M = np.zeros((m, n_struct + n_art))
    M[:, :n_struct] = A
    basis = [0] * m
    for i in range(me, m):
        basis[i] = nw + (i - me)
    for k, i in enumerate(needs_art):
        M[i, n_struct + k] = 1.0
        basis[i] = n_struct + k

    tab = _Tableau(M, rhs, basis, tol)
    allowed = np.ones(n_struct + n_art, dtype=bool)
    if n_art:
        phase1 = np.zeros(n_struct + n_art)
        phase1[n_struct:] = 1.0
        tab.run(phase1, allowed, max_iter)
        infeas = float(phase1[tab.basis] @ tab.rhs)
        if infeas > 10 * tol * (1.0 + np.abs(rhs).max(initial=0.0)):
            return _failure(INFEASIBLE, me, mu, tab.iterations)
        # drive zero-level artificials out where a structural pivot exists
        for r in range(m):
            if tab.basis[r] >= n_struct:
                row = tab.T[r, :n_struct]
                cand = np.flatnonzero(np.abs(row) > tol)
                if cand.size:
                    tab.pivot(r, int(cand[0]))
        allowed[n_struct:] = False

    full_cost = np.concatenate([cost, np.zeros(n_art)])
    status = tab.run(full_cost, allowed, max_iter)
    if status == UNBOUNDED:
        return _failure(UNBOUNDED, me, mu, tab.iterations)

    # refine primal and duals from the final basis
    B = M[:, tab.basis]
    xb = np.linalg.solve(B, rhs)
    xb[np.abs(xb) < 1e-13] = 0.0
    pi = np.linalg.solve(B.T, full_cost[tab.basis])
    w_all = np.zeros(n_struct + n_art)
    w_all[tab.basis] = xb
    w = np.maximum(w_all[:nw], 0.0)
    z = offset + S @ w
    value = float(c @ z)
    sens = pi * sign
    return LpResult(
        status=OPTIMAL,
        x=z,
        value=value,
        eq_duals=sens[:me].copy(),
        ub_duals=sens[me:me + mu].copy(),
        dual_value=const + float(pi @ rhs),
        iterations=tab.iterations,
    )


def _failure(status, me, mu, iterations=0):
    return LpResult(status, None, np.nan, np.full(me, np.nan), np.full(mu, np.nan),
                    np.nan, iterations)

"""One stage subproblem as an LP with an epigraph variable for the cut model.

Variables are ``(x, theta)``; the problem is::

    min  c @ x + lam * theta
    s.t. A x  = B chi + b          (duals y)
         G x <= Q chi + q          (duals mu >= 0)
         g_j @ x - theta <= -h_j   (one row per cut, duals cut_duals >= 0)
         lower <= x <= upper,  theta >= floor

The value is convex in ``chi`` and ``-(B.T y + Q.T mu)`` is a subgradient,
with y and mu the multipliers of the Lagrangian written with ``+y(Ax - Bchi - b)``.

Any callable with the signature of :func:`msddp.lp.solve_lp` can be passed as
``solver`` to swap the LP engine.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutmodel import Cut, CutPool
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from .model import Realization, StageShape


class RecourseViolation(RuntimeError):
    """A stage subproblem is infeasible at a reachable incoming state."""

    def __init__(self, stage, scenario, chi):
        self.stage, self.scenario = stage, scenario
        self.chi = None if chi is None else np.asarray(chi, float).copy()
        super().__init__(f"stage {stage} scenario {scenario} infeasible at incoming state "
                         f"{np.round(self.chi, 12).tolist() if self.chi is not None else None}")


class UnboundedStage(RuntimeError):
    """Stage LP unbounded: the box or the theta floor is missing."""


@dataclass(frozen=True)
class StageSolution:
    status: str
    x: np.ndarray | None
    theta: float
    value: float
    y: np.ndarray
    mu: np.ndarray
    cut_duals: np.ndarray
    dual_value: float

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def solve_stage(shape: StageShape, real: Realization, chi, pool: CutPool, lam: float,
                tol: float = 1e-8, *, stage=None, scenario=None, raise_on_failure=True,
                solver=solve_lp) -> StageSolution:
    """Solve the stage LP at incoming state ``chi`` against the cut model ``pool``.

    Raises RecourseViolation or UnboundedStage unless ``raise_on_failure`` is
    false, in which case the failing status is returned.
    """
    chi = np.zeros(0) if chi is None else np.asarray(chi, float).ravel()
    n = shape.n
    if real.B.shape[1] != chi.size or real.Q.shape[1] != chi.size:
        raise ValueError(f"incoming state has length {chi.size}, linking blocks expect "
                         f"{real.B.shape[1]}")
    if pool.n != n:
        raise ValueError(f"continuation pool has dimension {pool.n}, stage has {n}")
    m, p, k = real.A.shape[0], real.G.shape[0], len(pool)

    c = np.append(real.c, lam)
    A_eq = np.hstack([real.A, np.zeros((m, 1))])
    b_eq = real.B @ chi + real.b
    A_ub = np.zeros((p + k, n + 1))
    b_ub = np.empty(p + k)
    A_ub[:p, :n] = real.G
    b_ub[:p] = real.Q @ chi + real.q
    if k:
        A_ub[p:, :n] = pool.slopes
        A_ub[p:, n] = -1.0
        b_ub[p:] = -pool.offsets
    lower = np.append(shape.lower, pool.floor)
    upper = np.append(shape.upper, np.inf)

    res = solver(c, A_ub, b_ub, A_eq, b_eq, lower, upper, tol=tol / 10)
    if res.status != OPTIMAL:
        if raise_on_failure:
            if res.status == INFEASIBLE:
                raise RecourseViolation(stage, scenario, chi)
            raise UnboundedStage(f"stage {stage} scenario {scenario}: LP unbounded")
        return StageSolution(res.status, None, np.nan, np.nan, np.full(m, np.nan),
                             np.full(p, np.nan), np.full(k, np.nan), np.nan)
    return StageSolution(
        status=OPTIMAL,
        x=res.x[:n],
        theta=float(res.x[n]),
        value=res.value,
        y=-res.eq_duals,
        mu=-res.ub_duals[:p],
        cut_duals=-res.ub_duals[p:],
        dual_value=res.dual_value,
    )


def value_gradient(sol: StageSolution, real: Realization) -> np.ndarray:
    """Subgradient of the stage value with respect to the incoming state."""
    return -(real.B.T @ sol.y + real.Q.T @ sol.mu)


def cut_from_solution(sol: StageSolution, real: Realization, chi, born: int = 0) -> Cut:
    if sol.status != OPTIMAL:
        raise ValueError(f"cannot build a cut from a {sol.status} solution")
    return Cut(np.asarray(chi, float), sol.value, value_gradient(sol, real), born)


__all__ = ["StageSolution", "RecourseViolation", "UnboundedStage", "solve_stage",
           "cut_from_solution", "value_gradient", "OPTIMAL", "INFEASIBLE", "UNBOUNDED"]

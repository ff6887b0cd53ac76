"""Kelley's cutting-plane method for Lipschitz convex functions on a box."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lp import OPTIMAL, solve_lp


@dataclass(frozen=True)
class StaticProblem:
    """min f(x) over lower <= x <= upper; ``oracle(x)`` returns (f(x), subgradient).

    ``M`` is an l-inf Lipschitz constant of f on the box.
    """
    oracle: Callable
    lower: np.ndarray
    upper: np.ndarray
    M: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, float))
        object.__setattr__(self, "upper", np.asarray(self.upper, float))
        if np.any(self.lower > self.upper):
            raise ValueError("lower > upper")

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def side(self) -> float:
        return float(np.max(self.upper - self.lower))

    def check_lipschitz(self, samples: int = 200, seed: int = 0, slack: float = 1e-9) -> bool:
        """Assert |f(x) - f(y)| <= M ||x - y||_inf on random pairs from the box."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(self.lower, self.upper, size=(samples, self.n))
        y = rng.uniform(self.lower, self.upper, size=(samples, self.n))
        for a, b in zip(x, y):
            if abs(self.oracle(a)[0] - self.oracle(b)[0]) > self.M * np.max(np.abs(a - b)) + slack:
                return False
        return True


@dataclass
class KelleyResult:
    x_best: np.ndarray
    ub: float
    lb: float
    iterates: list          # x_1 .. x_{K+1}; the first K precede termination
    lbs: list = field(default_factory=list)
    ubs: list = field(default_factory=list)
    values: list = field(default_factory=list)  # f(x_1) .. f(x_{K+1})
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.lbs)

    @property
    def gap(self) -> float:
        return self.ub - self.lb


def kelley_solve(prob: StaticProblem, x1, eps: float, max_iter: int = 1000,
                 tol: float = 1e-10) -> KelleyResult:
    """Run the basic cutting-plane method until ub_k - lb_k <= eps.

    ub starts from f(x_1) rather than +inf so that every evaluated point,
    including the start, counts toward the incumbent. A result with
    ``converged=False`` is a partial run that hit ``max_iter``.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    x = np.asarray(x1, float).ravel()
    if x.size != prob.n or np.any(x < prob.lower - 1e-12) or np.any(x > prob.upper + 1e-12):
        raise ValueError("x1 must lie in the box")
    n = prob.n
    fx, gx = prob.oracle(x)
    res = KelleyResult(x.copy(), float(fx), -np.inf, [x.copy()], values=[float(fx)])
    slopes, offsets = [], []
    c = np.append(np.zeros(n), 1.0)
    lower = np.append(prob.lower, -np.inf)
    upper = np.append(prob.upper, np.inf)
    for _ in range(max_iter):
        g = np.asarray(gx, float).ravel()
        slopes.append(np.append(g, -1.0))
        offsets.append(float(g @ x) - fx)
        lp = solve_lp(c, np.array(slopes), np.array(offsets), lower=lower, upper=upper, tol=tol)
        if lp.status != OPTIMAL:
            raise RuntimeError(f"model minimisation failed: {lp.status}")
        x = lp.x[:n]
        lb = lp.value
        fx, gx = prob.oracle(x)
        fx = float(fx)
        res.iterates.append(x.copy())
        res.values.append(fx)
        if fx < res.ub:
            res.ub, res.x_best = fx, x.copy()
        res.lb = lb
        res.lbs.append(lb)
        res.ubs.append(res.ub)
        if res.ub - lb <= eps:
            res.converged = True
            break
    return res


def min_pairwise_distance(iterates) -> float:
    pts = np.atleast_2d(np.asarray(iterates, float))
    if pts.shape[0] < 2:
        raise ValueError("need at least 2 iterates")
    diff = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
    iu = np.triu_indices(pts.shape[0], k=1)
    return float(diff[iu].min())


def complexity_bound(side: float, M: float, eps: float, n: int) -> float:
    """(l M / eps + 1)^n."""
    return (side * M / eps + 1.0) ** n


# --- built-in test functions ------------------------------------------------

def _linf(x):
    i = int(np.argmax(np.abs(x)))
    g = np.zeros_like(x)
    g[i] = np.sign(x[i]) if x[i] != 0 else 1.0
    return float(np.abs(x[i])), g


def _l1(x):
    return float(np.sum(np.abs(x))), np.where(x >= 0, 1.0, -1.0)


def _vee(x):
    up = x >= 0
    return float(np.sum(np.where(up, x, -2 * x))), np.where(up, 1.0, -2.0)


def _maxaffine_pieces(n):
    rng = np.random.default_rng(12345 + n)
    slopes = rng.uniform(-1.0, 1.0, size=(5, n))
    offsets = rng.uniform(-0.5, 0.0, size=5)
    return slopes, offsets


def _maxaffine(x):
    slopes, offsets = _maxaffine_pieces(x.size)
    vals = slopes @ x + offsets
    j = int(np.argmax(vals))
    return float(vals[j]), slopes[j].copy()


def _bowl_pieces(n):
    # tangent planes of 0.5 * ||x - a||^2 at a 9-point-per-axis lattice
    a = np.full(n, 0.3)
    axes = np.linspace(-1.0, 1.0, 9)
    pts = np.stack(np.meshgrid(*([axes] * n), indexing="ij"), axis=-1).reshape(-1, n)
    slopes = pts - a
    offsets = 0.5 * np.sum(slopes ** 2, axis=1) - np.sum(slopes * pts, axis=1)
    return slopes, offsets


def _bowl(x):
    slopes, offsets = _bowl_pieces(x.size)
    vals = slopes @ x + offsets
    j = int(np.argmax(vals))
    return float(vals[j]), slopes[j].copy()


def _constant(x):
    return 1.0, np.zeros_like(x)


def builtin_problem(name: str, n: int = 1, side: float = 2.0) -> StaticProblem:
    """Named test function on the box [-side/2, side/2]^n with its l-inf constant."""
    half = side / 2
    lower, upper = np.full(n, -half), np.full(n, half)
    table = {
        "abs": (_linf, 1.0),
        "linf": (_linf, 1.0),
        "l1": (_l1, float(n)),
        "vee": (_vee, 2.0 * n),
        "maxaffine": (_maxaffine, float(np.max(np.sum(np.abs(_maxaffine_pieces(n)[0]), axis=1)))),
        "bowl": (_bowl, float(np.max(np.sum(np.abs(_bowl_pieces(n)[0]), axis=1)))),
        "constant": (_constant, 0.0),
    }
    if name not in table:
        raise ValueError(f"unknown test function {name!r}; choose from {', '.join(table)}")
    if name == "abs" and n != 1:
        raise ValueError("'abs' is one-dimensional; use 'linf' for n > 1")
    f, M = table[name]
    return StaticProblem(lambda x: f(np.asarray(x, float)), lower, upper, M, name)


BUILTIN_FUNCTIONS = ("abs", "linf", "l1", "vee", "maxaffine", "bowl", "constant")

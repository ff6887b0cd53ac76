"""Piecewise-linear lower models of the value functions.

A pool for stage t approximates V_t as a function of the incoming state
x_{t-1}. Pools are immutable snapshots; ``add_cut`` returns a new version so
that the k-1 and k models can be held side by side.

Throughout the solvers a tuple ``pools`` is indexed by stage: ``pools[t]``
models V_t for t = 2..T+1, and the two leading slots are ``None``. The
terminal pool ``pools[T+1]`` has no cuts and floor 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .model import Instance


@dataclass(frozen=True)
class Cut:
    anchor: np.ndarray
    intercept: float
    gradient: np.ndarray
    born: int = 0

    def __post_init__(self):
        anchor = np.array(self.anchor, dtype=float).ravel()
        gradient = np.array(self.gradient, dtype=float).ravel()
        if anchor.shape != gradient.shape:
            raise ValueError("anchor and gradient must have the same length")
        if not (np.all(np.isfinite(anchor)) and np.all(np.isfinite(gradient))
                and np.isfinite(self.intercept)):
            raise ValueError("cut entries must be finite")
        anchor.setflags(write=False)
        gradient.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "gradient", gradient)
        object.__setattr__(self, "intercept", float(self.intercept))

    def __call__(self, x) -> float:
        return self.intercept + float(self.gradient @ (np.asarray(x, float) - self.anchor))

    @property
    def offset(self) -> float:
        """Constant term h of the affine form g @ x + h."""
        return self.intercept - float(self.gradient @ self.anchor)


@dataclass(frozen=True, eq=False)
class CutPool:
    stage: int
    n: int
    floor: float
    cuts: tuple = field(default=())

    @cached_property
    def slopes(self) -> np.ndarray:
        if not self.cuts:
            return np.zeros((0, self.n))
        return np.array([c.gradient for c in self.cuts])

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([c.offset for c in self.cuts], dtype=float)

    def __len__(self):
        return len(self.cuts)

    def __call__(self, x) -> float:
        return pool_eval(self, x)


def pool_eval(pool: CutPool, x) -> float:
    """max(floor, max_j intercept_j + gradient_j @ (x - anchor_j))."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != pool.n:
        raise ValueError(f"state has length {x.size}, pool for stage {pool.stage} expects {pool.n}")
    if not pool.cuts:
        return pool.floor
    vals = [c(x) for c in pool.cuts]
    return max(pool.floor, max(vals))


def add_cut(pool: CutPool, cut: Cut) -> CutPool:
    if cut.gradient.size != pool.n:
        raise ValueError(f"cut has dimension {cut.gradient.size}, pool expects {pool.n}")
    return CutPool(pool.stage, pool.n, pool.floor, pool.cuts + (cut,))


def initial_floor(inst: Instance, t: int) -> float:
    """Valid constant lower bound on V_t over the whole state box.

    Sums, over stages tau >= t, the discounted worst case of min over the box
    of c_tau @ x across scenarios. Linking rows only shrink the feasible set,
    so the bound holds for every incoming state. t = T+1 gives 0.
    """
    if not 2 <= t <= inst.T + 1:
        raise ValueError(f"stage {t} has no value function pool")
    total = 0.0
    for tau in range(t, inst.T + 1):
        shape = inst.stages[tau - 1]
        if not (np.all(np.isfinite(shape.lower)) and np.all(np.isfinite(shape.upper))):
            raise ValueError(f"stage {tau} box is unbounded; no finite floor exists")
        worst = min(float(np.sum(np.minimum(r.c * shape.lower, r.c * shape.upper)))
                    for r in inst.scenarios[tau - 1])
        total += inst.lam ** (tau - t) * worst
    return total


def initial_pools(inst: Instance) -> tuple:
    pools = [None, None]
    for t in range(2, inst.T + 2):
        pools.append(CutPool(t, inst.stages[t - 2].n, initial_floor(inst, t)))
    return tuple(pools)


def replace_pool(pools: tuple, t: int, pool: CutPool) -> tuple:
    return pools[:t] + (pool,) + pools[t + 1:]


def empirical_gradient_bound(pool: CutPool) -> float:
    """Largest l1 norm among cut gradients (the dual of the l-inf state norm)."""
    if not pool.cuts:
        return 0.0
    return float(np.max(np.sum(np.abs(pool.slopes), axis=1)))


def pool_to_dict(pool: CutPool) -> dict:
    return {"stage": pool.stage, "floor": pool.floor,
            "cuts": [{"anchor": c.anchor.tolist(), "intercept": c.intercept,
                      "gradient": c.gradient.tolist(), "born": c.born} for c in pool.cuts]}


def pool_from_dict(d: dict, n: int | None = None) -> CutPool:
    cuts = tuple(Cut(c["anchor"], c["intercept"], c["gradient"], int(c.get("born", 0)))
                 for c in d["cuts"])
    if n is None:
        if not cuts:
            raise ValueError("dimension of an empty pool must be given")
        n = cuts[0].gradient.size
    return CutPool(int(d["stage"]), n, float(d["floor"]), cuts)


def dump_pools(pools, path) -> None:
    with open(path, "w") as fh:
        json.dump([pool_to_dict(p) for p in pools if p is not None], fh)


def load_pools(inst: Instance, path) -> tuple:
    with open(path) as fh:
        items = json.load(fh)
    pools = list(initial_pools(inst))
    for d in items:
        t = int(d["stage"])
        pools[t] = pool_from_dict(d, inst.stages[t - 2].n)
    return tuple(pools)

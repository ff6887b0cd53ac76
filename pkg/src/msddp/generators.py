"""Seeded instance families with relatively complete recourse by construction.

inventory
    Box [0, 1]^n. From stage 2 on, each coordinate may move down by at most
    d and up by at most r (d, r > 0 drawn per scenario), so the incoming
    state itself is always feasible. Costs are uniform on [-1, 1].
hydro-toy
    State (storage, release, thermal) in a box. Water balance
    ``s + u <= s_prev + inflow`` and demand ``u + g >= demand`` with thermal
    capacity above every demand draw, so ``s = u = 0, g = demand`` is always
    feasible.
random-lp
    Random boxes and inequality rows whose right-hand side is shifted so the
    box centre is feasible for every incoming state in the previous box.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Instance, Realization, StageShape, build_saa, validate_instance

FAMILIES = ("inventory", "hydro-toy", "random-lp")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    T: int
    counts: tuple
    n: int = 1
    seed: int = 0
    lam: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))


class _Sampler:
    def __init__(self, spec: GeneratorSpec, stages):
        self.spec = spec
        self.stages = stages
        self.lam = spec.lam


class InventorySampler(_Sampler):
    def __init__(self, spec):
        n = spec.n
        p = spec.params
        self.cost_range = tuple(p.get("cost_range", (-1.0, 1.0)))
        self.down_range = tuple(p.get("down_range", (0.1, 0.5)))
        self.up_range = tuple(p.get("up_range", (0.1, 0.5)))
        side = float(p.get("side", 1.0))
        for name in ("down_range", "up_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"inventory {name} must satisfy 0 < lo <= hi to certify recourse")
        if side <= 0:
            raise ValueError("inventory box side must be positive")
        stages = [StageShape(n, 0, 0 if t == 1 else 2 * n, np.zeros(n), np.full(n, side))
                  for t in range(1, spec.T + 1)]
        super().__init__(spec, stages)

    def sample(self, t, rng):
        n = self.spec.n
        c = rng.uniform(*self.cost_range, size=n)
        if t == 1:
            return Realization.create(c)
        d = rng.uniform(*self.down_range, size=n)
        r = rng.uniform(*self.up_range, size=n)
        eye = np.eye(n)
        return Realization.create(c, n_prev=n, G=np.vstack([-eye, eye]),
                                  Q=np.vstack([-eye, eye]), q=np.concatenate([d, r]))


class HydroSampler(_Sampler):
    def __init__(self, spec):
        if spec.n != 3:
            raise ValueError("hydro-toy has state dimension 3 (storage, release, thermal)")
        p = spec.params
        self.smax = float(p.get("storage_max", 1.0))
        self.umax = float(p.get("release_max", 1.0))
        self.inflow = tuple(p.get("inflow_range", (0.0, 0.5)))
        self.demand = tuple(p.get("demand_range", (0.2, 0.8)))
        self.gmax = float(p.get("thermal_max", 1.0))
        self.price = tuple(p.get("thermal_cost_range", (1.0, 2.0)))
        if self.gmax < self.demand[1]:
            raise ValueError("thermal_max must cover the largest demand to certify recourse")
        if self.inflow[0] < 0 or self.demand[0] < 0:
            raise ValueError("inflow and demand ranges must be nonnegative")
        lower = np.zeros(3)
        upper = np.array([self.smax, self.umax, self.gmax])
        stages = [StageShape(3, 0, 2, lower, upper) for _ in range(spec.T)]
        super().__init__(spec, stages)

    def sample(self, t, rng):
        inflow = rng.uniform(*self.inflow)
        demand = rng.uniform(*self.demand)
        price = rng.uniform(*self.price)
        c = np.array([0.0, 0.0, price])
        G = np.array([[1.0, 1.0, 0.0], [0.0, -1.0, -1.0]])
        q = np.array([inflow, -demand])
        if t == 1:
            # initial storage is half full
            return Realization.create(c, G=G, q=q + np.array([0.5 * self.smax, 0.0]))
        Q = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        return Realization.create(c, n_prev=3, G=G, Q=Q, q=q)


class RandomLpSampler(_Sampler):
    def __init__(self, spec):
        p = spec.params
        n = spec.n
        self.rows = int(p.get("rows", 2))
        self.margin = float(p.get("margin", 0.1))
        width = tuple(p.get("width_range", (0.5, 1.5)))
        if not 0 < width[0] <= width[1]:
            raise ValueError("random-lp width_range must be positive: zero-width boxes "
                             "leave no room to certify recourse")
        if self.margin < 0:
            raise ValueError("random-lp margin must be nonnegative")
        box_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
        stages = []
        for t in range(spec.T):
            lo = box_rng.uniform(-1.0, 0.0, size=n)
            w = box_rng.uniform(*width, size=n)
            stages.append(StageShape(n, 0, self.rows, lo, lo + w))
        super().__init__(spec, stages)

    def sample(self, t, rng):
        shape = self.stages[t - 1]
        n, p = shape.n, self.rows
        c = rng.uniform(-1.0, 1.0, size=n)
        G = rng.uniform(-1.0, 1.0, size=(p, n))
        centre = 0.5 * (shape.lower + shape.upper)
        if t == 1:
            q = G @ centre + self.margin
            return Realization.create(c, G=G, q=q)
        prev = self.stages[t - 2]
        Q = rng.uniform(-1.0, 1.0, size=(p, prev.n))
        # worst case of -Q chi over the previous box keeps the centre feasible
        worst = np.sum(np.maximum(-Q * prev.lower, -Q * prev.upper), axis=1)
        q = G @ centre + worst + self.margin
        return Realization.create(c, n_prev=prev.n, G=G, Q=Q, q=q)


_SAMPLERS = {"inventory": InventorySampler, "hydro-toy": HydroSampler,
             "random-lp": RandomLpSampler}


def make_sampler(spec: GeneratorSpec):
    if spec.family not in _SAMPLERS:
        raise ValueError(f"unknown family {spec.family!r}; choose from {', '.join(FAMILIES)}")
    if spec.T < 2:
        raise ValueError("T must be >= 2")
    if len(spec.counts) != spec.T:
        raise ValueError(f"counts has {len(spec.counts)} entries, expected T={spec.T}")
    if spec.n < 1:
        raise ValueError("n must be >= 1")
    return _SAMPLERS[spec.family](spec)


def generate_instance(spec: GeneratorSpec) -> Instance:
    inst = build_saa(make_sampler(spec), spec.counts, spec.seed)
    problems = validate_instance(inst)
    if problems:
        raise ValueError(f"generated instance is invalid: {problems[0].message}")
    return inst


def cost_lipschitz_bound(inst: Instance) -> np.ndarray:
    """Per-stage sum over tau >= t of lam^(tau-t) * max_i ||c_tau,i||_1.

    This bounds the l-inf Lipschitz constant of F_ti when every stage can
    absorb a shift of its incoming state by an equal shift of its decision,
    which holds for the inventory family. It is not a bound in general.
    """
    worst = np.array([max(np.sum(np.abs(r.c)) for r in reals) for reals in inst.scenarios])
    out = np.zeros(inst.T)
    acc = 0.0
    for t in range(inst.T - 1, -1, -1):
        acc = worst[t] + inst.lam * acc
        out[t] = acc
    return out

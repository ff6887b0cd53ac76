"""Problem data for multi-stage stochastic LPs under stage-wise independence.

Stages are numbered 1..T in docstrings and error messages; Python containers
are 0-based, so ``inst.stages[t - 1]`` is stage ``t``. Stage 1 has no incoming
state (its ``B`` and ``Q`` have zero columns).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence

import numpy as np


def _frozen(a, ndim):
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StageShape:
    n: int
    m: int
    p: int
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", _frozen(self.lower, 1))
        object.__setattr__(self, "upper", _frozen(self.upper, 1))

    @property
    def diameter(self) -> float:
        """Largest box side, i.e. the l-inf diameter of the box."""
        return float(np.max(self.upper - self.lower))


@dataclass(frozen=True)
class Realization:
    """One sampled data vector for a stage: Ax = B chi + b, Gx <= Q chi + q, cost c."""

    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    c: np.ndarray
    G: np.ndarray
    Q: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "G", "Q"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 2))
        for name in ("b", "c", "q"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1))

    @classmethod
    def create(cls, c, *, n_prev=0, A=None, B=None, b=None, G=None, Q=None, q=None):
        """Build a realization, filling absent blocks with correctly shaped zeros."""
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        m = 0 if A is None else np.size(A) // n
        p = 0 if G is None else np.size(G) // n
        return cls(A=_mat(A, m, n), B=_mat(B, m, n_prev), b=_vec(b, m), c=c,
                   G=_mat(G, p, n), Q=_mat(Q, p, n_prev), q=_vec(q, p))

    def to_dict(self) -> dict:
        out = {"A": self.A.tolist(), "B": self.B.tolist(), "b": self.b.tolist(),
               "c": self.c.tolist()}
        if self.G.shape[0]:
            out.update(G=self.G.tolist(), Q=self.Q.tolist(), q=self.q.tolist())
        return out


@dataclass(frozen=True)
class Instance:
    """Full SAA problem: ``scenarios[t - 1]`` holds the N_t realizations of stage t."""

    T: int
    lam: float
    stages: tuple
    scenarios: tuple

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "scenarios", tuple(tuple(s) for s in self.scenarios))

    @property
    def counts(self) -> tuple:
        return tuple(len(s) for s in self.scenarios)

    def n_prev(self, t: int) -> int:
        """Incoming-state dimension of stage t (1-based); 0 for stage 1."""
        return 0 if t == 1 else self.stages[t - 2].n

    @property
    def is_single_scenario(self) -> bool:
        return all(N == 1 for N in self.counts)


class Violation(NamedTuple):
    kind: str
    stage: int | None
    scenario: int | None
    message: str


def validate_instance(inst: Instance) -> list:
    """Return every invariant violation of ``inst``; an empty list means valid."""
    out = []
    if inst.T < 2:
        out.append(Violation("stage-count", None, None, f"T={inst.T} < 2"))
    if not (0 < inst.lam <= 1):
        out.append(Violation("discount", None, None, f"lambda={inst.lam} not in (0, 1]"))
    if len(inst.stages) != inst.T or len(inst.scenarios) != inst.T:
        out.append(Violation("stage-count", None, None,
                             f"expected {inst.T} stages, got {len(inst.stages)} shapes "
                             f"and {len(inst.scenarios)} scenario lists"))
        return out
    if inst.counts[0] != 1:
        out.append(Violation("first-stage", 1, None,
                             f"stage 1 must have exactly one scenario, got {inst.counts[0]}"))
    for t, (shape, reals) in enumerate(zip(inst.stages, inst.scenarios), start=1):
        if shape.n < 1:
            out.append(Violation("dimension", t, None, "n must be >= 1"))
        if shape.lower.shape != (shape.n,) or shape.upper.shape != (shape.n,):
            out.append(Violation("dimension", t, None, "box bounds must have length n"))
        elif np.any(shape.lower > shape.upper):
            out.append(Violation("bounds", t, None, "lower > upper"))
        elif not (np.all(np.isfinite(shape.lower)) and np.all(np.isfinite(shape.upper))):
            out.append(Violation("bounds", t, None, "box must be finite"))
        if len(reals) == 0:
            out.append(Violation("dimension", t, None, "no scenarios"))
        n_prev = inst.n_prev(t)
        expected = {"A": (shape.m, shape.n), "B": (shape.m, n_prev), "b": (shape.m,),
                    "c": (shape.n,), "G": (shape.p, shape.n), "Q": (shape.p, n_prev),
                    "q": (shape.p,)}
        for i, r in enumerate(reals):
            for name, shp in expected.items():
                arr = getattr(r, name)
                if arr.shape != shp:
                    out.append(Violation("dimension", t, i,
                                         f"{name} has shape {arr.shape}, expected {shp}"))
                elif not np.all(np.isfinite(arr)):
                    out.append(Violation("non-finite", t, i, f"{name} has non-finite entries"))
    return out


def epsilon_schedule(delta, M, M_under, lam: float, T: int) -> np.ndarray:
    """Saturation tolerances eps_0..eps_{T-1} implied by the radii ``delta``.

    ``delta``, ``M`` and ``M_under`` are indexed by stage (entry ``t - 1`` is
    stage t). The result satisfies ``eps[T-1] == 0`` and
    ``eps[t-1] = (M_t + M_under_t) * delta_t + lam * eps[t]``.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    if not (0 < lam <= 1):
        raise ValueError("lambda must lie in (0, 1]")
    delta, M, M_under = (np.broadcast_to(np.asarray(v, float), (T,)) for v in (delta, M, M_under))
    if np.any(delta < 0) or np.any(M < 0) or np.any(M_under < 0):
        raise ValueError("delta, M and M_under must be nonnegative")
    eps = np.zeros(T)
    for t in range(T - 2, -1, -1):
        # stage t+1 (1-based) lives at index t
        eps[t] = (M[t] + M_under[t]) * delta[t] + lam * eps[t + 1]
    return eps


@dataclass(frozen=True)
class ToleranceSchedule:
    delta: np.ndarray
    eps: np.ndarray
    M: np.ndarray
    M_under: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        for name in ("delta", "eps", "M", "M_under"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1))
        T = self.eps.size
        if any(getattr(self, k).size != T for k in ("delta", "M", "M_under")):
            raise ValueError("schedule arrays must all have length T")
        if np.any(self.delta < 0) or np.any(self.eps < 0):
            raise ValueError("schedule entries must be nonnegative")
        if self.eps[-1] != 0:
            raise ValueError("eps for stage T-1 must be 0")
        expect = epsilon_schedule(self.delta, self.M, self.M_under, self.lam, T)
        if not np.allclose(self.eps, expect, rtol=1e-12, atol=1e-15):
            raise ValueError("eps does not satisfy the saturation recursion")

    @classmethod
    def from_lipschitz(cls, delta, M, M_under=None, lam=1.0, T=None):
        """Schedule from per-stage (or uniform) radii and Lipschitz bounds."""
        if T is None:
            T = next(np.size(v) for v in (delta, M, M_under) if v is not None and np.ndim(v))
        M_under = M if M_under is None else M_under
        delta, M, M_under = (np.broadcast_to(np.asarray(v, float), (T,)).copy()
                             for v in (delta, M, M_under))
        return cls(delta, epsilon_schedule(delta, M, M_under, lam, T), M, M_under, lam)

    @property
    def T(self) -> int:
        return self.eps.size

    def gap_threshold(self) -> float:
        """Computable-gap target: sum over t of lam^(t-1) * eps_{t-1}."""
        return float(np.sum(self.lam ** np.arange(self.T) * self.eps))


@dataclass(frozen=True)
class SolveConfig:
    schedule: ToleranceSchedule
    max_iterations: int = 200
    lp_tolerance: float = 1e-8
    seed: int = 0
    forward_replicas: int = 1
    threads: int = 1
    gap_threshold: float | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.lp_tolerance <= 0:
            raise ValueError("lp_tolerance must be > 0")
        if self.forward_replicas < 1:
            raise ValueError("forward_replicas must be >= 1")

    @property
    def pivot_tolerance(self) -> float:
        return self.lp_tolerance / 10

    def threshold(self) -> float:
        if self.gap_threshold is not None:
            return self.gap_threshold
        return self.schedule.gap_threshold()


# --- SAA construction -------------------------------------------------------

class ScenarioSampler(Protocol):
    stages: Sequence[StageShape]
    lam: float

    def sample(self, t: int, rng: np.random.Generator) -> Realization: ...


def build_saa(sampler: ScenarioSampler, counts: Sequence[int], seed: int) -> Instance:
    """Draw N_t i.i.d. realizations per stage from ``sampler``.

    Every stage gets its own child stream of ``SeedSequence(seed)``, so stages
    are sampled independently and the result is reproducible bit for bit.
    """
    counts = list(counts)
    T = len(sampler.stages)
    if len(counts) != T:
        raise ValueError(f"need {T} counts, got {len(counts)}")
    if counts[0] != 1:
        raise ValueError("counts[0] must be 1 (deterministic first stage)")
    streams = np.random.SeedSequence(seed).spawn(T)
    scenarios = []
    for t in range(1, T + 1):
        rng = np.random.default_rng(streams[t - 1])
        reals = [sampler.sample(t, rng) for _ in range(counts[t - 1])]
        scenarios.append(reals)
    inst = Instance(T, sampler.lam, tuple(sampler.stages), scenarios)
    dims = [v for v in validate_instance(inst) if v.kind == "dimension"]
    if dims:
        v = dims[0]
        raise ValueError(f"sampler produced inconsistent data at stage {v.stage}: {v.message}")
    return inst


def estimate_lipschitz(inst: Instance, probe_count: int = 9, seed: int = 0) -> np.ndarray:
    """Empirical Lipschitz estimates (l-inf) of each stage objective F_ti.

    F_ti(x) = c_ti @ x + lam * V_{t+1}(x) is evaluated exactly through the
    extensive-form oracle at ``probe_count`` points of the stage box, and the
    largest difference quotient over all pairs is returned. This is a lower
    estimate of the true constant, not a certified bound.
    """
    from .oracle import value_function

    if probe_count < 2:
        raise ValueError("estimate_lipschitz needs at least 2 probes")
    rng = np.random.default_rng(seed)
    est = np.zeros(inst.T)
    for t in range(1, inst.T + 1):
        shape = inst.stages[t - 1]
        if shape.n == 1:
            pts = np.linspace(shape.lower[0], shape.upper[0], probe_count)[:, None]
        else:
            pts = rng.uniform(shape.lower, shape.upper, size=(probe_count, shape.n))
        cont = np.array([value_function(inst, t + 1, x) for x in pts])
        for real in inst.scenarios[t - 1]:
            F = pts @ real.c + inst.lam * cont
            for a in range(probe_count):
                d = np.max(np.abs(pts[a + 1:] - pts[a]), axis=1)
                ok = d > 1e-12
                if np.any(ok):
                    est[t - 1] = max(est[t - 1], float(np.max(np.abs(F[a + 1:][ok] - F[a]) / d[ok])))
    return est


# --- JSON I/O ---------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    return {
        "T": inst.T,
        "lambda": inst.lam,
        "stages": [{"n": s.n, "m": s.m, "p": s.p, "lower": s.lower.tolist(),
                    "upper": s.upper.tolist()} for s in inst.stages],
        "scenarios": [[r.to_dict() for r in reals] for reals in inst.scenarios],
    }


def instance_from_dict(d: dict) -> Instance:
    stages = [StageShape(int(s["n"]), int(s["m"]), int(s.get("p", 0)), s["lower"], s["upper"])
              for s in d["stages"]]
    scenarios = []
    for t, reals in enumerate(d["scenarios"], start=1):
        shape = stages[t - 1] if t - 1 < len(stages) else None
        n_prev = 0 if t == 1 or shape is None else stages[t - 2].n
        out = []
        for r in reals:
            m = shape.m if shape else len(r.get("b", []))
            p = shape.p if shape else len(r.get("q", []))
            n = len(r["c"])
            out.append(Realization(
                A=_mat(r.get("A"), m, n), B=_mat(r.get("B"), m, n_prev), b=_vec(r.get("b"), m),
                c=np.asarray(r["c"], float), G=_mat(r.get("G"), p, n),
                Q=_mat(r.get("Q"), p, n_prev), q=_vec(r.get("q"), p)))
        scenarios.append(out)
    return Instance(int(d["T"]), float(d["lambda"]), stages, scenarios)


def _mat(a, rows, cols):
    # JSON loses the shape of empty matrices, so rebuild it from the stage shape
    if a is None or (np.size(a) == 0 and rows * cols == 0):
        return np.zeros((rows, cols))
    arr = np.asarray(a, float)
    return arr.reshape(rows, cols) if arr.ndim == 1 and rows == 1 and arr.size == cols else arr


def _vec(a, size):
    if a is None:
        return np.zeros(size)
    return np.asarray(a, float).ravel()


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1, sort_keys=False) + "\n"


def save_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_instance(inst))


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))

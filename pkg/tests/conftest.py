import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from msddp.generators import GeneratorSpec, cost_lipschitz_bound, generate_instance
from msddp.model import Instance, Realization, SolveConfig, StageShape, ToleranceSchedule

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_config(inst, delta=0.1, M=None, **kw):
    M = cost_lipschitz_bound(inst) if M is None else M
    sched = ToleranceSchedule.from_lipschitz(delta, M, M, inst.lam, inst.T)
    return SolveConfig(sched, **kw)


@pytest.fixture
def tiny_saa():
    return generate_instance(GeneratorSpec("inventory", 3, (1, 2, 2), 1, seed=7))


@pytest.fixture
def tiny_det():
    return generate_instance(GeneratorSpec("inventory", 3, (1, 1, 1), 1, seed=7))


@pytest.fixture
def abs_instance():
    """Two stages; stage 2 splits chi = u - v with cost u + v, so V_2(chi) = |chi|."""
    s1 = StageShape(1, 0, 0, [-1.0], [1.0])
    s2 = StageShape(2, 1, 0, [0.0, 0.0], [2.0, 2.0])
    r1 = Realization.create([-0.25])
    r2 = Realization.create([1.0, 1.0], n_prev=1, A=[[1.0, -1.0]], B=[[1.0]], b=[0.0])
    return Instance(2, 1.0, [s1, s2], [[r1], [r2]])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

# %% [markdown]
# # Dual dynamic programming on a deterministic problem
#
# With one scenario per stage, DDP walks forward with the current cut models
# and adds one cut per stage on the way back. The path cost is an upper bound
# and the first-stage model value a lower bound.

# %%
from msddp import GeneratorSpec, ToleranceSchedule, SolveConfig, ddp_solve, generate_instance
from msddp.generators import cost_lipschitz_bound
from msddp.oracle import extensive_form_value
from msddp.records import ddp_csv

# %%
inst = generate_instance(GeneratorSpec("random-lp", T=4, counts=(1, 1, 1, 1), n=2, seed=3))
M = cost_lipschitz_bound(inst)
sched = ToleranceSchedule.from_lipschitz(0.01, M, M, inst.lam, inst.T)
print("eps_t:", sched.eps)

res = ddp_solve(inst, SolveConfig(sched, max_iterations=50))
fstar, _ = extensive_form_value(inst)
print(f"status {res.status} after {res.iterations} iterations")
print(f"lb {res.lb:.6f} <= F* {fstar:.6f} <= ub {res.ub:.6f}")

# %% [markdown]
# The per-iteration telemetry is the same CSV the command line writes.

# %%
print(ddp_csv(res.history))

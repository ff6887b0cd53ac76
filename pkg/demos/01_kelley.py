# %% [markdown]
# # Kelley's cutting-plane method
#
# The static building block: minimise a Lipschitz convex function over a box
# by repeatedly minimising the max of its tangent planes.

# %%
import numpy as np

from msddp.kelley import builtin_problem, complexity_bound, kelley_solve, min_pairwise_distance

# %%
prob = builtin_problem("bowl", n=2)
print("function:", prob.name, " box side:", prob.side, " M:", prob.M)

res = kelley_solve(prob, x1=[0.9, -0.9], eps=0.05)
print(f"converged={res.converged} after {res.iterations} iterations")
print(f"best x = {res.x_best}, ub = {res.ub:.5f}, lb = {res.lb:.5f}")

# %% [markdown]
# Lower bounds only rise and the incumbent only falls.

# %%
for k, (lb, ub) in enumerate(zip(res.lbs, res.ubs), start=1):
    print(f"k={k:2d}  lb={lb: .5f}  ub={ub: .5f}  gap={ub - lb:.5f}")

# %% [markdown]
# Until termination the iterates stay more than eps / M apart, which is why
# the count is bounded by a packing number of the box.

# %%
K = res.iterations
sep = min_pairwise_distance(res.iterates[:K]) if K > 1 else np.inf
print(f"min separation {sep:.4f} > eps/M = {0.05 / prob.M:.4f}")
print(f"iterations {K} <= bound {complexity_bound(prob.side, prob.M, 0.05, prob.n):.0f}")

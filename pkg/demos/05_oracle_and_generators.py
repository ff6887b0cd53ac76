# %% [markdown]
# # Ground truth: extensive form and grid value functions
#
# Small instances can be solved outright. The extensive form is one LP over
# the whole scenario tree. The grid recursion approximates each V_t on a
# lattice and carries an explicit error bound.

# %%
import numpy as np

from msddp import GeneratorSpec, generate_instance
from msddp.model import dumps_instance
from msddp.oracle import exact_value_grid, extensive_form_value, grid_first_stage_value, value_function

# %%
inst = generate_instance(GeneratorSpec("inventory", T=3, counts=(1, 2, 2), n=1, seed=7))
print(dumps_instance(inst)[:300], "...")

fstar, x1 = extensive_form_value(inst)
print(f"F* = {fstar:.6f} at x1 = {x1}")

# %% [markdown]
# Refining the grid tightens the bound by half each time.

# %%
for res in (4, 8, 16, 32):
    v, bound = grid_first_stage_value(inst, res, M=2.0)
    print(f"res {res:2d}: grid value {v:.6f}  F* <= value <= F* + {bound:.4f}")

# %%
g = exact_value_grid(inst, 2, 8, M=2.0)
for x, v in zip(g.nodes[::2], g.values[::2]):
    print(f"V_2({x[0]:.3f}) = {value_function(inst, 2, x):.5f}   grid {v:.5f}")

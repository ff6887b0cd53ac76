"""Cutting-plane solvers for multi-stage stochastic linear programs.

Kelley's method for static problems, DDP for deterministic multi-stage
problems, and explorative (EDDP) and sampled (SDDP) variants for SAA problems
under stage-wise independence, together with an extensive-form oracle.
"""
from .cutmodel import Cut, CutPool, add_cut, initial_floor, initial_pools, pool_eval
from .ddp import ddp_backward, ddp_forward, ddp_solve
from .eddp import capacity_bound, distance_to_saturated, eddp_backward, eddp_forward, eddp_solve
from .generators import GeneratorSpec, cost_lipschitz_bound, generate_instance
from .kelley import StaticProblem, builtin_problem, kelley_solve, min_pairwise_distance
from .model import (Instance, Realization, SolveConfig, StageShape, ToleranceSchedule,
                    build_saa, epsilon_schedule, estimate_lipschitz, load_instance,
                    save_instance, validate_instance)
from .oracle import (audit_cut_validity, exact_value_grid, extensive_form_value,
                     first_stage_objective, value_function)
from .sddp import SelectionStream, enumerate_policy_cost, estimate_upper_bound, sddp_solve
from .subproblem import RecourseViolation, cut_from_solution, solve_stage

__version__ = "0.1.0"

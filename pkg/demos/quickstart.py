"""Constant-step forward-reflected-backward on a rotation field over a box.

The field A(x) = S x with S skew is monotone but not cocoercive, so plain
forward-backward spirals outward; the reflected step converges.
"""

import numpy as np

from bfrb.problems import make_skew_box_vi, oracle_solve
from bfrb.solvers import ConstantStepConfig, constant_step_interval, solve_frb_constant

P = make_skew_box_vi(2)
L = P.A.lipschitz
lo, hi = constant_step_interval(0.1, L, P.g.gamma)
print(f"L = {L}, admissible step interval [{lo}, {hi}]")

run = solve_frb_constant(P, ConstantStepConfig(mu=0.4 / L, delta=0.1, tol=1e-12))
z = oracle_solve(P)
print(f"{run.status.name} after {run.iterations} iterations, {run.a_evals} evaluations of A")
print(f"x = {run.x}, oracle z = {z}, error {np.linalg.norm(run.x - z):.2e}")

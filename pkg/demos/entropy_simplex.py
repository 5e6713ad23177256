"""A bilinear game on the simplex under Euclidean and entropy geometry.

With the entropy kernel the resolvent of the simplex normal cone is a
softmax, so iterates stay strictly inside the simplex.
"""

import numpy as np

from bfrb.problems import make_simplex_game, oracle_solve
from bfrb.solvers import ConstantStepConfig, solve_frb_constant

for geometry in ("euclidean", "entropy"):
    P = make_simplex_game(3, geometry)
    z = oracle_solve(P)
    mu = 0.4 * P.g.gamma / P.A.lipschitz
    run = solve_frb_constant(P, ConstantStepConfig(mu=mu, delta=0.1, tol=1e-11))
    print(f"{geometry:9s} {run.iterations:6d} iterations, min coordinate {run.iterates.min():.2e}, "
          f"error {np.linalg.norm(run.x - z):.1e}")

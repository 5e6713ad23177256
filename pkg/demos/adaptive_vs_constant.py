"""Adaptive steps need no Lipschitz constant and usually take longer steps."""

import numpy as np

from bfrb.problems import make_strongly_monotone_instance
from bfrb.solvers import (
    AdaptiveStepConfig,
    ConstantStepConfig,
    DSchedule,
    solve_frb_adaptive,
    solve_frb_constant,
)

P = make_strongly_monotone_instance(4, tau=1.0, variant="boundary")
z = P.reference_solution
L = P.A.lipschitz

const = solve_frb_constant(P, ConstantStepConfig(mu=0.4 / L, delta=0.1))
adapt = solve_frb_adaptive(P, AdaptiveStepConfig(alpha=0.39, mu0=1.0, mu1=1.0,
                                                 d_schedule=DSchedule.geometric(0.5, 0.1)))

for name, run in (("constant", const), ("adaptive", adapt)):
    print(f"{name:9s} iterations {run.iterations:5d}  error {np.linalg.norm(run.x - z):.1e}  "
          f"final step {run.steps[-1]:.4f}")
print(f"alpha/L = {0.39 / L:.4f} is the floor the adaptive step never goes below")

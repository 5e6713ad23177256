"""A multi-period Cournot gas market with injection and extraction budgets.

Every symmetric equilibrium sells (beta - cost) / (alpha (M + 1)) per firm
and period; the solver reproduces it.
"""

import numpy as np

from bfrb.problems import GasMarketSpec, cournot_output, gas_market_indices, make_gas_market
from bfrb.solvers import ConstantStepConfig, solve_frb_constant

for firms in (1, 2, 4):
    spec = GasMarketSpec(firms=firms, periods=4, alpha=0.5, beta=10.0, cost=1.0, capacity=20.0,
                         budget_coupling=True)
    P = make_gas_market(spec, reference=False)
    run = solve_frb_constant(P, ConstantStepConfig(mu=0.4 / P.A.lipschitz, delta=0.1))
    _, out = gas_market_indices(spec)
    q = cournot_output(spec)
    print(f"M={firms}: closed form {q:.4f}, solver {run.x[out].mean():.6f} "
          f"(max deviation {np.abs(run.x[out] - q).max():.1e}), {run.iterations} iterations")

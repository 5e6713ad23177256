"""Check the energy descent and the O(1/n) rate certificate on a recorded run."""

from bfrb.diagnostics import check_lyapunov_descent, evaluation_report, lyapunov_sequence, rate_certificate
from bfrb.problems import get_problem, oracle_solve
from bfrb.solvers import ConstantStepConfig, solve_frb_constant

P = get_problem("random-monotone", d=6, seed=4)
z = oracle_solve(P)
run = solve_frb_constant(P, ConstantStepConfig(mu=0.4 / P.A.lipschitz, delta=0.1, max_iters=2000, tol=0.0))

lt = lyapunov_sequence(run, z)
print("energy s_n at n = 1, 10, 100:", lt.s[0], lt.s[9], lt.s[99])
for rep in (check_lyapunov_descent(run, z), rate_certificate(run, z), evaluation_report(run)):
    print(f"{rep.name:12s} {rep.status}  {rep.details}")

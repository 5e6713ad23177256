"""Forward-reflected-backward spends one A evaluation per step, Tseng two."""

from bfrb.problems import make_skew_box_vi
from bfrb.solvers import ConstantStepConfig, solve_frb_constant, solve_tseng_baseline

P = make_skew_box_vi(10)
cfg = ConstantStepConfig(mu=0.4 / P.A.lipschitz, delta=0.1)
for run in (solve_frb_constant(P, cfg), solve_tseng_baseline(P, cfg)):
    print(f"{run.method:6s} iterations {run.iterations:5d}  A evaluations {run.a_evals:5d}")

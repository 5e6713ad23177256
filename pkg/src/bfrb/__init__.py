"""Bregman forward-reflected-backward splitting for monotone inclusions."""

from .bregman import (
    Domain,
    GeometryKind,
    LegendreGeometry,
    bregman_distance,
    euclidean,
    geometry_from_config,
    shannon_entropy,
    strong_convexity_certificate,
    three_point_gap,
    weighted_quadratic,
)
from .operators import (
    Box,
    CostPolyhedron,
    ForwardOperator,
    LinearOperator,
    NormalCone,
    ResolventOracle,
    ScaledIdentity,
    Simplex,
    apply_forward,
    bregman_project,
    linear,
    natural_residual,
    normal_cone_box,
    normal_cone_simplex,
    resolvent,
    zero_operator,
)
from .solvers import (
    AdaptiveStepConfig,
    ConstantStepConfig,
    DSchedule,
    ProblemInstance,
    SolverRun,
    Termination,
    solve_frb_adaptive,
    solve_frb_constant,
    solve_projected_adaptive,
    solve_projected_constant,
    solve_proximal_point,
    solve_tseng_baseline,
    step_size_update,
    validate_parameters,
)
from .diagnostics import check_lyapunov_descent, evaluation_report, rate_certificate
from .problems import (
    GasMarketSpec,
    make_gas_market,
    make_skew_box_vi,
    make_strongly_monotone_instance,
    oracle_solve,
)

__version__ = "0.1.0"

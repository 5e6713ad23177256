import numpy as np
import pytest

from bfrb.errors import InvalidSpec, TauNonpositive
from bfrb.operators import audit_forward, natural_residual
from bfrb.problems import (
    SHIPPED,
    GasMarketSpec,
    cournot_output,
    gas_market_indices,
    get_problem,
    make_gas_market,
    make_skew_box_vi,
    make_strongly_monotone_instance,
    oracle_solve,
)
from instances import BUILDERS, build


def test_skew_box_structure():
    P = make_skew_box_vi(2)
    np.testing.assert_array_equal(P.A.matrix, [[0, 1], [-1, 0]])
    np.testing.assert_array_equal(P.reference_solution, [0, 0])
    assert natural_residual(P.A, P.B, P.g, 0.4, np.array([0.5, 0.5])) > 0


def test_skew_box_d10_origin():
    P = make_skew_box_vi(10)
    np.testing.assert_allclose(oracle_solve(P), np.zeros(10), atol=1e-12)


def test_skew_box_rejects_odd_dimension():
    with pytest.raises(ValueError):
        make_skew_box_vi(3)


def test_strongly_monotone_interior_reference():
    P = make_strongly_monotone_instance(2, 1.0, "interior")
    np.testing.assert_array_equal(P.reference_solution, [0.3, -0.2])
    np.testing.assert_allclose(oracle_solve(P), [0.3, -0.2], atol=1e-10)


def test_strongly_monotone_boundary_reference():
    P = make_strongly_monotone_instance(2, 1.0, "boundary")
    z = oracle_solve(P)
    np.testing.assert_allclose(z, P.reference_solution, atol=1e-10)
    assert z[0] == pytest.approx(1.0)


def test_tau_zero_rejected():
    with pytest.raises(TauNonpositive):
        make_strongly_monotone_instance(2, 0.0)


def test_cournot_duopoly_three():
    P = get_problem("cournot")
    z = oracle_solve(P)
    _, idx_out = gas_market_indices(P.metadata["spec"])
    np.testing.assert_allclose(z[idx_out.ravel()], 3.0, atol=1e-10)
    assert natural_residual(P.A, P.B, P.g, 1.0, z) <= 1e-10


def test_monopoly():
    spec = GasMarketSpec(firms=1, periods=1, alpha=1.0, beta=10.0, cost=1.0, capacity=10.0)
    P = make_gas_market(spec)
    assert P.reference_solution[1] == pytest.approx((10 - 1) / 2, abs=1e-10)
    assert cournot_output(spec) == pytest.approx(4.5)


def test_cournot_without_coupling():
    spec = GasMarketSpec(firms=2, periods=1, alpha=1.0, beta=10.0, cost=1.0, budget_coupling=False)
    P = make_gas_market(spec)
    _, idx_out = gas_market_indices(spec)
    np.testing.assert_allclose(P.reference_solution[idx_out.ravel()], cournot_output(spec), atol=1e-9)
    # injection costs money and is not needed, so nothing is injected
    np.testing.assert_allclose(P.reference_solution[[0, 2]], 0.0, atol=1e-12)


def test_symmetric_equilibrium():
    spec = GasMarketSpec(firms=3, periods=2, alpha=0.5, capacity=20.0)
    P = make_gas_market(spec)
    _, idx_out = gas_market_indices(spec)
    out = P.reference_solution[idx_out]
    assert np.ptp(out) <= 1e-9


def test_gas_operator_monotone_and_lipschitz(rng):
    P = make_gas_market(GasMarketSpec(firms=4, periods=4, alpha=0.5, capacity=20.0), reference=False)
    pairs = [(rng.normal(0, 5, P.dimension), rng.normal(0, 5, P.dimension)) for _ in range(300)]
    audit = audit_forward(P.A, pairs)
    assert audit.min_pairing >= -1e-10
    assert audit.max_lipschitz_ratio <= P.A.lipschitz * (1 + 1e-12)
    assert P.A.lipschitz == pytest.approx(np.linalg.norm(P.A.matrix, 2), rel=1e-12)


def test_gas_spec_validation():
    with pytest.raises(InvalidSpec):
        make_gas_market(GasMarketSpec(firms=0))
    with pytest.raises(InvalidSpec):
        make_gas_market(GasMarketSpec(capacity=[1.0, 2.0, 3.0]))
    with pytest.raises(InvalidSpec):
        cournot_output(GasMarketSpec(cost=[1.0, 2.0]))


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_reference_residual_two_steps(name):
    P = get_problem(name)
    z = P.reference_solution
    for mu in (0.5, 1.0):
        assert natural_residual(P.A, P.B, P.g, mu, z) <= 1e-8


def test_oracle_matches_frozen(frozen):
    for name in BUILDERS:
        np.testing.assert_allclose(oracle_solve(build(name)), frozen["solutions"][name], atol=1e-9, err_msg=name)


def test_random_instance_is_reproducible():
    a = get_problem("random-monotone", seed=5)
    b = get_problem("random-monotone", seed=5)
    np.testing.assert_array_equal(a.A.matrix, b.A.matrix)
    np.testing.assert_array_equal(a.reference_solution, b.reference_solution)


def test_oracle_independent_of_solvers():
    import ast
    from pathlib import Path

    import bfrb.problems as mod

    tree = ast.parse(Path(mod.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom) and node.module == "solvers":
            imported |= {a.name for a in node.names}
    assert imported == {"ProblemInstance"}


def test_unknown_problem():
    with pytest.raises(KeyError):
        get_problem("nope")

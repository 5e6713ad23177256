import numpy as np
import pytest

from bfrb.bregman import euclidean, shannon_entropy, weighted_quadratic
from bfrb.errors import DimensionMismatch, EmptyConstraint, NoClosedForm
from bfrb.operators import (
    Box,
    CostPolyhedron,
    ScaledIdentity,
    Simplex,
    apply_forward,
    audit_forward,
    bregman_project,
    constant_field,
    linear,
    natural_residual,
    normal_cone_box,
    normal_cone_simplex,
    resolvent,
    resolvent_membership,
    spectral_norm,
    zero_operator,
)
from bfrb.problems import make_skew_box_vi


def test_apply_linear_skew():
    A = linear([[0, 1], [-1, 0]])
    np.testing.assert_array_equal(apply_forward(A, [1.0, 0.0]), [0.0, -1.0])
    assert A.eval_count == 1


def test_apply_zero_counts():
    A = zero_operator(3)
    np.testing.assert_array_equal(apply_forward(A, np.ones(3)), np.zeros(3))
    assert A.eval_count == 1 and A.is_zero


def test_apply_scaled():
    A = linear(2 * np.eye(2))
    np.testing.assert_array_equal(A([1.0, 1.0]), [2.0, 2.0])
    assert A.lipschitz == pytest.approx(2.0, rel=1e-10)
    assert A.strong_monotonicity == pytest.approx(2.0)


def test_apply_rejects_wrong_shape():
    with pytest.raises(DimensionMismatch):
        linear(np.eye(2)).apply(np.ones(3))


def test_linear_rejects_nonmonotone():
    with pytest.raises(ValueError):
        linear([[-1.0, 0.0], [0.0, 1.0]])


def test_spectral_norm_matches_svd(rng):
    for _ in range(5):
        M = rng.normal(size=(6, 6))
        assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)
    assert spectral_norm(np.zeros((3, 3))) == 0.0


def test_resolvent_scaled_identity():
    np.testing.assert_allclose(resolvent(ScaledIdentity(1.0), euclidean(1), 1.0, [1.0]), [0.5])


def test_resolvent_box_clamp():
    B = normal_cone_box([0, 0], [1, 1])
    np.testing.assert_array_equal(resolvent(B, euclidean(2), 1.0, [2.0, -0.5]), [1.0, 0.0])


def test_resolvent_entropy_simplex_fixed_point():
    B = normal_cone_simplex(3)
    y = resolvent(B, shannon_entropy(3, 1.0), 1.0, [0.2, 0.2, 0.6])
    np.testing.assert_allclose(y, [0.2, 0.2, 0.6], atol=1e-15)


def test_project_box():
    np.testing.assert_array_equal(bregman_project(euclidean(2), Box([0, 0], [1, 1]), [2.0, 0.5]), [1.0, 0.5])


def test_project_member_is_fixed(rng):
    C = Simplex(4)
    for g in (euclidean(4), weighted_quadratic([1, 2, 3, 4]), shannon_entropy(4, 1.0)):
        x = rng.dirichlet(np.ones(4))
        np.testing.assert_allclose(bregman_project(g, C, x), x, atol=1e-14)


def test_project_entropy_simplex_normalises():
    y = bregman_project(shannon_entropy(3, 1.0), Simplex(3), [2.0, 1.0, 1.0])
    np.testing.assert_allclose(y, [0.5, 0.25, 0.25])


def test_entropy_simplex_projection_solves_kkt():
    # argmin KL(y, x) on the simplex: log(y/x) = const on the support
    x = np.array([2.0, 1.0, 1.0])
    y = bregman_project(shannon_entropy(3, 1.0), Simplex(3), x)
    r = np.log(y / x)
    assert np.ptp(r) <= 1e-14 and y.sum() == pytest.approx(1.0)


def test_euclidean_simplex_projection_against_brute_force(rng):
    from scipy.optimize import minimize

    for _ in range(10):
        x = rng.normal(size=4)
        y = bregman_project(euclidean(4), Simplex(4), x)
        res = minimize(lambda z: 0.5 * np.sum((z - x) ** 2), np.full(4, 0.25), method="SLSQP",
                       bounds=[(0, None)] * 4, constraints=[{"type": "eq", "fun": lambda z: z.sum() - 1}],
                       options={"ftol": 1e-14})
        np.testing.assert_allclose(y, res.x, atol=1e-6)


def test_normal_cone_resolvent_independent_of_mu(rng):
    g = euclidean(3)
    B = normal_cone_box(-np.ones(3), np.ones(3))
    for x in rng.normal(0, 2, (20, 3)):
        ys = [resolvent(B, g, mu, x) for mu in (0.1, 1.0, 10.0)]
        assert max(np.abs(ys[0] - y).max() for y in ys) <= 1e-12


def test_natural_residual_zero_at_solution():
    A = zero_operator(1)
    assert natural_residual(A, ScaledIdentity(1.0), euclidean(1), 1.0, [0.0]) == 0.0


def test_natural_residual_scaled_identity():
    A = zero_operator(1)
    assert natural_residual(A, ScaledIdentity(1.0), euclidean(1), 1.0, [1.0]) == pytest.approx(0.5)


def test_natural_residual_at_oracle_solution():
    P = make_skew_box_vi(2)
    assert natural_residual(P.A, P.B, P.g, 0.4, P.reference_solution) <= 1e-8


def test_resolvent_does_not_touch_counter(rng):
    A = linear(np.eye(2))
    B = normal_cone_box([0, 0], [1, 1])
    for _ in range(10):
        resolvent(B, euclidean(2), 0.5, rng.normal(size=2))
        bregman_project(euclidean(2), Box([0, 0], [1, 1]), rng.normal(size=2))
    assert A.eval_count == 0


def test_membership_all_oracles(rng):
    g = euclidean(4)
    oracles = [
        normal_cone_box(-np.ones(4), np.ones(4)),
        normal_cone_simplex(4),
        ScaledIdentity(2.0, np.arange(4.0)),
        CostPolyhedron(np.zeros(4), [3.0, np.inf, 3.0, np.inf], [1.0, 0, 1.0, 0],
                       [([0, 1], [-1.0, 1.0], 0.0), ([2, 3], [-1.0, 1.0], 0.0)]),
    ]
    for B in oracles:
        for _ in range(50):
            _, ok = resolvent_membership(B, g, rng.uniform(0.05, 5), rng.normal(0, 4, 4))
            assert ok, B.name


def test_membership_detects_wrong_point():
    B = normal_cone_box([0, 0], [1, 1])
    assert not B.contains(np.array([0.5, 0.5]), np.array([1.0, 0.0]), 1e-9)
    assert not B.contains(np.array([2.0, 0.5]), np.zeros(2), 1e-9)
    S = ScaledIdentity(1.0)
    assert not S.contains(np.array([1.0]), np.array([0.0]), 1e-9)


def test_scaled_identity_entropy_resolvent():
    g = shannon_entropy(3, 1.0)
    B = ScaledIdentity(2.0, np.ones(3))
    x = np.array([0.5, 1.5, 3.0])
    y, ok = resolvent_membership(B, g, 0.7, x)
    assert ok
    np.testing.assert_allclose(np.log(y) + 0.7 * 2.0 * (y - 1.0), np.log(x), atol=1e-12)


def test_cost_polyhedron_entropy_has_no_closed_form():
    B = CostPolyhedron(np.zeros(2), np.ones(2))
    with pytest.raises(NoClosedForm):
        resolvent(B, shannon_entropy(2, 1.0), 1.0, [0.5, 0.5])


def test_weighted_box_halfspace_projection_is_optimal(rng):
    from scipy.optimize import minimize

    w = np.array([1.0, 3.0, 2.0])
    g = weighted_quadratic(w)
    B = CostPolyhedron(np.zeros(3), [2.0, 2.0, np.inf], None, [([0, 1, 2], [1.0, -1.0, 1.0], 0.5)])
    for _ in range(5):
        x = rng.normal(0, 2, 3)
        y = resolvent(B, g, 1.0, x)
        res = minimize(lambda z: 0.5 * np.sum(w * (z - x) ** 2), np.zeros(3), method="SLSQP",
                       bounds=[(0, 2), (0, 2), (0, None)],
                       constraints=[{"type": "ineq", "fun": lambda z: 0.5 - (z[0] - z[1] + z[2])}],
                       options={"ftol": 1e-14})
        np.testing.assert_allclose(y, res.x, atol=1e-6)


def test_empty_constraints():
    with pytest.raises(EmptyConstraint):
        Box([1.0], [0.0])
    with pytest.raises(EmptyConstraint):
        Simplex(0)
    with pytest.raises(EmptyConstraint):
        resolvent(CostPolyhedron([1.0, 1.0], [2.0, 2.0], None, [([0, 1], [1.0, 1.0], 0.0)]),
                  euclidean(2), 1.0, [0.0, 0.0])


def test_audit_respects_declared_constants(rng):
    M = rng.normal(size=(4, 4))
    M = M - M.T + 0.5 * np.eye(4)
    A = linear(M, rng.normal(size=4))
    pairs = [(rng.normal(size=4), rng.normal(size=4)) for _ in range(200)]
    audit = audit_forward(A, pairs)
    assert audit.consistent_with(A)
    assert audit.min_monotonicity_ratio >= 0.5 - 1e-9


def test_constant_field_is_monotone():
    A = constant_field([1.0, -2.0])
    np.testing.assert_array_equal(A(np.zeros(2)), [1.0, -2.0])
    assert not A.is_zero

"""Shipped problem instances and an independent ground-truth oracle.

The oracle never calls into :mod:`bfrb.solvers`. For a linear ``A`` and a
polyhedral ``B`` it enumerates active sets (fewest active constraints first)
and solves the KKT system directly; past a pattern budget it runs a plain
extragradient loop of its own, then polishes the result by solving the KKT
system on the identified active set. Every answer is certified by its
Euclidean natural residual before it is returned.
"""

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .bregman import euclidean, shannon_entropy
from .errors import InvalidSpec, OracleFailure, TauNonpositive
from .operators import (
    Box,
    CostPolyhedron,
    LinearOperator,
    NormalCone,
    ScaledIdentity,
    Simplex,
    linear,
    normal_cone_box,
    normal_cone_simplex,
    zero_operator,
)
from .solvers import ProblemInstance

# --------------------------------------------------------------------------
# building blocks


def block_skew(d, scale=1.0):
    """Block-diagonal rotation generator; an odd trailing coordinate gets a zero block."""
    S = np.zeros((d, d))
    for i in range(0, d - 1, 2):
        S[i, i + 1] = scale
        S[i + 1, i] = -scale
    return S


def cyclic_skew(d):
    """``R[i, i+1] = 1``, ``R[i, i-1] = -1`` (mod d): rock-paper-scissors for d = 3."""
    R = np.zeros((d, d))
    for i in range(d):
        R[i, (i + 1) % d] += 1.0
        R[i, (i - 1) % d] -= 1.0
    return R


def make_skew_box_vi(d=2, box_radius=1.0):
    """Rotation field on a box: monotone, not strongly monotone, zero at the origin."""
    if d % 2:
        raise ValueError("skew-box instance needs an even dimension")
    r = float(box_radius)
    A = linear(block_skew(d), lipschitz=1.0, name="skew")
    B = normal_cone_box(-r * np.ones(d), r * np.ones(d))
    v0 = 0.5 * r * np.ones(d)
    return ProblemInstance(A, B, euclidean(d), v0, v0.copy(), np.zeros(d), label=f"skew-box-{d}",
                           metadata={"name": "skew-box", "d": d, "box_radius": r})


def _tiled_point(d):
    return np.resize(np.array([0.3, -0.2]), d)


def make_strongly_monotone_instance(d=2, tau=1.0, variant="interior", skew=1.0):
    """Instances with a unique zero known by construction.

    ``variant``:

    * ``"interior"``: A = tau I + skew S + b on the box [-1, 1]^d, zero interior;
    * ``"boundary"``: same A with the zero pinned to the face ``x_0 = 1``;
    * ``"resolvent"``: A = skew S + b monotone only, B = tau (x - 0) strongly
      monotone (scaled identity).
    """
    tau = float(tau)
    if not tau > 0:
        raise TauNonpositive(f"strongly monotone instance needs tau > 0, got {tau}")
    S = block_skew(d, skew)
    z = _tiled_point(d)
    lo, hi = -np.ones(d), np.ones(d)
    v0 = 0.5 * np.ones(d)
    meta = {"name": f"strongly-monotone-{variant}", "d": d, "tau": tau, "skew": skew}
    if variant == "interior":
        M = tau * np.eye(d) + S
        A = linear(M, -M @ z, lipschitz=float(np.hypot(tau, skew)) if d > 1 else tau)
        B = normal_cone_box(lo, hi)
    elif variant == "boundary":
        M = tau * np.eye(d) + S
        z = z.copy()
        z[0] = 1.0
        normal = np.zeros(d)
        normal[0] = 0.5
        # A z = -normal, and normal lies in N_box(z) because z_0 sits on the upper face
        A = linear(M, -M @ z - normal, lipschitz=float(np.hypot(tau, skew)) if d > 1 else tau)
        B = normal_cone_box(lo, hi)
        v0 = -0.5 * np.ones(d)
    elif variant == "resolvent":
        A = linear(S, -S @ z - tau * z, lipschitz=float(skew) if d > 1 else 1.0)
        B = ScaledIdentity(tau, np.zeros(d))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return ProblemInstance(A, B, euclidean(d), v0, v0.copy(), z, label=f"strongly-monotone-{variant}-{d}",
                           metadata=meta)


def make_simplex_game(d=3, geometry="euclidean"):
    """Symmetric zero-sum game VI(simplex, R x) with cyclic skew R; uniform equilibrium."""
    R = cyclic_skew(d)
    A = linear(R, name="cyclic-skew")
    B = normal_cone_simplex(d)
    if geometry == "entropy":
        # Hessian diag(1/x) >= I on the simplex, so gamma = 1 in the 2-norm
        g = shannon_entropy(d, 1.0)
    else:
        g = euclidean(d)
    v0 = np.arange(1, d + 1, dtype=float)
    v0 /= v0.sum()
    return ProblemInstance(A, B, g, v0, v0.copy(), np.full(d, 1.0 / d), label=f"simplex-game-{d}",
                           metadata={"name": "simplex-game", "d": d, "geometry": geometry})


def make_prox_instance(c=1.0, center=(0.0,), v1=(8.0,)):
    """A = 0, B x = c (x - center): the inclusion's only zero is ``center``."""
    center = np.asarray(center, dtype=float)
    d = center.size
    return ProblemInstance(zero_operator(d), ScaledIdentity(c, center), euclidean(d),
                           np.asarray(v1, float), None, center.copy(), label="prox-scaled-identity",
                           metadata={"name": "prox-scaled-identity", "c": c})


# --------------------------------------------------------------------------
# gas market


@dataclass
class GasMarketSpec:
    """Time-discretised single-pipe gas market.

    Per firm and period the decisions are injection ``q_in`` and withdrawal
    ``q_out``; the decision vector has length ``2 * firms * periods`` with
    firm ``i``'s block laid out as ``[q_in(1..K), q_out(1..K)]``. Integrals
    over ``[0, horizon]`` become sums weighted by ``horizon / periods``.
    """

    firms: int = 2
    periods: int = 1
    alpha: float = 1.0
    beta: float = 10.0
    cost: Union[float, Sequence[float]] = 1.0
    capacity: Union[float, Sequence[float]] = 10.0
    budget_coupling: bool = True
    horizon: float = 1.0

    def validate(self):
        if int(self.firms) < 1 or int(self.periods) < 1:
            raise InvalidSpec("firms and periods must be >= 1")
        if not (self.alpha > 0 and self.beta > 0 and self.horizon > 0):
            raise InvalidSpec("alpha, beta and horizon must be positive")
        c, cap = self.costs, self.capacities
        if np.any(c < 0):
            raise InvalidSpec("costs must be nonnegative")
        if np.any(cap <= 0):
            raise InvalidSpec("capacities must be positive")
        return self

    def _per_firm(self, v, what):
        arr = np.broadcast_to(np.asarray(v, dtype=float), (int(self.firms),)).copy() \
            if np.ndim(v) == 0 else np.asarray(v, dtype=float)
        if arr.shape != (int(self.firms),):
            raise InvalidSpec(f"{what} must be a scalar or have one entry per firm")
        return arr

    @property
    def costs(self):
        return self._per_firm(self.cost, "cost")

    @property
    def capacities(self):
        return self._per_firm(self.capacity, "capacity")

    @property
    def dimension(self):
        return 2 * int(self.firms) * int(self.periods)

    @property
    def step(self):
        return self.horizon / int(self.periods)


def gas_market_indices(spec):
    """``(idx_in, idx_out)``, each of shape (firms, periods)."""
    M, K = int(spec.firms), int(spec.periods)
    base = 2 * K * np.arange(M)[:, None]
    k = np.arange(K)[None, :]
    return base + k, base + K + k


def cournot_output(spec):
    """Per-firm withdrawal of the symmetric linear Cournot equilibrium.

    With budget coupling the injection cost is the marginal cost of selling,
    giving ``(beta - c) / (alpha (M + 1))``; without it injections are free to
    stay at zero and the output is ``beta / (alpha (M + 1))``.
    """
    c = spec.costs
    if not np.allclose(c, c[0]):
        raise InvalidSpec("closed form needs identical costs")
    M = int(spec.firms)
    marginal = c[0] if spec.budget_coupling else 0.0
    return (spec.beta - marginal) / (spec.alpha * (M + 1))


def make_gas_market(spec, start=1.0, reference=True):
    """Linear monotone inclusion of the gas-market Nash game.

    A acts on withdrawals only: per period, firm i receives
    ``h alpha (sum_k q_k_out + q_i_out) - h beta``. B is the subdifferential of
    the injection cost ``h c_i q_in`` plus the normal cone of
    ``0 <= q_in <= cap``, ``q_out >= 0`` and (optionally) ``sum(q_out - q_in) <= 0``.
    """
    spec.validate()
    M, K = int(spec.firms), int(spec.periods)
    h = spec.step
    d = spec.dimension
    idx_in, idx_out = gas_market_indices(spec)
    mat = np.zeros((d, d))
    off = np.zeros(d)
    for k in range(K):
        cols = idx_out[:, k]
        mat[np.ix_(cols, cols)] = h * spec.alpha * (np.ones((M, M)) + np.eye(M))
        off[cols] = -h * spec.beta
    # eigenvalues of alpha (11^T + I) are alpha (M + 1) and alpha
    L = h * spec.alpha * (M + 1)
    A = LinearOperator(mat, off, lipschitz=L, name="gas-market")

    lower = np.zeros(d)
    upper = np.full(d, np.inf)
    cost = np.zeros(d)
    caps, costs = spec.capacities, spec.costs
    for i in range(M):
        upper[idx_in[i]] = caps[i]
        cost[idx_in[i]] = h * costs[i]
    halfspaces = []
    if spec.budget_coupling:
        for i in range(M):
            idx = np.concatenate([idx_in[i], idx_out[i]])
            coef = np.concatenate([-np.ones(K), np.ones(K)])
            halfspaces.append((idx, coef, 0.0))
    B = CostPolyhedron(lower, upper, cost, halfspaces)

    v0 = np.full(d, float(start)) if np.ndim(start) == 0 else np.asarray(start, float)
    P = ProblemInstance(A, B, euclidean(d), v0, v0.copy(), None, label=f"gas-market-{M}x{K}",
                        metadata={"name": "gas-market", "spec": spec})
    if reference:
        P.reference_solution = oracle_solve(P)
    return P


# --------------------------------------------------------------------------
# oracle


@dataclass
class _Polyhedral:
    lower: np.ndarray
    upper: np.ndarray
    cost: np.ndarray
    G: np.ndarray  # inequality rows G x <= h
    h: np.ndarray
    E: np.ndarray  # equality rows E x = e
    e: np.ndarray


def _polyhedral_form(B, d):
    empty = np.zeros((0, d))
    if isinstance(B, NormalCone) and isinstance(B.constraint, Box):
        C = B.constraint
        return _Polyhedral(C.lower, C.upper, np.zeros(d), empty, np.zeros(0), empty, np.zeros(0))
    if isinstance(B, NormalCone) and isinstance(B.constraint, Simplex):
        C = B.constraint
        return _Polyhedral(np.zeros(d), np.full(d, np.inf), np.zeros(d), empty, np.zeros(0),
                           np.ones((1, d)), np.array([C.total]))
    if isinstance(B, CostPolyhedron):
        rows = []
        for idx, a, _ in B.halfspaces:
            r = np.zeros(d)
            r[idx] = a
            rows.append(r)
        G = np.array(rows) if rows else empty
        hv = np.array([b for _, _, b in B.halfspaces])
        return _Polyhedral(B.box.lower, B.box.upper, B.cost, G, hv, empty, np.zeros(0))
    return None


def _euclidean_residual(M, q, B, x, mu=1.0):
    g = euclidean(x.size)
    y = B.resolve_dual(g, mu, x - mu * (M @ x + q))
    return float(np.linalg.norm(x - y))


def _kkt_solve(M, q, poly, lo_set, hi_set, act_rows, tol):
    """Solve the KKT system for one active pattern; return x or None."""
    d = q.size
    q = q + poly.cost
    fixed = np.zeros(d, dtype=bool)
    x = np.zeros(d)
    lo_idx, hi_idx = list(lo_set), list(hi_set)
    x[lo_idx] = poly.lower[lo_idx]
    x[hi_idx] = poly.upper[hi_idx]
    fixed[lo_idx] = True
    fixed[hi_idx] = True
    F = np.nonzero(~fixed)[0]
    Ga = poly.G[list(act_rows)]
    Cmat = np.vstack([Ga, poly.E])  # active rows with multipliers
    rhs_c = np.concatenate([poly.h[list(act_rows)], poly.e])
    nF, nc = F.size, Cmat.shape[0]
    K = np.zeros((nF + nc, nF + nc))
    K[:nF, :nF] = M[np.ix_(F, F)]
    K[:nF, nF:] = Cmat[:, F].T
    K[nF:, :nF] = Cmat[:, F]
    xf = x[fixed]
    r1 = -(q[F] + M[np.ix_(F, np.nonzero(fixed)[0])] @ xf)
    r2 = rhs_c - Cmat[:, fixed] @ xf
    rhs = np.concatenate([r1, r2])
    if K.size:
        sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        if np.linalg.norm(K @ sol - rhs) > tol * (1 + np.linalg.norm(rhs)):
            return None
        x[F] = sol[:nF]
        lam = sol[nF:]
    else:
        lam = np.zeros(0)
    na = len(act_rows)
    if np.any(lam[:na] < -tol):
        return None
    # primal feasibility
    if np.any(x < poly.lower - tol) or np.any(x > poly.upper + tol):
        return None
    if poly.G.shape[0] and np.any(poly.G @ x > poly.h + tol):
        return None
    # bound-multiplier signs: r = nu_lower - nu_upper
    r = M @ x + q + Cmat.T @ lam
    lo_only = [i for i in lo_idx if i not in hi_set]
    hi_only = [i for i in hi_idx if i not in lo_set]
    if np.any(r[lo_only] < -tol) or np.any(r[hi_only] > tol):
        return None
    return x


def _active_set_enumerate(M, q, poly, tol, budget):
    d = q.size
    cands = []
    for i in range(d):
        if np.isfinite(poly.lower[i]):
            cands.append(("lo", i))
        if np.isfinite(poly.upper[i]) and poly.upper[i] != poly.lower[i]:
            cands.append(("hi", i))
    cands += [("row", j) for j in range(poly.G.shape[0])]
    tried = 0
    for k in range(len(cands) + 1):
        for combo in itertools.combinations(cands, k):
            tried += 1
            if tried > budget:
                return None
            lo_set = {i for t, i in combo if t == "lo"}
            hi_set = {i for t, i in combo if t == "hi"}
            if lo_set & hi_set:
                continue
            # coordinates with lower == upper are always pinned
            pinned = {i for i in range(d) if poly.lower[i] == poly.upper[i]}
            lo_set |= pinned
            rows = [j for t, j in combo if t == "row"]
            x = _kkt_solve(M, q, poly, lo_set, hi_set, rows, tol)
            if x is not None:
                return x
    return None


def _identify_and_polish(M, q, poly, x, tol):
    scale = 1e-7 * (1 + np.abs(x))
    lo_set = set(np.nonzero(np.abs(x - poly.lower) <= scale)[0].tolist())
    hi_set = set(np.nonzero(np.abs(x - poly.upper) <= scale)[0].tolist()) - lo_set
    rows = []
    if poly.G.shape[0]:
        rows = np.nonzero(np.abs(poly.G @ x - poly.h) <= 1e-7 * (1 + np.abs(poly.h)))[0].tolist()
    return _kkt_solve(M, q, poly, lo_set, hi_set, rows, tol)


def _extragradient(M, q, B, x, L, precision, max_iters):
    g = euclidean(x.size)
    mu = 1.0 / (2.0 * L) if L > 0 else 1.0
    for it in range(max_iters):
        Fx = M @ x + q
        xbar = B.resolve_dual(g, mu, x - mu * Fx)
        if np.linalg.norm(x - xbar) <= 0.1 * precision * mu:
            return xbar
        x = B.resolve_dual(g, mu, x - mu * (M @ xbar + q))
    return x


def oracle_solve(P, precision=1e-10, max_iters=1_000_000, pattern_budget=2_000):
    """High-accuracy zero of ``A + B`` computed independently of the FRB solvers.

    Runs in Euclidean geometry; raises :class:`OracleFailure` if the certified
    natural residual exceeds ``precision``.
    """
    A, B = P.A, P.B
    d = P.dimension
    if isinstance(A, LinearOperator):
        M, q = np.array(A.matrix), np.array(A.offset)
    else:
        raise OracleFailure("oracle needs a linear forward operator")
    L = A.lipschitz if A.lipschitz else np.linalg.norm(M, 2)
    tol = 1e-11

    candidates = []
    if isinstance(B, ScaledIdentity):
        s = B._s(d)
        candidates.append(np.linalg.solve(M + B.c * np.eye(d), B.c * s - q))
    else:
        poly = _polyhedral_form(B, d)
        if poly is None:
            raise OracleFailure(f"oracle has no polyhedral description of {type(B).__name__}")
        x = _active_set_enumerate(M, q, poly, tol, pattern_budget)
        if x is not None:
            candidates.append(x)
        else:
            x0 = np.array(P.v1, dtype=float)
            x = _extragradient(M, q, B, x0, L, precision, max_iters)
            candidates.append(x)
            polished = _identify_and_polish(M, q, poly, x, tol)
            if polished is not None:
                candidates.append(polished)

    best, best_res = None, np.inf
    for x in candidates:
        res = max(_euclidean_residual(M, q, B, x, 1.0), _euclidean_residual(M, q, B, x, 0.5))
        if res < best_res:
            best, best_res = x, res
    if best is None or best_res > precision:
        raise OracleFailure(f"oracle residual {best_res:.3e} above requested precision {precision:.1e}")
    return best


# --------------------------------------------------------------------------
# registry


@dataclass
class ShippedProblem:
    name: str
    description: str
    builder: object
    defaults: dict = field(default_factory=dict)

    def build(self, **overrides):
        kwargs = {**self.defaults, **overrides}
        return self.builder(**kwargs)


def make_random_monotone(d=4, seed=0, tau=0.0, box_radius=1.0):
    """Random monotone affine map on a box; reference from :func:`oracle_solve`.

    ``M = tau I + G G^T / (4 d) + (H - H^T) / 2`` with Gaussian ``G, H`` drawn
    from ``numpy.random.default_rng(seed)``.
    """
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((d, d))
    H = rng.standard_normal((d, d))
    M = tau * np.eye(d) + G @ G.T / (4 * d) + 0.5 * (H - H.T)
    b = 0.5 * rng.standard_normal(d)
    r = float(box_radius)
    A = linear(M, b, name="random-monotone")
    B = normal_cone_box(-r * np.ones(d), r * np.ones(d))
    v0 = rng.uniform(-r, r, d)
    P = ProblemInstance(A, B, euclidean(d), v0, v0.copy(), None, label=f"random-monotone-{d}-{seed}",
                        metadata={"name": "random-monotone", "d": d, "seed": seed, "tau": tau})
    P.reference_solution = oracle_solve(P)
    return P


def _gas(**kw):
    start = kw.pop("start", 1.0)
    return make_gas_market(GasMarketSpec(**kw), start=start)


SHIPPED = {
    p.name: p
    for p in [
        ShippedProblem("skew-box", "rotation field on a box, zero at the origin", make_skew_box_vi,
                       {"d": 2, "box_radius": 1.0}),
        ShippedProblem("strongly-monotone", "tau I + skew on a box, interior zero",
                       make_strongly_monotone_instance, {"d": 2, "tau": 1.0, "variant": "interior"}),
        ShippedProblem("strongly-monotone-boundary", "tau I + skew on a box, zero on a face",
                       make_strongly_monotone_instance, {"d": 2, "tau": 1.0, "variant": "boundary"}),
        ShippedProblem("strongly-monotone-resolvent", "skew A with strongly monotone scaled-identity B",
                       make_strongly_monotone_instance, {"d": 2, "tau": 1.0, "variant": "resolvent"}),
        ShippedProblem("simplex-game", "cyclic zero-sum game on the simplex", make_simplex_game,
                       {"d": 3}),
        ShippedProblem("prox-scaled-identity", "A = 0, B = c (x - center)", make_prox_instance,
                       {"c": 1.0, "center": (3.0,), "v1": (8.0,)}),
        ShippedProblem("cournot", "symmetric gas-market Cournot game", _gas,
                       {"firms": 2, "periods": 1, "alpha": 1.0, "beta": 10.0, "cost": 1.0,
                        "capacity": 10.0, "budget_coupling": True}),
        ShippedProblem("random-monotone", "seeded random monotone affine map on a box",
                       make_random_monotone, {"d": 4, "seed": 0}),
        ShippedProblem("gas-market", "4 firms, 4 periods, budget-coupled gas market", _gas,
                       {"firms": 4, "periods": 4, "alpha": 0.5, "beta": 10.0, "cost": 1.0,
                        "capacity": 20.0, "budget_coupling": True}),
    ]
}


def get_problem(name, **overrides):
    if name not in SHIPPED:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(sorted(SHIPPED))}")
    return SHIPPED[name].build(**overrides)

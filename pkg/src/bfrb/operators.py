"""Forward operators A, resolvent oracles for B, and Bregman projections.

A resolvent oracle implements ``resolve_dual(g, mu, xi)``, the map
``(grad g + mu B)^{-1}(xi)`` evaluated at a dual point. The primal resolvent
``Res^g_{mu B}(x)`` is ``resolve_dual(g, mu, grad g(x))``. Working from the
dual point lets the splitting solvers skip a ``grad g o grad g*`` round trip,
so the A = 0 and B = N_C specialisations reproduce the proximal-point and
projected iterations bit for bit.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bregman import GeometryKind
from .errors import DimensionMismatch, EmptyConstraint, NoClosedForm

_QUADRATIC = (GeometryKind.EUCLIDEAN, GeometryKind.WEIGHTED_QUADRATIC)
_SEPARABLE = _QUADRATIC + (GeometryKind.SHANNON_ENTROPY,)


# --------------------------------------------------------------------------
# forward operators


class ForwardOperator:
    """Single-valued operator with an evaluation counter.

    ``eval_count`` goes up by exactly one per :meth:`apply` call; nothing else
    in the package touches it.
    """

    def __init__(self, fn, dimension, lipschitz=None, strong_monotonicity=None, name="A"):
        self._fn = fn
        self.dimension = int(dimension)
        self.lipschitz = None if lipschitz is None else float(lipschitz)
        self.strong_monotonicity = None if strong_monotonicity is None else float(strong_monotonicity)
        self.name = name
        self.eval_count = 0

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionMismatch(f"{self.name} expects shape ({self.dimension},), got {x.shape}")
        self.eval_count += 1
        return np.asarray(self._fn(x), dtype=float)

    __call__ = apply

    def reset_count(self):
        self.eval_count = 0

    @property
    def is_zero(self):
        return False

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, d={self.dimension}, L={self.lipschitz})"


class LinearOperator(ForwardOperator):
    """``A x = M x + b`` with a monotone ``M`` (PSD symmetric part)."""

    def __init__(self, matrix, offset=None, lipschitz=None, name="linear"):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got shape {M.shape}")
        d = M.shape[0]
        b = np.zeros(d) if offset is None else np.array(offset, dtype=float)
        if b.shape != (d,):
            raise DimensionMismatch(f"offset must have shape ({d},), got {b.shape}")
        tau = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min()) if d else 0.0
        scale = max(1.0, float(np.abs(M).max(initial=0.0)))
        if tau < -1e-12 * scale:
            raise ValueError(f"matrix is not monotone: symmetric part has eigenvalue {tau:.3e}")
        if lipschitz is None:
            lipschitz = spectral_norm(M)
        M.setflags(write=False)
        b.setflags(write=False)
        self.matrix = M
        self.offset = b
        super().__init__(
            lambda x: M @ x + b, d, lipschitz=lipschitz, strong_monotonicity=max(tau, 0.0), name=name
        )

    @property
    def is_zero(self):
        return not np.any(self.matrix) and not np.any(self.offset)


def linear(matrix, offset=None, lipschitz=None, name="linear"):
    return LinearOperator(matrix, offset, lipschitz=lipschitz, name=name)


def zero_operator(dimension):
    # declared L is a formal positive placeholder: any L > 0 bounds the zero map
    d = int(dimension)
    return LinearOperator(np.zeros((d, d)), lipschitz=1.0, name="zero")


def constant_field(c):
    c = np.asarray(c, dtype=float)
    return LinearOperator(np.zeros((c.size, c.size)), c, lipschitz=1.0, name="constant")


def apply_forward(A, x):
    return A.apply(x)


def spectral_norm(M, tol=1e-10, max_iter=100_000, seed=0):
    """Largest singular value of ``M`` by power iteration on ``M^T M``."""
    M = np.asarray(M, dtype=float)
    if not np.any(M):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(max_iter):
        y = M.T @ (M @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            # x landed in the null space; restart from a fresh direction
            x = rng.standard_normal(M.shape[1])
            x /= np.linalg.norm(x)
            continue
        new = np.sqrt(ny)
        x = y / ny
        if abs(new - sigma) <= tol * new:
            sigma = new
            break
        sigma = new
    # the Rayleigh quotient of the final vector is the tighter estimate
    return float(max(sigma, np.linalg.norm(M @ x)))


@dataclass
class OperatorAudit:
    max_lipschitz_ratio: float
    min_monotonicity_ratio: float
    min_pairing: float
    n_pairs: int

    def consistent_with(self, A, tol=1e-10):
        ok = self.min_pairing >= -tol
        if A.lipschitz is not None:
            ok &= self.max_lipschitz_ratio <= A.lipschitz * (1 + 1e-9) + tol
        if A.strong_monotonicity:
            ok &= self.min_monotonicity_ratio >= A.strong_monotonicity * (1 - 1e-9) - tol
        return bool(ok)


def audit_forward(A, pairs):
    """Sampled Lipschitz and monotonicity ratios of ``A`` over ``pairs``."""
    lip, mono, pairing, n = 0.0, np.inf, np.inf, 0
    for x, y in pairs:
        dx = np.asarray(x, float) - np.asarray(y, float)
        nx = float(dx @ dx)
        if nx == 0:
            continue
        da = A.apply(x) - A.apply(y)
        p = float(da @ dx)
        lip = max(lip, np.linalg.norm(da) / np.sqrt(nx))
        mono = min(mono, p / nx)
        pairing = min(pairing, p)
        n += 1
    return OperatorAudit(lip, mono, pairing, n)


# --------------------------------------------------------------------------
# constraint sets and Bregman projections


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("box bounds must be vectors of equal length")
        if np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise EmptyConstraint("box has lower > upper in some coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self):
        return self.lower.size

    def contains(self, y, tol=0.0):
        return bool(np.all(y >= self.lower - tol) and np.all(y <= self.upper + tol))


@dataclass(frozen=True)
class Simplex:
    dimension: int
    total: float = 1.0

    def __post_init__(self):
        if self.dimension < 1 or not self.total > 0:
            raise EmptyConstraint("simplex needs dimension >= 1 and positive total")

    def contains(self, y, tol=0.0):
        return bool(np.all(y >= -tol) and abs(y.sum() - self.total) <= tol * max(1.0, self.total))


def box(lower, upper):
    return Box(lower, upper)


def simplex(dimension, total=1.0):
    return Simplex(int(dimension), float(total))


def _simplex_project_weighted(x, w, total):
    """``argmin sum_i w_i (y_i - x_i)^2 / 2`` over ``{y >= 0, sum y = total}``.

    Finite sort-based algorithm: ``y_i = max(x_i - lam / w_i, 0)`` with the
    multiplier found on the sorted breakpoints ``w_i x_i``.
    """
    t = w * x
    order = np.argsort(-t, kind="stable")
    cx = np.cumsum(x[order])
    cw = np.cumsum(1.0 / w[order])
    lam = (cx - total) / cw
    # largest k with t_(k) > lam_k; k = 0 always qualifies
    k = np.nonzero(t[order] > lam)[0][-1]
    return np.maximum(x - lam[k] / w, 0.0)


def _box_halfspace_project_weighted(x, w, lower, upper, a, b):
    """Weighted projection onto ``{lower <= y <= upper, a.y <= b}``.

    ``y(lam) = clip(x - lam a / w)`` and ``phi(lam) = a.y(lam)`` is piecewise
    linear and nonincreasing, so the multiplier is found exactly on the
    sorted breakpoints.
    """
    y0 = np.clip(x, lower, upper)
    if a @ y0 <= b:
        return y0
    nz = a != 0
    s = a[nz] / w[nz]
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (x[nz] - lower[nz]) / s
        t2 = (x[nz] - upper[nz]) / s
    bps = np.concatenate([t1, t2])
    bps = np.unique(bps[np.isfinite(bps) & (bps > 0)])

    def phi(lam):
        return float(a @ np.clip(x - lam * a / w, lower, upper))

    prev_lam, prev_phi = 0.0, phi(0.0)
    for lam in bps:
        cur = phi(lam)
        if cur <= b:
            # phi is affine on [prev_lam, lam]
            if cur == prev_phi:
                hit = lam
            else:
                hit = prev_lam + (prev_phi - b) * (lam - prev_lam) / (prev_phi - cur)
            return np.clip(x - hit * a / w, lower, upper)
        prev_lam, prev_phi = lam, cur
    # past the last breakpoint phi is constant
    raise EmptyConstraint("box and halfspace do not intersect")


def _project(g, C, x):
    kind = g.kind
    if isinstance(C, Box):
        if C.dimension != x.size:
            raise DimensionMismatch("box and point dimensions differ")
        if kind not in _SEPARABLE:
            raise NoClosedForm(f"no closed-form box projection for geometry {g.name!r}")
        # every shipped g is separable, so the Bregman projection is a clamp
        return np.clip(x, C.lower, C.upper)
    if isinstance(C, Simplex):
        if C.dimension != x.size:
            raise DimensionMismatch("simplex and point dimensions differ")
        if kind is GeometryKind.SHANNON_ENTROPY:
            return x * (C.total / x.sum())
        if kind in _QUADRATIC:
            return _simplex_project_weighted(x, g.weights, C.total)
        raise NoClosedForm(f"no closed-form simplex projection for geometry {g.name!r}")
    raise NoClosedForm(f"unsupported constraint {type(C).__name__}")


def bregman_project(g, C, x):
    """``argmin_{y in C} D_g(y, x)`` for a box or simplex ``C``."""
    x = g.check(x)
    return _project(g, C, x)


# --------------------------------------------------------------------------
# resolvent oracles


class ResolventOracle:
    """Maximal monotone B, represented through its resolvent."""

    strong_monotonicity = 0.0
    name = "B"

    def resolve_dual(self, g, mu, xi):
        raise NotImplementedError

    def resolve(self, g, mu, x):
        """``Res^g_{mu B}(x) = (grad g + mu B)^{-1}(grad g(x))``."""
        x = g.check(x)
        return self.resolve_dual(g, _positive(mu), g.gradient(x))

    def contains(self, y, w, tol):
        """Closed-form test of ``w in B y``."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


def _positive(mu):
    mu = float(mu)
    if not mu > 0:
        raise ValueError(f"step size must be positive, got {mu}")
    return mu


class NormalCone(ResolventOracle):
    """``B = N_C``; its resolvent is the Bregman projection for every mu."""

    def __init__(self, constraint):
        self.constraint = constraint
        self.name = "box" if isinstance(constraint, Box) else "simplex"

    def resolve_dual(self, g, mu, xi):
        return _project(g, self.constraint, g.gradient_conjugate(xi))

    def contains(self, y, w, tol):
        C = self.constraint
        if not C.contains(y, tol):
            return False
        if isinstance(C, Box):
            at_lo = y <= C.lower
            at_hi = y >= C.upper
            free = ~(at_lo | at_hi)
            return bool(
                np.all(np.abs(w[free]) <= tol)
                and np.all(w[at_lo & ~at_hi] <= tol)
                and np.all(w[at_hi & ~at_lo] >= -tol)
            )
        support = y > 0
        lam = float(w[support].mean())
        return bool(np.all(np.abs(w[support] - lam) <= tol) and np.all(w[~support] <= lam + tol))

    def to_dict(self):
        C = self.constraint
        if isinstance(C, Box):
            return {"type": "box", "lower": C.lower.tolist(), "upper": C.upper.tolist()}
        return {"type": "simplex", "dimension": C.dimension, "total": C.total}


def normal_cone_box(lower, upper):
    return NormalCone(Box(lower, upper))


def normal_cone_simplex(dimension, total=1.0):
    return NormalCone(Simplex(int(dimension), float(total)))


class ScaledIdentity(ResolventOracle):
    """``B x = {c (x - center)}``, strongly monotone with modulus c."""

    name = "scaled_identity"

    def __init__(self, c, center=None, dimension=None):
        self.c = float(c)
        if not self.c > 0:
            raise ValueError("scaled identity needs c > 0")
        if center is None:
            center = np.zeros(int(dimension or 0)) if dimension else None
        self.center = None if center is None else np.array(center, dtype=float)
        self.strong_monotonicity = self.c

    def _s(self, n):
        return np.zeros(n) if self.center is None else self.center

    def resolve_dual(self, g, mu, xi):
        s = self._s(xi.size)
        mc = mu * self.c
        if g.kind in _QUADRATIC:
            w = g.weights
            return (xi + mc * s) / (w + mc)
        if g.kind is GeometryKind.SHANNON_ENTROPY:
            from scipy.special import lambertw

            # log y + mc (y - s) = xi  <=>  y = W(mc exp(xi + mc s)) / mc
            return np.real(lambertw(mc * np.exp(xi + mc * s))) / mc
        raise NoClosedForm(f"no closed-form scaled-identity resolvent for geometry {g.name!r}")

    def contains(self, y, w, tol):
        return bool(np.all(np.abs(w - self.c * (y - self._s(y.size))) <= tol))

    def to_dict(self):
        out = {"type": "scaled_identity", "c": self.c}
        if self.center is not None:
            out["center"] = self.center.tolist()
        return out


class CostPolyhedron(ResolventOracle):
    """``B = grad<cost, .> + N_Q`` for ``Q = box ∩ {a_j . y <= b_j}``.

    Each halfspace acts on its own block of coordinates (blocks disjoint),
    which keeps the projection exact: one breakpoint search per block.
    Resolvent available under the quadratic geometries only.
    """

    name = "cost_polyhedron"

    def __init__(self, lower, upper, cost=None, halfspaces=()):
        self.box = Box(lower, upper)
        d = self.box.dimension
        self.cost = np.zeros(d) if cost is None else np.array(cost, dtype=float)
        if self.cost.shape != (d,):
            raise DimensionMismatch("cost vector has wrong length")
        self.halfspaces = []
        seen = np.zeros(d, dtype=bool)
        for idx, coef, rhs in halfspaces:
            idx = np.asarray(idx, dtype=int)
            if np.any(seen[idx]):
                raise ValueError("halfspace blocks must be disjoint")
            seen[idx] = True
            self.halfspaces.append((idx, np.asarray(coef, dtype=float), float(rhs)))
        self._free = ~seen

    def resolve_dual(self, g, mu, xi):
        if g.kind not in _QUADRATIC:
            raise NoClosedForm(f"no closed-form polyhedral resolvent for geometry {g.name!r}")
        w = g.weights
        x = (xi - mu * self.cost) / w
        lo, hi = self.box.lower, self.box.upper
        y = np.clip(x, lo, hi)
        for idx, a, b in self.halfspaces:
            y[idx] = _box_halfspace_project_weighted(x[idx], w[idx], lo[idx], hi[idx], a, b)
        return y

    def contains(self, y, w, tol):
        if not self.box.contains(y, tol):
            return False
        r = w - self.cost
        lo, hi = self.box.lower, self.box.upper
        at_lo, at_hi = y <= lo, y >= hi

        def box_ok(sl):
            f = ~(at_lo[sl] | at_hi[sl])
            rr = r[sl]
            return (
                np.all(np.abs(rr[f]) <= tol)
                and np.all(rr[at_lo[sl] & ~at_hi[sl]] <= tol)
                and np.all(rr[at_hi[sl] & ~at_lo[sl]] >= -tol)
            )

        if not box_ok(self._free):
            return False
        for idx, a, b in self.halfspaces:
            ay = a @ y[idx]
            if ay > b + tol:
                return False
            if ay < b - tol:
                if not box_ok(idx):
                    return False
                continue
            # feasible multipliers lam >= 0 with r - lam a a valid box normal
            lam_lo, lam_hi = 0.0, np.inf
            for ri, ai, lo_i, hi_i in zip(r[idx], a, at_lo[idx], at_hi[idx]):
                if lo_i and hi_i:
                    continue
                # admissible values of the box normal ri - lam*ai
                if lo_i:
                    lo_v, hi_v = -np.inf, tol
                elif hi_i:
                    lo_v, hi_v = -tol, np.inf
                else:
                    lo_v, hi_v = -tol, tol
                if ai == 0:
                    if not lo_v <= ri <= hi_v:
                        return False
                    continue
                c1, c2 = (ri - hi_v) / ai, (ri - lo_v) / ai
                lam_lo = max(lam_lo, min(c1, c2))
                lam_hi = min(lam_hi, max(c1, c2))
            if lam_lo > lam_hi:
                return False
        return True

    def to_dict(self):
        return {
            "type": "cost_polyhedron",
            "lower": self.box.lower.tolist(),
            "upper": [float(u) if np.isfinite(u) else "inf" for u in self.box.upper],
            "cost": self.cost.tolist(),
            "halfspaces": [
                {"indices": idx.tolist(), "coefficients": a.tolist(), "rhs": b}
                for idx, a, b in self.halfspaces
            ],
        }


def resolvent(B, g, mu, x):
    return B.resolve(g, mu, x)


def membership_tolerance(g, mu, x, tol=1e-9):
    return tol * (1.0 + float(np.max(np.abs(g.gradient(x)), initial=0.0)) / mu)


def resolvent_membership(B, g, mu, x, tol=1e-9):
    """Return ``(y, ok)`` where ``ok`` says ``(grad g(x) - grad g(y))/mu in B y``."""
    x = g.check(x)
    y = B.resolve(g, mu, x)
    w = (g.gradient(x) - g.gradient(y)) / mu
    return y, B.contains(y, w, membership_tolerance(g, mu, x, tol))


def forward_point(g, mu, x, Ax):
    """Dual point ``grad g(x) - mu A x`` of a forward step."""
    return g.gradient(x) - mu * Ax


def residual_from_forward(B, g, mu, x, Ax):
    """Natural residual at ``x`` given a precomputed ``A x`` (no evaluation of A)."""
    y = B.resolve_dual(g, mu, forward_point(g, mu, x, Ax))
    return float(np.linalg.norm(x - y))


def natural_residual(A, B, g, mu, x):
    """``||x - Res^g_{mu B}(grad g*(grad g(x) - mu A x))||``; zero exactly at solutions."""
    x = g.check(x)
    return residual_from_forward(B, g, _positive(mu), x, A.apply(x))

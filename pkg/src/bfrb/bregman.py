"""Legendre geometries and Bregman-distance machinery.

A geometry bundles a Legendre function ``g`` with its gradient, the gradient
of its conjugate (the inverse map), a strong-convexity modulus ``gamma`` and a
domain descriptor. All maps act on 1-D numpy arrays.

Dual vectors are identified with R^d through the dot product.
"""

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, DomainViolation, EmptySamples

# entropy inputs at or below this are rejected instead of clamped
ENTROPY_FLOOR = 1e-300


class Domain(enum.Enum):
    ALL_SPACE = "all_space"
    POSITIVE_ORTHANT = "positive_orthant"
    OPEN_BOX = "open_box"


class GeometryKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    WEIGHTED_QUADRATIC = "weighted"
    SHANNON_ENTROPY = "entropy"


@dataclass(frozen=True, eq=False)
class LegendreGeometry:
    name: str
    dimension: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    gradient_conjugate: Callable[[np.ndarray], np.ndarray]
    gamma: float
    domain: Domain = Domain.ALL_SPACE
    kind: Optional[GeometryKind] = None
    # per-coordinate weights for the quadratic kinds (ones for Euclidean)
    weights: Optional[np.ndarray] = None
    # (lower, upper) for OPEN_BOX domains
    bounds: Optional[tuple] = None
    # upper corner of the region on which ``gamma`` was declared (entropy)
    region_upper: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def check(self, x, label="x"):
        """Return ``x`` as a float array after domain and dimension checks."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"{label} has shape {x.shape}, geometry {self.name!r} expects ({self.dimension},)"
            )
        if not np.all(np.isfinite(x)):
            raise DomainViolation(f"{label} has non-finite entries")
        if self.domain is Domain.POSITIVE_ORTHANT:
            if np.any(x <= ENTROPY_FLOOR):
                raise DomainViolation(
                    f"{label} leaves the positive orthant (min entry {x.min():.3e})"
                )
        elif self.domain is Domain.OPEN_BOX:
            lo, hi = self.bounds
            if np.any(x <= lo) or np.any(x >= hi):
                raise DomainViolation(f"{label} leaves the open box domain")
        return x

    def contains(self, x):
        try:
            self.check(x)
        except (DomainViolation, DimensionMismatch):
            return False
        return True


def euclidean(dimension):
    """``g(x) = ||x||^2 / 2``; gradient and its inverse are the identity."""
    return LegendreGeometry(
        name="euclidean",
        dimension=int(dimension),
        value=lambda x: 0.5 * float(x @ x),
        gradient=lambda x: np.array(x, dtype=float),
        gradient_conjugate=lambda y: np.array(y, dtype=float),
        gamma=1.0,
        kind=GeometryKind.EUCLIDEAN,
        weights=np.ones(int(dimension)),
    )


def weighted_quadratic(weights):
    """``g(x) = sum_i w_i x_i^2 / 2`` with ``gamma = min_i w_i``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DimensionMismatch("weights must be a non-empty vector")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive and finite")
    w = w.copy()
    w.setflags(write=False)
    return LegendreGeometry(
        name="weighted",
        dimension=w.size,
        value=lambda x: 0.5 * float(np.sum(w * x * x)),
        gradient=lambda x: w * x,
        gradient_conjugate=lambda y: y / w,
        gamma=float(w.min()),
        kind=GeometryKind.WEIGHTED_QUADRATIC,
        weights=w,
    )


def _entropy_value(x):
    return float(np.sum(x * np.log(x) - x))


def shannon_entropy(dimension, gamma, region_upper=None):
    """Boltzmann-Shannon entropy ``g(x) = sum x_i log x_i - x_i`` on x > 0.

    The entropy is not strongly convex on the whole orthant, so the caller
    declares ``gamma``. On the box ``(0, R]^d`` the Hessian ``diag(1/x)``
    dominates ``I/R``, so ``gamma = 1/R`` is valid there for the 2-norm;
    ``region_upper`` defaults to ``1/gamma`` to record that region.
    """
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError("entropy_gamma must be positive")
    return LegendreGeometry(
        name="entropy",
        dimension=int(dimension),
        value=_entropy_value,
        gradient=np.log,
        gradient_conjugate=np.exp,
        gamma=gamma,
        domain=Domain.POSITIVE_ORTHANT,
        kind=GeometryKind.SHANNON_ENTROPY,
        region_upper=float(region_upper) if region_upper is not None else 1.0 / gamma,
    )


def geometry_from_config(section, dimension):
    """Build a geometry from a ``[geometry]`` mapping.

    Keys: ``geometry = "euclidean" | "weighted" | "entropy"``, ``weights`` and
    ``entropy_gamma``.
    """
    kind = section.get("geometry", "euclidean")
    if kind == "euclidean":
        return euclidean(dimension)
    if kind == "weighted":
        if "weights" not in section:
            raise KeyError("weights")
        g = weighted_quadratic(section["weights"])
        if g.dimension != dimension:
            raise DimensionMismatch(
                f"weights has length {g.dimension}, problem dimension is {dimension}"
            )
        return g
    if kind == "entropy":
        if "entropy_gamma" not in section:
            raise KeyError("entropy_gamma")
        return shannon_entropy(dimension, section["entropy_gamma"], section.get("region_upper"))
    raise ValueError(f"unknown geometry {kind!r}")


def bregman_distance(g, x, y):
    """``D_g(x, y) = g(x) - g(y) - <grad g(y), x - y>``."""
    x = g.check(x, "x")
    y = g.check(y, "y")
    if g.kind is GeometryKind.SHANNON_ENTROPY:
        # algebraically identical, fewer cancellations than the generic form
        return float(np.sum(x * np.log(x / y) - x + y))
    if g.kind in (GeometryKind.EUCLIDEAN, GeometryKind.WEIGHTED_QUADRATIC):
        r = x - y
        return 0.5 * float(np.sum(g.weights * r * r))
    return float(g.value(x) - g.value(y) - g.gradient(y) @ (x - y))


def three_point_gap(g, x, y, z):
    """Absolute defect of the three-point identity at ``(x, y, z)``.

    ``|D(x,y) + D(y,z) - D(x,z) - <grad g(z) - grad g(y), x - y>|``
    """
    x = g.check(x, "x")
    y = g.check(y, "y")
    z = g.check(z, "z")
    lhs = bregman_distance(g, x, y) + bregman_distance(g, y, z) - bregman_distance(g, x, z)
    rhs = float((g.gradient(z) - g.gradient(y)) @ (x - y))
    return abs(lhs - rhs)


@dataclass
class StrongConvexityReport:
    passed: bool
    min_ratio: float
    gamma: float
    n_pairs: int
    worst_pair: Optional[tuple] = None

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"


def strong_convexity_certificate(g, samples, ord=2):
    """Check ``D_g(x, y) >= gamma/2 ||x - y||^2`` on sample pairs.

    Pairs with ``x == y`` carry no information and are skipped. ``ord``
    selects the norm the modulus was declared against.
    """
    samples = list(samples)
    if not samples:
        raise EmptySamples("no sample pairs given")
    worst = np.inf
    worst_pair = None
    used = 0
    for x, y in samples:
        x = g.check(x, "x")
        y = g.check(y, "y")
        nrm = np.linalg.norm(x - y, ord=ord)
        if nrm == 0:
            continue
        ratio = bregman_distance(g, x, y) / (0.5 * nrm * nrm)
        used += 1
        if ratio < worst:
            worst, worst_pair = ratio, (x, y)
    if used == 0:
        raise EmptySamples("all sample pairs are degenerate (x == y)")
    return StrongConvexityReport(
        passed=bool(worst >= g.gamma * (1 - 1e-8)),
        min_ratio=float(worst),
        gamma=g.gamma,
        n_pairs=used,
        worst_pair=worst_pair,
    )

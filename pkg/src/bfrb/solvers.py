"""Forward-reflected-backward splitting in Bregman geometry.

For ``0 in (A + B) v`` the constant-step method iterates

    v_{n+1} = Res^g_{mu B}( grad g*( grad g(v_n) - mu (2 A v_n - A v_{n-1}) ) )

and the adaptive method replaces the reflected term by
``(mu_n + mu_{n-1}) A v_n - mu_{n-1} A v_{n-1}`` with a step-size law that needs
no Lipschitz constant. Both evaluate A once per iteration: ``A v_{n-1}`` is
carried over from the previous pass.

Trace layout (when ``record_trace`` is set), for a run of N iterations:

* ``iterates[k]`` is ``v_k`` for ``k = 0..N+1``;
* ``forward[k]`` is ``A v_k`` for ``k = 0..N``;
* ``steps[k]`` is ``mu_k`` for ``k = 0..N``;
* ``step_change[n-1] = ||v_{n+1} - v_n||``, ``residual[n-1]`` the natural
  residual at ``v_n`` and ``a_evals[n-1]`` the cumulative A count, n = 1..N.

Methods started from a single point (proximal point, Tseng) store
``iterates[0] = iterates[1] = v_1``.
"""

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InadmissibleParameters, MissingLipschitz
from .operators import NormalCone, ResolventOracle, _project, residual_from_forward

log = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e12
# relative slack on interval endpoints so that, e.g., mu = 0.4/L passes [delta, 0.8/(2L)]
_ENDPOINT_SLACK = 1e-12

STOP_RULES = ("change", "residual", "either")


class Termination(enum.Enum):
    CONVERGED = "CONVERGED"
    MAX_ITERS = "MAX_ITERS"
    DIVERGENCE_GUARD = "DIVERGENCE_GUARD"


@dataclass(frozen=True)
class DSchedule:
    """Summable nonnegative sequence ``d_n``, n >= 1.

    ``kind`` is ``"zero"``, ``"geometric"`` (``d_n = scale * ratio**n``) or
    ``"explicit"`` (``d_n = values[n-1]``, zero afterwards).
    """

    kind: str = "zero"
    ratio: float = 0.0
    scale: float = 0.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("zero", "geometric", "explicit"):
            raise ValueError(f"unknown d_schedule kind {self.kind!r}")
        if self.kind == "geometric" and not (0 <= self.ratio < 1 and self.scale >= 0):
            raise ValueError("geometric d_schedule needs 0 <= ratio < 1 and scale >= 0")
        if self.kind == "explicit":
            vals = tuple(float(v) for v in self.values)
            if any(v < 0 or not np.isfinite(v) for v in vals):
                raise ValueError("explicit d_schedule entries must be finite and nonnegative")
            object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def geometric(cls, ratio, scale):
        return cls("geometric", float(ratio), float(scale))

    @classmethod
    def explicit(cls, values):
        return cls("explicit", values=tuple(values))

    def __call__(self, n):
        if self.kind == "geometric":
            return self.scale * self.ratio**n
        if self.kind == "explicit":
            return self.values[n - 1] if 1 <= n <= len(self.values) else 0.0
        return 0.0

    def total(self):
        if self.kind == "geometric":
            return self.scale * self.ratio / (1.0 - self.ratio)
        if self.kind == "explicit":
            return float(sum(self.values))
        return 0.0

    def partial_sum(self, n):
        """``sum_{k=1}^{n} d_k``."""
        if self.kind == "geometric":
            r = self.ratio
            return self.scale * r * (1 - r**n) / (1 - r) if n > 0 else 0.0
        if self.kind == "explicit":
            return float(sum(self.values[:max(n, 0)]))
        return 0.0


@dataclass
class ConstantStepConfig:
    mu: float
    delta: float = 0.1
    max_iters: int = 10_000
    tol: float = 1e-10
    stop: str = "change"
    record_trace: bool = True


@dataclass
class AdaptiveStepConfig:
    alpha: float
    mu0: float = 1.0
    mu1: float = 1.0
    d_schedule: DSchedule = field(default_factory=DSchedule)
    delta: float = 0.1
    max_iters: int = 10_000
    tol: float = 1e-10
    stop: str = "change"
    record_trace: bool = True


@dataclass
class ProblemInstance:
    A: object
    B: ResolventOracle
    g: object
    v0: np.ndarray
    v1: Optional[np.ndarray] = None
    reference_solution: Optional[np.ndarray] = None
    label: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.v0 = self.g.check(self.v0, "v0").copy()
        self.v1 = self.v0.copy() if self.v1 is None else self.g.check(self.v1, "v1").copy()
        if self.A.dimension != self.g.dimension:
            raise DimensionMismatch("operator and geometry dimensions differ")
        if self.reference_solution is not None:
            self.reference_solution = np.asarray(self.reference_solution, dtype=float)

    @property
    def dimension(self):
        return self.g.dimension

    def with_geometry(self, g, v0=None, v1=None):
        return ProblemInstance(
            self.A, self.B, g,
            self.v0 if v0 is None else v0,
            self.v1 if v1 is None and v0 is None else v1,
            self.reference_solution, self.label, dict(self.metadata),
        )


@dataclass
class SolverRun:
    method: str
    status: Termination
    iterations: int
    x: np.ndarray
    a_evals: int
    resolvent_calls: int
    final_residual: float
    min_step_change: float
    geometry: object
    delta: Optional[float] = None
    alpha: Optional[float] = None
    mu: Optional[float] = None
    d_schedule: Optional[DSchedule] = None
    iterates: Optional[np.ndarray] = None
    forward: Optional[np.ndarray] = None
    steps: Optional[np.ndarray] = None
    step_change: Optional[np.ndarray] = None
    residual: Optional[np.ndarray] = None
    a_evals_trace: Optional[np.ndarray] = None
    wall_time_ms: float = 0.0
    label: str = ""

    @property
    def converged(self):
        return self.status is Termination.CONVERGED

    @property
    def has_trace(self):
        return self.iterates is not None

    @property
    def constant_step(self):
        return self.method in ("frb", "projected", "tseng")

    def summary(self):
        return {
            "status": self.status.value,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "a_evaluations": self.a_evals,
            "wall_time_ms": self.wall_time_ms,
        }


# --------------------------------------------------------------------------
# parameter validation


@dataclass
class ValidationReport:
    passed: bool
    code: str = "OK"
    message: str = ""
    interval: Optional[tuple] = None

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    def __bool__(self):
        return self.passed


def _le(a, b):
    return a <= b + _ENDPOINT_SLACK * max(1.0, abs(b))


def constant_step_interval(delta, L, gamma):
    """Admissible constant steps ``[delta, gamma (1 - 2 delta) / (2 L)]``."""
    return (float(delta), gamma * (1 - 2 * delta) / (2 * L))


def adaptive_alpha_interval(delta, gamma):
    """Admissible ``alpha``: ``(delta, gamma (1 - 2 delta) / 2)`` intersected with (0, 1)."""
    return (max(float(delta), 0.0), min(gamma * (1 - 2 * delta) / 2, 1.0))


def validate_parameters(cfg, L=None, gamma=1.0):
    """Check a step configuration against the convergence hypotheses.

    Raises :class:`MissingLipschitz` for a constant-step config without ``L``.
    """
    delta = cfg.delta
    if not 0 < delta < 0.5:
        return ValidationReport(False, "DELTA_OUT_OF_RANGE", f"delta={delta} must lie in (0, 1/2)")
    if isinstance(cfg, AdaptiveStepConfig):
        lo, hi = adaptive_alpha_interval(delta, gamma)
        if not lo < hi:
            return ValidationReport(
                False, "EMPTY_INTERVAL",
                f"alpha interval ({lo:g}, {hi:g}) is empty for delta={delta}, gamma={gamma}", (lo, hi),
            )
        if not lo < cfg.alpha < hi:
            return ValidationReport(
                False, "ALPHA_OUT_OF_INTERVAL",
                f"alpha={cfg.alpha} violates delta < alpha < gamma(1-2 delta)/2; "
                f"admissible alpha in ({lo:g}, {hi:g})", (lo, hi),
            )
        if not (cfg.mu0 > 0 and cfg.mu1 > 0):
            return ValidationReport(False, "NONPOSITIVE_STEP", "mu0 and mu1 must be positive")
        if not np.isfinite(cfg.d_schedule.total()):
            return ValidationReport(False, "D_NOT_SUMMABLE", "d_schedule must have a finite sum")
        return ValidationReport(True, interval=(lo, hi))

    if L is None:
        raise MissingLipschitz("constant-step validation needs a declared Lipschitz constant L")
    lo, hi = constant_step_interval(delta, L, gamma)
    if not _le(lo, hi):
        return ValidationReport(
            False, "EMPTY_INTERVAL",
            f"step interval [delta, gamma(1-2 delta)/(2L)] = [{lo:g}, {hi:g}] is empty "
            f"(delta={delta}, gamma={gamma}, L={L})", (lo, hi),
        )
    if not (_le(lo, cfg.mu) and _le(cfg.mu, hi)):
        code = "MU_BELOW_INTERVAL" if cfg.mu < lo else "MU_ABOVE_INTERVAL"
        return ValidationReport(
            False, code,
            f"mu={cfg.mu} violates delta <= mu <= gamma(1-2 delta)/(2L); admissible mu in [{lo:g}, {hi:g}]",
            (lo, hi),
        )
    return ValidationReport(True, interval=(lo, hi))


def _require_admissible(P, cfg):
    report = validate_parameters(cfg, getattr(P.A, "lipschitz", None), P.g.gamma)
    if not report:
        raise InadmissibleParameters(report.message, report)
    return report


def _check_common(cfg):
    if cfg.stop not in STOP_RULES:
        raise ValueError(f"stop must be one of {STOP_RULES}, got {cfg.stop!r}")
    if cfg.max_iters < 1:
        raise ValueError("max_iters must be positive")


# --------------------------------------------------------------------------
# step-size law


def step_size_update(mu_n, d_n, alpha, v_n, v_next, Av_n, Av_next):
    """Next adaptive step.

    ``min(alpha ||v_n - v_next|| / ||Av_n - Av_next||, mu_n + d_n)`` when the
    two A values differ (exact comparison), else ``mu_n + d_n``.
    """
    cap = mu_n + d_n
    dA = np.asarray(Av_n) - np.asarray(Av_next)
    if not np.any(dA):
        return cap
    nd = np.linalg.norm(dA)
    if nd == 0:
        # subnormal difference whose norm underflows: the ratio is +inf
        return cap
    ratio = alpha * np.linalg.norm(np.asarray(v_n) - np.asarray(v_next)) / nd
    return min(ratio, cap)


# --------------------------------------------------------------------------
# iteration machinery


class _Recorder:
    def __init__(self, record):
        self.record = record
        self.iterates, self.forward, self.steps = [], [], []
        self.step_change, self.residual, self.a_evals = [], [], []
        self.min_change = np.inf
        self.last_residual = np.nan

    def start(self, v0, v1, Av0, mu0):
        if self.record:
            self.iterates += [v0.copy(), v1.copy()]
            self.forward.append(np.array(Av0, dtype=float))
            self.steps.append(mu0)

    def step(self, v_next, Av, mu, change, res, a_count):
        self.min_change = min(self.min_change, change)
        self.last_residual = res
        if self.record:
            self.iterates.append(v_next.copy())
            self.forward.append(np.array(Av, dtype=float))
            self.steps.append(mu)
            self.step_change.append(change)
            self.residual.append(res)
            self.a_evals.append(a_count)

    def fill(self, run):
        if self.record:
            run.iterates = np.array(self.iterates)
            run.forward = np.array(self.forward)
            run.steps = np.array(self.steps, dtype=float)
            run.step_change = np.array(self.step_change, dtype=float)
            run.residual = np.array(self.residual, dtype=float)
            run.a_evals_trace = np.array(self.a_evals, dtype=int)
        return run


def _stopped(cfg, change, v, res):
    by_change = change <= cfg.tol * (1.0 + np.linalg.norm(v))
    by_res = res <= cfg.tol
    if cfg.stop == "change":
        return by_change
    if cfg.stop == "residual":
        return by_res
    return by_change or by_res


def _diverged(v):
    return not np.all(np.isfinite(v)) or np.linalg.norm(v) > DIVERGENCE_NORM


def _frb_loop(P, B, cfg, method, adaptive):
    g, A = P.g, P.A
    _check_common(cfg)
    t0 = time.perf_counter()
    count0 = A.eval_count
    rec = _Recorder(cfg.record_trace)

    v_prev, v = P.v0.copy(), P.v1.copy()
    Av_prev = A.apply(v_prev)
    if adaptive:
        mu_prev, mu = float(cfg.mu0), float(cfg.mu1)
        d, alpha = cfg.d_schedule, cfg.alpha
    else:
        mu_prev = mu = float(cfg.mu)
    rec.start(v_prev, v, Av_prev, mu_prev)

    status = Termination.MAX_ITERS
    calls = 0
    n = 0
    for n in range(1, cfg.max_iters + 1):
        Av = A.apply(v)
        if adaptive:
            if n >= 2:
                mu_prev, mu = mu, step_size_update(mu, d(n - 1), alpha, v_prev, v, Av_prev, Av)
            dual = g.gradient(v) - ((mu + mu_prev) * Av - mu_prev * Av_prev)
        else:
            dual = g.gradient(v) - mu * (2.0 * Av - Av_prev)
        v_next = B.resolve_dual(g, mu, dual)
        res = residual_from_forward(B, g, mu, v, Av)
        calls += 2
        if _diverged(v_next):
            status = Termination.DIVERGENCE_GUARD
            rec.step(v_next, Av, mu, np.inf, res, A.eval_count - count0)
            v_prev, v = v, v_next
            break
        v_next = g.check(v_next, f"v_{n + 1}")
        change = float(np.linalg.norm(v_next - v))
        rec.step(v_next, Av, mu, change, res, A.eval_count - count0)
        done = _stopped(cfg, change, v, res)
        v_prev, v, Av_prev = v, v_next, Av
        if done:
            status = Termination.CONVERGED
            break

    run = SolverRun(
        method=method,
        status=status,
        iterations=n,
        x=v,
        a_evals=A.eval_count - count0,
        resolvent_calls=calls,
        final_residual=float(rec.last_residual),
        min_step_change=float(rec.min_change),
        geometry=g,
        delta=cfg.delta,
        alpha=getattr(cfg, "alpha", None),
        mu=None if adaptive else float(cfg.mu),
        d_schedule=getattr(cfg, "d_schedule", None),
        wall_time_ms=1e3 * (time.perf_counter() - t0),
        label=P.label,
    )
    log.info("%s on %s: %s after %d iterations", method, P.label or "problem", status.value, n)
    return rec.fill(run)


def solve_frb_constant(P, cfg, validate=True):
    """Constant-step forward-reflected-backward method.

    ``validate=False`` skips the admissibility check (negative controls only).
    """
    if validate:
        _require_admissible(P, cfg)
    return _frb_loop(P, P.B, cfg, "frb", adaptive=False)


def solve_frb_adaptive(P, cfg, validate=True):
    """Self-adaptive forward-reflected-backward method; ``L`` is never read."""
    if validate:
        _require_admissible(P, cfg)
    return _frb_loop(P, P.B, cfg, "frb-adaptive", adaptive=True)


class _Projection(ResolventOracle):
    """Bregman projection onto ``C`` posing as a resolvent."""

    def __init__(self, constraint):
        self.constraint = constraint

    def resolve_dual(self, g, mu, xi):
        return _project(g, self.constraint, g.gradient_conjugate(xi))


def _constraint_of(P):
    if not isinstance(P.B, NormalCone):
        raise TypeError("projected solvers need B to be a normal-cone oracle")
    return P.B.constraint


def solve_projected_constant(P, cfg, validate=True):
    """Constant-step method for VI(C, A) with the resolvent replaced by Proj^g_C."""
    C = _constraint_of(P)
    if validate:
        _require_admissible(P, cfg)
    return _frb_loop(P, _Projection(C), cfg, "projected", adaptive=False)


def solve_projected_adaptive(P, cfg, validate=True):
    C = _constraint_of(P)
    if validate:
        _require_admissible(P, cfg)
    return _frb_loop(P, _Projection(C), cfg, "projected-adaptive", adaptive=True)


def solve_proximal_point(P, mu, max_iters=10_000, tol=1e-10, stop="change", record_trace=True, delta=None):
    """Proximal point iteration ``v_{n+1} = Res^g_{mu B}(v_n)`` from ``v_1``.

    ``P.A`` must be the zero operator and is never evaluated. ``delta`` is
    stored on the run only for the benefit of the diagnostics.
    """
    if not getattr(P.A, "is_zero", False):
        raise ValueError("proximal point needs A = 0")
    mu = float(mu)
    if not mu > 0:
        raise ValueError("mu must be positive")
    cfg = ConstantStepConfig(mu=mu, delta=delta if delta is not None else 0.1,
                             max_iters=max_iters, tol=tol, stop=stop, record_trace=record_trace)
    _check_common(cfg)
    g, B = P.g, P.B
    t0 = time.perf_counter()
    rec = _Recorder(record_trace)
    v = P.v1.copy()
    zero = np.zeros(g.dimension)
    rec.start(v, v, zero, mu)
    status = Termination.MAX_ITERS
    n = 0
    for n in range(1, max_iters + 1):
        v_next = B.resolve_dual(g, mu, g.gradient(v))
        if _diverged(v_next):
            status = Termination.DIVERGENCE_GUARD
            rec.step(v_next, zero, mu, np.inf, np.inf, 0)
            v = v_next
            break
        v_next = g.check(v_next, f"v_{n + 1}")
        change = float(np.linalg.norm(v_next - v))
        # with A = 0 the natural residual at v_n is exactly the step length
        rec.step(v_next, zero, mu, change, change, 0)
        done = _stopped(cfg, change, v, change)
        v = v_next
        if done:
            status = Termination.CONVERGED
            break
    run = SolverRun(
        method="ppa", status=status, iterations=n, x=v, a_evals=0, resolvent_calls=n,
        final_residual=float(rec.last_residual), min_step_change=float(rec.min_change),
        geometry=g, delta=delta, mu=mu, wall_time_ms=1e3 * (time.perf_counter() - t0), label=P.label,
    )
    return rec.fill(run)


def solve_tseng_baseline(P, cfg, validate=True):
    """Forward-backward-forward comparator with two A evaluations per iteration.

    ``y_n = Res(grad g*(grad g(x_n) - mu A x_n))`` and
    ``x_{n+1} = grad g*(grad g(y_n) - mu (A y_n - A x_n))``, from ``x_1 = v_1``.
    """
    if validate:
        _require_admissible(P, cfg)
    _check_common(cfg)
    g, A, B = P.g, P.A, P.B
    mu = float(cfg.mu)
    t0 = time.perf_counter()
    count0 = A.eval_count
    rec = _Recorder(cfg.record_trace)
    x = P.v1.copy()
    status = Termination.MAX_ITERS
    n = 0
    started = False
    for n in range(1, cfg.max_iters + 1):
        Ax = A.apply(x)
        if not started:
            rec.start(x, x, Ax, mu)
            started = True
        y = B.resolve_dual(g, mu, g.gradient(x) - mu * Ax)
        Ay = A.apply(y)
        x_next = g.gradient_conjugate(g.gradient(y) - mu * (Ay - Ax))
        res = float(np.linalg.norm(x - y))
        if _diverged(x_next):
            status = Termination.DIVERGENCE_GUARD
            rec.step(x_next, Ax, mu, np.inf, res, A.eval_count - count0)
            x = x_next
            break
        x_next = g.check(x_next, f"x_{n + 1}")
        change = float(np.linalg.norm(x_next - x))
        rec.step(x_next, Ax, mu, change, res, A.eval_count - count0)
        done = _stopped(cfg, change, x, res)
        x = x_next
        if done:
            status = Termination.CONVERGED
            break
    run = SolverRun(
        method="tseng", status=status, iterations=n, x=x, a_evals=A.eval_count - count0,
        resolvent_calls=n, final_residual=float(rec.last_residual),
        min_step_change=float(rec.min_change), geometry=g, delta=cfg.delta, mu=mu,
        wall_time_ms=1e3 * (time.perf_counter() - t0), label=P.label,
    )
    return rec.fill(run)


METHODS = ("frb", "frb-adaptive", "ppa", "projected", "projected-adaptive", "tseng")

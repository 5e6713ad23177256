"""Runtime checks of the convergence argument on a recorded trace.

With a solution ``z`` and ``mu_{-1}`` read as the step paired with each
iterate, the energy

    s_n = D(z, v_n) + mu_{n-1} <A v_n - A v_{n-1}, z - v_n> + D(v_n, v_{n-1}) / 2,
    t_n = delta D(v_{n+1}, v_n)

satisfies ``s_{n+1} <= s_n - t_n`` and ``s_n >= 0`` under admissible
parameters. Summing the descent gives the certificate

    min_{j<=n} ||v_{j+1} - v_j||^2 <= 2 C_1 / (n delta gamma),
    C_1 = D(z, v_1) + mu <A v_1 - A v_0, z - v_1> + D(v_1, v_0) / 2.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bregman import bregman_distance
from .errors import NoReferenceSolution, NoTrace

LYAPUNOV_RTOL = 1e-9
NONNEG_TOL = 1e-9
RATE_ATOL = 1e-9


@dataclass
class LyapunovTrace:
    s: np.ndarray  # s[k] = s_{k+1}
    t: np.ndarray  # t[k] = t_{k+1}

    @property
    def indices(self):
        return np.arange(1, self.s.size + 1)


@dataclass
class CheckReport:
    name: str
    passed: bool
    violations: int = 0
    details: dict = field(default_factory=dict)

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    def to_dict(self):
        return {"status": self.status, "violations": self.violations, **self.details}


def _require(run, z):
    if run is None or not run.has_trace:
        raise NoTrace("diagnostics need a run recorded with record_trace=True")
    if z is None:
        raise NoReferenceSolution("a reference solution z is required")
    return np.asarray(z, dtype=float)


def _resolve_delta(run, delta):
    delta = run.delta if delta is None else delta
    if delta is None:
        raise ValueError("delta is not recorded on this run; pass it explicitly")
    return float(delta)


def lyapunov_sequence(run, z, delta=None):
    """``s_n`` for n = 1..N and ``t_n`` for n = 1..N-1 (``t_N`` needs v_{N+1} only)."""
    z = _require(run, z)
    delta = _resolve_delta(run, delta)
    g = run.geometry
    V, F, mu = run.iterates, run.forward, run.steps
    N = F.shape[0] - 1
    s = np.empty(N)
    t = np.empty(N)
    for n in range(1, N + 1):
        s[n - 1] = (
            bregman_distance(g, z, V[n])
            + mu[n - 1] * float((F[n] - F[n - 1]) @ (z - V[n]))
            + 0.5 * bregman_distance(g, V[n], V[n - 1])
        )
        t[n - 1] = delta * bregman_distance(g, V[n + 1], V[n])
    return LyapunovTrace(s, t)


def detect_n0(run, alpha=None, delta=None):
    """First n from which ``mu_{n-1}/mu_n * alpha/gamma < 1/2 - delta`` holds throughout.

    This is the index past which the adaptive descent estimate is available.
    Returns ``None`` if the condition fails at the end of the trace.
    """
    alpha = run.alpha if alpha is None else alpha
    delta = _resolve_delta(run, delta)
    mu = run.steps
    gamma = run.geometry.gamma
    # ok[k] concerns n = k + 1
    ok = mu[:-1] / mu[1:] * alpha / gamma < 0.5 - delta
    if ok.size == 0 or not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    return 1 if bad.size == 0 else int(bad[-1]) + 2


def check_lyapunov_descent(run, z, start_index=None, delta=None):
    """Descent ``s_{n+1} <= s_n - t_n + 1e-9 (1 + |s_n|)`` and ``s_n >= -1e-9``.

    ``start_index`` defaults to 1 for constant steps and to :func:`detect_n0`
    for adaptive runs.
    """
    lt = lyapunov_sequence(run, z, delta)
    if start_index is None:
        if run.alpha is not None:
            start_index = detect_n0(run, delta=delta)
            if start_index is None:
                return CheckReport("lyapunov", False, details={
                    "reason": "adaptive step condition never settles within the trace"})
        else:
            start_index = 1
    s, t = lt.s, lt.t
    k0 = start_index - 1
    lhs = s[k0 + 1:]
    rhs = s[k0:-1] - t[k0:-1] + LYAPUNOV_RTOL * (1 + np.abs(s[k0:-1]))
    descent_bad = np.nonzero(lhs > rhs)[0]
    neg_bad = np.nonzero(s[k0:] < -NONNEG_TOL)[0]
    violations = int(descent_bad.size + neg_bad.size)
    details = {
        "start_index": int(start_index),
        "checked": int(lhs.size),
        "descent_violations": int(descent_bad.size),
        "negativity_violations": int(neg_bad.size),
        "s_first": float(s[k0]) if s.size > k0 else None,
        "s_last": float(s[-1]) if s.size else None,
    }
    if descent_bad.size:
        details["first_descent_violation"] = int(descent_bad[0] + start_index)
    return CheckReport("lyapunov", violations == 0, violations, details)


def rate_constant(run, z):
    """``C_1`` from ``(v_0, v_1, A v_0, A v_1)`` and ``z``."""
    z = _require(run, z)
    g = run.geometry
    V, F = run.iterates, run.forward
    mu = run.mu if run.mu is not None else float(run.steps[0])
    return (
        bregman_distance(g, z, V[1])
        + mu * float((F[1] - F[0]) @ (z - V[1]))
        + 0.5 * bregman_distance(g, V[1], V[0])
    )


def rate_certificate(run, z, delta=None):
    """Check ``min_{j<=n} ||v_{j+1} - v_j||^2 <= 2 C_1/(n delta gamma) + 1e-9`` at every n."""
    z = _require(run, z)
    if not run.constant_step and run.method != "ppa":
        raise ValueError("the rate certificate applies to constant-step runs")
    delta = _resolve_delta(run, delta)
    gamma = run.geometry.gamma
    C1 = rate_constant(run, z)
    changes = np.linalg.norm(np.diff(run.iterates[1:], axis=0), axis=1)
    n = np.arange(1, changes.size + 1)
    running_min = np.minimum.accumulate(changes**2)
    bound = 2.0 * C1 / (n * delta * gamma) + RATE_ATOL
    bad = np.nonzero(running_min > bound)[0]
    details = {"C1": float(C1), "checked": int(n.size)}
    if n.size:
        details["slack_min"] = float(np.min(bound - running_min))
    if bad.size:
        details["first_violation"] = int(bad[0] + 1)
    return CheckReport("rate", bad.size == 0, int(bad.size), details)


def evaluation_report(run):
    """Iterations, A evaluations and resolvent calls, with the counting contract."""
    n = run.iterations
    if run.method == "tseng":
        expected = 2 * n
    elif run.method == "ppa":
        expected = 0
    else:
        expected = n + 1
    ok = run.a_evals == expected
    if ok and run.a_evals_trace is not None and run.a_evals_trace.size:
        k = np.arange(1, run.a_evals_trace.size + 1)
        if run.method == "tseng":
            per = 2 * k
        elif run.method == "ppa":
            per = np.zeros_like(k)
        else:
            per = k + 1
        ok = bool(np.array_equal(run.a_evals_trace, per))
    return CheckReport("eval_count", bool(ok), 0 if ok else 1, {
        "iterations": int(n),
        "a_evaluations": int(run.a_evals),
        "expected_a_evaluations": int(expected),
        "resolvent_calls": int(run.resolvent_calls),
    })


def step_size_bounds(run, L, mu1=None):
    """Check ``min(alpha/L, mu_1) <= mu_n <= mu_1 + sum_{k<n} d_k`` for n >= 1."""
    mu = run.steps
    mu1 = float(mu[1]) if mu1 is None else mu1
    lower = min(run.alpha / L, mu1) - 1e-12
    partial = np.array([run.d_schedule.partial_sum(k - 1) for k in range(1, mu.size)])
    upper = mu1 + partial + 1e-12
    m = mu[1:]
    bad = int(np.sum(m < lower) + np.sum(m > upper))
    return CheckReport("step_bounds", bad == 0, bad, {
        "lower": float(lower), "upper": float(upper.max(initial=mu1)),
        "mu_min": float(m.min()), "mu_max": float(m.max()),
    })


def step_settling_index(steps, tol=1e-10):
    """Smallest n with ``|mu_k - mu_final| <= tol`` for all k >= n."""
    steps = np.asarray(steps, dtype=float)
    off = np.nonzero(np.abs(steps - steps[-1]) > tol)[0]
    return 0 if off.size == 0 else int(off[-1]) + 1


def diagnose(run, z, delta=None):
    """All applicable checks as one JSON-ready mapping."""
    out = {"eval_count": evaluation_report(run).to_dict()}
    ev = out["eval_count"]["status"]
    lyap = rate = None
    if run.method in ("frb", "frb-adaptive", "projected", "projected-adaptive", "ppa"):
        lyap = check_lyapunov_descent(run, z, delta=delta)
        out["lyapunov_details"] = lyap.to_dict()
        if run.alpha is None:
            rate = rate_certificate(run, z, delta=delta)
            out["rate_details"] = rate.to_dict()
    return {
        "lyapunov": lyap.status if lyap else "N/A",
        "rate": rate.status if rate else "N/A",
        "eval_count": ev,
        "details": out,
    }

import numpy as np
import pytest

from bfrb.diagnostics import (
    check_lyapunov_descent,
    detect_n0,
    diagnose,
    evaluation_report,
    lyapunov_sequence,
    rate_certificate,
    rate_constant,
    step_settling_index,
    step_size_bounds,
)
from bfrb.errors import NoReferenceSolution, NoTrace
from bfrb.problems import make_prox_instance, make_skew_box_vi
from bfrb.solvers import (
    AdaptiveStepConfig,
    ConstantStepConfig,
    DSchedule,
    ProblemInstance,
    solve_frb_adaptive,
    solve_frb_constant,
    solve_proximal_point,
    solve_tseng_baseline,
)


@pytest.fixture
def skew_run():
    P = make_skew_box_vi(2)
    return solve_frb_constant(P, ConstantStepConfig(mu=0.4, delta=0.1, max_iters=10_000, tol=1e-12))


def test_lyapunov_ppa_strictly_decreasing():
    P = make_prox_instance(1.0, (0.0,), (8.0,))
    run = solve_proximal_point(P, 1.0, max_iters=40, tol=0.0, delta=0.1)
    rep = check_lyapunov_descent(run, np.zeros(1))
    assert rep.passed
    s = lyapunov_sequence(run, np.zeros(1)).s
    assert np.all(np.diff(s) < 0)


def test_lyapunov_skew_box(skew_run):
    rep = check_lyapunov_descent(skew_run, np.zeros(2))
    assert rep.passed and rep.violations == 0 and rep.details["start_index"] == 1


def test_lyapunov_inadmissible_step_is_only_reported():
    # outside the hypotheses nothing is promised; the report must still be produced
    P = make_skew_box_vi(2)
    run = solve_frb_constant(P, ConstantStepConfig(mu=5.0, max_iters=200, tol=0.0), validate=False)
    rep = check_lyapunov_descent(run, np.zeros(2))
    assert rep.status in ("PASS", "FAIL")


def test_rate_certificate_skew_box(skew_run):
    rep = rate_certificate(skew_run, np.zeros(2))
    assert rep.passed
    assert rep.details["C1"] == pytest.approx(rate_constant(skew_run, np.zeros(2)))


def test_rate_certificate_at_selected_n():
    P = make_skew_box_vi(2)
    run = solve_frb_constant(P, ConstantStepConfig(mu=0.4, max_iters=10_000, tol=0.0))
    C1 = rate_constant(run, np.zeros(2))
    changes = np.linalg.norm(np.diff(run.iterates[1:], axis=0), axis=1) ** 2
    for n in (10, 100, 1000, 10_000):
        assert changes[:n].min() <= 2 * C1 / (n * 0.1 * 1.0) + 1e-9
    assert rate_certificate(run, np.zeros(2)).passed


def test_rate_degenerate_start_at_solution():
    P = make_skew_box_vi(2)
    P = ProblemInstance(P.A, P.B, P.g, np.zeros(2), None, np.zeros(2))
    run = solve_frb_constant(P, ConstantStepConfig(mu=0.4, max_iters=5, tol=0.0))
    assert rate_constant(run, np.zeros(2)) == 0.0
    assert np.all(run.step_change == 0.0)
    assert rate_certificate(run, np.zeros(2)).passed


def test_rate_ppa_inside_envelope():
    P = make_prox_instance(1.0, (0.0,), (8.0,))
    run = solve_proximal_point(P, 0.4, max_iters=200, tol=0.0, delta=0.1)
    rep = rate_certificate(run, np.zeros(1))
    assert rep.passed and rep.details["slack_min"] > 0


def test_evaluation_counts():
    P = make_skew_box_vi(2)
    frb = solve_frb_constant(P, ConstantStepConfig(mu=0.4, max_iters=100, tol=0.0))
    rep = evaluation_report(frb)
    assert rep.passed and rep.details["a_evaluations"] == 101
    ts = solve_tseng_baseline(P, ConstantStepConfig(mu=0.4, max_iters=100, tol=0.0))
    rep = evaluation_report(ts)
    assert rep.passed and rep.details["a_evaluations"] == 200
    pp = solve_proximal_point(make_prox_instance(), 0.4, max_iters=10)
    assert evaluation_report(pp).details["a_evaluations"] == 0


def test_evaluation_report_catches_tampering(skew_run):
    skew_run.a_evals += 1
    assert not evaluation_report(skew_run).passed


def test_adaptive_n0_and_descent():
    P = make_skew_box_vi(2)
    run = solve_frb_adaptive(P, AdaptiveStepConfig(alpha=0.39, max_iters=100_000, tol=1e-12))
    n0 = detect_n0(run)
    assert n0 is not None and n0 >= 1
    assert check_lyapunov_descent(run, np.zeros(2)).passed


def test_step_bounds_and_settling():
    P = make_skew_box_vi(2)
    d = DSchedule.geometric(0.5, 0.1)
    run = solve_frb_adaptive(P, AdaptiveStepConfig(alpha=0.39, d_schedule=d, max_iters=100_000, tol=1e-12))
    assert step_size_bounds(run, L=1.0).passed
    k = step_settling_index(run.steps)
    assert k < run.steps.size
    assert step_settling_index([1.0, 0.5, 0.5, 0.5]) == 1
    assert step_settling_index([0.5, 0.5]) == 0


def test_diagnose_mapping(skew_run):
    out = diagnose(skew_run, np.zeros(2))
    assert out["lyapunov"] == out["rate"] == out["eval_count"] == "PASS"
    assert diagnose(skew_run, np.zeros(2)) == out


def test_diagnose_tseng_has_no_lyapunov():
    P = make_skew_box_vi(2)
    run = solve_tseng_baseline(P, ConstantStepConfig(mu=0.4, max_iters=50, tol=0.0))
    out = diagnose(run, np.zeros(2))
    assert out["lyapunov"] == "N/A" and out["eval_count"] == "PASS"


def test_errors():
    P = make_skew_box_vi(2)
    run = solve_frb_constant(P, ConstantStepConfig(mu=0.4, record_trace=False))
    with pytest.raises(NoTrace):
        check_lyapunov_descent(run, np.zeros(2))
    run = solve_frb_constant(P, ConstantStepConfig(mu=0.4, max_iters=5))
    with pytest.raises(NoReferenceSolution):
        rate_certificate(run, None)

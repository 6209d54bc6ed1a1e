import math

import numpy as np
import pytest

from gnsq import instances
from gnsq.deterministic import DetSolverConfig, scheme1_run
from gnsq.diagnostics import (
    ESTIMATED,
    USER,
    ProblemConstants,
    estimate_constants,
    growth_sandwich,
    pl_check,
    prox_grad_norm,
)
from gnsq.errors import DomainError
from gnsq.instances import linear_problem
from gnsq.planner import StochCertificate, certificate_check_stoch
from gnsq.problem import estimate_jacobian_lipschitz
from gnsq.stochastic import StochSolverConfig, scheme3_run, scheme4_run
from gnsq.trace import Event

from helpers import constant_residual, identity_1d


def test_linear_jacobian_constant_is_zero():
    p = instances.linear(6, 4, seed=0)
    assert estimate_jacobian_lipschitz(p, np.zeros(4)) <= 1e-12
    c = estimate_constants(p, np.zeros(4))
    assert c.L_Fhat == 0.0 and c.provenance["L_Fhat"] == USER


def test_secant_estimate_on_nonlinear_problem():
    p = instances.rosenbrock_system(2)
    estimate = estimate_jacobian_lipschitz(p, np.zeros(2))
    # The Jacobian changes by 20 per unit move in x1, scaled by 1/sqrt(2) and doubled.
    assert 20.0 / math.sqrt(2.0) < estimate <= 2.0 * 20.0 / math.sqrt(2.0) + 1e-9


def test_diagonal_jacobian_constants():
    p = linear_problem(np.diag([1.0, 2.0]), np.zeros(2))
    c = estimate_constants(p, np.zeros(2))
    assert c.mu == pytest.approx(0.5, rel=1e-12)
    assert c.M_F == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_single_component_flags_undefined_spread():
    c = estimate_constants(identity_1d(1.0), np.zeros(1))
    assert c.sigma_tilde == 0.0
    assert c.flags["sigma_undefined"]


def test_estimates_repeat_for_a_seed():
    p = instances.trig_system(4, seed=1, m=6)
    first = estimate_constants(p, np.full(4, 0.2), seed=3, batch_size=2)
    second = estimate_constants(p, np.full(4, 0.2), seed=3, batch_size=2)
    assert first.to_dict() == second.to_dict()


def test_constants_round_trip_and_derived_bounds():
    c = estimate_constants(instances.trig_system(3), np.zeros(3))
    again = ProblemConstants.from_dict(c.to_dict())
    assert again.to_dict() == c.to_dict()
    assert c.l_g2 == pytest.approx(2 * (c.M_G**2 + c.L_Fhat * c.P_g1))
    assert set(c.provenance.values()) <= {USER, ESTIMATED}


def test_constants_reject_negative_values():
    with pytest.raises(DomainError):
        ProblemConstants(L_Fhat=-1, M_G=1, M_F=1, P_g1=1, P_f1=1, l_F=1, mu=1, sigma_tilde=0)


def test_user_overrides_are_tagged():
    c = estimate_constants(instances.trig_system(3), np.zeros(3)).with_overrides(mu=0.25)
    assert c.mu == 0.25 and c.provenance["mu"] == USER


@pytest.mark.parametrize("b", [1, 2, 3, 4])
def test_pl_identity_rows(b):
    p = linear_problem(np.eye(4), np.zeros(4))
    report = pl_check(p, [np.zeros(4)], [b])
    assert report.mu_hat == pytest.approx(1.0 / b)
    assert report.verdict == "PASS"


def test_pl_fails_when_batch_exceeds_dimension():
    p = instances.linear(6, 3, seed=0)
    assert pl_check(p, [np.zeros(3)], [4]).verdict == "FAIL"


def test_pl_fails_on_duplicated_rows():
    p = instances.duplicated_rows()
    assert pl_check(p, [np.zeros(p.n)], [2]).verdict == "FAIL"


def test_pl_needs_inputs():
    with pytest.raises(DomainError):
        pl_check(identity_1d(), [], [1])


def test_prox_grad_norm_vanishes_at_root():
    p = instances.rosenbrock_system(2)
    assert prox_grad_norm(p, np.ones(2), 2.0) == 0.0


def test_prox_grad_norm_scalar():
    # T(1) = 1 - 1/(1 + tau L) = 2/3, so L (T - x) has norm 2/3.
    assert prox_grad_norm(identity_1d(), np.ones(1), 2.0, tau=1.0) == pytest.approx(2.0 / 3.0)


def test_prox_grad_norm_large_L_limit():
    p = instances.trig_system(3, seed=1)
    x = np.full(3, 0.5)
    tau = 0.7
    J = p.gradients(x, np.arange(p.m)) / math.sqrt(p.m)
    r = p.residuals(x, np.arange(p.m)) / math.sqrt(p.m)
    limit = np.linalg.norm(J.T @ r) / tau
    assert prox_grad_norm(p, x, 1e9, tau=tau) == pytest.approx(limit, rel=1e-6)


def test_reported_stationarity_matches_solver():
    p = instances.trig_system(4, seed=0)
    cfg = DetSolverConfig(f1_tol=0.0, prox_grad_tol=1e-6, step_tol=0.0)
    state = scheme1_run(p, cfg, np.full(4, 0.5))
    assert state.reason == "stationarity tolerance reached"
    last = [(r, x) for r, x in zip(state.trace, state.iterates) if r.event is Event.ACCEPT][-1]
    rec, x = last
    value = prox_grad_norm(p, x, rec.L_k, rec.tau_k)
    assert value == pytest.approx(rec.prox_grad_norm, rel=1e-10)
    assert value <= cfg.prox_grad_tol


def test_growth_sandwich_slacks():
    assert growth_sandwich(1.0, 2.0, 1.0, 1.0) == (0.0, 0.0)
    lower, upper = growth_sandwich(1.0, 1.0, 1.0, 1.0)
    assert lower < 0.0 <= upper


def test_full_batch_linear_rate_certificate():
    p = instances.overparam_features(4, 10, seed=0)
    cfg = StochSolverConfig(b=p.m, max_outer=60)
    report = certificate_check_stoch(p, scheme3_run, cfg, np.zeros(10), StochCertificate.PL_LINEAR)
    assert report.verdict == "PASS"
    start = [row for row in report.rows if row.k == 0]
    assert start and all(row.rhs >= row.lhs for row in start)


def test_one_batch_two_batch_certificate():
    p = instances.trig_system(4, seed=0, m=8)
    cfg = StochSolverConfig(b=4, tauL_tilde=1.0, eta_policy="OPTIMAL_MODEL", max_outer=60)
    report = certificate_check_stoch(p, scheme4_run, cfg, np.full(4, 0.5), StochCertificate.TWO_BATCH_STATIONARITY)
    assert report.verdict == "PASS"
    assert report.seeds == 32


def test_report_serializes():
    p = instances.overparam_features(4, 10, seed=0)
    cfg = StochSolverConfig(b=2, max_outer=30)
    report = certificate_check_stoch(p, scheme3_run, cfg, np.zeros(10), "stationarity", seeds=range(4))
    data = report.to_dict()
    assert set(data) >= {"theorem", "checkpoints", "slacks", "verdict"}
    assert len(data["slacks"]) == len(report.rows)

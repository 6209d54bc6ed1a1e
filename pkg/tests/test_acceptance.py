"""The fifteen acceptance criteria, one test each, at their stated tolerances.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary and by running this file directly.
"""

import math
import sys
import time

import numpy as np
import pytest

from gnsq import checks
from gnsq.diagnostics import ProblemConstants
from gnsq.planner import budget_linear_stochastic, budget_sublinear_stochastic

from budget_oracle import oracle_linear, oracle_sublinear

TIME_LIMIT_S = 60.0
RESULTS: dict[str, str] = {}


def budget_oracle_check(points: int = 20, seed: int = 13) -> checks.CheckResult:
    """Closed-form budgets against the 50-digit re-derivation on a random parameter grid."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(points):
        c = ProblemConstants(
            L_Fhat=rng.uniform(0.0, 3.0),
            M_G=rng.uniform(0.2, 3.0),
            M_F=rng.uniform(0.2, 3.0),
            P_g1=rng.uniform(0.1, 5.0),
            P_f1=rng.uniform(0.1, 5.0),
            l_F=rng.uniform(0.0, 4.0),
            mu=rng.uniform(0.05, 1.0),
            sigma_tilde=rng.uniform(0.0, 2.0),
            m=int(rng.integers(2, 5000)),
            n=int(rng.integers(1, 500)),
        )
        args = (
            rng.uniform(0.1, 10.0),
            10.0 ** rng.uniform(-4.0, 0.5),
            rng.uniform(0.05, 0.95),
            rng.uniform(0.1, 1.9),
            rng.uniform(1.0, 4.0),
            10.0 ** rng.uniform(-1.0, 1.0),
        )
        E, eps, r, eta, gamma, L = args
        mismatches += budget_sublinear_stochastic(c, E, eps, r, eta=eta, gamma=gamma, L=L) != oracle_sublinear(c, *args)
        mismatches += budget_linear_stochastic(c, E, eps, r, eta=eta, gamma=gamma, L=L) != oracle_linear(c, *args)
    monotone = checks.check_budget_monotonicity()
    detail = f"oracle mismatches={mismatches}/{2 * points}; monotonicity worst={monotone.worst:.3e}"
    worst = math.inf if mismatches else monotone.worst
    return checks.CheckResult("budgets", worst, 0.0, 2 * points + monotone.count, detail)


CRITERIA = [
    ("C1", "majorization", checks.check_majorization),
    ("C2", "prox optimality", checks.check_prox_optimality),
    ("C3", "decomposition identity", checks.check_decomposition),
    ("C4", "batch variance", checks.check_variance),
    ("C5", "solver path equivalence", checks.check_solver_paths),
    ("C6", "full-batch degeneration", checks.check_degeneration),
    ("C7", "monotone decrease", checks.check_monotone),
    ("C8", "quadratic phase", checks.check_quadratic_phase),
    ("C9", "PL linear rate", checks.check_pl_rate),
    ("C10", "interpolation regime", checks.check_interpolation),
    ("C11", "step norm bounds", checks.check_step_norms),
    ("C12", "probe cap", checks.check_probe_cap),
    ("C13", "budget planners", budget_oracle_check),
    ("C14", "gradient correctness", checks.check_gradient),
    ("C15", "determinism", checks.check_determinism),
]


def evaluate(label: str, title: str, check) -> tuple[bool, str]:
    started = time.perf_counter()
    result = check()
    elapsed = time.perf_counter() - started
    passed = result.passed and elapsed < TIME_LIMIT_S
    line = (
        f"{'PASS' if passed else 'FAIL'} {label} {title}: worst={result.worst:.3e} "
        f"limit={result.limit:.3e} n={result.count} time={elapsed:.1f}s {result.detail}"
    ).rstrip()
    RESULTS[label] = line
    return passed, line


@pytest.mark.parametrize("label, title, check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(label, title, check):
    passed, line = evaluate(label, title, check)
    print(line)
    assert passed, line


if __name__ == "__main__":
    outcomes = [evaluate(*criterion) for criterion in CRITERIA]
    for _, line in outcomes:
        print(line)
    sys.exit(0 if all(ok for ok, _ in outcomes) else 1)

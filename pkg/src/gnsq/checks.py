"""Property suites behind ``gnsq check`` and the acceptance tests.

Each check returns the worst observed violation together with the limit it
is held to, so callers can print PASS/FAIL lines or assert on the numbers.
The ``lemmas`` suite never runs a solver; the ``certificates`` suite does.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Optional

import numpy as np
from numpy.typing import NDArray

from . import instances
from .deterministic import DetSolverConfig, scheme1_run
from .diagnostics import component_spread, estimate_constants
from .linalg import GramSide, doubly_stochastic_solve, factorize, regularized_solve, sigma_bounds
from .model import (
    ModelAnchor,
    decomposition_residual,
    delta_r,
    kappa,
    prox_point,
    psi_gradient,
    psi_value,
)
from .planner import (
    DetCertificate,
    StochCertificate,
    budget_linear_stochastic,
    budget_sublinear_stochastic,
    budget_two_batch,
    certificate_check_det,
    certificate_check_stoch,
    quadratic_phase_bound,
    run_seeds,
)
from .problem import (
    BatchHandle,
    ResidualProblem,
    eval_f1hat,
    eval_f2hat,
    estimate_jacobian_lipschitz,
    grad_f2hat,
    jacobian_hat,
)
from .stochastic import (
    StochSolverConfig,
    interpolation_run,
    probe_cap,
    scheme3_run,
    scheme4_run,
    scheme5_run,
    step_norm_bounds,
)
from .trace import Event

LEMMAS = "lemmas"
CERTIFICATES = "certificates"
ALL = "all"


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    limit: float
    count: int
    detail: str = ""
    report: Optional[dict[str, Any]] = field(default=None, compare=False)

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.limit)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        return f"{self.verdict} {self.name}: worst={self.worst:.3e} limit={self.limit:.3e} n={self.count} {self.detail}".rstrip()

    def to_dict(self) -> dict[str, Any]:
        """Certificate report; checks without per-checkpoint rows report one slack, limit minus worst."""
        data = {
            "theorem": self.name,
            "checkpoints": [],
            "slacks": [self.limit - self.worst],
            "verdict": self.verdict,
            "count": self.count,
            "detail": self.detail,
        }
        if self.report is not None:
            data.update({key: self.report[key] for key in ("checkpoints", "slacks", "rows", "note") if key in self.report})
        return data


def problem_pool() -> list[ResidualProblem]:
    """Builtin instances covering square, over- and underdetermined shapes."""
    return [
        instances.rosenbrock_system(2),
        instances.rosenbrock_system(4),
        instances.trig_system(5, seed=0),
        instances.trig_system(4, seed=1, m=7),
        instances.linear(6, 4, consistent=False, seed=2),
        instances.linear(4, 10, seed=1),
        instances.overparam_features(),
        instances.duplicated_rows(),
    ]


def _center(p: ResidualProblem) -> NDArray:
    return np.zeros(p.n) if p.x_star is None else p.x_star


def _random_batch(rng: np.random.Generator, m: int) -> BatchHandle:
    b = int(rng.integers(1, m + 1))
    return BatchHandle.of(rng.choice(m, size=b, replace=False) + 1, m)


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _unit_ball(rng: np.random.Generator, n: int, radius: float) -> NDArray:
    direction = rng.standard_normal(n)
    return direction / np.linalg.norm(direction) * radius * rng.uniform() ** (1.0 / n)


# ----------------------------------------------------------------------------
# Lemma-level suites


def check_majorization(count: int = 1000, seed: int = 0) -> CheckResult:
    """The local model with L = 2 x estimated Lipschitz constant dominates f1hat."""
    rng = np.random.default_rng(seed)
    pool = problem_pool()
    worst = -math.inf
    for _ in range(count):
        p = pool[rng.integers(len(pool))]
        x = _center(p) + rng.normal(scale=0.7, size=p.n)
        y = x + _unit_ball(rng, p.n, 1.0)
        L = max(2.0 * estimate_jacobian_lipschitz(p, x, n_pairs=32, seed=int(rng.integers(1 << 31))), 1e-8)
        anchor = ModelAnchor.build(p, x, L, _log_uniform(rng, 1e-3, 10.0))
        worst = max(worst, eval_f1hat(p, y) - psi_value(anchor, y))
    return CheckResult("majorization", worst, 1e-12, count)


def check_prox_optimality(count: int = 500, seed: int = 1) -> CheckResult:
    """The model gradient vanishes at the computed prox point, relative to the model curvature."""
    rng = np.random.default_rng(seed)
    pool = problem_pool()
    worst = 0.0
    for _ in range(count):
        p = pool[rng.integers(len(pool))]
        x = _center(p) + rng.normal(size=p.n)
        anchor = ModelAnchor.build(
            p, x, _log_uniform(rng, 1e-3, 1e3), _log_uniform(rng, 1e-3, 1e2), _random_batch(rng, p.m)
        )
        grad = psi_gradient(anchor, prox_point(anchor))
        scale = 1.0 + anchor.L + np.linalg.norm(anchor.jacobian, 2) ** 2 / anchor.tau
        worst = max(worst, float(np.linalg.norm(grad)) / scale)
    return CheckResult("prox_optimality", worst, 1e-9, count)


def check_decomposition(count: int = 500, seed: int = 2) -> CheckResult:
    """The model expands exactly around its minimizer."""
    rng = np.random.default_rng(seed)
    pool = problem_pool()
    worst = 0.0
    for _ in range(count):
        p = pool[rng.integers(len(pool))]
        x = _center(p) + rng.normal(size=p.n)
        anchor = ModelAnchor.build(
            p, x, _log_uniform(rng, 1e-2, 1e2), _log_uniform(rng, 1e-2, 1e1), _random_batch(rng, p.m)
        )
        y = x + rng.normal(scale=2.0, size=p.n)
        defect = decomposition_residual(anchor, y)
        scale = max(1.0, abs(psi_value(anchor, y)), abs(psi_value(anchor, prox_point(anchor))))
        worst = max(worst, abs(defect) / scale)
    return CheckResult("decomposition", worst, 1e-10, count)


def check_variance(max_m: int = 8, seed: int = 3) -> CheckResult:
    """Batch variance of the squared residual: enumeration versus the closed form."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    for m in range(1, max_m + 1):
        values = rng.normal(size=m) * rng.uniform(0.5, 3.0)
        squares = values**2
        full = squares.mean()
        spread = component_spread(values)
        for b in range(1, m + 1):
            samples = np.array([squares[list(c)].mean() for c in itertools.combinations(range(m), b)])
            enumerated = float(np.mean((samples - full) ** 2))
            closed = spread / b * (1.0 - b / m)
            scale = max(abs(closed), spread / b, np.finfo(float).tiny)
            worst = max(worst, abs(enumerated - closed) / scale)
            count += 1
    return CheckResult("variance", worst, 1e-12, count)


def check_solver_paths(count: int = 200, seed: int = 4) -> CheckResult:
    """Both Gram decompositions and the two-batch solve against a dense solve."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(count):
        n = int(rng.integers(1, 9))
        b = n if i % 4 == 0 else int(rng.integers(1, 13))
        J = rng.normal(size=(b, n))
        tauL = _log_uniform(rng, 1e-4, 1e2)
        residual = rng.normal(size=b)
        g = rng.normal(size=n)
        system = J.T @ J + tauL * np.eye(n)
        dense = np.linalg.solve(system, J.T @ residual)
        dense_g = np.linalg.solve(system, g)
        for side in GramSide:
            cache = factorize(J, residual, side=side)
            got = regularized_solve(cache, tauL)
            worst = max(worst, float(np.linalg.norm(got - dense) / max(np.linalg.norm(dense), 1e-300)))
            got_g = doubly_stochastic_solve(cache, tauL, g)
            worst = max(worst, float(np.linalg.norm(got_g - dense_g) / np.linalg.norm(dense_g)))
    return CheckResult("solver_paths", worst, 1e-8, count)


def check_sufficient_decrease(count: int = 300, seed: int = 5) -> CheckResult:
    """tau/2 + f2/(2 tau) - f1(T) dominates both L/2 ||T - x||^2 and the radius bound."""
    rng = np.random.default_rng(seed)
    pool = problem_pool()
    worst = -math.inf
    for _ in range(count):
        p = pool[rng.integers(len(pool))]
        x = _center(p) + rng.normal(scale=0.5, size=p.n)
        estimate = estimate_jacobian_lipschitz(p, x, seed=int(rng.integers(1 << 31)), radius=2.0)
        L = max(2.0 * estimate, 1e-3) * _log_uniform(rng, 1.0, 10.0)
        tau = _log_uniform(rng, 1e-2, 10.0)
        anchor = ModelAnchor.build(p, x, L, tau)
        T = prox_point(anchor)
        if np.linalg.norm(T - x) > 1.0:
            continue
        gap = tau / 2.0 + eval_f2hat(p, x) / (2.0 * tau) - eval_f1hat(p, T)
        worst = max(worst, L / 2.0 * float(np.sum((T - x) ** 2)) - gap)
        r = _log_uniform(rng, 1e-3, 1.0)
        worst = max(worst, L * r * r * kappa(delta_r(p, x, r) / (2.0 * tau * L * r * r)) - gap)
    return CheckResult("sufficient_decrease", worst, 1e-12, count)


def check_kappa(kappa_fn: Callable[[float], float] = kappa) -> CheckResult:
    """Known values, slope continuity at one and convexity of the kappa function."""
    worst = 0.0
    for t, expected in ((0.0, 0.0), (0.5, 0.125), (1.0, 0.5), (2.0, 1.5), (10.0, 9.5)):
        worst = max(worst, abs(kappa_fn(t) - expected))
    h = 1e-6
    left = (kappa_fn(1.0) - kappa_fn(1.0 - h)) / h
    right = (kappa_fn(1.0 + h) - kappa_fn(1.0)) / h
    worst = max(worst, abs(left - right) - 2e-6)
    grid = np.linspace(0.0, 4.0, 81)
    values = np.array([kappa_fn(float(t)) for t in grid])
    worst = max(worst, float(np.max(-(values[:-2] - 2.0 * values[1:-1] + values[2:]))) - 1e-12)
    return CheckResult("kappa", max(worst, 0.0), 1e-12, 8)


def check_gradient(count: int = 200, seed: int = 6) -> CheckResult:
    """Analytic gradient of f2hat against central differences."""
    rng = np.random.default_rng(seed)
    pool = problem_pool()
    worst = 0.0
    for _ in range(count):
        p = pool[rng.integers(len(pool))]
        x = _center(p) + rng.normal(size=p.n)
        grad = grad_f2hat(p, x)
        fd = np.empty(p.n)
        for j in range(p.n):
            h = 1e-5 * max(1.0, abs(x[j]))
            up, down = x.copy(), x.copy()
            up[j] += h
            down[j] -= h
            fd[j] = (eval_f2hat(p, up) - eval_f2hat(p, down)) / (2.0 * h)
        worst = max(worst, float(np.linalg.norm(grad - fd) / max(np.linalg.norm(grad), 1e-8)))
    return CheckResult("gradient", worst, 1e-5, count)


# ----------------------------------------------------------------------------
# Solver-level suites


def _strict(cfg, **extra):
    return replace(cfg, f1_tol=0.0, prox_grad_tol=0.0, step_tol=0.0, **extra)


def check_degeneration(iterations: int = 50) -> CheckResult:
    """Batch-prox with the full batch reproduces the full-batch method iterate for iterate."""
    worst = 0.0
    cases = [
        (instances.rosenbrock_system(2), np.array([-1.2, 1.0])),
        (instances.trig_system(5), np.full(5, 0.3)),
        (instances.linear(6, 4, consistent=False, seed=2), np.ones(4)),
    ]
    for p, x0 in cases:
        tolerances = dict(f1_tol=1e-10, prox_grad_tol=1e-8, step_tol=1e-12, max_outer=iterations)
        det = scheme1_run(p, DetSolverConfig(**tolerances), x0)
        sto = scheme3_run(p, StochSolverConfig(b=p.m, **tolerances), x0)
        if len(det.iterates) != len(sto.iterates):
            return CheckResult("degeneration", math.inf, 1e-12, len(cases), f"{p.name}: iterate counts differ")
        for a, b in zip(det.iterates, sto.iterates):
            worst = max(worst, float(np.max(np.abs(a - b))))
    return CheckResult("degeneration", worst, 1e-12, len(cases))


def check_monotone(seeds: Iterable[int] = range(4), iterations: int = 200) -> CheckResult:
    """f1hat never increases under the full-batch method with tau = f1hat and exact steps."""
    worst = -math.inf
    count = 0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        problems = [
            instances.linear(6, 4, seed=seed),
            instances.linear(6, 4, consistent=False, seed=seed),
            instances.rosenbrock_system(2),
            instances.rosenbrock_system(4),
            instances.trig_system(5, seed=seed),
            instances.overparam_features(seed=seed),
            instances.duplicated_rows(seed=seed),
        ]
        for p in problems:
            x0 = _center(p) + rng.normal(scale=1.5, size=p.n)
            cfg = DetSolverConfig(step_rule="EXACT_PROX", tau_rule="F1HAT", eps_rule="ZERO", max_outer=iterations)
            state = scheme1_run(p, cfg, x0)
            history = [state.f1_initial] + [det["f1_next"] for det in state.details]
            worst = max(worst, float(np.max(np.diff(history))) if len(history) > 1 else 0.0)
            count += 1
    return CheckResult("monotone", worst, 0.0, count)


def check_quadratic_phase(seeds: Iterable[int] = range(8)) -> CheckResult:
    """Distance to the root drops below 1e-14 within five steps at the predicted quadratic rate.

    Only transitions ending above the rounding floor of the root enter the
    ratio test; the last three of those are checked against 1.5 times the
    bound coefficient.
    """
    p = instances.trig_system(5)
    root = p.x_star
    varsigma = sigma_bounds(jacobian_hat(p, root))[0]
    L_est = estimate_jacobian_lipschitz(p, root)
    floor = 64.0 * np.finfo(float).eps * float(np.linalg.norm(root))
    worst = -math.inf
    count = 0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        direction = rng.standard_normal(p.n)
        x0 = root + 1e-2 * direction / np.linalg.norm(direction)
        cfg = _strict(DetSolverConfig(step_rule="EXACT_PROX", tau_rule="F1HAT", max_outer=5))
        state = scheme1_run(p, cfg, x0)
        dist = [float(np.linalg.norm(x - root)) for x in state.iterates]
        worst = max(worst, min(dist) / 1e-14 - 1.0)
        excess = []
        for k, rec in enumerate(state.trace):
            if rec.event is not Event.ACCEPT or k + 1 >= len(dist) or dist[k + 1] <= floor:
                continue
            bound = quadratic_phase_bound(dist[k], rec.tau_k, rec.L_k, 0.0, varsigma, L_est)
            excess.append(dist[k + 1] / (1.5 * bound) - 1.0)
        if len(excess) < 3:
            return CheckResult("quadratic_phase", math.inf, 0.0, count, "fewer than three resolvable transitions")
        worst = max(worst, max(excess[-3:]))
        count += 1
    return CheckResult("quadratic_phase", worst, 0.0, count)


def check_pl_rate(seeds: Iterable[int] = range(3), iterations: int = 60) -> CheckResult:
    """Per-iteration linear-rate inequalities on consistent full-row-rank linear systems."""
    worst = -math.inf
    count = 0
    for seed in seeds:
        for m, n, cond in ((4, 10, 10.0), (5, 5, 3.0), (3, 8, 30.0)):
            p = instances.linear(m, n, cond=cond, seed=seed)
            x0 = np.random.default_rng(seed).normal(size=n)
            c = estimate_constants(p, x0)
            for eta in (0.5, 1.0, 1.5):
                cfg = DetSolverConfig(step_rule="SCALED", tau_rule="F1HAT", eta=eta, max_outer=iterations)
                state = scheme1_run(p, cfg, x0)
                scales = [det["f1_next"] for det in state.details]
                for which in (DetCertificate.SCALED_STEP_BOUND, DetCertificate.LINEAR_RATE):
                    slacks = certificate_check_det(state, which, c)
                    f1_at = [rec.f1hat for rec in state.trace if rec.event is not Event.CONVERGED]
                    for slack, f1 in zip(slacks, f1_at):
                        worst = max(worst, -slack / max(f1, 1e-300) - 1e-8)
                count += len(scales)
    return CheckResult("pl_rate", worst, 0.0, count)


def interpolation_states(seeds: Iterable[int] = range(32), tauL: float = 100.0, max_outer: int = 20000):
    p = instances.overparam_features(4, 10)
    cfg = StochSolverConfig(
        scheme="interpolation", b=1, b_tilde=1, tauL_tilde=tauL, max_outer=max_outer, f1_tol=1e-6
    )
    x0 = np.zeros(p.n)
    return p, cfg, x0, run_seeds(interpolation_run, p, cfg, x0, list(seeds))


def check_interpolation(seeds: Iterable[int] = range(32)) -> CheckResult:
    """Every run reaches f2hat <= 1e-12 and the seed mean stays under the envelope."""
    p, cfg, x0, states = interpolation_states(seeds)
    final = max(st.last_f1**2 for st in states)
    report = certificate_check_stoch(
        p, interpolation_run, cfg, x0, StochCertificate.INTERPOLATION, checkpoints=[1, 5, 10, 25], states=states
    )
    worst = final / 1e-12 - 1.0 if report.passed else math.inf
    return CheckResult("interpolation", worst, 0.0, len(states), f"envelope {report.verdict}", report.to_dict())


def check_average_stationarity(radius: Optional[float] = None, seeds: Iterable[int] = range(3)) -> CheckResult:
    """Running-average stationarity and model-decrease bounds along full-batch runs.

    ``radius`` fixes the model-decrease radius; by default each checkpoint
    uses the latest step length.
    """
    worst = -math.inf
    count = 0
    for seed in seeds:
        p = instances.trig_system(5, seed=seed)
        x0 = np.full(p.n, 0.6)
        c = estimate_constants(p, x0)
        state = scheme1_run(p, DetSolverConfig(step_rule="EXACT_PROX", tau_rule="F1HAT", eps_rule="ZERO"), x0)
        for which in (DetCertificate.PROX_GRADIENT, DetCertificate.MODEL_DECREASE):
            slacks = certificate_check_det(state, which, c, p=p, radius=radius)
            worst = max([worst] + [-s for s in slacks])
            count += len(slacks)
    return CheckResult("average_stationarity", worst, 1e-10, count)


def check_step_norms(seeds: Iterable[int] = range(2), iterations: int = 60) -> CheckResult:
    """Accepted exact batch steps stay inside the step-length interval."""
    worst = -math.inf
    count = 0
    for seed in seeds:
        for p in problem_pool():
            x0 = _center(p) + np.random.default_rng(seed).normal(size=p.n)
            b = max(1, p.m // 2)
            for runner, eta in ((scheme3_run, 1.0), (scheme3_run, 0.5), (scheme5_run, 1.0), (scheme4_run, 1.0)):
                cfg = StochSolverConfig(b=b, eta=eta, max_outer=iterations, seed=seed)
                state = runner(p, cfg, x0)
                two_batch = runner is scheme4_run
                for rec, det in zip(state.trace, state.details):
                    if rec.event is not Event.ACCEPT:
                        continue
                    if two_batch:
                        M = max(det["sigma_max_batch"], det["sigma_max_tilde"])
                        lo, hi = step_norm_bounds(rec.eta_k, det["grad_norm_batch"], M, rec.g1hat_batch, rec.L_k, det["tauL"])
                    else:
                        lo, hi = step_norm_bounds(
                            rec.eta_k, det["grad_norm_batch"], det["sigma_max_batch"], rec.g1hat_batch, rec.L_k
                        )
                    worst = max(worst, lo - rec.step_norm, rec.step_norm - hi)
                    count += 1
    return CheckResult("step_norms", worst, 1e-10, count)


def check_probe_cap(target: int = 1000) -> CheckResult:
    """Ladder probes per variable-interval iteration stay within the logarithmic cap."""
    worst = -math.inf
    count = 0
    seed = 0
    while count < target:
        for p in problem_pool():
            x0 = _center(p) + np.random.default_rng(seed).normal(size=p.n)
            cfg = StochSolverConfig(b=max(1, p.m // 2), max_outer=80, seed=seed, f1_tol=0.0)
            state = scheme5_run(p, cfg, x0)
            cap = probe_cap(cfg.gamma, state.flags["L_Fhat"], cfg.L_floor)
            for rec in state.trace:
                # Stalls are iterations where the ladder hit its cap by definition.
                if rec.event is Event.ACCEPT:
                    worst = max(worst, rec.n_L_probes - cap)
                    count += 1
        seed += 1
    return CheckResult("probe_cap", worst, 0.0, count)


def check_budget_monotonicity() -> CheckResult:
    """Iteration counts and batch sizes never drop as the target accuracy tightens."""
    from .diagnostics import ProblemConstants

    c = ProblemConstants(L_Fhat=0.5, M_G=1.2, M_F=1.0, P_g1=2.0, P_f1=1.5, l_F=0.8, mu=0.3, sigma_tilde=0.7, m=50, n=20)
    grid = np.geomspace(1.0, 1e-3, 25)
    planners = {
        "sublinear": lambda e: budget_sublinear_stochastic(c, 2.0, e, 0.5),
        "linear": lambda e: budget_linear_stochastic(c, 2.0, e, 0.5),
        "two_batch": lambda e: budget_two_batch(c, 2.0, e, (0.5, 0.3, 0.2), 1.0),
        "two_batch_pl": lambda e: budget_two_batch(c, 2.0, e, (0.5, 0.3, 0.2), 1.0, pl=True),
    }
    worst = -math.inf
    for plan in planners.values():
        previous = None
        for eps in grid:
            result = plan(float(eps))
            k, b = result[0], result[-1]
            if previous is not None:
                worst = max(worst, previous[0] - k, previous[1] - b)
            previous = (k, b)
    return CheckResult("budget_monotonicity", worst, 0.0, len(planners) * grid.size)


def check_determinism(seed: int = 7) -> CheckResult:
    """Identical seeds give byte-identical JSONL traces."""
    p = instances.trig_system(5)
    x0 = np.full(p.n, 0.4)
    mismatches = 0
    cases = [
        (scheme3_run, StochSolverConfig(b=2, max_outer=40, seed=seed)),
        (scheme4_run, StochSolverConfig(b=2, b_tilde=3, max_outer=40, seed=seed)),
        (scheme5_run, StochSolverConfig(b=3, step_rule="INEXACT", eps=1e-4, max_outer=40, seed=seed)),
    ]
    for runner, cfg in cases:
        first = runner(p, cfg, x0).jsonl()
        second = runner(p, cfg, x0).jsonl()
        mismatches += int(first != second)
    return CheckResult("determinism", float(mismatches), 0.0, len(cases))


LEMMA_CHECKS: dict[str, Callable[[], CheckResult]] = {
    "majorization": check_majorization,
    "prox_optimality": check_prox_optimality,
    "decomposition": check_decomposition,
    "variance": check_variance,
    "solver_paths": check_solver_paths,
    "sufficient_decrease": check_sufficient_decrease,
    "kappa": check_kappa,
    "gradient": check_gradient,
}

CERTIFICATE_CHECKS: dict[str, Callable[[], CheckResult]] = {
    "degeneration": check_degeneration,
    "monotone": check_monotone,
    "quadratic_phase": check_quadratic_phase,
    "pl_rate": check_pl_rate,
    "average_stationarity": check_average_stationarity,
    "interpolation": check_interpolation,
    "step_norms": check_step_norms,
    "probe_cap": check_probe_cap,
    "budget_monotonicity": check_budget_monotonicity,
    "determinism": check_determinism,
}


def run_suite(
    suite: str = ALL,
    seed: Optional[int] = None,
    overrides: Optional[dict] = None,
    radius: Optional[float] = None,
) -> list[CheckResult]:
    """Run the named suite; ``overrides`` swaps individual checks, e.g. for negative controls.

    ``seed`` and ``radius`` reach every check that takes them.
    """
    if suite not in (LEMMAS, CERTIFICATES, ALL):
        raise ValueError(f"unknown suite {suite!r}")
    selected: dict[str, Callable[[], CheckResult]] = {}
    if suite in (LEMMAS, ALL):
        selected.update(LEMMA_CHECKS)
    if suite in (CERTIFICATES, ALL):
        selected.update(CERTIFICATE_CHECKS)
    selected.update(overrides or {})
    results = []
    for check in selected.values():
        accepted = check.__code__.co_varnames[: check.__code__.co_argcount]
        kwargs = {name: value for name, value in (("seed", seed), ("radius", radius)) if value is not None and name in accepted}
        results.append(check(**kwargs))
    return results

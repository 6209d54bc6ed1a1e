"""Mini-batch variants: batch prox steps, two-batch steps and the interpolation run.

Every run owns a seeded sampler that draws batches uniformly without
replacement, so identical configurations reproduce identical traces.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .deterministic import inexact_inner_solve, lipschitz_estimate, lipschitz_ladder
from .diagnostics import ProblemConstants, component_spread, estimate_constants
from .errors import BracketFailure, CapExceeded, DomainError, StallLimit, ZeroGradient
from .linalg import cache_sigma_max, doubly_stochastic_solve, factorize, sigma_bounds
from .model import ModelAnchor, gauss_newton_direction, optimal_tau, psi_at_step, psi_value
from .problem import BatchHandle, ResidualProblem, as_point, eval_f1hat, eval_g2hat, jacobian_hat, residual_hat
from .trace import CONVERGED, MAX_OUTER, STALLED, Event, RunState, TraceRecord

STALL_LIMIT = 10


class Scheme(str, Enum):
    BATCH_PROX = "batch_prox"
    TWO_BATCH = "two_batch"
    VARIABLE_INTERVAL = "variable_interval"
    ADAPTIVE_TAU = "adaptive_tau"
    INTERPOLATION = "interpolation"


class StochStepRule(str, Enum):
    SCALED = "SCALED"
    TWO_BATCH = "TWO_BATCH"
    INEXACT = "INEXACT"


class EtaPolicy(str, Enum):
    CONST = "CONST"
    OPTIMAL_MODEL = "OPTIMAL_MODEL"
    INTERPOLATION = "INTERPOLATION"


class EpsPolicy(str, Enum):
    EPS_OVER_G1 = "EPS_OVER_G1"
    GRAD_PROPORTIONAL = "GRAD_PROPORTIONAL"
    PL_PROPORTIONAL = "PL_PROPORTIONAL"


class CurvaturePolicy(str, Enum):
    BISECTION = "BISECTION"
    KNOWN = "KNOWN"


class BatchSampler:
    """Uniform size-b subsets of 1..m drawn without replacement from a seeded generator."""

    def __init__(self, m: int, b: int, seed: int = 0):
        if not 1 <= b <= m:
            raise DomainError(f"batch size must lie in 1..{m}, got {b}")
        self.m = m
        self.b = b
        self.rng = np.random.default_rng(seed)

    def draw(self) -> BatchHandle:
        if self.b == self.m:
            return BatchHandle.full(self.m)
        picked = self.rng.choice(self.m, size=self.b, replace=False)
        return BatchHandle(tuple(int(i) + 1 for i in np.sort(picked)))


def sample_batch(sampler: BatchSampler) -> BatchHandle:
    return sampler.draw()


@dataclass(frozen=True)
class StochSolverConfig:
    scheme: Scheme = Scheme.BATCH_PROX
    b: int = 1
    b_tilde: Optional[int] = None
    independent_tilde: bool = False
    step_rule: StochStepRule = StochStepRule.SCALED
    eta_policy: EtaPolicy = EtaPolicy.CONST
    eta: float = 1.0
    gamma: float = 2.0
    gamma_tilde: float = 1.0
    L_floor: float = 1.0
    tauL_tilde: float = 1.0
    eps_policy: EpsPolicy = EpsPolicy.EPS_OVER_G1
    eps: float = 0.0
    delta: float = 0.0
    l_policy: CurvaturePolicy = CurvaturePolicy.BISECTION
    l_init: Optional[float] = None
    l_known: Optional[float] = None
    L_known: Optional[float] = None
    seed: int = 0
    max_outer: int = 10_000
    f1_tol: float = 1e-10
    prox_grad_tol: float = 0.0
    step_tol: float = 0.0
    timing: bool = False
    constants: Optional[ProblemConstants] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for name, kind in (
            ("scheme", Scheme),
            ("step_rule", StochStepRule),
            ("eta_policy", EtaPolicy),
            ("eps_policy", EpsPolicy),
            ("l_policy", CurvaturePolicy),
        ):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if self.b < 1 or (self.b_tilde is not None and self.b_tilde < 1):
            raise DomainError("batch sizes must be positive")
        if not self.gamma >= self.gamma_tilde >= 1.0:
            raise DomainError(f"need gamma >= gamma_tilde >= 1, got {self.gamma}, {self.gamma_tilde}")
        if not self.L_floor > 0.0:
            raise DomainError("L_floor must be positive")
        if not self.tauL_tilde > 0.0:
            raise DomainError("tauL_tilde must be positive")
        if not self.eta > 0.0:
            raise DomainError("eta must be positive")
        if not 0.0 <= self.delta < 1.0:
            raise DomainError("delta must lie in [0, 1)")
        if self.eps < 0.0:
            raise DomainError("eps must be nonnegative")
        if self.max_outer < 1:
            raise DomainError("max_outer must be at least 1")


def optimal_model_eta(
    J_B: NDArray,
    J_Btilde: NDArray,
    tauL: float,
    l_k: float,
    F_B: NDArray,
) -> float:
    """Step factor minimizing the quadratic upper model along the two-batch direction.

    With H the regularized inverse built from ``J_Btilde`` and g = J_B^T F_B
    this is ``2 <g, H g> / (l_k ||H g||^2)``.
    """
    if not l_k > 0.0:
        raise DomainError("l_k must be positive")
    g = np.asarray(J_B, dtype=float).T @ np.asarray(F_B, dtype=float)
    return _optimal_eta_from(factorize(np.asarray(J_Btilde, dtype=float)), tauL, l_k, g)


def _optimal_eta_from(cache_tilde, tauL: float, l_k: float, g: NDArray) -> float:
    if not np.any(g):
        raise ZeroGradient("batch gradient vanishes; the optimal step factor is undefined")
    Hg = doubly_stochastic_solve(cache_tilde, tauL, g)
    return float(2.0 * (g @ Hg) / (l_k * (Hg @ Hg)))


def interpolation_eta(mu: float, M_G: float, M_F: float, L_Fhat: float, P_f1: float, tauL: float) -> float:
    """Fixed step factor of the interpolation regime.

    ``mu (tauL)^2 / ((M_G^2 + tauL) (L_Fhat P_f1 + M_F^2) M_G^2)``.
    """
    for name, value in (("mu", mu), ("M_G", M_G), ("M_F", M_F), ("tauL", tauL)):
        if not value > 0.0:
            raise DomainError(f"{name} must be positive, got {value!r}")
    if L_Fhat < 0.0 or P_f1 < 0.0:
        raise DomainError("L_Fhat and P_f1 must be nonnegative")
    if mu > M_G**2 * (1.0 + 1e-12):
        raise DomainError(f"PL constant {mu} exceeds the squared batch Jacobian bound {M_G**2}")
    return mu * tauL**2 / ((M_G**2 + tauL) * (L_Fhat * P_f1 + M_F**2) * M_G**2)


def interpolation_rate(c: ProblemConstants, tauL: float) -> float:
    """Exponent per iteration of the interpolation-regime envelope."""
    return (c.mu * tauL / (c.M_G**2 + tauL)) ** 2 / ((c.L_Fhat * c.P_f1 + c.M_F**2) * c.M_G**2)


@dataclass(frozen=True)
class VarianceReport:
    exact: float
    enumerated: Optional[float]
    sigma_undefined: bool = False


def variance_of_g2(p: ResidualProblem, x: NDArray, b: int) -> VarianceReport:
    """Variance of the batch squared residual over uniform size-b batches.

    ``exact`` is the closed form sigma(x)^2 / b * (1 - b/m). For m <= 10 every
    batch is enumerated as an independent check.
    """
    if not 1 <= b <= p.m:
        raise DomainError(f"batch size must lie in 1..{p.m}")
    x = as_point(p, x)
    values = p.residuals(x, np.arange(p.m))
    exact = component_spread(values) / b * (1.0 - b / p.m)
    enumerated = None
    if p.m <= 10:
        squares = values**2
        full = squares.mean()
        samples = np.array([squares[list(c)].mean() for c in itertools.combinations(range(p.m), b)])
        enumerated = float(np.mean((samples - full) ** 2))
    return VarianceReport(float(exact), enumerated, sigma_undefined=p.m == 1)


def inexact_eps_bound(
    policy: EpsPolicy,
    eps: float = 0.0,
    g1: float = 0.0,
    grad_norm: float = 0.0,
    M_G: Optional[float] = None,
    L_k: float = 1.0,
    mu: Optional[float] = None,
    delta: float = 0.0,
) -> float:
    """Upper bound on the inner-solve accuracy for the inexact batch step."""
    policy = EpsPolicy(policy)
    if policy is EpsPolicy.EPS_OVER_G1:
        return eps / g1 if g1 > 0.0 else 0.0
    if policy is EpsPolicy.GRAD_PROPORTIONAL:
        if M_G is None:
            from .errors import MissingEstimate

            raise MissingEstimate("gradient-proportional accuracy needs M_G")
        if grad_norm == 0.0 or delta == 0.0:
            return 0.0
        return delta * grad_norm**2 / (8.0 * g1 * (M_G**2 + g1 * L_k))
    if mu is None:
        from .errors import MissingEstimate

        raise MissingEstimate("PL-proportional accuracy needs mu")
    if delta == 0.0:
        return 0.0
    return delta * g1 * mu / (2.0 * (L_k * g1 + mu))


def step_norm_bounds(
    eta: float,
    grad_norm: float,
    M_G: float,
    g1: float,
    L_k: float,
    tauL_tilde: Optional[float] = None,
) -> tuple[float, float]:
    """Interval that contains the length of an exact scaled batch step.

    ``grad_norm`` is the norm of the batch gradient of the squared residual.
    With ``tauL_tilde`` given the interval belongs to the two-batch step.
    """
    if tauL_tilde is None:
        lower = eta * grad_norm / (2.0 * (M_G**2 + g1 * L_k))
        upper = min(math.sqrt(2.0 * g1 / L_k), eta * M_G / L_k)
    else:
        lower = eta * grad_norm / (2.0 * (M_G**2 + tauL_tilde))
        upper = eta * M_G * g1 / tauL_tilde
    return lower, upper


def probe_cap(gamma: float, L_Fhat: float, L_floor: float) -> int:
    """Most ladder probes an outer iteration needs on the variable interval."""
    if not L_floor > 0.0:
        raise DomainError("L_floor must be positive")
    ratio = gamma * L_Fhat / L_floor
    return (math.ceil(math.log2(ratio)) if ratio > 1.0 else 0) + 1


class _Run:
    """Shared bookkeeping for a stochastic run."""

    def __init__(self, p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray):
        if cfg.b > p.m or (cfg.b_tilde or 1) > p.m:
            raise DomainError(f"batch sizes must not exceed m={p.m}")
        self.p = p
        self.cfg = cfg
        x = as_point(p, x0)
        f1 = eval_f1hat(p, x)
        self.state = RunState(k=0, x=x, L_k=cfg.L_floor, last_f1=f1, f1_initial=f1, iterates=[x.copy()])
        self.state.flags["gradient_source"] = p.gradient_source
        self.sampler = BatchSampler(p.m, cfg.b, cfg.seed)
        tilde_size = cfg.b if cfg.b_tilde is None else cfg.b_tilde
        # The second stream is derived from the seed so the first stream is unchanged.
        self.tilde_sampler = BatchSampler(p.m, tilde_size, cfg.seed + 7_919_000_003)
        self._constants = cfg.constants

    @property
    def constants(self) -> ProblemConstants:
        if self._constants is None:
            self._constants = estimate_constants(self.p, self.state.iterates[0], batch_size=self.cfg.b)
            self.state.flags["constants"] = self._constants.to_dict()
        return self._constants

    def now(self) -> int:
        return time.perf_counter_ns() if self.cfg.timing else 0

    def elapsed(self, started: int) -> int:
        return self.now() - started if self.cfg.timing else 0

    def done(self) -> bool:
        st = self.state
        if st.last_f1 == 0.0 or st.last_f1 <= self.cfg.f1_tol:
            self.finish(CONVERGED, "residual tolerance reached")
            return True
        if st.k >= self.cfg.max_outer:
            self.finish(MAX_OUTER, "iteration budget exhausted")
            return True
        return False

    def finish(self, status: str, reason: str) -> None:
        st = self.state
        st.status = status
        st.reason = reason
        if status == CONVERGED:
            st.trace.append(TraceRecord(k=st.k, f1hat=st.last_f1, L_k=st.L_k, event=Event.CONVERGED))

    def draw_batch(self) -> tuple[BatchHandle, NDArray]:
        """Draw a batch with a nonzero residual, resampling up to m/b times."""
        st = self.state
        attempts = math.ceil(self.p.m / self.cfg.b)
        for _ in range(attempts):
            batch = self.sampler.draw()
            residual = residual_hat(self.p, st.x, batch)
            if np.any(residual):
                return batch, residual
            st.trace.append(
                TraceRecord(k=st.k, f1hat=st.last_f1, g1hat_batch=0.0, batch_indices=batch.indices, event=Event.RESAMPLE)
            )
            st.details.append({"f1_next": st.last_f1, "reason": "zero batch residual"})
            st.iterates.append(st.x.copy())
            st.k += 1
        full = BatchHandle.full(self.p.m)
        return full, residual_hat(self.p, st.x, full)

    def stall(self, g1: float, batch: BatchHandle, probes: int, started: int, reason: str) -> None:
        st = self.state
        st.trace.append(
            TraceRecord(
                k=st.k,
                f1hat=st.last_f1,
                g1hat_batch=g1,
                step_norm=0.0,
                L_k=st.L_k,
                n_L_probes=probes,
                batch_indices=batch.indices,
                event=Event.STALL,
                wall_ns=self.elapsed(started),
            )
        )
        st.details.append({"f1_next": st.last_f1, "reason": reason})
        st.iterates.append(st.x.copy())
        st.consecutive_stalls += 1
        st.k += 1
        if st.consecutive_stalls >= STALL_LIMIT:
            st.status = STALLED
            st.reason = reason
            raise StallLimit(st)

    def accept(self, record: TraceRecord, x_next: NDArray, detail: dict) -> None:
        st = self.state
        f1_next = eval_f1hat(self.p, x_next)
        detail["f1_next"] = f1_next
        st.trace.append(record)
        st.details.append(detail)
        st.x = x_next
        st.last_f1 = f1_next
        st.iterates.append(x_next.copy())
        st.consecutive_stalls = 0
        st.k += 1


def batch_prox_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    """Batch model steps with a Lipschitz ladder on the sampled batch.

    The scheme in ``cfg`` picks the ladder interval: a fixed cap for
    ``BATCH_PROX`` and a tau-dependent interval for ``VARIABLE_INTERVAL`` and
    ``ADAPTIVE_TAU``; the latter also optimizes tau for each probe.
    """
    run = _Run(p, cfg, x0)
    st = run.state
    L_hat = lipschitz_estimate(p, st.x, cfg.L_known)
    st.flags["L_Fhat"] = L_hat
    variable = cfg.scheme in (Scheme.VARIABLE_INTERVAL, Scheme.ADAPTIVE_TAU)
    adaptive = cfg.scheme is Scheme.ADAPTIVE_TAU
    exact_rule = cfg.step_rule is StochStepRule.SCALED
    if cfg.step_rule is StochStepRule.TWO_BATCH:
        raise DomainError("the two-batch step rule belongs to the two_batch scheme")
    cap_boost = 1.0

    while not run.done():
        started = run.now()
        batch, residual = run.draw_batch()
        if run.done():
            break
        x = st.x
        J = jacobian_hat(p, x, batch)
        base = ModelAnchor(x, st.L_k, 1.0, residual, J, batch)
        g1 = base.g1
        cache = base.factorize()
        half_grad = base.half_gradient
        grad_norm = 2.0 * float(np.linalg.norm(half_grad))
        sigma_max = cache_sigma_max(cache)
        if variable:
            lower = max(cfg.L_floor, cfg.L_floor / g1)
            st.L_k = max(st.L_k, lower)
            cap = max(cfg.gamma_tilde * L_hat, cfg.gamma * L_hat / g1)
        else:
            lower = cfg.L_floor
            cap = cfg.gamma * L_hat
        cap = max(cap * cap_boost, lower)
        eta = cfg.eta if exact_rule else 1.0

        def eps_target(L: float) -> float:
            if exact_rule:
                return 0.0
            c = None if cfg.eps_policy is EpsPolicy.EPS_OVER_G1 else run.constants
            return inexact_eps_bound(
                cfg.eps_policy,
                eps=cfg.eps,
                g1=g1,
                grad_norm=grad_norm,
                M_G=None if c is None else c.M_G,
                L_k=L,
                mu=None if c is None else c.mu,
                delta=cfg.delta,
            )

        def probe(L: float):
            anchor = base.with_params(L=L, tau=g1)
            if adaptive:
                try:
                    anchor = anchor.with_params(tau=optimal_tau(anchor, cache, eta=eta))
                except BracketFailure:
                    st.flags["tau_fallbacks"] = st.flags.get("tau_fallbacks", 0) + 1
            direction = gauss_newton_direction(anchor, cache)
            gap = 0.0
            if exact_rule:
                cand = x - eta * direction
                psi_next = psi_at_step(anchor, cache, eta)
            else:
                target = eps_target(L)
                cand, gap = inexact_inner_solve(anchor, target, sigma_max)
                psi_next = psi_value(anchor, cand)
            g1_next = float(np.linalg.norm(residual_hat(p, cand, batch)))
            return g1_next <= psi_next, (anchor, direction, cand, psi_next, g1_next, gap)

        payload = None
        probes = 0
        reason = ""
        try:
            _, payload, probes = lipschitz_ladder(probe, st.L_k, cap)
        except CapExceeded as exc:
            probes = exc.n_probes
            cap_boost *= 2.0
            st.flags["cap_doublings"] = st.flags.get("cap_doublings", 0) + 1
            try:
                _, payload, extra = lipschitz_ladder(probe, 2.0 * exc.L_cap, 2.0 * exc.L_cap)
                probes += extra
            except CapExceeded as again:
                probes += again.n_probes
                reason = "majorization failed at the doubled cap"
        st.total_probes += probes
        if payload is not None and payload[3] > g1:
            reason = "model value exceeds the batch residual"
        if reason:
            run.stall(g1, batch, probes, started, reason)
            continue

        anchor, direction, cand, psi_next, g1_next, gap = payload
        step_norm = float(np.linalg.norm(cand - x))
        prox_grad = anchor.L * float(np.linalg.norm(direction))
        record = TraceRecord(
            k=st.k,
            f1hat=st.last_f1,
            g1hat_batch=g1,
            step_norm=step_norm,
            prox_grad_norm=prox_grad,
            L_k=anchor.L,
            tau_k=anchor.tau,
            eta_k=eta,
            n_L_probes=probes,
            batch_indices=batch.indices,
            event=Event.ACCEPT,
            wall_ns=run.elapsed(started),
        )
        detail = {
            "psi_next": psi_next,
            "g1_next_batch": g1_next,
            "grad_norm_batch": grad_norm,
            "sigma_max_batch": sigma_max,
            "sigma_min_batch": sigma_bounds(J)[0],
            "eps": eps_target(anchor.L),
            "gap_bound": gap,
            "L_cap": cap,
            "L_lower": lower,
        }
        run.accept(record, cand, detail)
        # For the variable interval the floor depends on the next batch and is applied there.
        st.L_k = max(anchor.L / 2.0, cfg.L_floor)
        if prox_grad <= cfg.prox_grad_tol or step_norm <= cfg.step_tol:
            run.finish(CONVERGED, "stationarity tolerance reached")
            break
    return st


def scheme3_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    return batch_prox_run(p, _with_scheme(cfg, Scheme.BATCH_PROX), x0)


def scheme5_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    return batch_prox_run(p, _with_scheme(cfg, Scheme.VARIABLE_INTERVAL), x0)


def scheme6_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    return batch_prox_run(p, _with_scheme(cfg, Scheme.ADAPTIVE_TAU), x0)


def _with_scheme(cfg: StochSolverConfig, scheme: Scheme) -> StochSolverConfig:
    from dataclasses import replace

    return replace(cfg, scheme=scheme)


def two_batch_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    """Gradient from one batch, curvature from a second, with a quadratic-model ladder on l."""
    run = _Run(p, cfg, x0)
    st = run.state
    known = cfg.l_policy is CurvaturePolicy.KNOWN
    l_ref = cfg.l_known if cfg.l_known is not None else run.constants.l_g2
    if not l_ref > 0.0:
        raise DomainError("the curvature bound l must be positive")
    l_floor = cfg.l_init if cfg.l_init is not None else (l_ref if known else min(1.0, l_ref))
    st.L_k = l_floor
    st.flags["l_floor"] = l_floor
    st.flags["separate_tilde"] = bool(cfg.independent_tilde or cfg.b_tilde is not None and cfg.b_tilde != cfg.b)
    cap = max(cfg.gamma * l_ref, l_floor)
    tauL = cfg.tauL_tilde

    while not run.done():
        started = run.now()
        batch, residual = run.draw_batch()
        if run.done():
            break
        x = st.x
        J = jacobian_hat(p, x, batch)
        g = J.T @ residual
        g2 = float(residual @ residual)
        if not np.any(g):
            st.trace.append(
                TraceRecord(
                    k=st.k, f1hat=st.last_f1, g1hat_batch=math.sqrt(g2), batch_indices=batch.indices, event=Event.RESAMPLE
                )
            )
            st.details.append({"f1_next": st.last_f1, "reason": "zero batch gradient"})
            st.iterates.append(x.copy())
            st.k += 1
            continue
        if st.flags["separate_tilde"]:
            tilde = run.tilde_sampler.draw()
            cache_t = factorize(jacobian_hat(p, x, tilde))
        else:
            tilde = batch
            cache_t = factorize(J, residual)
        Hg = doubly_stochastic_solve(cache_t, tauL, g)
        gHg = float(g @ Hg)
        HgHg = float(Hg @ Hg)

        def eta_for(l: float) -> float:
            if cfg.eta_policy is EtaPolicy.OPTIMAL_MODEL:
                return 2.0 * gHg / (l * HgHg)
            if cfg.eta_policy is EtaPolicy.INTERPOLATION:
                c = run.constants
                return interpolation_eta(c.mu, c.M_G, c.M_F, c.L_Fhat, c.P_f1, tauL)
            return cfg.eta

        def probe(l: float):
            eta = eta_for(l)
            step = eta * Hg
            cand = x - step
            g2_next = eval_g2hat(p, cand, batch)
            bound = g2 - 2.0 * eta * gHg + l / 2.0 * float(step @ step)
            return g2_next <= bound, (eta, cand, g2_next, bound)

        if known and cfg.gamma == 1.0:
            l_acc = l_ref
            _, payload = probe(l_ref)
            probes = 1
            payload_ok = True
        else:
            try:
                l_acc, payload, probes = lipschitz_ladder(probe, st.L_k, cap)
                payload_ok = True
            except CapExceeded as exc:
                probes = exc.n_probes
                payload_ok = False
        st.total_probes += probes
        if not payload_ok:
            run.stall(math.sqrt(g2), batch, probes, started, "quadratic model failed at the curvature cap")
            continue
        eta, cand, g2_next, bound = payload
        step_norm = float(np.linalg.norm(cand - x))
        record = TraceRecord(
            k=st.k,
            f1hat=st.last_f1,
            g1hat_batch=math.sqrt(g2),
            step_norm=step_norm,
            L_k=l_acc,
            tau_k=None,
            eta_k=eta,
            n_L_probes=probes,
            batch_indices=batch.indices,
            event=Event.ACCEPT,
            wall_ns=run.elapsed(started),
        )
        detail = {
            "g2_batch": g2,
            "g2_next_batch": g2_next,
            "model_bound": bound,
            "grad_norm_batch": 2.0 * float(np.linalg.norm(g)),
            "sigma_max_batch": cache_sigma_max(factorize(J)),
            "sigma_max_tilde": cache_sigma_max(cache_t),
            "tauL": tauL,
            "tilde_indices": tilde.indices,
        }
        run.accept(record, cand, detail)
        st.L_k = max(l_acc / 2.0, l_floor)
    return st


def scheme4_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    return two_batch_run(p, _with_scheme(cfg, Scheme.TWO_BATCH), x0)


def _smallest_row_gram(J: NDArray) -> float:
    """Smallest eigenvalue of J J^T, zero when J has more rows than columns."""
    if J.shape[0] > J.shape[1]:
        return 0.0
    return float(np.linalg.eigvalsh(J @ J.T)[0])


def interpolation_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    """Two independent batches per step with fixed curvature and step factor.

    Meant for consistent systems with m <= n where every batch Jacobian has
    full row rank. Sampled batches failing the PL threshold are counted in
    ``flags["pl_violations"]`` and the run continues.
    """
    run = _Run(p, cfg, x0)
    st = run.state
    c = run.constants
    if p.m > p.n:
        st.flags["overdetermined"] = True
    tauL = cfg.tauL_tilde
    eta = interpolation_eta(c.mu, c.M_G, c.M_F, c.L_Fhat, c.P_f1, tauL)
    rate = interpolation_rate(c, tauL)
    st.flags["interpolation_rate"] = rate
    st.flags["l_f2"] = c.l_f2
    st.L_k = c.l_f2
    st.flags["pl_violations"] = 0
    st.flags["separate_tilde"] = True
    threshold = c.mu * (1.0 - 1e-9)
    f2 = st.last_f1**2

    while not run.done():
        started = run.now()
        batch = run.sampler.draw()
        tilde = run.tilde_sampler.draw()
        x = st.x
        residual = residual_hat(p, x, batch)
        J = jacobian_hat(p, x, batch)
        J_t = jacobian_hat(p, x, tilde)
        cache_t = factorize(J_t)
        for smallest in (_smallest_row_gram(J), _smallest_row_gram(J_t)):
            if smallest < threshold:
                st.flags["pl_violations"] += 1
                st.flags["pl_violated"] = True
        g = J.T @ residual
        step = eta * doubly_stochastic_solve(cache_t, tauL, g)
        cand = x - step
        record = TraceRecord(
            k=st.k,
            f1hat=st.last_f1,
            g1hat_batch=float(np.linalg.norm(residual)),
            step_norm=float(np.linalg.norm(step)),
            L_k=c.l_f2,
            eta_k=eta,
            n_L_probes=0,
            batch_indices=batch.indices,
            event=Event.ACCEPT,
            wall_ns=run.elapsed(started),
        )
        run.accept(record, cand, {"tilde_indices": tilde.indices, "theory_factor": math.exp(-rate)})
        f2_next = st.last_f1**2
        st.details[-1]["empirical_factor"] = f2_next / f2 if f2 > 0.0 else 0.0
        f2 = f2_next
    return st


SCHEME_RUNNERS = {
    Scheme.BATCH_PROX: scheme3_run,
    Scheme.TWO_BATCH: scheme4_run,
    Scheme.VARIABLE_INTERVAL: scheme5_run,
    Scheme.ADAPTIVE_TAU: scheme6_run,
    Scheme.INTERPOLATION: interpolation_run,
}


def stochastic_run(p: ResidualProblem, cfg: StochSolverConfig, x0: NDArray) -> RunState:
    return SCHEME_RUNNERS[cfg.scheme](p, cfg, x0)

"""Full-batch normalized-squares Gauss-Newton with an adaptive Lipschitz ladder.

Each outer iteration fixes tau, computes a step on the local model, and
doubles the curvature estimate L until the model majorizes the true residual
norm at the candidate. Accepted iterations halve L again, never going below
the configured floor.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np
from numpy.typing import NDArray

from .errors import BracketFailure, CapExceeded, DomainError, StallLimit
from .linalg import SpectralCache, cache_sigma_max
from .model import ModelAnchor, gauss_newton_direction, optimal_tau, psi_at_step, psi_gradient, psi_value
from .problem import ResidualProblem, as_point, estimate_jacobian_lipschitz, eval_f1hat
from .trace import CONVERGED, MAX_OUTER, STALLED, Event, RunState, TraceRecord

STALL_LIMIT = 10


class StepRule(str, Enum):
    EXACT_PROX = "EXACT_PROX"
    SCALED = "SCALED"
    INEXACT = "INEXACT"


class TauRule(str, Enum):
    F1HAT = "F1HAT"
    ADAPTIVE = "ADAPTIVE"
    FIXED = "FIXED"


class EpsRule(str, Enum):
    CONST = "CONST"
    PROPORTIONAL_DECREASE = "PROPORTIONAL_DECREASE"
    ZERO = "ZERO"


EtaSchedule = Union[float, Callable[[int], float]]


@dataclass(frozen=True)
class DetSolverConfig:
    step_rule: StepRule = StepRule.EXACT_PROX
    tau_rule: TauRule = TauRule.F1HAT
    tau_fixed: Optional[float] = None
    L_init: float = 1.0
    L_known: Optional[float] = None
    eta: EtaSchedule = 1.0
    eps_rule: EpsRule = EpsRule.ZERO
    eps: float = 0.0
    max_outer: int = 10_000
    f1_tol: float = 1e-10
    prox_grad_tol: float = 1e-8
    step_tol: float = 1e-12
    timing: bool = False
    lipschitz_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "step_rule", StepRule(self.step_rule))
        object.__setattr__(self, "tau_rule", TauRule(self.tau_rule))
        object.__setattr__(self, "eps_rule", EpsRule(self.eps_rule))
        if not self.L_init > 0.0:
            raise DomainError(f"L_init must be positive, got {self.L_init!r}")
        if not callable(self.eta) and not 0.0 < self.eta < 2.0:
            raise DomainError(f"eta must lie in (0, 2), got {self.eta!r}")
        if self.max_outer < 1:
            raise DomainError("max_outer must be at least 1")
        if self.eps < 0.0:
            raise DomainError("eps must be nonnegative")
        if self.tau_rule is TauRule.FIXED and not (self.tau_fixed and self.tau_fixed > 0.0):
            raise DomainError("FIXED tau rule needs a positive tau_fixed")
        if self.L_known is not None and self.L_known < 0.0:
            raise DomainError("L_known must be nonnegative")

    def eta_at(self, k: int) -> float:
        value = float(self.eta(k)) if callable(self.eta) else float(self.eta)
        if value <= 0.0:
            raise DomainError(f"eta schedule produced a nonpositive value at k={k}")
        return value


@dataclass(frozen=True)
class StepResult:
    candidate: NDArray
    direction: NDArray
    psi_next: float
    gap_bound: float = 0.0


def lipschitz_ladder(
    probe: Callable[[float], tuple[bool, object]],
    L_start: float,
    L_cap: float,
) -> tuple[float, object, int]:
    """Double L from ``L_start`` up to ``L_cap`` until ``probe(L)`` accepts.

    Returns the accepted L, the probe payload, and the number of probes.
    """
    L = L_start
    probes = 0
    while True:
        probes += 1
        ok, payload = probe(L)
        if ok:
            return L, payload, probes
        if L >= L_cap:
            raise CapExceeded(L_cap, probes)
        L = min(2.0 * L, L_cap)


def inexact_inner_solve(
    anchor: ModelAnchor,
    eps_target: float,
    sigma_max: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> tuple[NDArray, float]:
    """Gradient descent on the local model from the anchor point.

    Stops once the squared model gradient certifies a model-value gap of at
    most ``eps_target`` and returns that certified gap. On hitting the
    iteration limit the last point is returned with an infinite gap.
    """
    if eps_target < 0.0:
        raise DomainError("eps_target must be nonnegative")
    if sigma_max is None:
        sigma_max = float(np.linalg.norm(anchor.jacobian, 2)) if anchor.jacobian.size else 0.0
    smooth = anchor.L + sigma_max**2 / anchor.tau
    if not math.isfinite(smooth):
        return anchor.x.copy(), math.inf
    beta = 1.0 / smooth
    # The descent-lemma test is only valid together with the strong convexity bound.
    threshold = eps_target * min(1.0 / (beta + beta * beta * smooth / 2.0), 2.0 * anchor.L)
    if max_iter is None:
        digits = math.log(1.0 / eps_target) if eps_target > 0.0 else math.log(1e300)
        max_iter = 10 * anchor.x.size * max(1, math.ceil(digits))
    y = anchor.x.copy()
    for _ in range(max_iter + 1):
        grad = psi_gradient(anchor, y)
        with np.errstate(over="ignore"):
            sq = float(grad @ grad)
        if not math.isfinite(sq):
            break
        if sq <= threshold:
            return y, sq / (2.0 * anchor.L)
        y = y - beta * grad
    return y, math.inf


def model_step(
    anchor: ModelAnchor,
    cache: SpectralCache,
    step_rule: StepRule,
    eta: float,
    eps_target: float,
) -> StepResult:
    direction = gauss_newton_direction(anchor, cache)
    if step_rule is StepRule.INEXACT:
        candidate, gap = inexact_inner_solve(anchor, eps_target, cache_sigma_max(cache))
        return StepResult(candidate, direction, psi_value(anchor, candidate), gap)
    scale = 1.0 if step_rule is StepRule.EXACT_PROX else eta
    return StepResult(anchor.x - scale * direction, direction, psi_at_step(anchor, cache, scale))


def line_search_L(
    p: ResidualProblem,
    x: NDArray,
    tau: float,
    L_start: float,
    L_cap: float,
    eta: float = 1.0,
) -> tuple[float, NDArray, int]:
    """Smallest ladder value of L whose scaled step is majorized by the model."""
    x = as_point(p, x)
    base = ModelAnchor.build(p, x, L_start, tau)
    cache = base.factorize()

    def probe(L: float):
        anchor = base.with_params(L=L)
        cand = x - eta * gauss_newton_direction(anchor, cache)
        return eval_f1hat(p, cand) <= psi_at_step(anchor, cache, eta), cand

    L, cand, probes = lipschitz_ladder(probe, L_start, L_cap)
    return L, cand, probes


def lipschitz_estimate(p: ResidualProblem, x0: NDArray, known: Optional[float], seed: int = 0) -> float:
    if known is not None:
        return float(known)
    if p.L_hint is not None:
        return float(p.L_hint)
    return estimate_jacobian_lipschitz(p, x0, seed=seed)


def _eps_for(cfg: DetSolverConfig, state: RunState, previous_f1: Optional[float]) -> float:
    if cfg.eps_rule is EpsRule.ZERO:
        return 0.0
    if cfg.eps_rule is EpsRule.CONST or previous_f1 is None:
        return cfg.eps
    return cfg.eps * max(previous_f1 - state.last_f1, 0.0)


def _tau_for(cfg: DetSolverConfig, anchor: ModelAnchor, cache: SpectralCache, f1: float, eta: float) -> float:
    if cfg.tau_rule is TauRule.F1HAT:
        return f1
    if cfg.tau_rule is TauRule.FIXED:
        return float(cfg.tau_fixed)
    return optimal_tau(anchor, cache, eta=eta if cfg.step_rule is StepRule.SCALED else 1.0)


def _now(cfg: DetSolverConfig) -> int:
    return time.perf_counter_ns() if cfg.timing else 0


def deterministic_run(p: ResidualProblem, cfg: DetSolverConfig, x0: NDArray) -> RunState:
    """Run the full-batch method; the tau rule in ``cfg`` selects the variant."""
    x = as_point(p, x0)
    f1 = eval_f1hat(p, x)
    state = RunState(k=0, x=x, L_k=cfg.L_init, last_f1=f1, f1_initial=f1, iterates=[x.copy()])
    state.flags["gradient_source"] = p.gradient_source
    L_hat = lipschitz_estimate(p, x, cfg.L_known, cfg.lipschitz_seed)
    state.flags["L_Fhat"] = L_hat
    cap = max(2.0 * L_hat, cfg.L_init)
    previous_f1: Optional[float] = None

    while True:
        if f1 == 0.0 or f1 <= cfg.f1_tol:
            _finish(state, CONVERGED, "residual tolerance reached")
            return state
        if state.k >= cfg.max_outer:
            _finish(state, MAX_OUTER, "iteration budget exhausted")
            return state

        started = _now(cfg)
        eta = cfg.eta_at(state.k)
        eps_k = _eps_for(cfg, state, previous_f1)
        base = ModelAnchor.build(p, x, state.L_k, f1)
        cache = base.factorize()

        def probe(L: float):
            anchor = base.with_params(L=L)
            tau = _tau_for(cfg, anchor, cache, f1, eta)
            step = model_step(anchor.with_params(tau=tau), cache, cfg.step_rule, eta, eps_k)
            if math.isinf(step.gap_bound) and cfg.tau_rule is TauRule.ADAPTIVE:
                # A near-zero tau makes the inner problem too stiff for gradient descent.
                tau = f1
                step = model_step(anchor.with_params(tau=tau), cache, cfg.step_rule, eta, eps_k)
                state.flags["tau_fallbacks"] = state.flags.get("tau_fallbacks", 0) + 1
            anchor = anchor.with_params(tau=tau)
            psi_next = step.psi_next
            f1_next = eval_f1hat(p, step.candidate)
            return f1_next <= psi_next, (anchor, step, psi_next, f1_next)

        payload = None
        probes = 0
        stall_reason = ""
        try:
            L_acc, payload, probes = lipschitz_ladder(probe, state.L_k, cap)
        except CapExceeded as exc:
            probes = exc.n_probes
            cap *= 2.0
            state.flags["cap_doublings"] = state.flags.get("cap_doublings", 0) + 1
            try:
                L_acc, payload, extra = lipschitz_ladder(probe, 2.0 * exc.L_cap, cap)
                probes += extra
            except CapExceeded as again:
                probes += again.n_probes
                stall_reason = "majorization failed at the doubled cap"
        except BracketFailure:
            stall_reason = "tau search found no bracket"
        state.total_probes += probes

        if payload is not None:
            anchor, step, psi_next, f1_next = payload
            if psi_next > f1:
                stall_reason = "model value exceeds current residual"

        if stall_reason:
            _stall(state, cfg, f1, probes, started, stall_reason, eps_k)
            if state.consecutive_stalls >= STALL_LIMIT:
                state.status = STALLED
                state.reason = stall_reason
                raise StallLimit(state)
            continue

        step_norm = float(np.linalg.norm(step.candidate - x))
        prox_grad = anchor.L * float(np.linalg.norm(step.direction))
        state.trace.append(
            TraceRecord(
                k=state.k,
                f1hat=f1,
                g1hat_batch=f1,
                step_norm=step_norm,
                prox_grad_norm=prox_grad,
                L_k=anchor.L,
                tau_k=anchor.tau,
                eta_k=1.0 if cfg.step_rule is not StepRule.SCALED else eta,
                n_L_probes=probes,
                event=Event.ACCEPT,
                wall_ns=_now(cfg) - started if cfg.timing else 0,
            )
        )
        state.details.append(
            {"eps": eps_k, "psi_next": psi_next, "f1_next": f1_next, "gap_bound": step.gap_bound}
        )
        previous_f1 = f1
        x = step.candidate
        f1 = f1_next
        state.x = x
        state.last_f1 = f1
        state.iterates.append(x.copy())
        state.L_k = max(anchor.L / 2.0, cfg.L_init)
        state.consecutive_stalls = 0
        state.k += 1
        if prox_grad <= cfg.prox_grad_tol or step_norm <= cfg.step_tol:
            _finish(state, CONVERGED, "stationarity tolerance reached")
            return state


def _stall(state: RunState, cfg: DetSolverConfig, f1: float, probes: int, started: int, reason: str, eps_k: float) -> None:
    state.trace.append(
        TraceRecord(
            k=state.k,
            f1hat=f1,
            g1hat_batch=f1,
            step_norm=0.0,
            L_k=state.L_k,
            n_L_probes=probes,
            event=Event.STALL,
            wall_ns=_now(cfg) - started if cfg.timing else 0,
        )
    )
    state.details.append({"eps": eps_k, "psi_next": None, "f1_next": f1, "gap_bound": None, "reason": reason})
    state.iterates.append(state.x.copy())
    state.consecutive_stalls += 1
    state.k += 1


def _finish(state: RunState, status: str, reason: str) -> None:
    state.status = status
    state.reason = reason
    if status == CONVERGED:
        state.trace.append(TraceRecord(k=state.k, f1hat=state.last_f1, L_k=state.L_k, event=Event.CONVERGED))


def scheme1_run(p: ResidualProblem, cfg: DetSolverConfig, x0: NDArray) -> RunState:
    """Fixed tau rule (residual norm by default)."""
    if cfg.tau_rule is TauRule.ADAPTIVE:
        cfg = replace(cfg, tau_rule=TauRule.F1HAT)
    return deterministic_run(p, cfg, x0)


def scheme2_run(p: ResidualProblem, cfg: DetSolverConfig, x0: NDArray) -> RunState:
    """Adaptive tau: each ladder probe minimizes the model value over tau."""
    return deterministic_run(p, replace(cfg, tau_rule=TauRule.ADAPTIVE), x0)

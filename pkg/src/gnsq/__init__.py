"""Gauss-Newton type solvers for nonlinear least squares on the residual norm."""

from .deterministic import DetSolverConfig, EpsRule, StepRule, TauRule, deterministic_run, scheme1_run, scheme2_run
from .diagnostics import ProblemConstants, estimate_constants, pl_check, prox_grad_norm
from .errors import GnsqError
from .instances import generate_problem, load_problem
from .model import ModelAnchor, kappa, prox_point, psi_value
from .planner import (
    budget_linear_stochastic,
    budget_sublinear_stochastic,
    budget_two_batch,
    certificate_check_det,
    certificate_check_stoch,
)
from .problem import BatchHandle, ResidualProblem
from .stochastic import (
    Scheme,
    StochSolverConfig,
    interpolation_run,
    scheme3_run,
    scheme4_run,
    scheme5_run,
    scheme6_run,
    stochastic_run,
)
from .trace import Event, RunState, TraceRecord

__all__ = [
    "BatchHandle",
    "DetSolverConfig",
    "EpsRule",
    "Event",
    "GnsqError",
    "ModelAnchor",
    "ProblemConstants",
    "ResidualProblem",
    "RunState",
    "Scheme",
    "StepRule",
    "StochSolverConfig",
    "TauRule",
    "TraceRecord",
    "budget_linear_stochastic",
    "budget_sublinear_stochastic",
    "budget_two_batch",
    "certificate_check_det",
    "certificate_check_stoch",
    "deterministic_run",
    "estimate_constants",
    "generate_problem",
    "interpolation_run",
    "kappa",
    "load_problem",
    "pl_check",
    "prox_grad_norm",
    "prox_point",
    "psi_value",
    "scheme1_run",
    "scheme2_run",
    "scheme3_run",
    "scheme4_run",
    "scheme5_run",
    "scheme6_run",
    "stochastic_run",
]

"""The regularized local model around an anchor point and its exact minimizer.

For an anchor (x, L, tau) with normalized batch residual r and Jacobian J the
model is

    psi(y) = tau/2 + ||r + J (y - x)||^2 / (2 tau) + L/2 ||y - x||^2,

an upper bound on the batch residual norm whenever L dominates the Jacobian
Lipschitz constant. Its minimizer is a damped Gauss-Newton step with damping
tau*L.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import BracketFailure, DomainError, RootFindFailure
from .linalg import GramSide, SpectralCache, factorize, regularized_solve
from .problem import BatchHandle, ResidualProblem, as_point, jacobian_hat, residual_hat

TAU_FLOOR = 1e-300
MAX_DOUBLINGS = 64
ROOT_STEPS = 200


@dataclass(frozen=True)
class ModelAnchor:
    """Anchor (x, L, tau) together with the batch residual and Jacobian at x."""

    x: NDArray
    L: float
    tau: float
    residual: NDArray
    jacobian: NDArray
    batch: Optional[BatchHandle] = None

    def __post_init__(self) -> None:
        if not self.L > 0.0:
            raise DomainError(f"model curvature L must be positive, got {self.L!r}")
        if not self.tau >= TAU_FLOOR:
            raise DomainError(f"tau must be at least {TAU_FLOOR}, got {self.tau!r}")

    @classmethod
    def build(
        cls,
        p: ResidualProblem,
        x: NDArray,
        L: float,
        tau: float,
        batch: Optional[BatchHandle] = None,
    ) -> "ModelAnchor":
        x = as_point(p, x)
        return cls(x, float(L), float(tau), residual_hat(p, x, batch), jacobian_hat(p, x, batch), batch)

    def with_params(self, L: Optional[float] = None, tau: Optional[float] = None) -> "ModelAnchor":
        return ModelAnchor(
            self.x,
            self.L if L is None else float(L),
            self.tau if tau is None else float(tau),
            self.residual,
            self.jacobian,
            self.batch,
        )

    @property
    def g1(self) -> float:
        return float(np.linalg.norm(self.residual))

    @property
    def g2(self) -> float:
        return float(self.residual @ self.residual)

    @property
    def half_gradient(self) -> NDArray:
        """J^T r, half the gradient of the squared batch residual."""
        return self.jacobian.T @ self.residual

    def factorize(self) -> SpectralCache:
        return factorize(self.jacobian, self.residual)


def psi_value(anchor: ModelAnchor, y: NDArray) -> float:
    h = np.asarray(y, dtype=float) - anchor.x
    lin = anchor.residual + anchor.jacobian @ h
    return float(anchor.tau / 2.0 + (lin @ lin) / (2.0 * anchor.tau) + anchor.L * (h @ h) / 2.0)


def psi_gradient(anchor: ModelAnchor, y: NDArray) -> NDArray:
    h = np.asarray(y, dtype=float) - anchor.x
    lin = anchor.residual + anchor.jacobian @ h
    return anchor.L * h + anchor.jacobian.T @ lin / anchor.tau


def _cache_for(anchor: ModelAnchor, cache: Optional[SpectralCache]) -> SpectralCache:
    return anchor.factorize() if cache is None else cache


def gauss_newton_direction(anchor: ModelAnchor, cache: Optional[SpectralCache] = None) -> NDArray:
    """The damped direction ``(J^T J + tau L I)^{-1} J^T r``."""
    return regularized_solve(_cache_for(anchor, cache), anchor.tau * anchor.L, anchor.residual)


def prox_point(anchor: ModelAnchor, cache: Optional[SpectralCache] = None) -> NDArray:
    """Exact minimizer of the local model."""
    return anchor.x - gauss_newton_direction(anchor, cache)


def scaled_step(anchor: ModelAnchor, cache: Optional[SpectralCache] = None, eta: float = 1.0) -> NDArray:
    """Move a fraction ``eta`` of the way from the anchor to the prox point."""
    return anchor.x - eta * gauss_newton_direction(anchor, cache)


def _residual_split(anchor: ModelAnchor, cache: SpectralCache) -> tuple[NDArray, float]:
    """Split the squared batch residual over the Gram eigenbasis.

    Returns coefficients c_i and the squared residual part outside the range of
    J so that ``||r||^2 = outside + sum c_i`` and the linearized residual at
    damping t has squared norm ``outside + sum c_i (t / (lambda_i + t))^2``.
    """
    values = cache.eigenvalues
    proj = cache.projected_rhs
    if cache.side is GramSide.GRAM_B:
        return proj**2, 0.0
    top = values[0] if values.size else 0.0
    keep = values > 1e-12 * top
    coeffs = np.zeros_like(values)
    coeffs[keep] = proj[keep] ** 2 / values[keep]
    outside = anchor.g2 - float(np.sum(coeffs))
    # Differences at rounding level mean the system is consistent.
    if outside <= 64.0 * np.finfo(float).eps * anchor.g2:
        outside = 0.0
    return coeffs, outside


def psi_at_step(anchor: ModelAnchor, cache: SpectralCache, eta: float = 1.0) -> float:
    """Model value at the scaled step, evaluated without cancellation.

    Equal to ``psi_value(anchor, scaled_step(anchor, cache, eta))`` in exact
    arithmetic but stays accurate when tau is tiny.
    """
    coeffs, outside = _residual_split(anchor, cache)
    t = anchor.tau * anchor.L
    values = cache.eigenvalues
    damped = outside + float(np.sum(coeffs * t / (values + t)))
    numerator = (1.0 - eta) ** 2 * anchor.g2 + eta * (2.0 - eta) * damped
    return anchor.tau / 2.0 + numerator / (2.0 * anchor.tau)


def step_value_at_tau(anchor: ModelAnchor, cache: SpectralCache, tau: float, eta: float = 1.0) -> float:
    """Model value at the scaled step as a function of tau, with L held at the anchor value."""
    return psi_at_step(anchor.with_params(tau=tau), cache, eta)


def optimal_tau(
    anchor: ModelAnchor,
    cache: Optional[SpectralCache] = None,
    tol: float = 1e-12,
    eta: float = 1.0,
) -> float:
    """Minimize the model value at the prox point over tau > 0.

    The one-dimensional objective is strictly convex for ``eta == 1``, so the
    root of its derivative is located by bisection in log(tau). For other
    ``eta`` the batch residual norm is returned instead.
    """
    g1 = anchor.g1
    if g1 <= 0.0:
        raise DomainError("optimal tau needs a nonzero residual")
    if eta != 1.0:
        return g1
    cache = _cache_for(anchor, cache)
    coeffs, outside = _residual_split(anchor, cache)
    values = cache.eigenvalues
    L = anchor.L

    def scaled_slope(tau: float) -> float:
        # Twice the derivative of the objective; the outside term may overflow to inf.
        t = tau * L
        curvature = float(np.sum(coeffs / (values + t) ** 2))
        outside_term = (outside / tau) / tau if outside > 0.0 else 0.0
        return 1.0 - L * L * curvature - outside_term

    if scaled_slope(TAU_FLOOR) >= 0.0:
        tau_star = TAU_FLOOR
    else:
        hi = max(g1, TAU_FLOOR)
        doublings = 0
        while scaled_slope(hi) <= 0.0:
            doublings += 1
            if doublings > MAX_DOUBLINGS:
                raise BracketFailure(f"no increasing tail below tau={hi:.3e}")
            hi *= 2.0
        log_lo, log_hi = np.log(TAU_FLOOR), np.log(hi)
        for _ in range(ROOT_STEPS):
            mid = 0.5 * (log_lo + log_hi)
            tau_mid = float(np.exp(mid))
            value = scaled_slope(tau_mid)
            if abs(value) <= 2.0 * tol:
                log_lo = log_hi = mid
                break
            if value > 0.0:
                log_hi = mid
            else:
                log_lo = mid
            if log_hi - log_lo <= 1e-15:
                break
        tau_star = float(np.exp(0.5 * (log_lo + log_hi)))
    if step_value_at_tau(anchor, cache, tau_star) > step_value_at_tau(anchor, cache, g1):
        return g1
    return tau_star


def kappa(t: float) -> float:
    """Quadratic below one and linear above, joined with matching slope."""
    if t < 0:
        raise DomainError(f"kappa is defined for t >= 0, got {t!r}")
    return t * t / 2.0 if t <= 1.0 else t - 0.5


def _min_norm_step(cache: SpectralCache) -> NDArray:
    values = cache.eigenvalues
    top = values[0] if values.size else 0.0
    keep = values > 1e-12 * top
    inv = np.zeros_like(values)
    inv[keep] = 1.0 / values[keep]
    coords = cache.Q @ (cache.projected_rhs * inv)
    if cache.side is GramSide.GRAM_N:
        return -coords
    return -(cache.J.T @ coords)


def constrained_model_decrease(J: NDArray, residual: NDArray, r: float) -> float:
    """Largest drop of ``||residual + J h||^2`` over ``||h|| <= r``."""
    if not r > 0.0:
        raise DomainError(f"radius must be positive, got {r!r}")
    g2 = float(residual @ residual)
    grad = J.T @ residual
    grad_norm = float(np.linalg.norm(grad))
    if grad_norm == 0.0 or g2 == 0.0:
        return 0.0
    cache = factorize(J, residual)
    h = _min_norm_step(cache)
    tol = 1e-12 * max(1.0, r)
    if np.linalg.norm(h) > r:
        lo, hi = 0.0, grad_norm / r
        for _ in range(ROOT_STEPS):
            lam = 0.5 * (lo + hi)
            h = -regularized_solve(cache, lam, residual)
            gap = float(np.linalg.norm(h)) - r
            if abs(gap) <= tol:
                break
            if gap > 0.0:
                lo = lam
            else:
                hi = lam
        else:
            raise RootFindFailure(f"multiplier search did not reach ||h|| = {r}")
    lin = residual + J @ h
    return float(min(max(g2 - lin @ lin, 0.0), g2))


def delta_r(p: ResidualProblem, x: NDArray, r: float, batch: Optional[BatchHandle] = None) -> float:
    """Drop of the squared linearized residual achievable within radius ``r``."""
    x = as_point(p, x)
    return constrained_model_decrease(jacobian_hat(p, x, batch), residual_hat(p, x, batch), r)


def delta_tilde_r(p: ResidualProblem, x: NDArray, r: float, batch: Optional[BatchHandle] = None) -> float:
    """Drop of the linearized residual norm achievable within radius ``r``."""
    x = as_point(p, x)
    residual = residual_hat(p, x, batch)
    g2 = float(residual @ residual)
    drop = constrained_model_decrease(jacobian_hat(p, x, batch), residual, r)
    return float(np.sqrt(g2) - np.sqrt(max(g2 - drop, 0.0)))


def decomposition_residual(
    anchor: ModelAnchor,
    y: NDArray,
    cache: Optional[SpectralCache] = None,
    eta: float = 1.0,
) -> float:
    """Defect of the exact expansion of the model around the scaled step.

    With x+ the scaled step, psi(y) equals psi(x+) plus the curvature terms
    L/2 ||y - x+||^2 and ||J (y - x+)||^2 / (2 tau) plus a linear term that
    vanishes when ``eta == 1``. The returned value is zero up to rounding.
    """
    x_plus = scaled_step(anchor, cache, eta)
    h = np.asarray(y, dtype=float) - x_plus
    Jh = anchor.jacobian @ h
    linear = (1.0 - eta) / (2.0 * anchor.tau) * float(h @ (2.0 * anchor.half_gradient))
    expansion = (
        psi_value(anchor, x_plus)
        + anchor.L * float(h @ h) / 2.0
        + float(Jh @ Jh) / (2.0 * anchor.tau)
        + linear
    )
    return psi_value(anchor, y) - expansion

"""Spectral factorization of the active Gram matrix and the regularized solves built on it.

One symmetric eigendecomposition is computed per linearization point and then
reused for every damping value tried by the Lipschitz line search.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionMismatch, DomainError, FactorizationError

ORTHOGONALITY_TOL = 1e-10
CLAMP_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-8


class GramSide(str, Enum):
    GRAM_N = "gram_n"  # J^T J, n x n
    GRAM_B = "gram_b"  # J J^T, b x b


@dataclass(frozen=True)
class SpectralCache:
    """Eigendecomposition ``Q diag(eigenvalues) Q^T`` of one Gram matrix of ``J``.

    ``projected_rhs`` is ``Q^T J^T r`` on the column side and ``Q^T r`` on the
    row side, where ``r`` is the residual the cache was built with.
    """

    side: GramSide
    Q: NDArray
    eigenvalues: NDArray
    J: NDArray
    residual: Optional[NDArray] = None
    projected_rhs: Optional[NDArray] = None

    @property
    def b(self) -> int:
        return self.J.shape[0]

    @property
    def n(self) -> int:
        return self.J.shape[1]


def _symmetric_eig(gram: NDArray) -> tuple[NDArray, NDArray]:
    try:
        values, vectors = np.linalg.eigh(gram)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"symmetric eigensolver failed: {exc}") from exc
    return values[::-1].copy(), vectors[:, ::-1].copy()


def factorize(
    J: NDArray,
    residual: Optional[NDArray] = None,
    check: bool = True,
    side: Optional[GramSide] = None,
) -> SpectralCache:
    """Decompose ``J^T J`` when b > n and ``J J^T`` otherwise (ties go to the row side).

    ``side`` forces one of the two decompositions regardless of shape.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2:
        raise DimensionMismatch(f"Jacobian must be 2-D, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        raise FactorizationError("Jacobian has non-finite entries")
    b, n = J.shape
    if side is None:
        side = GramSide.GRAM_N if b > n else GramSide.GRAM_B
    side = GramSide(side)
    gram = J.T @ J if side is GramSide.GRAM_N else J @ J.T
    values, Q = _symmetric_eig(gram)

    top = max(float(values[0]), 0.0)
    if np.any(values < -CLAMP_TOL * top) and top > 0.0:
        raise FactorizationError(f"Gram matrix has a negative eigenvalue {values.min():.3e}")
    values = np.maximum(values, 0.0)

    if check:
        size = Q.shape[0]
        if np.max(np.abs(Q.T @ Q - np.eye(size))) > ORTHOGONALITY_TOL:
            raise FactorizationError("eigenvectors lost orthogonality")
        scale = np.max(np.abs(gram))
        if scale > 0.0 and np.max(np.abs((Q * values) @ Q.T - gram)) > RECONSTRUCTION_TOL * scale:
            raise FactorizationError("eigendecomposition does not reconstruct the Gram matrix")

    projected = None
    if residual is not None:
        residual = np.asarray(residual, dtype=float)
        if residual.shape != (b,):
            raise DimensionMismatch(f"residual has length {residual.shape[0]}, expected {b}")
        projected = Q.T @ (J.T @ residual) if side is GramSide.GRAM_N else Q.T @ residual
    return SpectralCache(side, Q, values, J, residual, projected)


def _check_damping(tauL: float) -> None:
    if not tauL > 0.0:
        raise DomainError(f"damping tau*L must be positive, got {tauL!r}")


def regularized_solve(cache: SpectralCache, tauL: float, F_resid: Optional[NDArray] = None) -> NDArray:
    """Return d with ``(J^T J + tauL I) d = J^T F_resid`` using the cached decomposition."""
    _check_damping(tauL)
    if F_resid is None:
        if cache.residual is None:
            raise DimensionMismatch("cache was built without a residual; pass F_resid")
        projected = cache.projected_rhs
    else:
        F_resid = np.asarray(F_resid, dtype=float)
        if F_resid.shape != (cache.b,):
            raise DimensionMismatch(f"residual has length {F_resid.shape[0]}, expected {cache.b}")
        if cache.residual is not None and np.array_equal(F_resid, cache.residual):
            projected = cache.projected_rhs
        elif cache.side is GramSide.GRAM_N:
            projected = cache.Q.T @ (cache.J.T @ F_resid)
        else:
            projected = cache.Q.T @ F_resid

    weights = projected / (cache.eigenvalues + tauL)
    if cache.side is GramSide.GRAM_N:
        return cache.Q @ weights
    # J^T (J J^T + tauL I)^{-1} r; Q is square here so no complement term survives.
    return cache.J.T @ (cache.Q @ weights)


def doubly_stochastic_solve(cache_tilde: SpectralCache, tauL: float, g: NDArray) -> NDArray:
    """Return ``(J~^T J~ + tauL I)^{-1} g`` for an arbitrary right-hand side ``g``."""
    _check_damping(tauL)
    g = np.asarray(g, dtype=float)
    if g.shape != (cache_tilde.n,):
        raise DimensionMismatch(f"gradient has length {g.shape[0]}, expected {cache_tilde.n}")
    Q, values = cache_tilde.Q, cache_tilde.eigenvalues
    if cache_tilde.side is GramSide.GRAM_N:
        return Q @ ((Q.T @ g) / (values + tauL))
    Jt = cache_tilde.J
    inner = Q @ ((Q.T @ (Jt @ g)) / (values + tauL))
    return (g - Jt.T @ inner) / tauL


def sigma_bounds(J: NDArray) -> tuple[float, float]:
    """Smallest singular value of ``J^T`` (zero when b > n) and the largest singular value."""
    J = np.asarray(J, dtype=float)
    b, n = J.shape
    singular = np.linalg.svd(J, compute_uv=False)
    sigma_max = float(singular[0]) if singular.size else 0.0
    sigma_min = float(singular[b - 1]) if b <= n else 0.0
    return sigma_min, sigma_max


def cache_sigma_max(cache: SpectralCache) -> float:
    return float(np.sqrt(cache.eigenvalues[0]))

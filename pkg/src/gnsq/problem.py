"""Residual problems, batches, and the normalized objective family.

A problem is a smooth map F: R^n -> R^m exposed component-wise. Every public
index is 1-based; arrays handed to vectorized callbacks use 0-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError, InvalidBatch, NonFiniteGradient, NonFiniteResidual

ComponentEval = Callable[[int, NDArray], float]
ComponentGrad = Callable[[int, NDArray], NDArray]
VectorEval = Callable[[NDArray, NDArray], NDArray]
MatrixGrad = Callable[[NDArray, NDArray], NDArray]

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class BatchHandle:
    """A strictly increasing set of distinct 1-based component indices."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise InvalidBatch("a batch needs at least one index")
        if idx[0] < 1:
            raise InvalidBatch(f"indices are 1-based, got {idx[0]}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidBatch("batch indices must be strictly increasing and distinct")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, m: int) -> "BatchHandle":
        return cls(tuple(range(1, m + 1)))

    @classmethod
    def of(cls, indices: Iterable[int], m: int) -> "BatchHandle":
        batch = cls(tuple(sorted(int(i) for i in indices)))
        batch.check(m)
        return batch

    @property
    def b(self) -> int:
        return len(self.indices)

    @property
    def zero_based(self) -> NDArray[np.intp]:
        return np.asarray(self.indices, dtype=np.intp) - 1

    def check(self, m: int) -> None:
        if self.indices[-1] > m:
            raise InvalidBatch(f"index {self.indices[-1]} exceeds m={m}")

    def is_full(self, m: int) -> bool:
        return self.b == m


@dataclass(frozen=True)
class ResidualProblem:
    """The residual map F with per-component values and gradients.

    Either the scalar callbacks (``component_eval``/``component_grad``, taking a
    1-based index) or the vectorized ones (``residual_fn``/``jacobian_fn``,
    taking a 0-based index array) must be supplied. Without any gradient
    callback the Jacobian falls back to central finite differences and
    ``gradient_source`` reports the substitution.
    """

    n: int
    m: int
    component_eval: Optional[ComponentEval] = None
    component_grad: Optional[ComponentGrad] = None
    L_hint: Optional[float] = None
    M_hint: Optional[float] = None
    residual_fn: Optional[VectorEval] = field(default=None, repr=False)
    jacobian_fn: Optional[MatrixGrad] = field(default=None, repr=False)
    name: str = "custom"
    x_star: Optional[NDArray] = field(default=None, repr=False)
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise DomainError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        if self.component_eval is None and self.residual_fn is None:
            raise DomainError("a residual callback is required")
        for hint in (self.L_hint, self.M_hint):
            if hint is not None and hint < 0:
                raise DomainError("analytic constants must be nonnegative")

    @property
    def gradient_source(self) -> str:
        if self.jacobian_fn is None and self.component_grad is None:
            return FINITE_DIFFERENCE
        return ANALYTIC

    def residuals(self, x: NDArray, idx: NDArray) -> NDArray:
        """Raw residual values F_i(x) at 0-based indices ``idx``."""
        if self.residual_fn is not None:
            values = np.asarray(self.residual_fn(x, idx), dtype=float)
        else:
            values = np.array([self.component_eval(int(i) + 1, x) for i in idx], dtype=float)
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NonFiniteResidual(int(idx[bad]) + 1, float(values[bad]))
        return values

    def gradients(self, x: NDArray, idx: NDArray) -> NDArray:
        """Rows grad F_i(x)^T at 0-based indices ``idx``, shape (len(idx), n)."""
        if self.jacobian_fn is not None:
            rows = np.asarray(self.jacobian_fn(x, idx), dtype=float).reshape(len(idx), self.n)
        elif self.component_grad is not None:
            rows = np.array([self.component_grad(int(i) + 1, x) for i in idx], dtype=float)
            rows = rows.reshape(len(idx), self.n)
        else:
            rows = self._central_differences(x, idx)
        if not np.all(np.isfinite(rows)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(rows), axis=1))[0])
            raise NonFiniteGradient(int(idx[bad]) + 1)
        return rows

    def _central_differences(self, x: NDArray, idx: NDArray) -> NDArray:
        rows = np.empty((len(idx), self.n))
        for j in range(self.n):
            h = max(1e-6, 1e-6 * abs(x[j]))
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            rows[:, j] = (self.residuals(xp, idx) - self.residuals(xm, idx)) / (2.0 * h)
        return rows


def as_point(p: ResidualProblem, x: Sequence[float] | NDArray) -> NDArray:
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (p.n,):
        raise DomainError(f"expected a point of length {p.n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("point has non-finite coordinates")
    return arr


def _resolve(p: ResidualProblem, batch: Optional[BatchHandle]) -> tuple[NDArray, int]:
    if batch is None:
        return np.arange(p.m), p.m
    batch.check(p.m)
    return batch.zero_based, batch.b


def residual_hat(p: ResidualProblem, x: NDArray, batch: Optional[BatchHandle] = None) -> NDArray:
    """Normalized batch residual F_B(x)/sqrt(b); the full batch when ``batch`` is None."""
    idx, b = _resolve(p, batch)
    return p.residuals(as_point(p, x), idx) / np.sqrt(b)


def jacobian_hat(p: ResidualProblem, x: NDArray, batch: Optional[BatchHandle] = None) -> NDArray:
    """Normalized batch Jacobian with rows grad F_i(x)^T/sqrt(b)."""
    idx, b = _resolve(p, batch)
    return p.gradients(as_point(p, x), idx) / np.sqrt(b)


def eval_g1hat(p: ResidualProblem, x: NDArray, batch: Optional[BatchHandle] = None) -> float:
    return float(np.linalg.norm(residual_hat(p, x, batch)))


def eval_g2hat(p: ResidualProblem, x: NDArray, batch: Optional[BatchHandle] = None) -> float:
    return eval_g1hat(p, x, batch) ** 2


def eval_f1hat(p: ResidualProblem, x: NDArray) -> float:
    return eval_g1hat(p, x, None)


def eval_f2hat(p: ResidualProblem, x: NDArray) -> float:
    return eval_g2hat(p, x, None)


def grad_f2hat(p: ResidualProblem, x: NDArray, batch: Optional[BatchHandle] = None) -> NDArray:
    """Gradient of the squared batch objective, 2 J^T r in normalized form."""
    return 2.0 * jacobian_hat(p, x, batch).T @ residual_hat(p, x, batch)


def ball_points(rng: np.random.Generator, center: NDArray, radius: float, count: int) -> NDArray:
    """``count`` points drawn uniformly from the Euclidean ball around ``center``."""
    n = center.shape[0]
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / n)
    return center + directions * radii[:, None]


def estimate_jacobian_lipschitz(
    p: ResidualProblem,
    center: NDArray,
    n_pairs: int = 32,
    radius: float = 1.0,
    seed: int = 0,
    batch: Optional[BatchHandle] = None,
) -> float:
    """Twice the largest secant ratio ||J(y) - J(x)||_F / ||y - x|| over random pairs.

    Pairs are drawn uniformly from the ball of ``radius`` around ``center``.
    A constant Jacobian gives exactly zero.
    """
    rng = np.random.default_rng(seed)
    center = as_point(p, center)
    firsts = ball_points(rng, center, radius, n_pairs)
    seconds = ball_points(rng, center, radius, n_pairs)
    best = 0.0
    for x, y in zip(firsts, seconds):
        gap = np.linalg.norm(y - x)
        if gap == 0.0:
            continue
        diff = jacobian_hat(p, y, batch) - jacobian_hat(p, x, batch)
        best = max(best, float(np.linalg.norm(diff)) / gap)
    return 2.0 * best

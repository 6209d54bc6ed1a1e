"""Problem-constant estimation, batch PL checks, and stationarity measures."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError
from .linalg import regularized_solve, factorize, sigma_bounds
from .problem import (
    BatchHandle,
    ResidualProblem,
    as_point,
    ball_points,
    estimate_jacobian_lipschitz,
    jacobian_hat,
    residual_hat,
)

USER = "USER"
ESTIMATED = "ESTIMATED"
MAX_ENUMERATED = 256
RANDOM_BATCHES = 64

CONSTANT_FIELDS = ("L_Fhat", "M_G", "M_F", "P_g1", "P_f1", "l_F", "mu", "sigma_tilde")


@dataclass(frozen=True)
class ProblemConstants:
    """Bounds on the residual map used by step sizes, certificates and budgets.

    ``M_G`` bounds batch Jacobian norms, ``M_F`` the full Jacobian norm,
    ``P_g1``/``P_f1`` the batch and full residual norms, ``l_F`` the value
    Lipschitz constant of each squared component, ``mu`` the PL constant and
    ``sigma_tilde`` the spread of squared components across the population.
    """

    L_Fhat: float
    M_G: float
    M_F: float
    P_g1: float
    P_f1: float
    l_F: float
    mu: float
    sigma_tilde: float
    m: int = 1
    n: int = 1
    batch_size: Optional[int] = None
    provenance: Mapping[str, str] = field(default_factory=dict)
    flags: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in CONSTANT_FIELDS:
            value = getattr(self, name)
            if not (value >= 0.0) or math.isnan(value):
                raise DomainError(f"constant {name} must be nonnegative, got {value!r}")

    @property
    def l_g2(self) -> float:
        """Gradient Lipschitz bound of the squared batch residual."""
        return 2.0 * (self.M_G**2 + self.L_Fhat * self.P_g1)

    @property
    def l_f2(self) -> float:
        """Gradient Lipschitz bound of the squared full residual."""
        return 2.0 * (self.L_Fhat * self.P_f1 + self.M_F**2)

    def to_dict(self) -> dict[str, Any]:
        data = {name: getattr(self, name) for name in CONSTANT_FIELDS}
        data.update(
            m=self.m,
            n=self.n,
            batch_size=self.batch_size,
            l_g2=self.l_g2,
            l_f2=self.l_f2,
            provenance=dict(self.provenance),
            flags=dict(self.flags),
        )
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ProblemConstants":
        missing = [name for name in CONSTANT_FIELDS if name not in data]
        if missing:
            raise DomainError(f"constants are missing {missing}")
        values = {name: float(data[name]) for name in CONSTANT_FIELDS}
        provenance = dict(data.get("provenance") or {name: USER for name in CONSTANT_FIELDS})
        return cls(
            **values,
            m=int(data.get("m", 1)),
            n=int(data.get("n", 1)),
            batch_size=data.get("batch_size"),
            provenance=provenance,
            flags=dict(data.get("flags") or {}),
        )

    def with_overrides(self, **values: float) -> "ProblemConstants":
        provenance = dict(self.provenance)
        provenance.update({name: USER for name in values})
        return replace(self, **values, provenance=provenance)


def batches_of(m: int, b: int, rng: Optional[np.random.Generator] = None) -> list[BatchHandle]:
    """Every size-b batch when there are at most 256 of them, else 64 random ones."""
    if math.comb(m, b) <= MAX_ENUMERATED:
        return [BatchHandle(tuple(i + 1 for i in combo)) for combo in itertools.combinations(range(m), b)]
    rng = rng or np.random.default_rng(0)
    return [BatchHandle.of(rng.choice(m, size=b, replace=False) + 1, m) for _ in range(RANDOM_BATCHES)]


def min_batch_pl(J_rows: NDArray, batches: Sequence[BatchHandle]) -> float:
    """Smallest squared minimal singular value of the normalized batch Jacobians."""
    best = math.inf
    for batch in batches:
        block = J_rows[batch.zero_based] / np.sqrt(batch.b)
        best = min(best, sigma_bounds(block)[0] ** 2)
    return best


def component_spread(values: NDArray) -> float:
    """sigma(x)^2 = sum (F_i^2 - mean F^2)^2 / (m - 1); zero when m = 1."""
    m = values.size
    if m < 2:
        return 0.0
    squares = values**2
    return float(np.sum((squares - squares.mean()) ** 2) / (m - 1))


def estimate_constants(
    p: ResidualProblem,
    x0: NDArray,
    cloud_size: int = 64,
    radius: float = 1.0,
    seed: int = 0,
    batch_size: Optional[int] = None,
) -> ProblemConstants:
    """Estimate every problem constant over a random cloud around ``x0``.

    The cloud holds ``x0`` plus ``cloud_size`` uniform points of the ball of
    ``radius``. Value bounds are doubled for safety. Without ``batch_size`` the
    batch Jacobian bound uses the largest component gradient, which dominates
    every batch size, and the PL constant covers the full batch only.
    """
    if cloud_size < 2:
        raise DomainError("cloud_size must be at least 2")
    if batch_size is not None and not 1 <= batch_size <= p.m:
        raise DomainError(f"batch_size must lie in 1..{p.m}")
    rng = np.random.default_rng(seed)
    x0 = as_point(p, x0)
    points = np.vstack([x0[None, :], ball_points(rng, x0, radius, cloud_size)])
    everything = np.arange(p.m)
    batches = None
    if batch_size is not None and batch_size < p.m:
        batches = batches_of(p.m, batch_size, rng)

    M_G = M_F = P_comp = P_full = l_F = spread = 0.0
    mu = math.inf
    for x in points:
        values = p.residuals(x, everything)
        rows = p.gradients(x, everything)
        row_norms = np.linalg.norm(rows, axis=1)
        sigma_min, sigma_max = sigma_bounds(rows / np.sqrt(p.m))
        M_F = max(M_F, sigma_max)
        mu = min(mu, sigma_min**2)
        if batches is not None:
            mu = min(mu, min_batch_pl(rows, batches))
            if len(batches) == math.comb(p.m, batch_size):
                M_G = max(M_G, max(sigma_bounds(rows[bt.zero_based] / np.sqrt(bt.b))[1] for bt in batches))
            else:
                M_G = max(M_G, float(row_norms.max()))
        elif batch_size == p.m:
            M_G = max(M_G, sigma_max)
        else:
            M_G = max(M_G, float(row_norms.max()))
        P_comp = max(P_comp, float(np.max(np.abs(values))))
        P_full = max(P_full, float(np.linalg.norm(values)) / np.sqrt(p.m))
        l_F = max(l_F, float(np.max(2.0 * np.abs(values) * row_norms)))
        spread = max(spread, component_spread(values))

    if p.L_hint is not None:
        L_Fhat = float(p.L_hint)
        l_source = USER
    else:
        L_Fhat = estimate_jacobian_lipschitz(p, x0, radius=radius, seed=seed)
        l_source = ESTIMATED
    provenance = {name: ESTIMATED for name in CONSTANT_FIELDS}
    provenance["L_Fhat"] = l_source
    flags: dict[str, Any] = {"cloud_size": cloud_size, "radius": radius, "seed": seed}
    if p.m == 1:
        flags["sigma_undefined"] = True
    return ProblemConstants(
        L_Fhat=L_Fhat,
        M_G=M_G,
        M_F=M_F,
        P_g1=2.0 * P_comp,
        P_f1=2.0 * P_full,
        l_F=2.0 * l_F,
        mu=max(mu, 0.0),
        sigma_tilde=math.sqrt(spread),
        m=p.m,
        n=p.n,
        batch_size=batch_size,
        provenance=provenance,
        flags=flags,
    )


@dataclass(frozen=True)
class PLReport:
    """Smallest squared batch singular value per (point index, batch size)."""

    minima: Mapping[tuple[int, int], float]
    threshold: float

    @property
    def mu_hat(self) -> float:
        return min(self.minima.values())

    @property
    def passed(self) -> bool:
        return self.mu_hat > self.threshold

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def pl_check(
    p: ResidualProblem,
    points: Iterable[NDArray],
    batch_sizes: Iterable[int],
    threshold: float = 1e-12,
    seed: int = 0,
) -> PLReport:
    """Check the batch PL inequality at each point for each batch size."""
    points = [as_point(p, x) for x in points]
    sizes = list(batch_sizes)
    if not points or not sizes:
        raise DomainError("pl_check needs at least one point and one batch size")
    rng = np.random.default_rng(seed)
    everything = np.arange(p.m)
    minima: dict[tuple[int, int], float] = {}
    for b in sizes:
        if not 1 <= b <= p.m:
            raise DomainError(f"batch size {b} outside 1..{p.m}")
        batches = batches_of(p.m, b, rng)
        for i, x in enumerate(points):
            minima[(i, b)] = min_batch_pl(p.gradients(x, everything), batches)
    return PLReport(minima, threshold)


def prox_grad_norm(
    p: ResidualProblem,
    x: NDArray,
    L_ref: float,
    tau: Optional[float] = None,
    batch: Optional[BatchHandle] = None,
) -> float:
    """Norm of L_ref times the prox displacement; tau defaults to the batch residual norm."""
    x = as_point(p, x)
    residual = residual_hat(p, x, batch)
    g1 = float(np.linalg.norm(residual))
    if g1 == 0.0:
        return 0.0
    tau = g1 if tau is None else tau
    cache = factorize(jacobian_hat(p, x, batch), residual)
    return float(L_ref * np.linalg.norm(regularized_solve(cache, tau * L_ref)))


def growth_sandwich(g2: float, grad_norm: float, mu: float, M: float) -> tuple[float, float]:
    """Slacks of 4 mu g2 <= ||grad||^2 and ||grad||^2 <= 4 M^2 g2."""
    sq = grad_norm**2
    return sq - 4.0 * mu * g2, 4.0 * M * M * g2 - sq

"""Built-in test problems with planted solutions, and problem-file loading."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError, UnknownSpec
from .problem import ResidualProblem


def _orthogonal(rng: np.random.Generator, size: int) -> NDArray:
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def linear_problem(A: NDArray, c: NDArray, name: str = "linear", **params: Any) -> ResidualProblem:
    """F(x) = A x - c with an exact Jacobian and zero Jacobian Lipschitz constant."""
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    if A.ndim != 2 or c.shape != (A.shape[0],):
        raise DomainError(f"linear problem needs A of shape (m, n) and c of length m, got {A.shape} and {c.shape}")
    m, n = A.shape
    x_star = params.pop("x_star", None)
    return ResidualProblem(
        n=n,
        m=m,
        residual_fn=lambda x, idx: A[idx] @ x - c[idx],
        jacobian_fn=lambda x, idx: A[idx],
        L_hint=0.0,
        name=name,
        x_star=None if x_star is None else np.asarray(x_star, dtype=float),
        params={"A": A, "c": c, **params},
    )


def linear(m: int, n: int, cond: float = 10.0, consistent: bool = True, seed: int = 0) -> ResidualProblem:
    """Linear system whose normalized Jacobian has singular values in [1/cond, 1].

    Singular values are geometrically spaced; the solution x* is planted. An
    inconsistent instance adds a residual orthogonal to the range of A, which
    requires m > n.
    """
    if cond < 1.0:
        raise DomainError("cond must be at least 1")
    rng = np.random.default_rng(seed)
    rank = min(m, n)
    U = _orthogonal(rng, m)
    V = _orthogonal(rng, n)
    singular = np.geomspace(1.0, 1.0 / cond, rank) if rank > 1 else np.ones(1)
    A = np.sqrt(m) * (U[:, :rank] * singular) @ V[:, :rank].T
    x_star = rng.standard_normal(n)
    c = A @ x_star
    if not consistent:
        if m <= n:
            raise DomainError("an inconsistent linear instance needs m > n")
        c = c + np.sqrt(m) * U[:, rank:] @ rng.standard_normal(m - rank)
        x_star = None
    mu = float(singular[-1] ** 2) if m <= n else 0.0
    return linear_problem(A, c, name="linear", x_star=x_star, mu=mu, M=1.0, singular_values=singular)


def rosenbrock_system(n: int = 2) -> ResidualProblem:
    """Extended Rosenbrock pairs 10(x_{2i} - x_{2i-1}^2) and 1 - x_{2i-1}; root at all ones."""
    if n < 2 or n % 2:
        raise DomainError("rosenbrock_system needs an even n >= 2")

    def residual(x: NDArray, idx: NDArray) -> NDArray:
        odd = x[0::2]
        even = x[1::2]
        full = np.empty(n)
        full[0::2] = 10.0 * (even - odd**2)
        full[1::2] = 1.0 - odd
        return full[idx]

    def jacobian(x: NDArray, idx: NDArray) -> NDArray:
        full = np.zeros((n, n))
        pairs = np.arange(0, n, 2)
        full[pairs, pairs] = -20.0 * x[pairs]
        full[pairs, pairs + 1] = 10.0
        full[pairs + 1, pairs] = -1.0
        return full[idx]

    return ResidualProblem(
        n=n,
        m=n,
        residual_fn=residual,
        jacobian_fn=jacobian,
        L_hint=20.0 / np.sqrt(n),
        name="rosenbrock_system",
        x_star=np.ones(n),
        params={"n": n},
    )


def trig_system(n: int = 5, seed: int = 0, m: Optional[int] = None) -> ResidualProblem:
    """F_i(x) = sin(a_i^T x) - b_i with a planted root where every a_i^T x* is small.

    The matrix with rows a_i has singular values in [1, 2], so the Jacobian at
    the root is well conditioned for m = n.
    """
    m = n if m is None else m
    rng = np.random.default_rng(seed)
    rank = min(m, n)
    U = _orthogonal(rng, m)
    V = _orthogonal(rng, n)
    A = (U[:, :rank] * np.linspace(2.0, 1.0, rank)) @ V[:, :rank].T
    direction = rng.standard_normal(n)
    x_star = 0.1 * direction / np.linalg.norm(direction)
    b = np.sin(A @ x_star)
    row_norm = float(np.max(np.linalg.norm(A, axis=1)))
    lipschitz = row_norm * float(np.linalg.norm(A, 2)) / np.sqrt(m)

    return ResidualProblem(
        n=n,
        m=m,
        residual_fn=lambda x, idx: np.sin(A[idx] @ x) - b[idx],
        jacobian_fn=lambda x, idx: np.cos(A[idx] @ x)[:, None] * A[idx],
        L_hint=lipschitz,
        name="trig_system",
        x_star=x_star,
        params={"A": A, "b": b, "n": n, "m": m, "seed": seed},
    )


def overparam_features(m: int = 4, n: int = 10, seed: int = 0) -> ResidualProblem:
    """Consistent linear system with m <= n random unit-norm rows."""
    if m > n:
        raise DomainError("overparam_features needs m <= n")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    x_star = rng.standard_normal(n)
    return linear_problem(A, A @ x_star, name="overparam_features", x_star=x_star)


def duplicated_rows(m: int = 6, n: int = 4, seed: int = 0) -> ResidualProblem:
    """Consistent linear system where every row appears twice, so batches can be rank deficient."""
    if m < 2 or m % 2:
        raise DomainError("duplicated_rows needs an even m >= 2")
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((m // 2, n))
    A = np.repeat(base, 2, axis=0)
    x_star = rng.standard_normal(n)
    return linear_problem(A, A @ x_star, name="duplicated_rows", x_star=x_star)


BUILTINS: dict[str, Callable[..., ResidualProblem]] = {
    "linear": linear,
    "rosenbrock_system": rosenbrock_system,
    "trig_system": trig_system,
    "overparam_features": overparam_features,
    "duplicated_rows": duplicated_rows,
}


def generate_problem(spec: Mapping[str, Any]) -> ResidualProblem:
    """Build a problem from ``{"kind": name, ...parameters}``.

    ``kind == "linear"`` with explicit ``A`` (row-major) and ``c`` builds that
    system; otherwise the parameters go to the named generator.
    """
    if "kind" not in spec:
        raise UnknownSpec("problem spec needs a 'kind' key")
    kind = spec["kind"]
    params = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "linear" and "A" in params:
        A = np.asarray(params.pop("A"), dtype=float)
        c = params.pop("c", None)
        if c is None:
            raise UnknownSpec("explicit linear problem needs 'c'")
        if params:
            raise UnknownSpec(f"unexpected keys for explicit linear problem: {sorted(params)}")
        return linear_problem(A, c)
    factory = BUILTINS.get(kind)
    if factory is None:
        raise UnknownSpec(f"unknown problem kind {kind!r}; expected one of {sorted(BUILTINS)}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise UnknownSpec(f"bad parameters for {kind}: {exc}") from exc


def load_problem(path: str | Path) -> ResidualProblem:
    with open(path, encoding="utf-8") as handle:
        return generate_problem(json.load(handle))

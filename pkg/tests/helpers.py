"""Small problems with hand-computable answers shared across test modules."""

import numpy as np

from gnsq.instances import linear_problem
from gnsq.problem import ResidualProblem


def identity_1d(shift: float = 0.0) -> ResidualProblem:
    """F(x) = x - shift in one dimension."""
    return linear_problem(np.array([[1.0]]), np.array([shift]))


def constant_residual(values) -> ResidualProblem:
    values = np.asarray(values, dtype=float)
    return ResidualProblem(
        n=1,
        m=values.size,
        residual_fn=lambda x, idx: values[idx],
        jacobian_fn=lambda x, idx: np.zeros((len(idx), 1)),
        L_hint=0.0,
    )


def square_1d() -> ResidualProblem:
    """F(x) = x^2 - 1 with Jacobian Lipschitz constant 2."""
    return ResidualProblem(
        n=1,
        m=1,
        component_eval=lambda i, x: x[0] ** 2 - 1.0,
        component_grad=lambda i, x: np.array([2.0 * x[0]]),
    )

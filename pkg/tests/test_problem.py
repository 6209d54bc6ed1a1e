import math

import numpy as np
import pytest

from gnsq import instances
from gnsq.errors import InvalidBatch, NonFiniteGradient, NonFiniteResidual, UnknownSpec
from gnsq.problem import (
    FINITE_DIFFERENCE,
    BatchHandle,
    ResidualProblem,
    eval_f1hat,
    eval_f2hat,
    eval_g1hat,
    eval_g2hat,
    grad_f2hat,
    jacobian_hat,
)

from helpers import constant_residual, identity_1d


def test_f1hat_of_identity_is_the_point():
    assert eval_f1hat(identity_1d(), np.array([3.0])) == 3.0


def test_f1hat_of_constant_pair():
    assert eval_f1hat(constant_residual([3.0, 4.0]), np.zeros(1)) == pytest.approx(5.0 / math.sqrt(2.0), rel=1e-15)


def test_f1hat_vanishes_at_root():
    p = instances.rosenbrock_system(2)
    assert eval_f1hat(p, np.ones(2)) == 0.0


def test_batch_values_single_and_full():
    p = constant_residual([0.0, math.sqrt(2.0)])
    x = np.zeros(1)
    assert eval_g2hat(p, x, BatchHandle((2,))) == pytest.approx(2.0, rel=1e-15)
    assert eval_g2hat(p, x, BatchHandle((1, 2))) == pytest.approx(1.0, rel=1e-15)
    assert eval_g2hat(p, x, BatchHandle.full(2)) == pytest.approx(eval_f2hat(p, x), rel=1e-15)
    assert eval_g1hat(p, x, BatchHandle((2,))) ** 2 == pytest.approx(eval_g2hat(p, x, BatchHandle((2,))), rel=1e-15)


def test_jacobian_rows_are_scaled_gradients():
    p = instances.linear(3, 2, consistent=False, seed=0)
    A = p.params["A"]
    np.testing.assert_allclose(jacobian_hat(p, np.zeros(2)), A / math.sqrt(3.0), rtol=1e-15)
    np.testing.assert_allclose(jacobian_hat(p, np.zeros(2), BatchHandle((2,))), A[1:2], rtol=1e-15)


def test_gradient_of_identity():
    np.testing.assert_allclose(grad_f2hat(identity_1d(), np.array([3.0])), [6.0])


def test_gradient_of_linear_system():
    p = instances.linear(5, 3, consistent=False, seed=4)
    A, c = p.params["A"], p.params["c"]
    x = np.array([0.3, -1.0, 2.0])
    np.testing.assert_allclose(grad_f2hat(p, x), 2.0 * A.T @ (A @ x - c) / 5.0, rtol=1e-12)


def test_batch_expectation_equals_full_value():
    p = instances.trig_system(4, seed=3, m=6)
    x = np.full(4, 0.2)
    from itertools import combinations

    for b in range(1, 7):
        values = [eval_g2hat(p, x, BatchHandle(tuple(i + 1 for i in c))) for c in combinations(range(6), b)]
        assert np.mean(values) == pytest.approx(eval_f2hat(p, x), rel=1e-12)


def test_finite_difference_fallback_matches_analytic():
    p = instances.trig_system(3, seed=2)
    fallback = ResidualProblem(n=p.n, m=p.m, residual_fn=p.residual_fn)
    assert fallback.gradient_source == FINITE_DIFFERENCE
    x = np.array([0.1, -0.4, 0.7])
    np.testing.assert_allclose(jacobian_hat(fallback, x), jacobian_hat(p, x), rtol=1e-7, atol=1e-9)


def test_non_finite_residual_names_component():
    p = ResidualProblem(n=1, m=2, component_eval=lambda i, x: math.inf if i == 2 else 0.0)
    with pytest.raises(NonFiniteResidual) as info:
        eval_f1hat(p, np.zeros(1))
    assert info.value.index == 2


def test_non_finite_gradient_names_component():
    p = ResidualProblem(
        n=1, m=2, component_eval=lambda i, x: 0.0, component_grad=lambda i, x: np.array([math.nan if i == 1 else 0.0])
    )
    with pytest.raises(NonFiniteGradient) as info:
        jacobian_hat(p, np.zeros(1))
    assert info.value.index == 1


@pytest.mark.parametrize("indices", [(), (0,), (2, 1), (1, 1)])
def test_invalid_batches_rejected(indices):
    with pytest.raises(InvalidBatch):
        BatchHandle(indices)


def test_batch_beyond_population_rejected():
    with pytest.raises(InvalidBatch):
        BatchHandle.of([1, 5], m=4)


def test_builtin_ground_truth():
    p = instances.linear(4, 10, cond=10.0, seed=1)
    assert eval_f1hat(p, p.x_star) < 1e-13
    singular = np.linalg.svd(jacobian_hat(p, p.x_star), compute_uv=False)
    np.testing.assert_allclose(singular, p.params["singular_values"], rtol=1e-12)
    assert p.params["mu"] == pytest.approx(0.01, rel=1e-12)
    rosen = instances.rosenbrock_system(2)
    np.testing.assert_allclose(rosen.residuals(np.array([0.5, 2.0]), np.arange(2)), [10 * (2.0 - 0.25), 0.5])


def test_generate_problem_from_spec():
    p = instances.generate_problem({"kind": "linear", "A": [[1.0, 0.0], [0.0, 2.0]], "c": [1.0, 1.0]})
    assert (p.m, p.n) == (2, 2)
    with pytest.raises(UnknownSpec):
        instances.generate_problem({"kind": "nope"})
    with pytest.raises(UnknownSpec):
        instances.generate_problem({"kind": "trig_system", "bogus": 1})

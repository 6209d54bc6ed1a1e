import math

import numpy as np
import pytest

from gnsq import instances
from gnsq.errors import DomainError
from gnsq.instances import linear_problem
from gnsq.model import (
    ModelAnchor,
    decomposition_residual,
    delta_r,
    delta_tilde_r,
    kappa,
    optimal_tau,
    prox_point,
    psi_at_step,
    psi_gradient,
    psi_value,
    scaled_step,
    step_value_at_tau,
)
from gnsq.problem import BatchHandle, eval_f1hat, eval_g1hat

from helpers import identity_1d


def scalar_anchor(L=1.0, tau=1.0, x=1.0, shift=0.0):
    return ModelAnchor.build(identity_1d(shift), np.array([x]), L, tau)


def test_psi_at_anchor():
    p = instances.trig_system(3, seed=0)
    x = np.full(3, 0.4)
    batch = BatchHandle((1, 3))
    anchor = ModelAnchor.build(p, x, 2.0, 0.7, batch)
    g1 = eval_g1hat(p, x, batch)
    assert psi_value(anchor, x) == pytest.approx(0.35 + g1**2 / 1.4, rel=1e-14)
    assert psi_value(anchor.with_params(tau=g1), x) == pytest.approx(g1, rel=1e-14)


def test_psi_scalar_value():
    assert psi_value(scalar_anchor(), np.array([0.5])) == pytest.approx(0.75, rel=1e-15)


def test_psi_gradient_examples():
    p = instances.trig_system(4, seed=1)
    anchor = ModelAnchor.build(p, np.full(4, 0.2), 1.5, 0.3)
    np.testing.assert_allclose(psi_gradient(anchor, anchor.x), anchor.jacobian.T @ anchor.residual / anchor.tau)
    y = anchor.x + np.array([0.1, -0.2, 0.05, 0.3])
    fd = np.array(
        [(psi_value(anchor, y + h) - psi_value(anchor, y - h)) / 2e-6 for h in np.eye(4) * 1e-6]
    )
    np.testing.assert_allclose(psi_gradient(anchor, y), fd, rtol=1e-5)
    scale = 1.0 + np.linalg.norm(anchor.jacobian, 2) ** 2 / anchor.tau
    assert np.linalg.norm(psi_gradient(anchor, prox_point(anchor))) <= 1e-10 * scale


def test_prox_point_examples():
    np.testing.assert_allclose(prox_point(scalar_anchor()), [0.5])
    newton = prox_point(ModelAnchor.build(identity_1d(5.0), np.zeros(1), 1e-12, 1e-6))
    np.testing.assert_allclose(newton, [5.0], rtol=1e-12)
    anchor = ModelAnchor.build(instances.trig_system(3), np.full(3, 0.5), 1e15, 1.0)
    np.testing.assert_allclose(prox_point(anchor), anchor.x, atol=1e-14)


def test_scaled_step_examples():
    anchor = scalar_anchor()
    np.testing.assert_allclose(scaled_step(anchor, eta=1.0), prox_point(anchor))
    np.testing.assert_allclose(scaled_step(anchor, eta=0.0), anchor.x)
    np.testing.assert_allclose(scaled_step(anchor, eta=0.5), [0.75])


def test_psi_at_step_matches_direct_evaluation():
    p = instances.rosenbrock_system(4)
    rng = np.random.default_rng(0)
    for _ in range(20):
        anchor = ModelAnchor.build(p, rng.normal(size=4), rng.uniform(0.1, 50), rng.uniform(0.1, 5))
        cache = anchor.factorize()
        for eta in (0.5, 1.0, 1.5):
            direct = psi_value(anchor, scaled_step(anchor, cache, eta))
            assert psi_at_step(anchor, cache, eta) == pytest.approx(direct, rel=1e-10)


def test_optimal_tau_scalar_sits_at_floor():
    # For F(x)=x, x=1, L=1 the objective is tau/2 + 1/(2(1+tau)), increasing on tau > 0.
    anchor = scalar_anchor()
    tau_star = optimal_tau(anchor)
    grid = np.geomspace(1e-6, 10.0, 10_001)
    objective = grid / 2.0 + 1.0 / (2.0 * (1.0 + grid))
    assert np.all(np.diff(objective) > 0.0)
    assert step_value_at_tau(anchor, anchor.factorize(), tau_star) <= objective.min()


def test_optimal_tau_interior_minimum_against_grid():
    # F = (x, 1): the second component lies outside the Jacobian range, so the minimum is interior.
    p = linear_problem(np.array([[1.0], [0.0]]), np.array([0.0, -1.0]))
    anchor = ModelAnchor.build(p, np.array([1.0]), 1.0, 1.0)
    cache = anchor.factorize()
    tau_star = optimal_tau(anchor, cache)
    grid = np.geomspace(1e-3, 10.0, 20_001)
    values = np.array([step_value_at_tau(anchor, cache, t) for t in grid])
    assert tau_star == pytest.approx(grid[np.argmin(values)], rel=1e-3)
    assert step_value_at_tau(anchor, cache, tau_star) <= values.min()


def test_optimal_tau_never_worse_than_residual_norm():
    p = instances.trig_system(5, seed=2)
    rng = np.random.default_rng(3)
    for _ in range(30):
        anchor = ModelAnchor.build(p, rng.normal(size=5), rng.uniform(0.1, 10.0), 1.0)
        cache = anchor.factorize()
        tau_star = optimal_tau(anchor, cache)
        assert step_value_at_tau(anchor, cache, tau_star) <= step_value_at_tau(anchor, cache, anchor.g1) * (1 + 1e-14)


def test_optimal_tau_rejects_zero_residual():
    with pytest.raises(DomainError):
        optimal_tau(scalar_anchor(x=0.0))


def test_kappa_values():
    assert kappa(0.0) == 0.0
    assert kappa(1.0) == 0.5
    assert kappa(2.0) == 1.5
    with pytest.raises(DomainError):
        kappa(-0.1)


def test_delta_r_examples():
    p = identity_1d()
    assert delta_r(p, np.array([1.0]), 0.5) == pytest.approx(0.75, rel=1e-12)
    assert delta_tilde_r(p, np.array([1.0]), 0.5) == pytest.approx(0.5, rel=1e-12)
    assert delta_r(p, np.array([0.0]), 0.5) == 0.0
    lin = instances.linear(5, 5, seed=3)
    x = lin.x_star + 0.1
    assert delta_r(lin, x, 1e3) == pytest.approx(eval_f1hat(lin, x) ** 2, rel=1e-10)


def test_delta_r_bounded_and_monotone():
    p = instances.trig_system(4, seed=5, m=6)
    x = np.full(4, 0.7)
    f2 = eval_f1hat(p, x) ** 2
    values = [delta_r(p, x, r) for r in np.geomspace(1e-4, 10.0, 30)]
    assert all(0.0 <= v <= f2 for v in values)
    assert all(b >= a - 1e-14 for a, b in zip(values, values[1:]))


def test_prox_distance_monotone_in_L_and_tau():
    p = instances.rosenbrock_system(2)
    x = np.array([-1.2, 1.0])
    distances = [np.linalg.norm(prox_point(ModelAnchor.build(p, x, L, 1.0)) - x) for L in np.geomspace(0.01, 100, 30)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(distances, distances[1:]))
    distances = [np.linalg.norm(prox_point(ModelAnchor.build(p, x, 1.0, t)) - x) for t in np.geomspace(0.01, 100, 30)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(distances, distances[1:]))


def test_decomposition_identity():
    p = instances.trig_system(3, seed=4)
    rng = np.random.default_rng(1)
    anchor = ModelAnchor.build(p, rng.normal(size=3), 2.0, 0.5, BatchHandle((1, 2)))
    for _ in range(10):
        y = rng.normal(size=3)
        assert abs(decomposition_residual(anchor, y)) <= 1e-10 * max(1.0, psi_value(anchor, y))


def test_anchor_validation():
    with pytest.raises(DomainError):
        scalar_anchor(L=0.0)
    with pytest.raises(DomainError):
        scalar_anchor(tau=0.0)
    assert math.isfinite(psi_value(scalar_anchor(tau=1e-300), np.array([1.0])))

import numpy as np
import pytest

from uwform import fitting


def exp_model(z, obs):
    def residual(p):
        return p[0] * (1 - np.exp(-p[1] * z)) - obs

    def jacobian(p):
        e = np.exp(-p[1] * z)
        return np.stack([1 - e, p[0] * z * e], axis=1)

    return residual, jacobian


def test_recovers_exact_parameters():
    z = np.linspace(1, 10, 40)
    obs = 0.3 * (1 - np.exp(-0.4 * z))
    residual, jacobian = exp_model(z, obs)
    rng = np.random.default_rng(0)
    result = fitting.multi_start_fit(residual, jacobian, [0, 0], [1, 5], rng, n_starts=20)
    assert result.cost < 1e-16
    assert result.params == pytest.approx([0.3, 0.4], abs=1e-6)


def test_accepted_costs_decrease_monotonically():
    z = np.linspace(1, 10, 40)
    obs = 0.3 * (1 - np.exp(-0.4 * z)) + 0.01 * np.sin(z)
    residual, jacobian = exp_model(z, obs)
    result = fitting.levenberg_marquardt(
        residual, jacobian, np.array([0.9, 4.0]), np.array([0, 0]), np.array([1, 5])
    )
    costs = np.array(result.cost_history)
    assert len(costs) >= 2
    assert (np.diff(costs) < 0).all()


def test_respects_bounds():
    z = np.linspace(1, 10, 20)
    obs = 2.0 * (1 - np.exp(-0.4 * z))  # optimum outside the box
    residual, jacobian = exp_model(z, obs)
    rng = np.random.default_rng(1)
    result = fitting.multi_start_fit(residual, jacobian, [0, 0], [1, 5], rng, n_starts=10)
    assert 0 <= result.params[0] <= 1
    assert 0 <= result.params[1] <= 5


def test_deterministic_for_fixed_generator_state():
    z = np.linspace(1, 10, 30)
    obs = 0.25 * (1 - np.exp(-0.7 * z))
    residual, jacobian = exp_model(z, obs)
    r1 = fitting.multi_start_fit(residual, jacobian, [0, 0], [1, 5],
                                 np.random.default_rng(7), n_starts=8)
    r2 = fitting.multi_start_fit(residual, jacobian, [0, 0], [1, 5],
                                 np.random.default_rng(7), n_starts=8)
    assert np.array_equal(r1.params, r2.params)
    assert r1.cost == r2.cost

"""Cost functions, discriminativeness scores and weight construction."""

import math

import numpy as np
import pytest

from nonadv.costs import (BASELINE_KINDS, CostFunction, PdiscParams,
                          baseline_weights, evaluate_cost, evaluate_cost_batch,
                          gradient_coefficients, optimal_weights, p_disc)
from nonadv.errors import ConfigurationError, ContractError
from nonadv.models import LinearModel, MlpModel


def test_l1_cost_value_and_gradient():
    cf = CostFunction.l1()
    value, grad = evaluate_cost(cf, np.array([3.0, -4.0, 0.0]))
    assert value == 7.0
    assert np.array_equal(grad, np.array([1.0, -1.0, 0.0]))


def test_l2_cost_value_and_gradient():
    cf = CostFunction.l2()
    delta = np.array([3.0, -4.0])
    value, grad = evaluate_cost(cf, delta)
    assert value == 5.0
    assert np.allclose(grad, delta / 5.0)
    value0, grad0 = evaluate_cost(cf, np.zeros(2))
    assert value0 == 0.0
    assert np.array_equal(grad0, np.zeros(2))


def test_weighted_cost_value_and_gradient_match_quadratic_form():
    w = np.array([2.0, 0.5])
    cf = CostFunction.weighted(w)
    delta = np.array([1.0, -2.0])
    value, grad = evaluate_cost(cf, delta)
    assert value == pytest.approx(2.0 * 1.0 + 0.5 * 4.0)
    assert np.allclose(grad, 2.0 * w * delta)


def test_weighted_cost_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    w = rng.uniform(0.5, 3.0, 5)
    cf = CostFunction.weighted(w)
    delta = rng.normal(size=5)
    _, grad = evaluate_cost(cf, delta)
    step = 1e-6
    for i in range(5):
        hi, lo = delta.copy(), delta.copy()
        hi[i] += step
        lo[i] -= step
        num = (evaluate_cost(cf, hi)[0] - evaluate_cost(cf, lo)[0]) / (2 * step)
        assert grad[i] == pytest.approx(num, rel=1e-5)


def test_infinite_weights_freeze_coordinates():
    cf = CostFunction.weighted(np.array([1.0, np.inf]))
    assert cf.frozen_mask(2).tolist() == [False, True]
    value, grad = evaluate_cost(cf, np.array([1.0, 0.0]))
    assert np.isfinite(value)
    assert grad[1] == 0.0
    moved, _ = evaluate_cost(cf, np.array([1.0, 0.5]))
    assert math.isinf(moved)


def test_evaluate_cost_batch_matches_loop():
    cf = CostFunction.weighted(np.array([1.0, 2.0]))
    deltas = np.array([[1.0, 1.0], [0.5, -0.5], [0.0, 0.0]])
    batch = evaluate_cost_batch(cf, deltas)
    singles = np.array([evaluate_cost(cf, d)[0] for d in deltas])
    assert np.allclose(batch, singles)


def test_cost_function_rejects_nonpositive_weights():
    with pytest.raises(ConfigurationError):
        CostFunction.weighted(np.array([1.0, -1.0]))
    with pytest.raises(ConfigurationError):
        CostFunction.weighted(np.array([0.0, 1.0]))


def test_p_disc_midpoint_value():
    # b = alpha/2 makes the argument exactly zero when q = 1
    assert p_disc(0.5, 1.0, PdiscParams(alpha=1.0, q=1.0)) == pytest.approx(0.5)


def test_p_disc_monotone_in_signal_strength():
    rng = np.random.default_rng(1)
    b = rng.uniform(0.1, 5.0, 100)
    params = PdiscParams(alpha=1.0, q=1.0)
    lower = p_disc(0.9 * b, np.ones(100), params)
    upper = p_disc(b, np.ones(100), params)
    assert np.all(lower < upper)


def test_p_disc_saturates_in_the_noiseless_limit():
    params = PdiscParams(alpha=1.0, q=1.0)
    assert p_disc(2.0, 0.0, params) == 1.0
    assert p_disc(0.0, 0.0, params) < 1.0


def test_p_disc_prior_odds_shift():
    # larger prior odds q raise the score at fixed evidence
    low = p_disc(0.5, 1.0, PdiscParams(alpha=1.0, q=0.5))
    high = p_disc(0.5, 1.0, PdiscParams(alpha=1.0, q=2.0))
    assert low < 0.5 < high


def test_optimal_weights_p1_concentrates_on_best_coordinate():
    beta = np.array([0.5, 3.0, -1.0])
    se = np.array([1.0, 1.0, 1.0])
    w = optimal_weights(beta, se, 1)
    assert w[1] == 1.0
    assert np.isinf(w[0]) and np.isinf(w[2])


def test_optimal_weights_p2_formula_and_normalization():
    beta = np.array([2.0, 1.0, 0.0])
    se = np.array([1.0, 1.0, 1.0])
    params = PdiscParams(alpha=1.0, q=1.0)
    w = optimal_weights(beta, se, 2, params)
    raw = np.abs(beta[:2]) / p_disc(beta[:2], se[:2], params)
    expected = raw / raw.min()
    assert np.allclose(w[:2], expected)
    assert np.isinf(w[2])
    assert w[np.isfinite(w)].min() == pytest.approx(1.0)


def test_optimal_weights_p_inf_uses_magnitudes():
    beta = np.array([2.0, 4.0])
    se = np.ones(2)
    w = optimal_weights(beta, se, math.inf)
    assert np.allclose(w, np.array([1.0, 2.0]))


def test_optimal_weights_rejects_all_zero_coefficients():
    with pytest.raises(ContractError):
        optimal_weights(np.zeros(3), np.ones(3), 2)


def test_baseline_weights_kinds():
    beta = np.array([2.0, -1.0, 0.0])
    assert np.array_equal(baseline_weights(beta, "unit"), np.ones(3))
    assert np.array_equal(baseline_weights(beta, "squared_gradient"),
                          np.array([4.0, 1.0, 0.0]))
    inv = baseline_weights(beta, "inverse_squared")
    assert inv[0] == pytest.approx(0.25)
    assert np.isinf(inv[2])
    assert set(BASELINE_KINDS) == {"unit", "squared_gradient", "inverse_squared"}


def test_gradient_coefficients_linear_model_is_exact():
    model = LinearModel(weights=np.array([1.5, -2.0]), bias=0.0)
    X = np.random.default_rng(2).normal(size=(50, 2))
    coef, se = gradient_coefficients(model, X)
    assert np.allclose(coef, np.array([1.5, 2.0]))
    assert np.allclose(se, np.zeros(2))


def test_gradient_coefficients_mlp_shape_and_positivity():
    model = MlpModel.initialize([4, 10, 2], seed=0)
    X = np.random.default_rng(3).normal(size=(30, 4))
    coef, se = gradient_coefficients(model, X)
    assert coef.shape == (4,)
    assert np.all(coef >= 0)
    assert np.all(se >= 0)

"""Layered mean mechanism: weights, unbiasedness, aggregation."""

import math

import numpy as np
import pytest

from bcdp import (CoordinateBudget, PrivacyDemand, aggregate_mean,
                  calibrate_budgets, layer_coordinate_incidence, m_mean_batch,
                  m_mean_sample, predicted_mse_shape)

# predicted shape of c = (0.2, 0.2, 2, ..., 2) in d = 10 at n = 1,
# frozen from a 40-digit evaluation
SHAPE_GOLDEN = 39.559902200489


def stepped_budget():
    c = np.array([0.2, 0.2] + [2.0] * 8)
    return CoordinateBudget(c, np.arange(10))


def test_incidence_is_upper_triangular():
    inc = layer_coordinate_incidence(4)
    assert inc.dtype == bool
    np.testing.assert_array_equal(inc, np.triu(np.ones((4, 4), dtype=bool)))
    with pytest.raises(ValueError):
        layer_coordinate_incidence(0)


def test_predicted_shape_golden_and_scaling():
    assert predicted_mse_shape(stepped_budget(), 1) == pytest.approx(
        SHAPE_GOLDEN, rel=1e-12)
    assert predicted_mse_shape(stepped_budget(), 500) == pytest.approx(
        SHAPE_GOLDEN / 500, rel=1e-12)
    # recompute from the layer weights directly
    c = np.array([0.2, 0.2] + [2.0] * 8)
    increments = np.diff(c, prepend=0.0)
    weights = np.where(increments > 0,
                       increments ** 2 / (10 - np.arange(10)), 0.0)
    cover = np.cumsum(weights)
    by_hand = np.minimum(1.0 / cover, 10.0).sum()
    assert predicted_mse_shape(c, 1) == pytest.approx(by_hand, rel=1e-14)


def test_predicted_shape_caps_uncovered_coordinates():
    # zero budgets contribute the cap d instead of an infinite term;
    # the single active layer covers only the last coordinate, weight 1
    assert predicted_mse_shape(np.array([0.0, 0.0, 1.0]), 1) == \
        pytest.approx(3.0 + 3.0 + 1.0, rel=1e-12)
    with pytest.raises(ValueError):
        predicted_mse_shape(np.array([0.5, 0.2]), 1)  # decreasing
    with pytest.raises(ValueError):
        predicted_mse_shape(np.array([0.5, 1.0]), 0)


def test_single_report_structure():
    budget = stepped_budget()
    rng = np.random.default_rng(3)
    x = np.linspace(-1.0, 1.0, 10)
    report = m_mean_sample(x, budget, rng, keep_layers=True)
    assert report.dim == 10
    # ranks 0 and 2 start layers; the rest have zero increment
    active = [layer[0] for layer in report.layers]
    assert active == [0, 2]
    assert report.layers[0][2].shape == (10,)
    assert report.layers[1][2].shape == (8,)
    w1 = 0.2 ** 2 / 10
    w2 = 1.8 ** 2 / 8
    np.testing.assert_allclose(report.weight_totals[:2], w1, rtol=1e-12)
    np.testing.assert_allclose(report.weight_totals[2:], w1 + w2, rtol=1e-12)
    assert (report.layer_weights == np.array(
        [w1, 0, w2, 0, 0, 0, 0, 0, 0, 0])).all()


def test_zero_budget_coordinates_report_zero():
    budget = CoordinateBudget(np.array([0.0, 0.0, 1.0]), np.arange(3))
    rng = np.random.default_rng(4)
    report = m_mean_sample(np.array([0.5, -0.5, 0.25]), budget, rng)
    assert report.nu_hat[0] == 0.0
    assert report.weight_totals[0] == 0.0
    assert report.nu_hat[2] != 0.0
    estimate = aggregate_mean([report])
    assert estimate.variance_pred[0] == math.inf
    assert math.isfinite(estimate.variance_pred[2])


def test_batch_is_unbiased():
    budget = CoordinateBudget(np.array([0.3, 0.3, 1.0, 1.0]), np.arange(4))
    x = np.array([0.8, -0.6, 0.2, 0.4])
    n = 150_000
    nu, weights = m_mean_batch(np.tile(x, (n, 1)), budget,
                               np.random.default_rng(21))
    spread = nu.std(axis=0) / math.sqrt(n)
    assert (np.abs(nu.mean(axis=0) - x) < 5 * spread).all()
    assert (weights > 0).all()


def test_budget_permutation_moves_coordinates():
    # shuffling the demand and the data together must reproduce the
    # identity run exactly, stream included
    delta = np.array([0.2, 0.5, 1.0, 2.0])
    sigma = np.array([3, 1, 0, 2])
    base = calibrate_budgets(
        PrivacyDemand(epsilon=2.0, delta=delta, q=0.3, zeta=0.8))
    moved = calibrate_budgets(
        PrivacyDemand(epsilon=2.0, delta=delta[sigma], q=0.3, zeta=0.8))
    X = np.random.default_rng(8).uniform(-1.0, 1.0, (50, 4))
    nu_base, w_base = m_mean_batch(X, base, np.random.default_rng(77))
    nu_moved, w_moved = m_mean_batch(X[:, sigma], moved,
                                     np.random.default_rng(77))
    np.testing.assert_array_equal(nu_moved, nu_base[:, sigma])
    np.testing.assert_array_equal(w_moved, w_base[sigma])


def test_aggregate_paths_agree():
    budget = stepped_budget()
    rng = np.random.default_rng(5)
    X = np.random.default_rng(6).uniform(-1.0, 1.0, (40, 10))
    reports = [m_mean_sample(row, budget, rng) for row in X]
    from_list = aggregate_mean(reports)
    nu = np.stack([r.nu_hat for r in reports])
    weights = np.stack([r.weight_totals for r in reports])
    from_array = aggregate_mean(nu, weights)
    np.testing.assert_array_equal(from_list.mean_hat, from_array.mean_hat)
    np.testing.assert_array_equal(from_list.variance_pred,
                                  from_array.variance_pred)
    assert from_list.n == 40
    # aggregation clamps into the cube even when the raw mean escapes
    clamped = aggregate_mean(np.full((3, 2), 5.0), np.ones(2))
    assert (clamped.mean_hat == 1.0).all()


def test_aggregate_validation():
    with pytest.raises(ValueError):
        aggregate_mean([])
    with pytest.raises(ValueError):
        aggregate_mean(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        aggregate_mean(np.zeros((3, 2)), np.ones(3))


def test_input_validation():
    budget = stepped_budget()
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        m_mean_sample(np.full(10, 1.5), budget, rng)
    with pytest.raises(ValueError):
        m_mean_sample(np.zeros(9), budget, rng)
    with pytest.raises(ValueError):
        m_mean_batch(np.zeros((0, 10)), budget, rng)
    with pytest.raises(ValueError):
        m_mean_batch(np.full((2, 10), np.nan), budget, rng)


def test_batch_determinism():
    budget = stepped_budget()
    X = np.random.default_rng(1).uniform(-1.0, 1.0, (30, 10))
    a, _ = m_mean_batch(X, budget, np.random.default_rng(55))
    b, _ = m_mean_batch(X, budget, np.random.default_rng(55))
    np.testing.assert_array_equal(a, b)

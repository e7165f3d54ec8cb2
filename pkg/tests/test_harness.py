"""Experiment harness: priors, substreams, runners, serialization."""

import csv
import json
import math

import numpy as np
import pytest
from scipy import stats

from bcdp import (CoordinateBudget, MeanExperimentConfig, OlsExperimentConfig,
                  PrivacyDemand, calibrate_budgets, conditional_tv,
                  correlated_bernoulli_prior, derive_rng, load_config,
                  predicted_mse_shape, run_mean_experiment,
                  run_ols_experiment, sample_correlated_bernoulli,
                  write_experiment, zeta_value)


def small_mean_config(**overrides):
    base = dict(delta=(0.3, 0.3, 2.0), epsilon=2.0, q_grid=(0.0, 0.6),
                n=60, trials=3)
    base.update(overrides)
    return MeanExperimentConfig.from_mapping(base)


def small_ols_config(**overrides):
    base = dict(delta=(0.5, 0.5, 2.0), epsilon=2.0, q=0.0,
                theta_star=(0.4, 0.3), n_grid=(40, 90), trials=2)
    base.update(overrides)
    return OlsExperimentConfig.from_mapping(base)


def test_corner_mixture_prior_tv_equals_q():
    for q in (0.0, 0.3, 0.5, 0.99, 1.0):
        prior = correlated_bernoulli_prior(3, q)
        assert prior.pmf.sum() == pytest.approx(1.0, abs=1e-15)
        for i in range(3):
            assert conditional_tv(prior, i) == pytest.approx(q, abs=1e-12)
    uniform = correlated_bernoulli_prior(2, 0.0)
    np.testing.assert_allclose(uniform.pmf, 0.25, rtol=1e-15)


def test_corner_mixture_sampler_moments():
    rng = np.random.default_rng(12)
    X = sample_correlated_bernoulli(200_000, 4, 0.3, rng)
    assert set(np.unique(X)) == {-1.0, 1.0}
    assert np.abs(X.mean(axis=0)).max() < 4 / math.sqrt(200_000)
    # all coordinates agree exactly on coupled rows, which lower-bounds
    # the fraction of rows with a unanimous sign
    unanimous = (np.abs(X.sum(axis=1)) == 4).mean()
    base = 0.3 + 0.7 * 2 ** -3
    assert unanimous == pytest.approx(base, abs=4 * math.sqrt(
        base * (1 - base) / 200_000))


def test_sampler_stream_position_is_q_independent():
    rng_a = np.random.default_rng(77)
    rng_b = np.random.default_rng(77)
    sample_correlated_bernoulli(100, 3, 0.05, rng_a)
    sample_correlated_bernoulli(100, 3, 0.95, rng_b)
    assert rng_a.random() == rng_b.random()


def test_derive_rng_is_keyed_and_stable():
    a = derive_rng(7, 0, 1, 2).random(3)
    b = derive_rng(7, 0, 1, 2).random(3)
    np.testing.assert_array_equal(a, b)
    c = derive_rng(7, 0, 1, 3).random(3)
    assert not np.array_equal(a, c)
    d = derive_rng(8, 0, 1, 2).random(3)
    assert not np.array_equal(a, d)


def test_zeta_policy_values():
    assert zeta_value(0.0, "heuristic") == 0.5
    assert zeta_value(1.0, "heuristic") == 1.0
    assert zeta_value(0.3, 0.8) == 0.8
    with pytest.raises(ValueError):
        zeta_value(0.3, 0.0)
    with pytest.raises(ValueError):
        zeta_value(0.3, 1.5)


def test_config_parsing_and_validation():
    cfg = small_mean_config()
    assert cfg.dim == 3 and cfg.zeta == "heuristic"
    with pytest.raises(ValueError, match="unknown"):
        MeanExperimentConfig.from_mapping(dict(delta=(1.0,), epsilon=1.0,
                                               q_grid=(0.0,), n=1, trials=1,
                                               typo=1))
    with pytest.raises(ValueError, match="missing"):
        MeanExperimentConfig.from_mapping(dict(delta=(1.0,), epsilon=1.0))
    with pytest.raises(ValueError):
        small_mean_config(q_grid=(0.0, 1.5))
    with pytest.raises(ValueError):
        small_mean_config(delta=(0.0, 1.0))
    with pytest.raises(ValueError, match="boolean"):
        small_mean_config(iid_data="yes")
    ols = small_ols_config()
    assert ols.p == 2 and ols.design == "rademacher"
    assert ols.noise == 0.0
    with pytest.raises(ValueError):
        small_ols_config(theta_star=(0.4,))
    with pytest.raises(ValueError):
        small_ols_config(noise=1.5)
    with pytest.raises(ValueError):
        small_ols_config(design="gaussian")
    with pytest.raises(ValueError):
        small_ols_config(radius=0.1)  # theta_star escapes the ball
    with pytest.raises(ValueError):
        small_ols_config(accuracy=0.0)


def test_toml_loading(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(
        'delta = [0.3, 0.3, 2.0]\nepsilon = 2.0\nq_grid = [0.0, 0.6]\n'
        'n = 60\ntrials = 3\nzeta = "heuristic"\n')
    cfg = MeanExperimentConfig.from_mapping(load_config(path))
    assert cfg == small_mean_config()


def test_mean_experiment_shape_and_determinism():
    cfg = small_mean_config()
    raw, summary = run_mean_experiment(cfg, seed=5)
    assert len(raw) == len(cfg.q_grid) * 2 * cfg.trials
    assert len(summary) == len(cfg.q_grid) * 2
    assert {row[1] for row in raw} == {"bcdp", "uniform"}
    assert all(row[3] >= 0 for row in raw)
    raw2, summary2 = run_mean_experiment(cfg, seed=5)
    assert raw == raw2 and summary == summary2
    assert run_mean_experiment(cfg, seed=6)[0] != raw


def test_iid_data_changes_only_coupled_cells():
    # at q = 0 the iid switch draws the very same data, so the grid
    # cell is untouched; the coupled cell sees different users
    cfg = small_mean_config()
    cfg_iid = small_mean_config(iid_data=True)
    assert cfg_iid.iid_data and not cfg.iid_data
    raw = run_mean_experiment(cfg, seed=5)[0]
    raw_iid = run_mean_experiment(cfg_iid, seed=5)[0]
    plain = {(q, m, t): v for q, m, t, v in raw}
    for (q, mech, trial), value in ((r[:3], r[3]) for r in raw_iid):
        if q == 0.0:
            assert value == plain[(q, mech, trial)]
    coupled = [v for q, m, t, v in raw_iid if q == 0.6]
    assert coupled != [v for q, m, t, v in raw if q == 0.6]


def test_uniform_demand_baseline_coincidence():
    # when every coordinate demands the full local level, calibration
    # returns the baseline's flat budget, so both arms run the same
    # mechanism: equal predicted error shape, MSE samples that differ
    # only by stream
    demand = PrivacyDemand(2.0, np.array([2.0, 2.0, 2.0]), 0.5, 1.0)
    budget = calibrate_budgets(demand)
    np.testing.assert_array_equal(budget.caller_order(), [2.0, 2.0, 2.0])
    baseline = CoordinateBudget(np.full(3, 2.0), np.arange(3))
    assert predicted_mse_shape(budget, 150) == predicted_mse_shape(baseline,
                                                                   150)
    cfg = MeanExperimentConfig(delta=(2.0, 2.0, 2.0), epsilon=2.0,
                               q_grid=(0.5,), n=150, trials=40, zeta=1.0)
    raw, _ = run_mean_experiment(cfg, seed=3)
    bcdp_mse = [r[3] for r in raw if r[1] == "bcdp"]
    unif_mse = [r[3] for r in raw if r[1] == "uniform"]
    assert stats.mannwhitneyu(bcdp_mse, unif_mse).pvalue > 0.05


def test_mean_experiment_trials_extend_without_reshuffling():
    # substream keying means earlier trials keep their draws when the
    # trial count grows
    short = run_mean_experiment(small_mean_config(trials=2), seed=9)[0]
    long = run_mean_experiment(small_mean_config(trials=4), seed=9)[0]
    kept = [row for row in long if row[2] < 2]
    assert kept == short


def test_ols_experiment_shape_and_identity_gap():
    cfg = small_ols_config()
    raw, summary = run_ols_experiment(cfg, seed=11)
    assert len(raw) == len(cfg.n_grid) * 2 * cfg.trials
    assert len(summary) == len(cfg.n_grid) * 2
    # the identity arm reduces to exact ERM, so the solver accuracy
    # of 1 / n is the whole gap
    for n, mechanism, _, gap in raw:
        if mechanism == "identity":
            assert 0.0 <= gap <= 1.0 / n + 1e-6
    raw2, _ = run_ols_experiment(cfg, seed=11)
    assert raw == raw2


def test_write_experiment_files(tmp_path):
    cfg = small_mean_config()
    raw, summary = run_mean_experiment(cfg, seed=5)
    paths = write_experiment(str(tmp_path / "out"), "mean", cfg, 5, raw,
                             summary)
    with open(paths["raw"], newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["q", "mechanism", "trial", "mse"]
    assert len(rows) == len(raw) + 1
    # repr serialization roundtrips exactly
    assert float(rows[1][3]) == raw[0][3]
    with open(paths["summary"], newline="") as fh:
        srows = list(csv.reader(fh))
    assert srows[0] == ["q", "mechanism", "median", "p25", "p75"]
    manifest = json.loads(open(paths["manifest"]).read())
    assert manifest["kind"] == "mean" and manifest["seed"] == 5
    assert manifest["config"]["n"] == cfg.n
    with pytest.raises(ValueError):
        write_experiment(str(tmp_path / "bad"), "nope", cfg, 5, raw, summary)

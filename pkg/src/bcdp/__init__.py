"""Per-coordinate privacy budgets for locally private releases.

The pieces: calibrate per-coordinate budgets from demanded levels and
a prior dependence bound, release vectors through layered ball
channels, audit finite mechanisms exactly, and fit least squares from
privatized pairs.  Each module's docstring carries the details.
"""

from .audit import (AuditReport, DiscretePrior, FiniteMechanism, audit_pair,
                    compose_product, conditional_tv, exact_bcdp_levels,
                    exact_bdp_level, exact_cdp_levels, exact_ldp_level,
                    ht_tradeoff_check, masked_table_mechanism,
                    parity_mixture_mechanism, postprocess, product_prior,
                    read_kernel, read_prior, uniform_prior, write_kernel,
                    write_prior)
from .calibration import (CoordinateBudget, FeasibilityMatrix, PrivacyDemand,
                          calibrate_budgets, cdp_to_bcdp_bound,
                          two_level_mse_shape, feasibility_matrix)
from .harness import (MeanExperimentConfig, OlsExperimentConfig,
                      correlated_bernoulli_prior, derive_rng, load_config,
                      run_mean_experiment, run_ols_experiment,
                      sample_correlated_bernoulli, write_experiment,
                      zeta_value)
from .mean import (EstimateVector, LayeredReport, aggregate_mean,
                   layer_coordinate_incidence, m_mean_batch, m_mean_sample,
                   predicted_mse_shape)
from .mechanisms import (LdpChannelSpec, RandomizerSample, ball_channel_batch,
                         ball_channel_bound, ball_channel_sample, rr_kernel,
                         product_rr_mechanism)
from .regression import (FeasibleSet, OptResult, RegressionDataset,
                         SurrogateObjective, ball_least_squares,
                         empirical_risk, empirical_surrogate, opt,
                         privatize_pairs, run_private_ols,
                         surrogate_from_reports, surrogate_gradient)

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "DiscretePrior", "FiniteMechanism", "audit_pair",
    "compose_product", "conditional_tv", "exact_bcdp_levels",
    "exact_bdp_level", "exact_cdp_levels", "exact_ldp_level",
    "ht_tradeoff_check", "masked_table_mechanism",
    "parity_mixture_mechanism", "postprocess", "product_prior",
    "read_kernel", "read_prior", "uniform_prior", "write_kernel",
    "write_prior",
    "CoordinateBudget", "FeasibilityMatrix", "PrivacyDemand",
    "calibrate_budgets", "cdp_to_bcdp_bound", "two_level_mse_shape",
    "feasibility_matrix",
    "MeanExperimentConfig", "OlsExperimentConfig",
    "correlated_bernoulli_prior", "derive_rng", "load_config",
    "run_mean_experiment", "run_ols_experiment",
    "sample_correlated_bernoulli", "write_experiment", "zeta_value",
    "EstimateVector", "LayeredReport", "aggregate_mean",
    "layer_coordinate_incidence", "m_mean_batch", "m_mean_sample",
    "predicted_mse_shape",
    "LdpChannelSpec", "RandomizerSample", "ball_channel_batch",
    "ball_channel_bound", "ball_channel_sample", "rr_kernel",
    "product_rr_mechanism",
    "FeasibleSet", "OptResult", "RegressionDataset", "SurrogateObjective",
    "ball_least_squares", "empirical_risk", "empirical_surrogate", "opt",
    "privatize_pairs", "run_private_ols", "surrogate_from_reports",
    "surrogate_gradient",
    "__version__",
]

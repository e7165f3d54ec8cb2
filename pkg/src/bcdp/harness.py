"""Simulation harness for the mean and regression experiments.

Reproducibility works through keyed substreams: every (purpose, grid
index, trial) triple gets its own generator derived from the base seed
with ``numpy.random.SeedSequence`` spawn keys, so adding trials or
reordering the grid never shifts the randomness of existing cells.
Data streams draw the same number of variates regardless of the
mixing weight, so runs across a q grid see paired datasets.

Results are written as a raw CSV (one row per trial), a summary CSV
(quartiles per grid cell) and a JSON manifest recording the exact
configuration.  Floats are serialized with ``repr``, which roundtrips
exactly, so equal runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .audit import DiscretePrior
from .calibration import CoordinateBudget, PrivacyDemand, calibrate_budgets
from .mean import aggregate_mean, m_mean_batch
from .regression import (FeasibleSet, RegressionDataset, ball_least_squares,
                         empirical_surrogate, opt, privatize_pairs,
                         surrogate_from_reports)

__all__ = [
    "MeanExperimentConfig",
    "OlsExperimentConfig",
    "load_config",
    "correlated_bernoulli_prior",
    "sample_correlated_bernoulli",
    "zeta_value",
    "derive_rng",
    "run_mean_experiment",
    "run_ols_experiment",
    "write_experiment",
    "RAW_MEAN_HEADER",
    "RAW_OLS_HEADER",
    "SUMMARY_MEAN_HEADER",
    "SUMMARY_OLS_HEADER",
]

# substream purposes; part of the on-disk reproducibility contract
_STREAM_DATA = 0
_STREAM_CALIBRATED = 1
_STREAM_UNIFORM = 2
_STREAM_PRIVATE = 3
_STREAM_IDENTITY = 4

RAW_MEAN_HEADER = ("q", "mechanism", "trial", "mse")
SUMMARY_MEAN_HEADER = ("q", "mechanism", "median", "p25", "p75")
RAW_OLS_HEADER = ("n", "mechanism", "trial", "excess_risk")
SUMMARY_OLS_HEADER = ("n", "mechanism", "median", "p25", "p75")


def derive_rng(seed: int, *key) -> np.random.Generator:
    """Generator for one keyed substream of the base seed."""
    spawn = tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(int(seed),
                                                        spawn_key=spawn))


def zeta_value(q: float, policy) -> float:
    """Resolve a zeta policy: a number, or 'heuristic' for (1 + q) / 2."""
    if policy == "heuristic":
        return (1.0 + float(q)) / 2.0
    z = float(policy)
    if not (0.0 < z <= 1.0):
        raise ValueError("zeta must lie in (0, 1]")
    return z


def correlated_bernoulli_prior(d: int, q: float) -> DiscretePrior:
    """Corner mixture over {0, 1}^d with coupling weight q.

    With probability 1 - q the vector is uniform, with probability q
    all coordinates equal one shared fair bit.  Every conditional
    total variation of this prior equals q, so q is simultaneously the
    mixing weight and the dependence level the calibrator consumes.
    """
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError("d must be a positive integer")
    q = float(q)
    if not (0.0 <= q <= 1.0):
        raise ValueError("q must lie in [0, 1]")
    n = 2 ** d
    pmf = np.full(n, (1.0 - q) / n)
    pmf[0] += q / 2.0
    pmf[-1] += q / 2.0
    domains = tuple((0, 1) for _ in range(d))
    return DiscretePrior(domains, pmf)


def sample_correlated_bernoulli(n: int, d: int, q: float,
                                rng: np.random.Generator) -> np.ndarray:
    """Draw n sign vectors from the corner mixture, coded as +-1.

    The three variate blocks (mixture mask, shared bit, independent
    bits) are drawn unconditionally, so the stream position after a
    call does not depend on q and paired runs across a q grid reuse
    the same underlying uniforms.
    """
    if not (0.0 <= q <= 1.0):
        raise ValueError("q must lie in [0, 1]")
    coupled = rng.random(n) < q
    shared = rng.integers(0, 2, size=n)
    independent = rng.integers(0, 2, size=(n, d))
    bits = np.where(coupled[:, None], shared[:, None], independent)
    return 2.0 * bits - 1.0


def _require_keys(mapping, cls):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")


@dataclass(frozen=True)
class MeanExperimentConfig:
    """Grid over the prior coupling q for the mean estimation study."""

    delta: tuple
    epsilon: float
    q_grid: tuple
    n: int
    trials: int
    zeta: object = "heuristic"
    iid_data: bool = False

    def __post_init__(self):
        delta = tuple(float(v) for v in self.delta)
        if not delta or any(not (v > 0) for v in delta):
            raise ValueError("delta entries must be positive")
        eps = float(self.epsilon)
        if not (math.isfinite(eps) and eps > 0):
            raise ValueError("epsilon must be finite and positive")
        q_grid = tuple(float(v) for v in self.q_grid)
        if not q_grid or any(not (0.0 <= v <= 1.0) for v in q_grid):
            raise ValueError("q_grid entries must lie in [0, 1]")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not isinstance(self.trials, (int, np.integer)) or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if not isinstance(self.iid_data, bool):
            raise ValueError("iid_data must be a boolean")
        zeta_value(q_grid[0], self.zeta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "q_grid", q_grid)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "trials", int(self.trials))

    @property
    def dim(self) -> int:
        return len(self.delta)

    @classmethod
    def from_mapping(cls, mapping) -> "MeanExperimentConfig":
        _require_keys(mapping, cls)
        try:
            return cls(
                delta=mapping["delta"],
                epsilon=mapping["epsilon"],
                q_grid=mapping["q_grid"],
                n=mapping["n"],
                trials=mapping["trials"],
                zeta=mapping.get("zeta", "heuristic"),
                iid_data=mapping.get("iid_data", False),
            )
        except KeyError as exc:
            raise ValueError(f"missing config key: {exc.args[0]}") from None


@dataclass(frozen=True)
class OlsExperimentConfig:
    """Grid over the sample size n for the private regression study."""

    delta: tuple
    epsilon: float
    q: float
    theta_star: tuple
    n_grid: tuple
    trials: int
    zeta: object = "heuristic"
    radius: float = 1.0
    accuracy: object = None
    noise: float = 0.0
    design: str = "rademacher"

    def __post_init__(self):
        delta = tuple(float(v) for v in self.delta)
        if len(delta) < 2 or any(not (v > 0) for v in delta):
            raise ValueError("delta needs positive entries for features "
                             "plus label")
        eps = float(self.epsilon)
        if not (math.isfinite(eps) and eps > 0):
            raise ValueError("epsilon must be finite and positive")
        q = float(self.q)
        if not (0.0 <= q <= 1.0):
            raise ValueError("q must lie in [0, 1]")
        theta = tuple(float(v) for v in self.theta_star)
        if len(theta) != len(delta) - 1:
            raise ValueError("theta_star must have one entry per feature")
        noise = float(self.noise)
        if not (0.0 <= noise <= 1.0):
            raise ValueError("noise must lie in [0, 1]")
        n_grid = tuple(int(v) for v in self.n_grid)
        if not n_grid or any(v < 1 for v in n_grid):
            raise ValueError("n_grid entries must be positive integers")
        if not isinstance(self.trials, (int, np.integer)) or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        radius = float(self.radius)
        if not (math.isfinite(radius) and radius > 0):
            raise ValueError("radius must be finite and positive")
        if math.sqrt(sum(v * v for v in theta)) > radius + 1e-12:
            raise ValueError("theta_star must lie in the feasible ball")
        accuracy = self.accuracy
        if accuracy is not None:
            accuracy = float(accuracy)
            if not (math.isfinite(accuracy) and accuracy > 0):
                raise ValueError("accuracy must be finite and positive")
        if self.design not in ("rademacher", "uniform"):
            raise ValueError("design must be 'rademacher' or 'uniform'")
        zeta_value(q, self.zeta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "n_grid", n_grid)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "accuracy", accuracy)
        object.__setattr__(self, "noise", noise)

    @property
    def p(self) -> int:
        return len(self.theta_star)

    @classmethod
    def from_mapping(cls, mapping) -> "OlsExperimentConfig":
        _require_keys(mapping, cls)
        try:
            return cls(
                delta=mapping["delta"],
                epsilon=mapping["epsilon"],
                q=mapping["q"],
                theta_star=mapping["theta_star"],
                n_grid=mapping["n_grid"],
                trials=mapping["trials"],
                zeta=mapping.get("zeta", "heuristic"),
                radius=mapping.get("radius", 1.0),
                accuracy=mapping.get("accuracy"),
                noise=mapping.get("noise", 0.0),
                design=mapping.get("design", "rademacher"),
            )
        except KeyError as exc:
            raise ValueError(f"missing config key: {exc.args[0]}") from None


def load_config(path) -> dict:
    """Parse a TOML experiment configuration into a plain mapping."""
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def run_mean_experiment(config: MeanExperimentConfig, seed: int):
    """Mean estimation across the q grid, calibrated against uniform.

    For every grid value the calibrated mechanism spends the budgets
    of ``calibrate_budgets`` and the uniform baseline spends the single
    strictest demand min(delta_min, epsilon) on every coordinate,
    which is the budget a coordinate-blind release must take.  Both
    see the same data per trial.  With ``iid_data`` the users are
    drawn independent of q (the calibration still trusts the
    configured coupling); unbiased channels make the error profile
    weight-driven, so both data modes probe the same comparison.
    Returns (raw_rows, summary_rows) with the total squared error of
    the aggregated estimate per trial.
    """
    d = config.dim
    uniform_level = min(min(config.delta), config.epsilon)
    uniform_budget = CoordinateBudget(np.full(d, uniform_level), np.arange(d))
    raw_rows = []
    results = {}
    for qi, q in enumerate(config.q_grid):
        demand = PrivacyDemand(epsilon=config.epsilon,
                               delta=np.array(config.delta), q=q,
                               zeta=zeta_value(q, config.zeta))
        budget = calibrate_budgets(demand)
        for mechanism in ("bcdp", "uniform"):
            results[(qi, mechanism)] = []
        data_q = 0.0 if config.iid_data else None
        for trial in range(config.trials):
            data_rng = derive_rng(seed, _STREAM_DATA, qi, trial)
            X = sample_correlated_bernoulli(
                config.n, d, q if data_q is None else data_q, data_rng)
            for mechanism, mech_budget, stream in (
                    ("bcdp", budget, _STREAM_CALIBRATED),
                    ("uniform", uniform_budget, _STREAM_UNIFORM)):
                rng = derive_rng(seed, stream, qi, trial)
                nu, weights = m_mean_batch(X, mech_budget, rng)
                estimate = aggregate_mean(nu, weights)
                mse = float((estimate.mean_hat ** 2).sum())
                raw_rows.append((q, mechanism, trial, mse))
                results[(qi, mechanism)].append(mse)
    summary_rows = []
    for qi, q in enumerate(config.q_grid):
        for mechanism in ("bcdp", "uniform"):
            med, lo, hi = np.percentile(results[(qi, mechanism)], [50, 25, 75])
            summary_rows.append((q, mechanism, float(med), float(lo),
                                 float(hi)))
    return raw_rows, summary_rows


def run_ols_experiment(config: OlsExperimentConfig, seed: int):
    """Private regression across the n grid, with an identity control.

    Each trial draws one population of max(n_grid) users, privatizes
    it once, and evaluates every grid point on the leading n rows.
    The per-point marginals are untouched by this nesting (rows are
    independent and identically distributed either way), while the
    common randomness makes the learning curve comparable across n,
    the usual common-random-numbers design for scaling studies.

    The private arm runs the calibrated two-copy pipeline; the
    identity arm runs the same optimizer on the raw rows, isolating
    the privatization cost from the optimization cost.  Labels are
    the clamped linear response plus optional uniform noise.  The
    solver accuracy follows the 1 / n rule unless the config
    overrides it.  Rows carry the excess empirical risk against the
    exact ball minimizer.  Returns (raw_rows, summary_rows).
    """
    theta_star = np.array(config.theta_star)
    p = config.p
    demand = PrivacyDemand(epsilon=config.epsilon,
                           delta=np.array(config.delta), q=config.q,
                           zeta=zeta_value(config.q, config.zeta))
    budget = calibrate_budgets(demand)
    feasible = FeasibleSet(radius=config.radius, dim=p)
    n_max = max(config.n_grid)
    raw_rows = []
    results = {}
    for ni, mechanism in ((ni, m) for ni in range(len(config.n_grid))
                          for m in ("private", "identity")):
        results[(ni, mechanism)] = []
    for trial in range(config.trials):
        data_rng = derive_rng(seed, _STREAM_DATA, trial)
        if config.design == "rademacher":
            features = 2.0 * data_rng.integers(0, 2, size=(n_max, p)) - 1.0
        else:
            features = data_rng.uniform(-1.0, 1.0, size=(n_max, p))
        labels = np.clip(
            features @ theta_star
            + config.noise * data_rng.uniform(-1.0, 1.0, size=n_max),
            -1.0, 1.0)
        dataset = RegressionDataset(features, labels)
        private_rng = derive_rng(seed, _STREAM_PRIVATE, trial)
        copies = {"private": privatize_pairs(dataset, budget, private_rng),
                  "identity": privatize_pairs(dataset, budget, private_rng,
                                              identity=True)}
        for ni, n in enumerate(config.n_grid):
            accuracy = (config.accuracy if config.accuracy is not None
                        else 1.0 / n)
            head = RegressionDataset(features[:n], labels[:n])
            empirical = empirical_surrogate(head)
            best = ball_least_squares(empirical.quad, empirical.lin,
                                      feasible.radius)
            floor = empirical.value(best)
            for mechanism in ("private", "identity"):
                copy1, copy2 = copies[mechanism]
                objective = surrogate_from_reports(copy1[:n], copy2[:n])
                result = opt(objective, feasible, accuracy)
                gap = float(empirical.value(result.theta) - floor)
                results[(ni, mechanism)].append(gap)
    for ni, n in enumerate(config.n_grid):
        for mechanism in ("private", "identity"):
            for trial, gap in enumerate(results[(ni, mechanism)]):
                raw_rows.append((n, mechanism, trial, gap))
    summary_rows = []
    for ni, n in enumerate(config.n_grid):
        for mechanism in ("private", "identity"):
            med, lo, hi = np.percentile(results[(ni, mechanism)], [50, 25, 75])
            summary_rows.append((n, mechanism, float(med), float(lo),
                                 float(hi)))
    return raw_rows, summary_rows


def _csv_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])


def write_experiment(out_prefix: str, kind: str, config, seed: int,
                     raw_rows, summary_rows) -> dict:
    """Write raw and summary CSVs plus a manifest next to them.

    Returns a mapping of the three file paths.  ``kind`` selects the
    column headers ('mean' or 'ols').
    """
    if kind == "mean":
        raw_header, summary_header = RAW_MEAN_HEADER, SUMMARY_MEAN_HEADER
    elif kind == "ols":
        raw_header, summary_header = RAW_OLS_HEADER, SUMMARY_OLS_HEADER
    else:
        raise ValueError("kind must be 'mean' or 'ols'")
    paths = {
        "raw": f"{out_prefix}.raw.csv",
        "summary": f"{out_prefix}.summary.csv",
        "manifest": f"{out_prefix}.manifest.json",
    }
    _write_rows(paths["raw"], raw_header, raw_rows)
    _write_rows(paths["summary"], summary_header, summary_rows)
    manifest = {
        "kind": kind,
        "seed": int(seed),
        "config": dataclasses.asdict(config),
        "outputs": {"raw": paths["raw"], "summary": paths["summary"]},
    }
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths

"""Locally private mean estimation with per-coordinate budgets.

One user's vector in [-1, 1]^d is released through a stack of ball
channels.  With the budgets sorted ascending, the k-th layer (1-based
rank k) spends the increment a_k = c_k - c_{k-1} on the suffix of
coordinates whose budget is at least c_k, viewed inside the ball of
radius sqrt(d - k + 1).  Layers with zero increment are skipped.  The
total spend on the coordinate of rank i is the sum of increments up to
i, which telescopes back to c_i, so the stacked release meets the
per-coordinate budgets by composition.

Every layer is unbiased for the suffix it covers.  A coordinate
estimator averages the layers covering it with inverse variance style
weights w_k = a_k^2 / (d - k + 1), the small-increment rate of the
channel.  Coordinates covered by no layer (budget exactly zero) are
estimated as 0 with infinite predicted variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import CoordinateBudget
from .mechanisms import LdpChannelSpec, ball_channel_batch

__all__ = [
    "LayeredReport",
    "EstimateVector",
    "m_mean_sample",
    "m_mean_batch",
    "aggregate_mean",
    "predicted_mse_shape",
    "layer_coordinate_incidence",
]


@dataclass(frozen=True)
class LayeredReport:
    """One user's layered release.

    ``nu_hat`` and ``weight_totals`` are in caller coordinate order.
    ``layer_weights`` holds the weight of each rank's layer in sorted
    (internal) order, zero where the increment was zero.  When layers
    were kept, ``layers`` is a tuple of (start_rank, alpha, output)
    triples; each output covers internal ranks start_rank..d-1.
    """

    nu_hat: np.ndarray
    weight_totals: np.ndarray
    layer_weights: np.ndarray
    layers: tuple = None

    def __post_init__(self):
        nu = np.asarray(self.nu_hat, dtype=float)
        wt = np.asarray(self.weight_totals, dtype=float)
        lw = np.asarray(self.layer_weights, dtype=float)
        if nu.ndim != 1 or wt.shape != nu.shape or lw.shape != nu.shape:
            raise ValueError("report fields must be 1-d of equal length")
        object.__setattr__(self, "nu_hat", nu)
        object.__setattr__(self, "weight_totals", wt)
        object.__setattr__(self, "layer_weights", lw)

    @property
    def dim(self) -> int:
        return self.nu_hat.size


@dataclass(frozen=True)
class EstimateVector:
    """Aggregated mean estimate with its predicted per-coordinate variance."""

    mean_hat: np.ndarray
    variance_pred: np.ndarray
    n: int

    @property
    def dim(self) -> int:
        return self.mean_hat.size


def _layer_plan(c: np.ndarray):
    """Active layers of a sorted budget: (start_rank, alpha, weight, dim)."""
    d = c.size
    increments = np.diff(c, prepend=0.0)
    plan = []
    for k in range(d):
        a = float(increments[k])
        if a > 0.0:
            cover = d - k
            plan.append((k, a, a * a / cover, cover))
    return plan


def _check_inputs(X: np.ndarray, budget: CoordinateBudget) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("need a (n, d) array with n >= 1")
    if X.shape[1] != budget.dim:
        raise ValueError(
            f"data has {X.shape[1]} coordinates, budget has {budget.dim}")
    if not np.isfinite(X).all() or np.abs(X).max() > 1.0 + 1e-12:
        raise ValueError("entries must lie in [-1, 1]")
    return X


def _run_layers(Xi: np.ndarray, c: np.ndarray, rng, keep: bool):
    """Release every active layer for pre-sorted rows Xi (internal order)."""
    n, d = Xi.shape
    numerator = np.zeros((n, d))
    weight_totals = np.zeros(d)
    layer_weights = np.zeros(d)
    kept = []
    for start, alpha, weight, cover in _layer_plan(c):
        spec = LdpChannelSpec(alpha=alpha, dim=cover, radius=math.sqrt(cover))
        y = ball_channel_batch(Xi[:, start:], spec, rng)
        numerator[:, start:] += weight * y
        weight_totals[start:] += weight
        layer_weights[start] = weight
        if keep:
            kept.append((start, alpha, y))
    covered = weight_totals > 0
    nu = np.where(covered,
                  numerator / np.where(covered, weight_totals, 1.0), 0.0)
    return nu, weight_totals, layer_weights, kept


def m_mean_sample(x, budget: CoordinateBudget, rng,
                  keep_layers: bool = False) -> LayeredReport:
    """Release one user's vector through the layered mechanism.

    ``x`` lives in [-1, 1]^d in caller coordinate order; the budget's
    permutation decides the layering.  The returned estimate is
    unbiased for x on every coordinate with positive budget and is not
    projected back into the cube.
    """
    X = _check_inputs(np.asarray(x, dtype=float)[None, :], budget)
    nu, weight_totals, layer_weights, kept = _run_layers(
        X[:, budget.perm], budget.c, rng, keep_layers)
    nu_caller = np.empty(budget.dim)
    nu_caller[budget.perm] = nu[0]
    wt_caller = np.empty(budget.dim)
    wt_caller[budget.perm] = weight_totals
    return LayeredReport(
        nu_hat=nu_caller,
        weight_totals=wt_caller,
        layer_weights=layer_weights,
        layers=tuple((s, a, y[0]) for s, a, y in kept) if keep_layers else None,
    )


def m_mean_batch(X, budget: CoordinateBudget, rng):
    """Release many users at once.

    Returns ``(nu, weight_totals)`` where ``nu`` is (n, d) in caller
    order and ``weight_totals`` the shared per-coordinate weight mass.
    Layers are sampled one batch at a time, so the stream consumption
    differs from n separate calls to ``m_mean_sample``.
    """
    X = _check_inputs(X, budget)
    nu, weight_totals, _, _ = _run_layers(
        X[:, budget.perm], budget.c, rng, keep=False)
    nu_caller = np.empty_like(nu)
    nu_caller[:, budget.perm] = nu
    wt_caller = np.empty(budget.dim)
    wt_caller[budget.perm] = weight_totals
    return nu_caller, wt_caller


def aggregate_mean(reports, weights=None) -> EstimateVector:
    """Average per-user estimates into a population mean estimate.

    Accepts either a list of ``LayeredReport`` or an (n, d) array of
    per-user estimates together with their per-coordinate weight
    totals.  The averaged estimate is clamped into [-1, 1]; the
    predicted variance of coordinate i is 1 / (n * W_i), infinite on
    coordinates no layer covered.
    """
    if isinstance(reports, np.ndarray) or weights is not None:
        nu = np.asarray(reports, dtype=float)
        if weights is None:
            raise ValueError("array form needs the weight totals")
        W = np.asarray(weights, dtype=float)
        if W.ndim == 2:
            W = W.mean(axis=0)
    else:
        reports = list(reports)
        if not reports:
            raise ValueError("need at least one report")
        nu = np.stack([r.nu_hat for r in reports])
        W = np.stack([r.weight_totals for r in reports]).mean(axis=0)
    if nu.ndim != 2 or W.shape != (nu.shape[1],):
        raise ValueError("estimates and weights do not line up")
    n = nu.shape[0]
    mean_hat = np.clip(nu.mean(axis=0), -1.0, 1.0)
    with np.errstate(divide="ignore"):
        variance_pred = np.where(W > 0, 1.0 / (n * np.where(W > 0, W, 1.0)),
                                 math.inf)
    return EstimateVector(mean_hat=mean_hat, variance_pred=variance_pred, n=n)


def predicted_mse_shape(budget, n: int) -> float:
    """Predicted total mean squared error of the layered estimator.

    Sums min(1 / W_i, d) / n over coordinates, where W_i is the weight
    mass covering the coordinate of rank i.  The cap at d reflects
    falling back to the zero estimate instead of an arbitrarily noisy
    coordinate.
    """
    if isinstance(budget, CoordinateBudget):
        c = budget.c
    else:
        c = np.asarray(budget, dtype=float)
        if c.ndim != 1 or c.size == 0 or not np.isfinite(c).all():
            raise ValueError("budget must be a finite 1-d array")
        if (c < 0).any() or (np.diff(c) < 0).any():
            raise ValueError("budget must be nonnegative and nondecreasing")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer")
    d = c.size
    W = np.zeros(d)
    for start, _, weight, _ in _layer_plan(c):
        W[start:] += weight
    with np.errstate(divide="ignore"):
        per_coord = np.where(W > 0, 1.0 / np.where(W > 0, W, 1.0), math.inf)
    return float(np.minimum(per_coord, d).sum() / n)


def layer_coordinate_incidence(d: int) -> np.ndarray:
    """Boolean (d, d) matrix: layer of rank k covers coordinate rank i >= k."""
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError("d must be a positive integer")
    return np.triu(np.ones((d, d), dtype=bool))

"""Least squares from locally privatized feature-label pairs.

Each user holds a row (x, l) with entries in [-1, 1].  Two independent
privatized copies of the packed row are released, each spending half
of the per-coordinate budget, and the quadratic surrogate

    f(theta) = 0.5 * theta' A theta - b' theta

is built from cross terms of the two copies: A averages outer products
of copy-one features with copy-two features, b averages copy-two
features times copy-one labels.  Independence of the copies makes A
and b unbiased for the population second moments, so the surrogate
gradient is unbiased for the gradient of the population least squares
risk (up to the constant term, which no optimizer sees).

Noise can make A indefinite, so the minimizer over a ball is found by
projected gradient descent on the surrogate; an exact trust-region
style solver is provided for diagnostics and small problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import PrivacyDemand, calibrate_budgets
from .mean import m_mean_batch

__all__ = [
    "RegressionDataset",
    "FeasibleSet",
    "SurrogateObjective",
    "OptResult",
    "privatize_pairs",
    "surrogate_from_reports",
    "empirical_surrogate",
    "surrogate_gradient",
    "opt",
    "ball_least_squares",
    "empirical_risk",
    "run_private_ols",
]


@dataclass(frozen=True)
class RegressionDataset:
    """Bounded feature rows and labels, one user per row."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("features must be a nonempty (n, p) array")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must be one per feature row")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def packed(self) -> np.ndarray:
        """Rows (x_i, l_i), the shape the privatizer releases."""
        return np.column_stack([self.features, self.labels])


@dataclass(frozen=True)
class FeasibleSet:
    """Euclidean ball of parameter vectors."""

    radius: float
    dim: int

    def __post_init__(self):
        r = float(self.radius)
        if not (math.isfinite(r) and r > 0):
            raise ValueError("radius must be finite and positive")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ValueError("dim must be a positive integer")
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "dim", int(self.dim))

    def project(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        norm = float(np.linalg.norm(theta))
        if norm <= self.radius:
            return theta.copy()
        return theta * (self.radius / norm)


@dataclass(frozen=True)
class SurrogateObjective:
    """Quadratic 0.5 * theta' quad theta - lin' theta."""

    quad: np.ndarray
    lin: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.quad, dtype=float)
        b = np.asarray(self.lin, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise ValueError("quad must be square and lin must match it")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("surrogate coefficients must be finite")
        object.__setattr__(self, "quad", A)
        object.__setattr__(self, "lin", b)

    @property
    def dim(self) -> int:
        return self.lin.size

    def sym(self) -> np.ndarray:
        return 0.5 * (self.quad + self.quad.T)

    def value(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(0.5 * theta @ self.quad @ theta - self.lin @ theta)

    def gradient(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return self.sym() @ theta - self.lin


@dataclass(frozen=True)
class OptResult:
    """Outcome of the projected gradient run."""

    theta: np.ndarray
    converged: bool
    iterations: int
    value: float
    min_eig: float


def privatize_pairs(dataset: RegressionDataset, budget, rng,
                    identity: bool = False):
    """Release two independent privatized copies of the packed rows.

    Each copy runs the layered mean mechanism at half the given
    budget, so the pair of releases together meets the full budget.
    ``identity=True`` skips privatization and returns the raw rows
    twice, for calibration-free baselines.
    """
    packed = dataset.packed()
    if identity:
        return packed.copy(), packed.copy()
    if budget.dim != dataset.p + 1:
        raise ValueError("budget must cover the features plus the label")
    half = budget.scaled(0.5)
    copy1, _ = m_mean_batch(packed, half, rng)
    copy2, _ = m_mean_batch(packed, half, rng)
    return copy1, copy2


def surrogate_from_reports(copy1: np.ndarray,
                           copy2: np.ndarray) -> SurrogateObjective:
    """Build the quadratic surrogate from two privatized copies.

    Cross terms only: copy-one features against copy-two features for
    the quadratic part, copy-two features against copy-one labels for
    the linear part.  Same-copy products would carry squared noise
    bias, cross products do not.
    """
    copy1 = np.asarray(copy1, dtype=float)
    copy2 = np.asarray(copy2, dtype=float)
    if copy1.shape != copy2.shape or copy1.ndim != 2 or copy1.shape[1] < 2:
        raise ValueError("copies must share one (n, p + 1) shape")
    n = copy1.shape[0]
    x1, l1 = copy1[:, :-1], copy1[:, -1]
    x2 = copy2[:, :-1]
    quad = x1.T @ x2 / n
    lin = x2.T @ l1 / n
    return SurrogateObjective(quad=quad, lin=lin)


def empirical_surrogate(dataset: RegressionDataset) -> SurrogateObjective:
    """The surrogate built from the raw data.

    Equals half the mean squared residual minus a constant, so its
    ball minimizer is the empirical least squares solution.
    """
    X, y = dataset.features, dataset.labels
    return SurrogateObjective(quad=X.T @ X / dataset.n,
                              lin=X.T @ y / dataset.n)


def surrogate_gradient(objective: SurrogateObjective, theta) -> np.ndarray:
    """Gradient of the surrogate at theta."""
    return objective.gradient(theta)


def opt(objective: SurrogateObjective, feasible: FeasibleSet,
        accuracy: float, max_iter: int = None) -> OptResult:
    """Projected gradient descent on the surrogate over the ball.

    Stops when the gradient mapping norm ||theta - theta_next|| / step
    drops to ``accuracy``, or after ``max_iter`` steps (default
    ceil(10 / accuracy)).  The step is 1 / L with L a 10 percent
    inflation of the largest absolute eigenvalue of the symmetrized
    quadratic, which also yields the reported smallest eigenvalue.
    Returns the best iterate by surrogate value, which with the 1 / L
    step is the last one, since each step descends.
    """
    if objective.dim != feasible.dim:
        raise ValueError("objective and feasible set dimensions differ")
    if not (np.isfinite(accuracy) and accuracy > 0):
        raise ValueError("accuracy must be positive")
    H = objective.sym()
    eigs = np.linalg.eigvalsh(H)
    lipschitz = 1.1 * float(max(abs(eigs[0]), abs(eigs[-1])))
    if lipschitz == 0.0:
        lipschitz = 1.0
    step = 1.0 / lipschitz
    cap = int(max_iter) if max_iter is not None else math.ceil(10.0 / accuracy)
    if cap < 1:
        raise ValueError("iteration cap must be positive")
    theta = np.zeros(feasible.dim)
    best = theta
    best_value = objective.value(theta)
    converged = False
    iterations = 0
    for iterations in range(1, cap + 1):
        grad = H @ theta - objective.lin
        nxt = feasible.project(theta - step * grad)
        mapping = float(np.linalg.norm(theta - nxt)) / step
        theta = nxt
        value = objective.value(theta)
        if value < best_value:
            best, best_value = theta, value
        if mapping <= accuracy:
            converged = True
            break
    return OptResult(theta=best, converged=converged, iterations=iterations,
                     value=best_value, min_eig=float(eigs[0]))


def ball_least_squares(quad, lin, radius: float) -> np.ndarray:
    """Exact minimizer of the quadratic over the ball of given radius.

    Works for indefinite quadratics too (the surrogate can lose
    convexity to noise).  Eigendecompose the symmetrized quadratic and
    bisect on the shift mu >= max(0, -lambda_min) until the shifted
    solution lands on the sphere; if the limit at the smallest
    admissible shift is still inside, pad with the bottom eigenvector.
    """
    H = np.asarray(quad, dtype=float)
    H = 0.5 * (H + H.T)
    b = np.asarray(lin, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or b.shape != (H.shape[0],):
        raise ValueError("quad must be square and lin must match it")
    if not (math.isfinite(radius) and radius > 0):
        raise ValueError("radius must be finite and positive")
    lam, Q = np.linalg.eigh(H)
    beta = Q.T @ b

    def solution_norm(mu):
        return float(np.sqrt(((beta / (lam + mu)) ** 2).sum()))

    if lam[0] > 0 and solution_norm(0.0) <= radius:
        return Q @ (beta / lam)

    lo = max(0.0, -float(lam[0]))
    at_floor = lam + lo
    degenerate = np.abs(at_floor) <= 1e-14 * max(1.0, abs(float(lam[-1])))
    if (np.abs(beta[degenerate]) < 1e-13 * max(1.0, float(np.abs(beta).max(initial=0.0)))).all():
        coeff = np.where(degenerate, 0.0,
                         beta / np.where(degenerate, 1.0, at_floor))
        base = float(np.sqrt((coeff ** 2).sum()))
        if base <= radius and degenerate.any():
            pad = math.sqrt(max(radius * radius - base * base, 0.0))
            direction = Q[:, int(np.argmax(degenerate))]
            return Q @ coeff + pad * direction
    hi = lo + float(np.linalg.norm(beta)) / radius + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if solution_norm(mid) > radius:
            lo = mid
        else:
            hi = mid
    return Q @ (beta / (lam + hi))


def empirical_risk(theta, dataset: RegressionDataset) -> float:
    """Half the mean squared residual of theta on the dataset."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (dataset.p,):
        raise ValueError("theta must have one entry per feature")
    residual = dataset.features @ theta - dataset.labels
    return float(0.5 * np.mean(residual ** 2))


def run_private_ols(dataset: RegressionDataset, demand: PrivacyDemand,
                    feasible: FeasibleSet, rng, accuracy: float = None,
                    identity: bool = False, with_excess: bool = False):
    """Calibrate, privatize, optimize; the full private regression path.

    Returns ``(theta, diagnostics)``.  The solver accuracy defaults to
    1 / n.  Diagnostics carry the optimizer outcome and, when
    ``with_excess`` is set, the surrogate gap of theta against the
    exact empirical ball minimizer on the raw data.
    """
    if feasible.dim != dataset.p:
        raise ValueError("feasible set must match the feature count")
    if accuracy is None:
        accuracy = 1.0 / dataset.n
    budget = calibrate_budgets(demand)
    copy1, copy2 = privatize_pairs(dataset, budget, rng, identity=identity)
    objective = surrogate_from_reports(copy1, copy2)
    result = opt(objective, feasible, accuracy)
    diagnostics = {
        "converged": result.converged,
        "iterations": result.iterations,
        "value": result.value,
        "min_eig": result.min_eig,
    }
    if with_excess:
        empirical = empirical_surrogate(dataset)
        best = ball_least_squares(empirical.quad, empirical.lin,
                                  feasible.radius)
        diagnostics["excess_risk"] = (empirical.value(result.theta)
                                      - empirical.value(best))
    return result.theta, diagnostics

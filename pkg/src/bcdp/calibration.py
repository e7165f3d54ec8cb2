"""Per-coordinate privacy budget calibration.

A caller states a per-coordinate posterior-odds demand ``delta`` together
with a global local-DP ceiling ``epsilon`` and a prior-dependence level
``q`` (the largest total-variation distance between conditionals of the
remaining coordinates given two values of any single coordinate).  The
calibrator turns that demand into a nondecreasing vector of internal
budgets ``c`` for the layered mean mechanism, such that releasing layer
``k`` at incremental budget ``c_k - c_{k-1}`` keeps every coordinate
within its demanded posterior-odds bound.

All formulas are evaluated with ``log1p``/``expm1`` so that the q -> 0
and q -> 1 ends of the range stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PrivacyDemand",
    "CoordinateBudget",
    "FeasibilityMatrix",
    "calibrate_budgets",
    "cdp_to_bcdp_bound",
    "feasibility_matrix",
    "two_level_mse_shape",
]


@dataclass(frozen=True)
class PrivacyDemand:
    """A per-coordinate privacy demand.

    Parameters
    ----------
    epsilon : float
        Finite nonnegative ceiling on the local-DP level of the whole
        release.
    delta : array_like
        Per-coordinate posterior-odds bounds, entries in [0, inf].
        ``+inf`` means "no demand beyond epsilon" for that coordinate.
    q : float
        Prior dependence level in [0, 1].  ``q = 0`` models independent
        coordinates, ``q = 1`` is the fully correlated worst case.
    zeta : float
        Free split parameter in (0, 1] controlling how much of the most
        sensitive coordinate's budget is burned by the top layer.
    """

    epsilon: float
    delta: np.ndarray
    q: float
    zeta: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps < 0:
            raise ValueError("epsilon must be finite and nonnegative")
        delta = np.asarray(self.delta, dtype=float)
        if delta.ndim != 1 or delta.size == 0:
            raise ValueError("delta must be a nonempty 1-d vector")
        if np.isnan(delta).any() or (delta < 0).any():
            raise ValueError("delta entries must lie in [0, inf]")
        q = float(self.q)
        if not (0.0 <= q <= 1.0):
            raise ValueError("q must lie in [0, 1]")
        zeta = float(self.zeta)
        if not (0.0 < zeta <= 1.0):
            raise ValueError("zeta must lie in (0, 1]")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "zeta", zeta)

    @property
    def dim(self) -> int:
        return self.delta.size


@dataclass(frozen=True)
class CoordinateBudget:
    """Calibrated budgets in internal (sensitivity-ascending) order.

    ``c`` is nondecreasing.  ``perm`` maps internal positions to caller
    coordinate indices: internal position j holds caller coordinate
    ``perm[j]``.  Downstream mechanisms consume the internal order and
    return results in caller order.
    """

    c: np.ndarray
    perm: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        perm = np.asarray(self.perm, dtype=np.intp)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("c must be a nonempty 1-d vector")
        if perm.shape != c.shape or sorted(perm.tolist()) != list(range(c.size)):
            raise ValueError("perm must be a permutation of 0..d-1 matching c")
        if np.isnan(c).any() or (c < 0).any() or not np.isfinite(c).all():
            raise ValueError("budgets must be finite and nonnegative")
        if (np.diff(c) < 0).any():
            raise ValueError("budgets must be nondecreasing in internal order")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "perm", perm)

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def total(self) -> float:
        """Local-DP level of a full layered release under this budget."""
        return float(self.c[-1])

    def caller_order(self) -> np.ndarray:
        """Budgets rearranged back into the caller's coordinate order."""
        out = np.empty_like(self.c)
        out[self.perm] = self.c
        return out

    def scaled(self, factor: float) -> "CoordinateBudget":
        if not (0 < factor <= 1):
            raise ValueError("factor must lie in (0, 1]")
        return CoordinateBudget(self.c * factor, self.perm.copy())


def _top_budget(dt_low: float, dt_high: float, q: float, zeta: float) -> float:
    """Budget of the deepest layer.

    Returns min of the prior-dependence cap log((e^{zeta*dt_low}+q-1)/q)
    and the largest clamped demand ``dt_high``.  The comparison happens
    in expm1 space so the min is exact even when the two sides agree to
    the last ulp (q = 1 with zeta = 1 must return dt_high exactly).
    """
    a = zeta * dt_low
    if q == 0.0:
        # limit of the cap as q -> 0+: +inf when a > 0, else 0
        return dt_high if a > 0.0 else 0.0
    if q == 1.0:
        return min(a, dt_high)
    lhs = math.expm1(a) / q
    if lhs >= math.expm1(dt_high):
        return dt_high
    return math.log1p(lhs)


def calibrate_budgets(demand: PrivacyDemand) -> CoordinateBudget:
    """Calibrate internal layer budgets for a per-coordinate demand.

    The demand vector is stably sorted ascending; the returned budget is
    expressed in that internal order together with the sort permutation.
    Demands are first clamped at ``epsilon``.  The deepest budget is

        c_d = min{ log((e^{zeta*dt_1} + q - 1)/q), dt_d },

    and for i < d the budget is ``c_d`` whenever ``c_d <= dt_i``, else
    ``dt_i - log(1 + q e^{c_d} - q)``, where ``dt`` is the clamped
    sorted demand vector.  A zero demand anywhere collapses the whole
    vector to zero (the release then carries no information); this is
    legal, not an error.
    """
    if not isinstance(demand, PrivacyDemand):
        raise ValueError("demand must be a PrivacyDemand")
    delta, eps, q, zeta = demand.delta, demand.epsilon, demand.q, demand.zeta
    perm = np.argsort(delta, kind="stable")
    dt = np.minimum(delta[perm], eps)
    cd = _top_budget(float(dt[0]), float(dt[-1]), q, zeta)
    shrink = math.log1p(q * math.expm1(cd))
    c = np.where(cd <= dt, cd, dt - shrink)
    # the subtraction can land one ulp below zero when zeta == 1
    np.maximum(c, 0.0, out=c)
    return CoordinateBudget(c, perm)


def cdp_to_bcdp_bound(c, q, epsilon: float | None = None) -> np.ndarray:
    """Posterior-odds levels implied by per-coordinate DP levels.

    Given that a mechanism satisfies per-coordinate DP at levels ``c``
    and that the prior's dependence is bounded by ``q`` (scalar or one
    value per coordinate), coordinate i leaks at most

        c_i + log(1 + q_i (e^{sum_{j != i} c_j} - 1)).

    If the mechanism is additionally known to be ``epsilon``-LDP the
    bound strengthens to min of the above, ``c_i + log(1 + q_i (e^eps -
    1))`` and ``epsilon`` itself.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("c must be a nonempty 1-d vector")
    if np.isnan(c).any() or (c < 0).any() or not np.isfinite(c).all():
        raise ValueError("c entries must be finite and nonnegative")
    q = np.broadcast_to(np.asarray(q, dtype=float), c.shape)
    if np.isnan(q).any() or (q < 0).any() or (q > 1).any():
        raise ValueError("q entries must lie in [0, 1]")
    rest = c.sum() - c
    bound = c + np.log1p(q * np.expm1(rest))
    if epsilon is not None:
        eps = float(epsilon)
        if not math.isfinite(eps) or eps < 0:
            raise ValueError("epsilon must be finite and nonnegative")
        bound = np.minimum(bound, np.minimum(c + np.log1p(q * math.expm1(eps)), eps))
    return bound


@dataclass(frozen=True)
class FeasibilityMatrix:
    """Linear sufficient condition for a per-coordinate demand.

    Any nonnegative budget vector with ``matrix @ c <= 1`` componentwise
    satisfies the nonlinear posterior-odds constraint of
    :func:`cdp_to_bcdp_bound` at the demand this matrix was built from.
    """

    matrix: np.ndarray
    delta: np.ndarray
    q: np.ndarray

    def permits(self, c, slack: float = 0.0) -> bool:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.matrix.shape[0],):
            raise ValueError("c has the wrong length for this matrix")
        return bool(np.all(self.matrix @ c <= 1.0 + slack))


def feasibility_matrix(delta, q) -> FeasibilityMatrix:
    """Build the linear relaxation matrix for a demand.

    Row i has ``1/delta_i`` on the diagonal and ``1/log(1 + (e^{delta_i}
    - 1)/q_i)`` off the diagonal.  Demands must be finite and strictly
    positive and q entries strictly positive (the q = 0 case makes the
    off-diagonal constraint vacuous, use the exact bound instead).
    """
    delta = np.asarray(delta, dtype=float)
    if delta.ndim != 1 or delta.size == 0:
        raise ValueError("delta must be a nonempty 1-d vector")
    if not np.isfinite(delta).all() or (delta <= 0).any():
        raise ValueError("delta entries must be finite and strictly positive")
    q = np.broadcast_to(np.asarray(q, dtype=float), delta.shape).copy()
    if np.isnan(q).any() or (q <= 0).any() or (q > 1).any():
        raise ValueError("q entries must lie in (0, 1]")
    d = delta.size
    off = 1.0 / np.log1p(np.expm1(delta) / q)
    a = np.repeat(off[:, None], d, axis=1)
    np.fill_diagonal(a, 1.0 / delta)
    return FeasibilityMatrix(a, delta.copy(), q)


def two_level_mse_shape(d: int, k: int, delta: float, epsilon: float, q: float,
                   n: int) -> float:
    """Closed-form mean squared error shape for a two-level demand.

    The demand has k sensitive coordinates at level ``delta`` and d - k
    at ``epsilon > 2 delta``, calibrated with zeta = 1/2 over n users.
    Universal constants are dropped; the value is a test oracle for
    scaling behaviour, not an attained error.
    """
    if d < 1 or not (1 <= k <= d):
        raise ValueError("need 1 <= k <= d")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < delta) or not (epsilon > 2 * delta) or not math.isfinite(epsilon):
        raise ValueError("need 0 < delta and epsilon > 2*delta, both finite")
    if not (0.0 <= q <= 1.0):
        raise ValueError("q must lie in [0, 1]")
    head = d * k / delta**2
    if k == d:
        return head / n
    q_star = math.expm1(delta / 2) / math.expm1(epsilon)
    if q <= q_star:
        tail = (d - k) ** 2 / epsilon**2
    else:
        cd = math.log1p(math.expm1(delta / 2) / q)
        tail = (d - k) ** 2 / ((d - k) / d * delta**2 + (cd - delta / 2) ** 2)
    return (head + tail) / n

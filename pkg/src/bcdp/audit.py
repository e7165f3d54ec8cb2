"""Exact privacy auditing for finite mechanisms.

A mechanism over a finite product domain is a row-stochastic kernel; a
prior is a pmf over the same domain.  Everything here is computed by
exhaustive enumeration, so the reported levels are exact up to float
rounding, with +inf appearing whenever an output rules an input value
out (a positive probability against a zero one).  Ratios 0/0 are
skipped: outputs impossible under both hypotheses carry no evidence.

Level conventions, for a kernel K and prior pi:

* local DP level: max over outputs y and input pairs (x, x') of
  log(K[x, y]/K[x', y]).
* per-coordinate DP level i: the same max restricted to pairs that
  differ only in coordinate i.
* Bayesian level: the max restricted to inputs with positive prior
  mass.
* Bayesian per-coordinate level i: max over outputs and pairs of
  positive-mass values (s, s') of coordinate i of
  log(P(y | x_i = s)/P(y | x_i = s')), the conditionals taken under
  the prior.

Maxima over sets of values or sets of outputs reduce to the singleton
maxima reported here: a conditional given "x_i in S" is a convex
mixture of the singleton conditionals, and a set probability is a sum
of pointwise ones, so neither can exceed the singleton ratio.  The
test suite verifies this reduction by exhaustive subset enumeration on
small domains.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FiniteMechanism",
    "DiscretePrior",
    "AuditReport",
    "exact_ldp_level",
    "exact_cdp_levels",
    "exact_bdp_level",
    "exact_bcdp_levels",
    "conditional_tv",
    "ht_tradeoff_check",
    "compose_product",
    "postprocess",
    "audit_pair",
    "read_kernel",
    "write_kernel",
    "read_prior",
    "write_prior",
    "masked_table_mechanism",
    "parity_mixture_mechanism",
    "uniform_prior",
    "product_prior",
]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class FiniteMechanism:
    """A randomized map from a finite product domain to a finite set.

    ``coord_domains`` lists the labels of each input coordinate; the
    input points are their cartesian product in ``itertools.product``
    order (first coordinate slowest).  ``kernel[x, y]`` is the chance
    of releasing output ``output_labels[y]`` on the x-th input point.
    """

    coord_domains: tuple
    output_labels: tuple
    kernel: np.ndarray

    def __post_init__(self):
        domains = tuple(tuple(d) for d in self.coord_domains)
        if not domains or any(len(d) == 0 for d in domains):
            raise ValueError("every coordinate needs at least one label")
        outputs = tuple(self.output_labels)
        if len(outputs) == 0:
            raise ValueError("output label set must be nonempty")
        if len(set(outputs)) != len(outputs):
            raise ValueError("output labels must be distinct")
        kernel = np.asarray(self.kernel, dtype=float)
        n_in = int(np.prod([len(d) for d in domains]))
        if kernel.shape != (n_in, len(outputs)):
            raise ValueError(
                f"kernel shape {kernel.shape} does not match domain "
                f"({n_in} inputs, {len(outputs)} outputs)")
        if not np.isfinite(kernel).all() or (kernel < 0).any():
            raise ValueError("kernel entries must be finite and nonnegative")
        if np.max(np.abs(kernel.sum(axis=1) - 1.0)) > _ROW_SUM_TOL:
            raise ValueError("kernel rows must sum to one")
        object.__setattr__(self, "coord_domains", domains)
        object.__setattr__(self, "output_labels", outputs)
        object.__setattr__(self, "kernel", kernel)

    @property
    def dim(self) -> int:
        return len(self.coord_domains)

    @property
    def sizes(self) -> tuple:
        return tuple(len(d) for d in self.coord_domains)

    @property
    def n_inputs(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.kernel.shape[1]

    def input_points(self) -> list:
        return list(itertools.product(*self.coord_domains))


@dataclass(frozen=True)
class DiscretePrior:
    """A pmf over the same enumerated product domain as a mechanism."""

    coord_domains: tuple
    pmf: np.ndarray

    def __post_init__(self):
        domains = tuple(tuple(d) for d in self.coord_domains)
        if not domains or any(len(d) == 0 for d in domains):
            raise ValueError("every coordinate needs at least one label")
        pmf = np.asarray(self.pmf, dtype=float)
        n = int(np.prod([len(d) for d in domains]))
        if pmf.shape != (n,):
            raise ValueError(f"pmf must have shape ({n},), got {pmf.shape}")
        if not np.isfinite(pmf).all() or (pmf < 0).any():
            raise ValueError("pmf entries must be finite and nonnegative")
        if abs(pmf.sum() - 1.0) > _ROW_SUM_TOL:
            raise ValueError("pmf must sum to one")
        object.__setattr__(self, "coord_domains", domains)
        object.__setattr__(self, "pmf", pmf)

    @property
    def dim(self) -> int:
        return len(self.coord_domains)

    @property
    def sizes(self) -> tuple:
        return tuple(len(d) for d in self.coord_domains)

    def marginal(self, i: int) -> np.ndarray:
        """Marginal mass of each value of coordinate i."""
        grid = self.pmf.reshape(self.sizes)
        axes = tuple(a for a in range(self.dim) if a != i)
        return grid.sum(axis=axes) if axes else grid


@dataclass(frozen=True)
class AuditReport:
    """All exact levels of one mechanism-prior pair."""

    ldp: float
    cdp: np.ndarray
    bdp: float
    bcdp: np.ndarray
    tv: np.ndarray


def _check_pair(mech: FiniteMechanism, prior: DiscretePrior):
    if mech.coord_domains != prior.coord_domains:
        raise ValueError("mechanism and prior live on different domains")


def _max_log_ratio(rows: np.ndarray) -> float:
    """Largest log(p/p') over entries of each column, extended reals.

    ``rows`` stacks candidate distributions; within each column, a
    positive entry against a zero one yields +inf, columns that are
    identically zero are skipped, and otherwise the column contributes
    log(max) - log(min).  With fewer than two rows the level is 0.
    """
    rows = np.atleast_2d(rows)
    if rows.shape[0] < 2:
        return 0.0
    pos = rows > 0
    any_pos = pos.any(axis=0)
    if not any_pos.any():
        return 0.0
    if (any_pos & (~pos).any(axis=0)).any():
        return math.inf
    live = rows[:, any_pos]
    return float(np.max(np.log(live.max(axis=0)) - np.log(live.min(axis=0))))


def exact_ldp_level(mech: FiniteMechanism) -> float:
    """Exact local-DP level of a finite mechanism (prior-free)."""
    return _max_log_ratio(mech.kernel)


def exact_cdp_levels(mech: FiniteMechanism) -> np.ndarray:
    """Exact per-coordinate DP level for each input coordinate.

    Coordinate i ranges over all pairs of inputs that agree everywhere
    except coordinate i.
    """
    sizes = mech.sizes
    m = mech.n_outputs
    levels = np.zeros(mech.dim)
    grid = mech.kernel.reshape(sizes + (m,))
    for i in range(mech.dim):
        stack = np.moveaxis(grid, i, 0).reshape(sizes[i], -1)
        levels[i] = _max_log_ratio(stack)
    return levels


def _coordinate_conditionals(mech: FiniteMechanism, prior: DiscretePrior,
                             i: int):
    """Output laws P(y | x_i = s) for the positive-mass values s.

    Returns (value positions, conditional rows) with one row per
    positive-mass value of coordinate i.
    """
    sizes = mech.sizes
    m = mech.n_outputs
    joint = (prior.pmf[:, None] * mech.kernel).reshape(sizes + (m,))
    by_value = np.moveaxis(joint, i, 0).reshape(sizes[i], -1, m).sum(axis=1)
    mass = prior.marginal(i)
    keep = np.flatnonzero(mass > 0)
    return keep, by_value[keep] / mass[keep, None]


def exact_bcdp_levels(mech: FiniteMechanism, prior: DiscretePrior) -> np.ndarray:
    """Exact Bayesian per-coordinate level for each coordinate.

    Values of zero prior mass are excluded; a coordinate that is almost
    surely constant under the prior audits to level 0.
    """
    _check_pair(mech, prior)
    levels = np.zeros(mech.dim)
    for i in range(mech.dim):
        _, conds = _coordinate_conditionals(mech, prior, i)
        levels[i] = _max_log_ratio(conds)
    return levels


def exact_bdp_level(mech: FiniteMechanism, prior: DiscretePrior) -> float:
    """Exact Bayesian DP level: the local-DP max over positive-mass atoms."""
    _check_pair(mech, prior)
    return _max_log_ratio(mech.kernel[prior.pmf > 0])


def conditional_tv(prior: DiscretePrior, i: int) -> float:
    """Dependence of the rest of the vector on coordinate i.

    The largest total-variation distance between the conditional laws
    of x_{-i} given two positive-mass values of x_i.  Singleton values
    suffice: conditioning on a set of values mixes the singleton
    conditionals, which cannot increase the distance.
    """
    if not (0 <= i < prior.dim):
        raise ValueError("coordinate index out of range")
    grid = np.moveaxis(prior.pmf.reshape(prior.sizes), i, 0)
    rows = grid.reshape(prior.sizes[i], -1)
    mass = rows.sum(axis=1)
    live = rows[mass > 0] / mass[mass > 0, None]
    if live.shape[0] < 2:
        return 0.0
    best = 0.0
    for a in range(live.shape[0]):
        for b in range(a + 1, live.shape[0]):
            best = max(best, 0.5 * float(np.abs(live[a] - live[b]).sum()))
    return best


def ht_tradeoff_check(mech: FiniteMechanism, prior: DiscretePrior, delta):
    """Hypothesis-testing certificate for a vector of claimed levels.

    Checks, for every coordinate i, every ordered pair of positive-mass
    values (s, s') and every output y, that P(y | x_i = s') <=
    e^{delta_i} P(y | x_i = s).  This pointwise singleton condition is
    equivalent to e^{delta_i} * alpha + beta >= 1 for every rejection
    region and every pair of value sets, because region probabilities
    are sums of pointwise ones and set conditionals are mixtures.

    Returns ``(True, None)`` if the claim holds, else ``(False,
    witness)`` where the witness is a dict naming the coordinate, the
    value pair, the output and the observed log ratio.
    """
    _check_pair(mech, prior)
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (mech.dim,):
        raise ValueError("delta must have one entry per coordinate")
    if np.isnan(delta).any():
        raise ValueError("delta entries must not be NaN")
    for i in range(mech.dim):
        keep, conds = _coordinate_conditionals(mech, prior, i)
        labels = mech.coord_domains[i]
        for a in range(len(keep)):
            for b in range(len(keep)):
                if a == b:
                    continue
                for y in range(mech.n_outputs):
                    p_null, p_alt = conds[a, y], conds[b, y]
                    if p_alt == 0.0:
                        continue
                    ratio = math.inf if p_null == 0.0 else float(
                        np.log(p_alt) - np.log(p_null))
                    if ratio > delta[i]:
                        witness = {
                            "coordinate": i,
                            "null_value": labels[keep[a]],
                            "alt_value": labels[keep[b]],
                            "output": mech.output_labels[y],
                            "log_ratio": ratio,
                        }
                        return False, witness
    return True, None


def compose_product(first: FiniteMechanism,
                    second: FiniteMechanism) -> FiniteMechanism:
    """Run two mechanisms independently on the same input.

    The composed output is the pair of outputs; its kernel is the row
    wise outer product of the two kernels.
    """
    if first.coord_domains != second.coord_domains:
        raise ValueError("mechanisms must share one input domain")
    kernel = np.einsum("xa,xb->xab", first.kernel, second.kernel)
    kernel = kernel.reshape(first.n_inputs, -1)
    labels = tuple(itertools.product(first.output_labels,
                                     second.output_labels))
    return FiniteMechanism(first.coord_domains, labels, kernel)


def postprocess(mech: FiniteMechanism, fn) -> FiniteMechanism:
    """Apply a deterministic map to the output labels.

    ``fn`` maps each old label to a new one; columns that collide are
    summed.  Every audited level of the result is at most the level of
    the original mechanism.
    """
    new_labels = []
    index = {}
    cols = np.empty(mech.n_outputs, dtype=np.intp)
    for j, lab in enumerate(mech.output_labels):
        target = fn(lab)
        if target not in index:
            index[target] = len(new_labels)
            new_labels.append(target)
        cols[j] = index[target]
    kernel = np.zeros((mech.n_inputs, len(new_labels)))
    np.add.at(kernel, (slice(None), cols), mech.kernel)
    return FiniteMechanism(mech.coord_domains, tuple(new_labels), kernel)


def audit_pair(mech: FiniteMechanism, prior: DiscretePrior) -> AuditReport:
    """Compute every exact level of a mechanism-prior pair at once."""
    _check_pair(mech, prior)
    return AuditReport(
        ldp=exact_ldp_level(mech),
        cdp=exact_cdp_levels(mech),
        bdp=exact_bdp_level(mech, prior),
        bcdp=exact_bcdp_levels(mech, prior),
        tv=np.array([conditional_tv(prior, i) for i in range(mech.dim)]),
    )


# ---------------------------------------------------------------------------
# plain-text interchange format
#
# kernel file: tokens in order (comments run from '#' to end of line)
#   d                   number of input coordinates
#   s_1 ... s_d         coordinate sizes
#   m                   number of outputs
#   prod(s) * m floats  kernel rows, inputs enumerated in product order
#                       (first coordinate slowest), m entries per row
# prior file: same header without m, then prod(s) floats.
# Labels are written as 0-based indices.
# ---------------------------------------------------------------------------


def _read_tokens(path) -> list:
    tokens = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            body = line.split("#", 1)[0]
            tokens.extend(body.split())
    return tokens


def _parse_header(tokens: list, path) -> tuple:
    try:
        d = int(tokens[0])
        if d < 1:
            raise ValueError
        sizes = [int(t) for t in tokens[1:1 + d]]
        if len(sizes) != d or any(s < 1 for s in sizes):
            raise ValueError
    except (ValueError, IndexError):
        raise ValueError(f"{path}: malformed domain header") from None
    return sizes, tokens[1 + d:]


def read_kernel(path) -> FiniteMechanism:
    """Load a mechanism from the plain-text kernel format."""
    sizes, rest = _parse_header(_read_tokens(path), path)
    try:
        m = int(rest[0])
        if m < 1:
            raise ValueError
    except (ValueError, IndexError):
        raise ValueError(f"{path}: malformed output count") from None
    try:
        values = [float(t) for t in rest[1:]]
    except ValueError:
        raise ValueError(f"{path}: malformed probability entry") from None
    n = int(np.prod(sizes))
    if len(values) != n * m:
        raise ValueError(
            f"{path}: expected {n * m} kernel entries, found {len(values)}")
    domains = tuple(tuple(range(s)) for s in sizes)
    try:
        return FiniteMechanism(domains, tuple(range(m)),
                               np.array(values).reshape(n, m))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_kernel(mech: FiniteMechanism, path):
    """Write a mechanism in the plain-text kernel format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mech.dim}\n")
        fh.write(" ".join(str(s) for s in mech.sizes) + "\n")
        fh.write(f"{mech.n_outputs}\n")
        for row in mech.kernel:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_prior(path) -> DiscretePrior:
    """Load a prior from the plain-text prior format."""
    sizes, rest = _parse_header(_read_tokens(path), path)
    try:
        values = [float(t) for t in rest]
    except ValueError:
        raise ValueError(f"{path}: malformed probability entry") from None
    n = int(np.prod(sizes))
    if len(values) != n:
        raise ValueError(
            f"{path}: expected {n} pmf entries, found {len(values)}")
    domains = tuple(tuple(range(s)) for s in sizes)
    try:
        return DiscretePrior(domains, np.array(values))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_prior(prior: DiscretePrior, path):
    """Write a prior in the plain-text prior format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{prior.dim}\n")
        fh.write(" ".join(str(s) for s in prior.sizes) + "\n")
        for v in prior.pmf:
            fh.write(repr(float(v)) + "\n")


# ---------------------------------------------------------------------------
# reference fixtures
# ---------------------------------------------------------------------------


def masked_table_mechanism(a: float = 0.5, b: float = 0.5,
                           c: float = 0.5) -> FiniteMechanism:
    """Two-bit mechanism with a structural zero in its success table.

    The output is one bit with success probability a at (0, 0), b at
    (1, 0), c at (1, 1) and exactly zero at (0, 1).  Under a uniform
    independent prior with a = b = c = 1/2 both coordinates audit to
    the Bayesian level log 2 while the local-DP level is infinite, so
    the prior-aware notion is strictly more permissive here.
    """
    for p in (a, b, c):
        if not (0.0 <= p <= 1.0):
            raise ValueError("success probabilities must lie in [0, 1]")
    success = {(0, 0): a, (0, 1): 0.0, (1, 0): b, (1, 1): c}
    rows = [[1.0 - success[x], success[x]]
            for x in itertools.product((0, 1), (0, 1))]
    return FiniteMechanism(((0, 1), (0, 1)), (0, 1), np.array(rows))


def parity_mixture_mechanism() -> FiniteMechanism:
    """Three-bit mechanism that hides the first bit inside parities.

    With equal probability it releases either (x1 xor x2, x3) or
    (x2, x1 xor x3).  Under the uniform prior one release says nothing
    about x1 (Bayesian level 0 for coordinate 1), yet two independent
    releases can pin x1 down exactly, so the level of the two-fold
    composition jumps to +inf.
    """
    outputs = tuple(itertools.product((0, 1), (0, 1)))
    kernel = np.zeros((8, 4))
    for xi, (x1, x2, x3) in enumerate(itertools.product((0, 1), repeat=3)):
        kernel[xi, outputs.index((x1 ^ x2, x3))] += 0.5
        kernel[xi, outputs.index((x2, x1 ^ x3))] += 0.5
    domains = ((0, 1), (0, 1), (0, 1))
    return FiniteMechanism(domains, outputs, kernel)


def uniform_prior(sizes) -> DiscretePrior:
    """Uniform pmf over the product of the given coordinate sizes."""
    sizes = [int(s) for s in sizes]
    n = int(np.prod(sizes))
    domains = tuple(tuple(range(s)) for s in sizes)
    return DiscretePrior(domains, np.full(n, 1.0 / n))


def product_prior(marginals) -> DiscretePrior:
    """Independent prior with the given per-coordinate marginals."""
    pmf = np.ones(1)
    domains = []
    for marg in marginals:
        marg = np.asarray(marg, dtype=float)
        domains.append(tuple(range(marg.size)))
        pmf = np.kron(pmf, marg)
    return DiscretePrior(tuple(domains), pmf)

"""Locally private randomizers.

Two channel families live here: the continuous ball channel, which
releases an unbiased randomized version of a vector from an l2 ball,
and discrete randomized response kernels over finite label sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audit import FiniteMechanism

__all__ = [
    "LdpChannelSpec",
    "RandomizerSample",
    "ball_channel_bound",
    "ball_channel_sample",
    "ball_channel_batch",
    "rr_kernel",
    "product_rr_mechanism",
]


@dataclass(frozen=True)
class LdpChannelSpec:
    """Parameters of one ball channel invocation: privacy level alpha,
    ambient dimension and the radius of the input ball."""

    alpha: float
    dim: int
    radius: float

    def __post_init__(self):
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise ValueError("dim must be a positive integer")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be finite and strictly positive")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be finite and strictly positive")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class RandomizerSample:
    """One released point.  Its norm always equals the channel bound."""

    value: np.ndarray


def ball_channel_bound(alpha: float, dim: int, radius: float) -> float:
    """Norm of every released point of the ball channel.

    The value makes the channel unbiased, E[Z | v] = v.  Writing
    coth(a/2) = (e^a + 1)/(e^a - 1),

        B = sqrt(pi) * radius * coth(alpha/2) * Gamma((dim+1)/2) / Gamma(dim/2)

    which equals the hemisphere-mean normalizer 1/E|u_1| of the unit
    sphere times radius * coth(alpha/2).  Evaluated with log-gamma
    arithmetic so large dimensions do not overflow.
    """
    spec = LdpChannelSpec(alpha, dim, radius)
    coth = 1.0 / math.tanh(spec.alpha / 2.0)
    lg = math.lgamma((spec.dim + 1) / 2.0) - math.lgamma(spec.dim / 2.0)
    return math.sqrt(math.pi) * spec.radius * coth * math.exp(lg)


def ball_channel_batch(v: np.ndarray, spec: LdpChannelSpec,
                       rng: np.random.Generator) -> np.ndarray:
    """Release one point per row of ``v`` through the ball channel.

    Rows must have l2 norm at most ``spec.radius`` (up to a 1e-12
    relative slack for accumulated rounding).  Each released row has
    norm exactly ``ball_channel_bound`` and conditional mean equal to
    the input row.  Randomness is consumed in a fixed order (rounding
    signs, hemisphere choices, one gaussian block), so equal seeds give
    equal outputs.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[1] != spec.dim:
        raise ValueError("v must be an (n, dim) array")
    if not np.isfinite(v).all():
        raise ValueError("v entries must be finite")
    r = spec.radius
    norms = np.linalg.norm(v, axis=1)
    if (norms > r * (1 + 1e-12)).any():
        raise ValueError("rows of v must lie in the radius ball")
    n, d = v.shape

    # round to the sphere: keep direction with prob 1/2 + |v|/(2r)
    s = rng.random(n) < 0.5 + norms / (2 * r)
    unit = np.zeros_like(v)
    pos = norms > 0
    unit[pos] = v[pos] / norms[pos, None]
    unit[~pos, 0] = 1.0
    vt = np.where(s[:, None], unit, -unit)

    # hemisphere bit: aligned with prob e^alpha/(e^alpha + 1)
    k = rng.random(n) < 1.0 / (1.0 + math.exp(-spec.alpha))
    sign = np.where(k, 1.0, -1.0)

    b = ball_channel_bound(spec.alpha, spec.dim, spec.radius)
    z = rng.standard_normal((n, d))
    need = np.arange(n)
    while need.size:
        g = z[need]
        gn = np.linalg.norm(g, axis=1)
        dots = np.einsum("ij,ij->i", g, vt[need])
        bad = (gn == 0) | (dots == 0)
        ok = ~bad
        rows = need[ok]
        z[rows] = (b / gn[ok, None]) * g[ok] * np.where(
            sign[rows] * dots[ok] > 0, 1.0, -1.0)[:, None]
        need = need[bad]
        if need.size:
            z[need] = rng.standard_normal((need.size, d))
    return z


def ball_channel_sample(v, spec: LdpChannelSpec,
                        rng: np.random.Generator) -> RandomizerSample:
    """Release a single vector through the ball channel."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("v must be a 1-d vector")
    out = ball_channel_batch(v[None, :], spec, rng)
    return RandomizerSample(out[0])


def rr_kernel(alpha: float, k: int) -> FiniteMechanism:
    """Randomized response over k labels at local-DP level alpha.

    Stays on the true label with probability e^alpha/(e^alpha + k - 1),
    otherwise moves to a uniformly random other label.  alpha = 0 gives
    the uniform kernel.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 2):
        raise ValueError("k must be an integer of at least 2")
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ValueError("alpha must be finite and nonnegative")
    off = math.exp(-alpha) / (1.0 + (k - 1) * math.exp(-alpha))
    kernel = np.full((k, k), off)
    np.fill_diagonal(kernel, 1.0 - (k - 1) * off)
    labels = tuple(range(k))
    return FiniteMechanism((labels,), labels, kernel)


def product_rr_mechanism(alphas, sizes) -> FiniteMechanism:
    """Independent per-coordinate randomized response on a product domain.

    Coordinate i of the input is passed through ``rr_kernel(alphas[i],
    sizes[i])`` independently of the others; the output is the tuple of
    the released labels.
    """
    alphas = list(np.asarray(alphas, dtype=float))
    sizes = [int(s) for s in np.asarray(sizes)]
    if len(alphas) != len(sizes) or not alphas:
        raise ValueError("alphas and sizes must be nonempty and equal length")
    kernel = np.ones((1, 1))
    for a, s in zip(alphas, sizes):
        kernel = np.kron(kernel, rr_kernel(a, s).kernel)
    domains = tuple(tuple(range(s)) for s in sizes)
    import itertools
    out_labels = tuple(itertools.product(*[range(s) for s in sizes]))
    return FiniteMechanism(domains, out_labels, kernel)

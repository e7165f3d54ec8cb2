"""Estimate a mean under per-coordinate budgets, against a flat baseline.

Population vectors are signs from the corner mixture: with probability
q all coordinates copy one shared bit, otherwise they are independent.
The calibrated release spends little on the two sensitive coordinates
and the full level elsewhere; the baseline spends the strictest demand
everywhere.  Total squared error of the aggregated estimates is
printed per q.
"""

import argparse

import numpy as np

from bcdp import (CoordinateBudget, PrivacyDemand, aggregate_mean,
                  calibrate_budgets, m_mean_batch,
                  sample_correlated_bernoulli)


def run(seed, n, trials):
    d = 10
    delta = np.array([0.2, 0.2] + [2.0] * 8)
    epsilon = 2.0
    flat = CoordinateBudget(np.full(d, delta.min()), np.arange(d))
    print(f"n = {n}, {trials} trials per cell, true mean is zero")
    print(f"{'q':>5} {'calibrated':>12} {'flat':>12}")
    for q in (0.0, 0.5, 0.99):
        budget = calibrate_budgets(PrivacyDemand(
            epsilon=epsilon, delta=delta, q=q, zeta=(1 + q) / 2))
        errs = {"calibrated": [], "flat": []}
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            X = sample_correlated_bernoulli(n, d, q, rng)
            for name, b in (("calibrated", budget), ("flat", flat)):
                nu, weights = m_mean_batch(X, b, rng)
                estimate = aggregate_mean(nu, weights)
                errs[name].append(float((estimate.mean_hat ** 2).sum()))
        med = {k: np.median(v) for k, v in errs.items()}
        print(f"{q:>5} {med['calibrated']:>12.4f} {med['flat']:>12.4f}")
    print("\nthe gain lives at small q; near full coupling the calibrated "
          "release hedges so hard it can trail the baseline slightly")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--trials", type=int, default=30)
    args = parser.parse_args()
    run(args.seed, args.n, args.trials)

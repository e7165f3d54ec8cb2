"""Fit least squares from privatized rows and track the excess risk.

Each user's feature-label row is released twice at half budget, the
quadratic surrogate is assembled from cross terms of the two copies,
and projected gradient descent minimizes it over the unit ball.  The
excess empirical risk against the exact in-sample ball minimizer is
printed next to an identity-channel control run, for growing n.
"""

import numpy as np

from bcdp import (FeasibleSet, PrivacyDemand, RegressionDataset,
                  empirical_risk, run_private_ols)

SEED = 4
THETA_STAR = np.array([0.0, 0.0, 0.99, 0.0])


def make_data(n, rng):
    X = 2.0 * rng.integers(0, 2, size=(n, THETA_STAR.size)) - 1.0
    labels = np.clip(X @ THETA_STAR, -1.0, 1.0)
    return RegressionDataset(X, labels)


def main():
    demand = PrivacyDemand(epsilon=2.0,
                           delta=np.array([0.5, 0.5, 2.0, 2.0, 2.0]),
                           q=0.0, zeta=0.5)
    feasible = FeasibleSet(radius=1.0, dim=THETA_STAR.size)
    rng = np.random.default_rng(SEED)
    print(f"{'n':>6} {'private':>10} {'identity':>10} {'iters':>6}")
    for n in (500, 2000, 5000, 20000):
        data = make_data(n, rng)
        theta_p, diag_p = run_private_ols(data, demand, feasible, rng,
                                          with_excess=True)
        theta_i, diag_i = run_private_ols(data, demand, feasible, rng,
                                          identity=True, with_excess=True)
        print(f"{n:>6} {diag_p['excess_risk']:>10.4f} "
              f"{diag_i['excess_risk']:>10.2e} {diag_p['iterations']:>6}")
    print("\nthe identity control tracks the optimizer's 1/n accuracy; "
          "the private column carries the privatization noise on top")
    print(f"last private fit {np.round(theta_p, 3)}, "
          f"risk {empirical_risk(theta_p, data):.4f} vs "
          f"{empirical_risk(THETA_STAR, data):.4f} at the truth")


if __name__ == "__main__":
    main()

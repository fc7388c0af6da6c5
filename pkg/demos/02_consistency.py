"""
Consistency with the decision maker's own beliefs
=================================================

A combination rule is consistent when averaging it over the decision
maker's prior for the forecasts gives back the prior probability of the
event.  Linear pools pass this for any prior with the right means, whether
the agents are independent or not.
"""

import numpy as np

from predsynth import (
    check_coefficient_invariance,
    check_consistency,
    dependent_mixture_prior,
    dirichlet_prior,
    random_pool,
    two_point_prior,
)

rng = np.random.default_rng(7)
pool = random_pool(3, 2, rng)
print("p =", pool.p)

# Finite priors are checked exactly by summing over their support.
for fam in (two_point_prior(pool.mu), dependent_mixture_prior(pool.mu, base="two-point")):
    rep = check_consistency(pool, fam)
    print(f"{fam.kind:32s} exact deviation {rep.deviation:.2e}")

# Continuous priors are checked by simulation, within five standard errors.
for fam in (dirichlet_prior(pool.mu), dependent_mixture_prior(pool.mu)):
    rep = check_consistency(pool, fam, draws=100_000, seed=1)
    print(f"{fam.kind:32s} deviation {rep.deviation:.2e} = {rep.deviation / rep.std_error:.2f} SE")

# Dropping an agent leaves the others' coefficients unchanged.
rep = check_coefficient_invariance(pool, agent_to_drop=2)
print("surviving lambda (analytic):\n", rep.lam_analytic)
print("max deviation from the table slice:", rep.max_deviation)

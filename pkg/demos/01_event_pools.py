"""
Combining event forecasts
=========================

Two agents give probabilities for which of two outcomes will occur.  A
decision maker who expects agent ``k`` to say ``mu_k`` on average combines
them linearly, and the same rule can be written as a table of probabilities
indexed by "which outcome each agent is sure of".
"""

import numpy as np

from predsynth import LinearPool, eval_linear_pool, eval_pi_form, pi_to_pool, pool_to_pi, validity_check

# The decision maker's prior probability is 0.5.  Each agent's first entry
# moves it up by lambda times the surprise relative to the expected forecast.
pool = LinearPool(0.5, [[0.3, 0.0], [0.2, 0.0]], [[0.5, 0.5], [0.5, 0.5]])
forecasts = [np.array([0.5, 0.5]), np.array([1.0, 0.0])]
print("linear pool:", eval_linear_pool(pool, forecasts))

# The equivalent table.  Entry (i, j) is the decision maker's probability
# when agent 1 is certain of outcome i and agent 2 of outcome j.
pi = pool_to_pi(pool)
print("table:\n", pi.values)
print("table form:", eval_pi_form(pi, forecasts))

# Only pools whose table lies in [0, 1] are usable.
print(validity_check(pool))

# Going back from a separable table recovers the coefficients.
back = pi_to_pool(pi, pool.mu)
print("recovered lambda:", back.lam)

"""
Synthesizing continuous forecasts
=================================

Each agent now gives a density for a quantity ``x``.  The decision maker
maps the agents' quantities to the target ``y`` through a kernel and
integrates over the agents' densities.  With Gaussian agents and a linear
Gaussian kernel the answer is Gaussian, which gives an exact check.
"""

import numpy as np

from predsynth import (
    GaussianAgent,
    LinearGaussianKernel,
    MonteCarlo,
    SynthesisProblem,
    analytic_reference,
    synthesize_cdf,
    synthesize_density,
    synthesize_moments,
    synthesize_samples,
)

problem = SynthesisProblem(
    (GaussianAgent(0.0, 1.0), GaussianAgent(2.0, 1.0)),
    LinearGaussianKernel(1.0, [0.5, 0.5], 0.1),
)
print("analytic mean, variance:", analytic_reference(problem))
print("quadrature mean, variance:", synthesize_moments(problem))

draws = synthesize_samples(problem, 200_000, seed=0)
print(f"sampled mean {draws.mean():.4f}, variance {draws.var():.4f}")

# Density and CDF on a grid, by quadrature and by simulation.
ys = np.linspace(0.0, 4.0, 5)
print("density:", synthesize_density(problem, ys))
print("cdf (quadrature):", synthesize_cdf(problem, ys))
print("cdf (monte-carlo):", synthesize_cdf(problem, ys, MonteCarlo(draws=100_000, seed=3)))

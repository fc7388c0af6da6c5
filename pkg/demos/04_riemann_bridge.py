"""
From events to densities
========================

Cutting the real line into bins turns each continuous agent into an event
forecast.  Event synthesis of the binned agents gives ``P(Y <= y)``, and
as the bins shrink this sum approaches the continuous integral.
"""

import numpy as np
from scipy import special

from predsynth import DiracKernel, GaussianAgent, LinearGaussianKernel, SynthesisProblem, convergence_study

problem = SynthesisProblem((GaussianAgent(0.0, 1.0),), LinearGaussianKernel(0.0, [1.0], 1.0))
report = convergence_study(problem, y=1.0, n_values=[16 * 2**i for i in range(9)])
print(report.to_csv())
print("target:", special.ndtr(1 / np.sqrt(2)))

# Each doubling of the bin count cuts the error by about four.
for n, ratio in report.ratios():
    print(f"n = {n:5d}  error ratio {ratio:.3f}")

# When y is passed through unchanged, the sum is exact at every cut.
exact = convergence_study(SynthesisProblem((GaussianAgent(0.0, 1.0),), DiracKernel(0)), 0.0, [17, 65, 257])
print("pass-through errors:", exact.errors())

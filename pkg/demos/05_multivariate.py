"""
One agent, several quantities
=============================

An agent can forecast a vector.  Its joint distribution is binned into
cells, and the decision maker's kernel is evaluated at each cell.  For an
agent whose coordinates are independent, the cell masses factor into
products of one-dimensional bin masses.
"""

import numpy as np
from scipy import special

from predsynth import BinGrid, GaussianAgent, HypercubeGrid, IndependentCoordinates, JointGaussian, LinearGaussianKernel, multivariate_discrete_cdf

kernel = LinearGaussianKernel(0.0, [1.0, 1.0], 1.0)
agent = IndependentCoordinates((GaussianAgent(0.0, 1.0), GaussianAgent(0.0, 1.0)))

for n in (16, 64, 256):
    grid = HypercubeGrid(2, BinGrid.centered(0.0, 8.0, n))
    prod = multivariate_discrete_cdf(agent, kernel, grid, 1.0, path="product")
    joint = multivariate_discrete_cdf(agent, kernel, grid, 1.0, path="joint")
    print(f"n = {n:4d}  product {prod:.6f}  joint {joint:.6f}")
print("target:", special.ndtr(1 / np.sqrt(3)))

# Correlated coordinates need the joint path.
rho = 0.6
corr = JointGaussian([0.0, 0.0], [[1.0, rho], [rho, 1.0]])
grid = HypercubeGrid(2, BinGrid.centered(0.0, 8.0, 128))
print("correlated:", multivariate_discrete_cdf(corr, kernel, grid, 1.0, path="joint"), "target", special.ndtr(1 / np.sqrt(3 + 2 * rho)))

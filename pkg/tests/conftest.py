import itertools

import mpmath
import numpy as np
import pytest

mpmath.mp.dps = 30


def normal_cdf(x, mean=0.0, sd=1.0):
    """High-precision normal CDF, independent of scipy."""
    return float(mpmath.ncdf(x, mu=mean, sigma=sd))


def normal_pdf(x, mean=0.0, sd=1.0):
    return float(mpmath.npdf(x, mu=mean, sigma=sd))


def brute_force_pi_form(values, forecasts):
    """Explicit sum over every vertex of tensor value times forecast product."""
    values = np.asarray(values)
    total = 0.0
    for idx in itertools.product(range(values.shape[0]), repeat=values.ndim):
        w = 1.0
        for k, i in enumerate(idx):
            w *= forecasts[k][i]
        total += values[idx] * w
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

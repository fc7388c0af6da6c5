"""Continuous synthesis of agent densities through a synthesis kernel.

The synthesized density is

    p(y | H) = integral of alpha(y | x) prod_k h_k(x_k) dx

where ``alpha(y | x)`` is the decision maker's density for ``y`` when the
agents are certain that their quantities equal ``x``.  Its CDF in ``y`` is
written ``Pi(y | x)``.  The integral is evaluated by tensor-product
Gauss-Legendre quadrature (up to three agents) or by Monte-Carlo, and sampled
by first drawing ``x_k ~ h_k`` independently and then ``y ~ alpha(. | x)``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._rng import run_tasks
from .errors import CapabilityError, ShapeError
from .forecast_model import AgentDensity, GaussianAgent, _frozen, _normal_pdf

MAX_QUADRATURE_AGENTS = 3
MAX_QUADRATURE_NODES = 2**22
_CHUNK = 4_000_000


class SynthesisKernel(ABC):
    """Conditional law of ``y`` given the agents' quantities ``x``.

    Array conventions: ``x`` has shape ``(M, K)`` and ``y`` shape ``(G,)``;
    :meth:`pdf` and :meth:`cdf` return ``(G, M)``.
    """

    kind: str
    arity: int

    @abstractmethod
    def pdf(self, y, x) -> np.ndarray: ...

    @abstractmethod
    def cdf(self, y, x) -> np.ndarray: ...

    @abstractmethod
    def sample(self, x, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def conditional_moments(self, x) -> tuple[np.ndarray, np.ndarray]: ...

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[-1] != self.arity:
            raise ShapeError(f"kernel takes {self.arity} agent values, got {x.shape[-1]}")
        return x


@dataclass(frozen=True, eq=False)
class LinearGaussianKernel(SynthesisKernel):
    """``y | x ~ N(intercept + weights . x, stddev^2)``."""

    intercept: float
    weights: np.ndarray
    stddev: float
    kind = "linear-gaussian"

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.ndim != 1 or w.size < 1:
            raise ShapeError("linear-gaussian kernel needs at least one weight")
        if not self.stddev > 0:
            raise ValueError("kernel stddev must be positive")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "stddev", float(self.stddev))

    @property
    def arity(self) -> int:
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, LinearGaussianKernel):
            return NotImplemented
        return (self.intercept, self.stddev) == (other.intercept, other.stddev) and np.array_equal(self.weights, other.weights)

    def _z(self, y, x):
        x = self._check_x(x)
        loc = self.intercept + x @ self.weights
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return (y[:, None] - loc[None, :]) / self.stddev

    def pdf(self, y, x):
        return _normal_pdf(self._z(y, x)) / self.stddev

    def cdf(self, y, x):
        return special.ndtr(self._z(y, x))

    def sample(self, x, rng):
        x = self._check_x(x)
        return self.intercept + x @ self.weights + self.stddev * rng.standard_normal(x.shape[0])

    def conditional_moments(self, x):
        x = self._check_x(x)
        return self.intercept + x @ self.weights, np.full(x.shape[0], self.stddev**2)


@dataclass(frozen=True)
class DiracKernel(SynthesisKernel):
    """``y`` equals the quantity of one agent; the others are ignored."""

    agent: int
    arity: int = 1
    kind = "dirac-passthrough"

    def __post_init__(self):
        if not 0 <= self.agent < self.arity:
            raise ShapeError(f"agent index {self.agent} out of range for {self.arity} agents")

    def pdf(self, y, x):
        raise CapabilityError("dirac-passthrough has no conditional density; it is applied by substitution")

    def cdf(self, y, x):
        x = self._check_x(x)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return (x[None, :, self.agent] <= y[:, None]).astype(float)

    def sample(self, x, rng):
        return self._check_x(x)[:, self.agent].copy()

    def conditional_moments(self, x):
        x = self._check_x(x)
        return x[:, self.agent].copy(), np.zeros(x.shape[0])


@dataclass(frozen=True, eq=False)
class TableKernel(SynthesisKernel):
    """Single-agent kernel given by conditional CDF values on a grid.

    ``cdf_table[j, s]`` is ``Pi(y_grid[s] | x_grid[j])``.  Each row must rise
    from 0 at the first ``y`` node to 1 at the last.  Between ``y`` nodes the
    CDF is linear (piecewise-uniform density); between ``x`` nodes the law is
    the linear mixture of the neighbouring rows, and outside the ``x`` range
    the nearest row is used.  Sampling needs strictly increasing rows.
    """

    x_grid: np.ndarray
    y_grid: np.ndarray
    cdf_table: np.ndarray
    kind = "custom-table"
    arity = 1

    def __post_init__(self):
        xg = np.atleast_1d(np.asarray(self.x_grid, dtype=float))
        yg = np.atleast_1d(np.asarray(self.y_grid, dtype=float))
        t = np.atleast_2d(np.asarray(self.cdf_table, dtype=float))
        if t.shape != (xg.size, yg.size) or yg.size < 2:
            raise ShapeError(f"cdf table must have shape (len(x_grid), len(y_grid)) with >= 2 y nodes, got {t.shape}")
        if np.any(np.diff(xg) <= 0) or np.any(np.diff(yg) <= 0):
            raise ValueError("x_grid and y_grid must be strictly increasing")
        if np.any(np.diff(t, axis=1) < 0):
            raise ValueError("conditional CDF rows must be nondecreasing in y")
        if np.max(np.abs(t[:, 0])) > 1e-9 or np.max(np.abs(t[:, -1] - 1)) > 1e-9:
            raise ValueError("conditional CDF rows must start at 0 and end at 1")
        t = t.copy()
        t[:, 0], t[:, -1] = 0.0, 1.0
        object.__setattr__(self, "x_grid", _frozen(xg))
        object.__setattr__(self, "y_grid", _frozen(yg))
        object.__setattr__(self, "cdf_table", _frozen(t))

    @property
    def invertible(self) -> bool:
        return bool(np.all(np.diff(self.cdf_table, axis=1) > 0))

    def _rows(self, x):
        """Neighbouring row indices and the weight on the upper row."""
        x = self._check_x(x)[:, 0]
        xg = self.x_grid
        if xg.size == 1:
            z = np.zeros(x.size, dtype=int)
            return z, z, np.zeros(x.size)
        j = np.clip(np.searchsorted(xg, x, side="right") - 1, 0, xg.size - 2)
        w = np.clip((x - xg[j]) / (xg[j + 1] - xg[j]), 0.0, 1.0)
        return j, j + 1, w

    def _mix(self, per_row, x):
        lo, hi, w = self._rows(x)
        return per_row[:, lo] * (1 - w) + per_row[:, hi] * w

    def cdf(self, y, x):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        rows = np.stack([np.interp(y, self.y_grid, r, left=0.0, right=1.0) for r in self.cdf_table], axis=1)
        return self._mix(rows, x)

    def pdf(self, y, x):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        yg = self.y_grid
        slopes = np.diff(self.cdf_table, axis=1) / np.diff(yg)
        s = np.searchsorted(yg, y, side="right") - 1
        inside = (y >= yg[0]) & (y < yg[-1])
        rows = np.where(inside[:, None], slopes[:, np.clip(s, 0, yg.size - 2)].T, 0.0)
        return self._mix(rows, x)

    def sample(self, x, rng):
        if not self.invertible:
            raise CapabilityError("custom-table kernel has flat CDF segments and cannot be inverted for sampling")
        lo, hi, w = self._rows(x)
        row = np.where(rng.random(lo.size) < w, hi, lo)
        u = rng.random(lo.size)
        y = np.empty(lo.size)
        for r in np.unique(row):
            sel = row == r
            y[sel] = np.interp(u[sel], self.cdf_table[r], self.y_grid)
        return y

    def conditional_moments(self, x):
        a, b = self.y_grid[:-1], self.y_grid[1:]
        dF = np.diff(self.cdf_table, axis=1)
        m1 = dF @ ((a + b) / 2)
        m2 = dF @ ((a * a + a * b + b * b) / 3)
        lo, hi, w = self._rows(x)
        mean = m1[lo] * (1 - w) + m1[hi] * w
        second = m2[lo] * (1 - w) + m2[hi] * w
        return mean, second - mean**2

    def __eq__(self, other):
        if not isinstance(other, TableKernel):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip((self.x_grid, self.y_grid, self.cdf_table), (other.x_grid, other.y_grid, other.cdf_table)))


@dataclass(frozen=True)
class SynthesisProblem:
    agents: tuple[AgentDensity, ...]
    kernel: SynthesisKernel

    def __post_init__(self):
        agents = tuple(self.agents)
        if not agents:
            raise ShapeError("at least one agent is required")
        if self.kernel.arity != len(agents):
            raise ShapeError(f"kernel takes {self.kernel.arity} agents but {len(agents)} were given")
        object.__setattr__(self, "agents", agents)

    @property
    def K(self) -> int:
        return len(self.agents)


@dataclass(frozen=True)
class Quadrature:
    nodes: int = 128


@dataclass(frozen=True)
class MonteCarlo:
    draws: int = 100_000
    seed: int = 0
    threads: int = 1


def _draw_agents(agents, size, rng) -> np.ndarray:
    return np.column_stack([a.sample(size, rng) for a in agents])


def synthesize_samples(problem: SynthesisProblem, N: int, seed: int, threads: int = 1) -> np.ndarray:
    """``N`` i.i.d. draws from the synthesized distribution."""
    if N < 1:
        raise ValueError("N must be >= 1")
    kernel = problem.kernel
    if isinstance(kernel, TableKernel) and not kernel.invertible:
        raise CapabilityError("custom-table kernel has flat CDF segments and cannot be inverted for sampling")

    def chunk(rng, size):
        return kernel.sample(_draw_agents(problem.agents, size, rng), rng)

    return np.concatenate(run_tasks(chunk, N, seed, threads))


def tensor_rule(agents, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product nodes ``(M, K)`` and weights ``(M,)`` over all agents."""
    if len(agents) > MAX_QUADRATURE_AGENTS:
        raise CapabilityError(f"quadrature supports at most {MAX_QUADRATURE_AGENTS} agents; use monte-carlo")
    rules = [a.quadrature_rule(nodes) for a in agents]
    total = int(np.prod([r[0].size for r in rules]))
    if total > MAX_QUADRATURE_NODES:
        raise CapabilityError(f"{total} tensor nodes exceed the limit of {MAX_QUADRATURE_NODES}; use monte-carlo")
    grids = np.meshgrid(*(r[0] for r in rules), indexing="ij")
    wgrids = np.meshgrid(*(r[1] for r in rules), indexing="ij")
    X = np.column_stack([g.ravel() for g in grids])
    W = np.prod(np.stack([w.ravel() for w in wgrids]), axis=0)
    return X, W


def _integrate(fn, y, X, W) -> np.ndarray:
    """``sum_m W[m] * fn(y, X)[:, m]`` in memory-bounded chunks of ``y``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    step = max(1, _CHUNK // max(1, X.shape[0]))
    # row-wise reduction: BLAS matvec rounding depends on the batch size
    return np.concatenate([(fn(y[i : i + step], X) * W).sum(axis=1) for i in range(0, y.size, step)]) if y.size else np.empty(0)


def _points(problem: SynthesisProblem, method):
    if isinstance(method, Quadrature):
        return tensor_rule(problem.agents, method.nodes)
    if isinstance(method, MonteCarlo):
        chunks = run_tasks(lambda rng, size: _draw_agents(problem.agents, size, rng), method.draws, method.seed, method.threads)
        X = np.concatenate(chunks)
        return X, np.full(X.shape[0], 1.0 / X.shape[0])
    raise TypeError(f"unknown method {method!r}")


def _shape_like(values, y):
    return float(values[0]) if np.ndim(y) == 0 else values.reshape(np.shape(y))


def synthesize_density(problem: SynthesisProblem, y_grid, method=Quadrature()) -> np.ndarray:
    """Synthesized density at each point of ``y_grid``."""
    kernel = problem.kernel
    y = np.asarray(y_grid, dtype=float)
    if isinstance(kernel, DiracKernel):
        return _shape_like(np.atleast_1d(problem.agents[kernel.agent].pdf(y.ravel())), y)
    X, W = _points(problem, method)
    return _shape_like(_integrate(kernel.pdf, y.ravel(), X, W), y)


def synthesize_cdf(problem: SynthesisProblem, y, method=Quadrature()):
    """``P(Y <= y | H)``: the kernel CDF integrated against the agents."""
    kernel = problem.kernel
    y_arr = np.asarray(y, dtype=float)
    if isinstance(kernel, DiracKernel):
        return _shape_like(np.atleast_1d(problem.agents[kernel.agent].cdf(y_arr.ravel())), y_arr)
    X, W = _points(problem, method)
    return _shape_like(np.clip(_integrate(kernel.cdf, y_arr.ravel(), X, W), 0.0, 1.0), y_arr)


def synthesize_moments(problem: SynthesisProblem, method=Quadrature()) -> tuple[float, float]:
    """Mean and variance of the synthesized distribution.

    Uses the laws of total expectation and variance over the agents, with
    the kernel's conditional moments at each integration point.
    """
    kernel = problem.kernel
    if isinstance(kernel, DiracKernel):
        # integrate over the selected agent only
        X, W = _points(SynthesisProblem((problem.agents[kernel.agent],), DiracKernel(0)), method)
        m, v = X[:, 0], np.zeros(W.size)
    else:
        X, W = _points(problem, method)
        m, v = kernel.conditional_moments(X)
    mean = float(W @ m)
    var = float(W @ (v + (m - mean) ** 2))
    return mean, var


def analytic_reference(problem: SynthesisProblem) -> tuple[float, float]:
    """Closed-form mean and variance for Gaussian agents and a linear-Gaussian kernel."""
    k = problem.kernel
    if not isinstance(k, LinearGaussianKernel) or not all(isinstance(a, GaussianAgent) for a in problem.agents):
        raise CapabilityError("analytic reference needs Gaussian agents and a linear-gaussian kernel")
    locs = np.array([a.loc for a in problem.agents])
    scales = np.array([a.scale for a in problem.agents])
    mean = k.intercept + float(k.weights @ locs)
    var = k.stddev**2 + float(np.sum(k.weights**2 * scales**2))
    return mean, var


def analytic_cdf(problem: SynthesisProblem, y):
    """Gaussian CDF of the analytic reference, for validation."""
    mean, var = analytic_reference(problem)
    return special.ndtr((np.asarray(y, dtype=float) - mean) / np.sqrt(var))

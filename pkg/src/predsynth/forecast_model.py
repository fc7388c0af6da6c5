"""Core domain types: simplex forecasts, agent panels, agent densities and bin grids.

Index convention: an agent forecasting ``n`` events reports a vector of
length ``n + 1`` whose last entry (index ``n``) is the residual event, the
complement of the ``n`` explicit events.  Python indices are 0-based, so the
residual event is ``weights[-1]``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize, special

from .errors import CapabilityError, InvalidForecastError, ShapeError

SIMPLEX_ATOL = 1e-12
TEXT_ATOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_simplex(w: np.ndarray, atol: float, what: str = "forecast") -> np.ndarray:
    if w.ndim != 1 or w.size < 2:
        raise InvalidForecastError(f"{what} must be a vector with at least 2 entries, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidForecastError(f"{what} has non-finite entries: {w}")
    if np.any(w < -atol) or np.any(w > 1 + atol):
        raise InvalidForecastError(f"{what} has entries outside [0, 1]: {w}")
    s = w.sum()
    if abs(s - 1.0) > atol:
        raise InvalidForecastError(f"{what} sums to {s!r}, not 1")
    return np.clip(w, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class SimplexForecast:
    """One agent's probabilities over ``n`` disjoint events plus the residual event."""

    weights: np.ndarray
    atol: float = field(default=SIMPLEX_ATOL, repr=False)

    def __post_init__(self):
        w = _check_simplex(np.asarray(self.weights, dtype=float), self.atol)
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n(self) -> int:
        return self.weights.size - 1

    @property
    def residual(self) -> float:
        return float(self.weights[-1])

    def __len__(self):
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, SimplexForecast):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())


def make_simplex_forecast(raw: Sequence[float], atol: float = SIMPLEX_ATOL) -> SimplexForecast:
    """Append the residual event probability to ``n`` explicit event probabilities.

    >>> make_simplex_forecast([0.3, 0.5]).weights
    array([0.3, 0.5, 0.2])
    """
    raw = np.asarray(raw, dtype=float).ravel()
    if raw.size == 0:
        raise InvalidForecastError("at least one explicit event is required (n >= 1)")
    if np.any(raw < 0) or np.any(raw > 1):
        raise InvalidForecastError(f"event probabilities must lie in [0, 1], got {raw}")
    total = raw.sum()
    if total > 1 + atol:
        raise InvalidForecastError(f"event probabilities sum to {total!r} > 1")
    residual = max(0.0, 1.0 - total)
    w = np.append(raw, residual)
    # absorb rounding slack so the vector sums to 1
    w = w / w.sum()
    return SimplexForecast(w, atol=atol)


@dataclass(frozen=True, eq=False)
class AgentPanel:
    """K simplex forecasts sharing the same number of events."""

    forecasts: tuple[SimplexForecast, ...]

    def __post_init__(self):
        fs = tuple(f if isinstance(f, SimplexForecast) else SimplexForecast(f) for f in self.forecasts)
        if not fs:
            raise ShapeError("a panel needs at least one agent")
        ns = {f.n for f in fs}
        if len(ns) != 1:
            raise ShapeError(f"all agents must forecast the same number of events, got n in {sorted(ns)}")
        object.__setattr__(self, "forecasts", fs)

    @classmethod
    def from_arrays(cls, arrays, atol: float = SIMPLEX_ATOL) -> "AgentPanel":
        return cls(tuple(SimplexForecast(a, atol=atol) for a in arrays))

    @property
    def K(self) -> int:
        return len(self.forecasts)

    @property
    def n(self) -> int:
        return self.forecasts[0].n

    def as_array(self) -> np.ndarray:
        """Forecasts stacked into a ``(K, n + 1)`` array."""
        return np.stack([f.weights for f in self.forecasts])

    def __iter__(self):
        return iter(self.forecasts)

    def __len__(self):
        return self.K


def as_panel(panel) -> AgentPanel:
    """Accept an :class:`AgentPanel` or anything shaped ``(K, n + 1)``."""
    if isinstance(panel, AgentPanel):
        return panel
    return AgentPanel.from_arrays(np.atleast_2d(np.asarray(panel, dtype=float)))


@dataclass(frozen=True, eq=False)
class MarginalMeans:
    """The decision maker's expected forecast vector for every agent."""

    means: np.ndarray
    atol: float = field(default=SIMPLEX_ATOL, repr=False)

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.means, dtype=float))
        if m.ndim != 2:
            raise ShapeError(f"means must be a (K, n + 1) array, got shape {m.shape}")
        rows = [_check_simplex(row, self.atol, what=f"mean vector of agent {k}") for k, row in enumerate(m)]
        object.__setattr__(self, "means", _frozen(np.stack(rows)))

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def n(self) -> int:
        return self.means.shape[1] - 1

    def __getitem__(self, k) -> np.ndarray:
        return self.means[k]

    def __eq__(self, other):
        if not isinstance(other, MarginalMeans):
            return NotImplemented
        return np.array_equal(self.means, other.means)

    def __hash__(self):
        return hash(self.means.tobytes())


# ---------------------------------------------------------------------------
# Continuous agent forecasts
# ---------------------------------------------------------------------------


class AgentDensity(ABC):
    """A continuous agent forecast on the real line."""

    kind: str

    @abstractmethod
    def pdf(self, x): ...

    @abstractmethod
    def cdf(self, x): ...

    @abstractmethod
    def ppf(self, q): ...

    @abstractmethod
    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def var(self) -> float: ...

    def std(self) -> float:
        return float(np.sqrt(self.var()))

    @abstractmethod
    def support(self) -> tuple[float, float]:
        """Finite box carrying all but a negligible amount of the mass."""

    @abstractmethod
    def quadrature_rule(self, nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights with ``sum(w * g(x)) ~= integral of g(x) h(x) dx``."""


def _gauss_legendre(lo: float, hi: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = leggauss(nodes)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


def _normal_pdf(z):
    return np.exp(-0.5 * np.square(z)) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class GaussianAgent(AgentDensity):
    loc: float
    scale: float
    kind = "gaussian"

    def __post_init__(self):
        if not (np.isfinite(self.loc) and np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"gaussian agent needs finite mean and positive stddev, got ({self.loc}, {self.scale})")

    def pdf(self, x):
        return _normal_pdf((np.asarray(x, dtype=float) - self.loc) / self.scale) / self.scale

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.loc) / self.scale)

    def ppf(self, q):
        return self.loc + self.scale * special.ndtri(np.asarray(q, dtype=float))

    def sample(self, size, rng):
        return rng.normal(self.loc, self.scale, size=size)

    def mean(self):
        return float(self.loc)

    def var(self):
        return float(self.scale) ** 2

    def support(self):
        return (self.loc - 10 * self.scale, self.loc + 10 * self.scale)

    def quadrature_rule(self, nodes):
        x, w = _gauss_legendre(*self.support(), nodes)
        return x, w * self.pdf(x)


@dataclass(frozen=True, eq=False)
class GaussianMixtureAgent(AgentDensity):
    weights: np.ndarray
    locs: np.ndarray
    scales: np.ndarray
    kind = "gaussian-mixture"

    def __post_init__(self):
        w, m, s = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (self.weights, self.locs, self.scales))
        if not (w.shape == m.shape == s.shape and w.ndim == 1 and w.size >= 1):
            raise ShapeError("mixture weights, means and stddevs must be equal-length vectors")
        if np.any(w < 0) or abs(w.sum() - 1.0) > TEXT_ATOL:
            raise ValueError(f"mixture weights must be nonnegative and sum to 1, got {w}")
        if np.any(s <= 0):
            raise ValueError("mixture stddevs must be positive")
        object.__setattr__(self, "weights", _frozen(w / w.sum()))
        object.__setattr__(self, "locs", _frozen(m))
        object.__setattr__(self, "scales", _frozen(s))

    def __eq__(self, other):
        if not isinstance(other, GaussianMixtureAgent):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip((self.weights, self.locs, self.scales), (other.weights, other.locs, other.scales)))

    def _z(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., None] - self.locs) / self.scales

    def pdf(self, x):
        return (_normal_pdf(self._z(x)) / self.scales) @ self.weights

    def cdf(self, x):
        return special.ndtr(self._z(x)) @ self.weights

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        lo, hi = self.support()
        out = np.empty(q.shape)
        for idx, qi in np.ndenumerate(q):
            if qi <= 0:
                out[idx] = -np.inf
            elif qi >= 1:
                out[idx] = np.inf
            else:
                a, b = lo, hi
                while self.cdf(a) > qi:
                    a -= (hi - lo)
                while self.cdf(b) < qi:
                    b += (hi - lo)
                out[idx] = optimize.brentq(lambda t: self.cdf(t) - qi, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        return out if out.ndim else float(out)

    def sample(self, size, rng):
        comp = rng.choice(self.weights.size, size=size, p=self.weights)
        return rng.normal(self.locs[comp], self.scales[comp])

    def mean(self):
        return float(self.weights @ self.locs)

    def var(self):
        m = self.mean()
        return float(self.weights @ (self.scales**2 + self.locs**2) - m * m)

    def support(self):
        return (float(np.min(self.locs - 10 * self.scales)), float(np.max(self.locs + 10 * self.scales)))

    def quadrature_rule(self, nodes):
        # one Gauss-Legendre panel per component keeps separated modes resolved
        xs, ws = [], []
        for wc, mc, sc in zip(self.weights, self.locs, self.scales):
            x, w = _gauss_legendre(mc - 10 * sc, mc + 10 * sc, nodes)
            xs.append(x)
            ws.append(wc * w * _normal_pdf((x - mc) / sc) / sc)
        return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True, eq=False)
class EmpiricalAgent(AgentDensity):
    """An agent represented by its forecast samples.

    Binning uses the empirical CDF directly.  Integration treats the agent as
    the discrete measure placing mass ``1/m`` on each sample, so there is no
    density and :meth:`pdf` is unavailable.
    """

    samples: np.ndarray
    kind = "empirical"

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size == 0 or not np.all(np.isfinite(s)):
            raise ValueError("empirical agent needs at least one finite sample")
        object.__setattr__(self, "samples", _frozen(s))

    def __eq__(self, other):
        if not isinstance(other, EmpiricalAgent):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    def pdf(self, x):
        raise CapabilityError("empirical agents have no density; use cdf/bin probabilities or monte-carlo")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.samples, x, side="right") / self.samples.size

    def ppf(self, q):
        return np.quantile(self.samples, q, method="inverted_cdf")

    def sample(self, size, rng):
        return rng.choice(self.samples, size=size, replace=True)

    def mean(self):
        return float(self.samples.mean())

    def var(self):
        return float(self.samples.var())

    def support(self):
        q1, q3 = np.quantile(self.samples, [0.25, 0.75])
        iqr = q3 - q1
        return (float(self.samples[0] - 3 * iqr), float(self.samples[-1] + 3 * iqr))

    def quadrature_rule(self, nodes):
        m = self.samples.size
        return self.samples.copy(), np.full(m, 1.0 / m)


# ---------------------------------------------------------------------------
# Bin grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BinGrid:
    """Equally spaced cut points ``q_1 < ... < q_n``.

    The cuts define ``n + 1`` bins; the first and last are the unbounded
    tails ``(-inf, q_1]`` and ``(q_n, inf)``.  With a single cut the spacing
    is reported as ``inf``.
    """

    cuts: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.cuts, dtype=float))
        if q.ndim != 1 or q.size < 1:
            raise ValueError("a grid needs at least one cut point")
        if not np.all(np.isfinite(q)):
            raise ValueError("cut points must be finite; tails are implicit")
        d = np.diff(q)
        if np.any(d <= 0):
            raise ValueError("cut points must be strictly increasing")
        if d.size and np.max(np.abs(d - d.mean())) > 1e-12 * max(1.0, float(np.max(np.abs(q)))):
            raise ValueError("cut points must be equally spaced")
        object.__setattr__(self, "cuts", _frozen(q))

    @classmethod
    def centered(cls, center: float, half_width: float, n: int) -> "BinGrid":
        """``n`` cuts spanning ``[center - half_width, center + half_width]``."""
        if n == 1:
            return cls(np.array([center]))
        return cls(np.linspace(center - half_width, center + half_width, n))

    @property
    def n(self) -> int:
        return self.cuts.size

    @property
    def spacing(self) -> float:
        if self.n == 1:
            return float("inf")
        return float((self.cuts[-1] - self.cuts[0]) / (self.n - 1))

    def representatives(self) -> np.ndarray:
        """One point per bin: midpoints inside, the nearest cut for each tail."""
        q = self.cuts
        return np.concatenate(([q[0]], 0.5 * (q[:-1] + q[1:]), [q[-1]]))

    def __eq__(self, other):
        if not isinstance(other, BinGrid):
            return NotImplemented
        return np.array_equal(self.cuts, other.cuts)


@dataclass(frozen=True)
class HypercubeGrid:
    """The same :class:`BinGrid` applied to each of ``p`` coordinates."""

    p: int
    grid: BinGrid

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def spacing(self) -> float:
        return self.grid.spacing

    @property
    def n_cells(self) -> int:
        return (self.n + 1) ** self.p

    def grids(self) -> list[BinGrid]:
        return [self.grid] * self.p


def bin_probabilities(agent: AgentDensity, grid: BinGrid) -> SimplexForecast:
    """Agent probability of each bin of ``grid``, tails included.

    Entry ``i`` is ``H(q_i) - H(q_{i-1})`` with ``q_0 = -inf`` and
    ``q_{n+1} = +inf``.
    """
    H = np.concatenate(([0.0], np.asarray(agent.cdf(grid.cuts), dtype=float), [1.0]))
    f = np.clip(np.diff(H), 0.0, 1.0)
    return SimplexForecast(f)

"""Discrete multi-agent synthesis: linear-pool and vertex-tensor forms.

Two parameterizations describe the same updating rule for the decision
maker's event probability given agent forecasts ``f_1, ..., f_K``:

* linear pool:  ``p*(f) = p + sum_k lambda_k . (f_k - mu_k)``
* vertex tensor: ``p*(f) = sum_{i_1..i_K} Pi[i_1, ..., i_K] prod_k f_k[i_k]``

where ``Pi[i_1, ..., i_K]`` is the event probability when every agent is
certain of a single event.  :func:`pool_to_pi` and :func:`pi_to_pool` convert
between them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._rng import run_tasks
from .errors import InvalidCoefficientsError, NonSeparableError, ShapeError
from .forecast_model import AgentPanel, MarginalMeans, as_panel

VERTEX_ATOL = 1e-12
SEPARABILITY_ATOL = 1e-10
MAX_TENSOR_SIZE = 10**7


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearPool:
    """Baseline probability ``p`` with per-agent coefficient vectors.

    ``lam`` may be given with ``n`` entries per agent (the residual
    coefficient is then 0) or with ``n + 1`` entries, in which case each row
    is shifted so its residual entry is 0.  Because ``f_k - mu_k`` sums to
    zero the shift leaves every evaluation unchanged and ``p`` is kept as is.

    With ``check=False`` a pool outside the validity region can be built for
    inspection by :func:`validity_check`; evaluators refuse it.
    """

    p: float
    lam: np.ndarray
    mu: MarginalMeans
    check: bool = field(default=True, repr=False)
    valid: bool = field(init=False, repr=False)

    def __post_init__(self):
        mu = self.mu if isinstance(self.mu, MarginalMeans) else MarginalMeans(self.mu)
        lam = np.atleast_2d(np.asarray(self.lam, dtype=float))
        if lam.shape[0] != mu.K:
            raise ShapeError(f"lambda has {lam.shape[0]} agents but mu has {mu.K}")
        if lam.shape[1] == mu.n:
            lam = np.hstack([lam, np.zeros((mu.K, 1))])
        elif lam.shape[1] == mu.n + 1:
            lam = lam - lam[:, -1:]
        else:
            raise ShapeError(f"lambda rows have {lam.shape[1]} entries, expected {mu.n} or {mu.n + 1}")
        p = float(self.p)
        if not np.isfinite(p) or not np.all(np.isfinite(lam)):
            raise InvalidCoefficientsError("pool coefficients must be finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "lam", _frozen(lam))
        object.__setattr__(self, "mu", mu)
        lo, hi = self.vertex_range()
        valid = 0.0 <= p <= 1.0 and lo >= -VERTEX_ATOL and hi <= 1 + VERTEX_ATOL
        object.__setattr__(self, "valid", bool(valid))
        if self.check and not valid:
            raise InvalidCoefficientsError(
                f"pool is outside the validity region: vertex values span [{lo!r}, {hi!r}], p = {p!r}"
            )

    @property
    def K(self) -> int:
        return self.mu.K

    @property
    def n(self) -> int:
        return self.mu.n

    def base(self) -> float:
        """Event probability when every agent is certain of its residual event."""
        return self.p - float(np.einsum("ki,ki->", self.lam, self.mu.means))

    def vertex_range(self) -> tuple[float, float]:
        """Smallest and largest vertex value; the vertex set is a separable sum."""
        b = self.base()
        return b + float(self.lam.min(axis=1).sum()), b + float(self.lam.max(axis=1).sum())

    def __eq__(self, other):
        if not isinstance(other, LinearPool):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.lam, other.lam) and self.mu == other.mu


@dataclass(frozen=True, eq=False)
class PiTensor:
    """Event probabilities at every joint vertex, shape ``(n + 1,) * K``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 1 or len(set(v.shape)) != 1 or v.shape[0] < 2:
            raise ShapeError(f"tensor must have shape (n + 1,) * K with n >= 1, got {v.shape}")
        if v.size > MAX_TENSOR_SIZE:
            raise ShapeError(f"tensor has {v.size} entries, above the limit of {MAX_TENSOR_SIZE}")
        if not np.all(np.isfinite(v)) or v.min() < -VERTEX_ATOL or v.max() > 1 + VERTEX_ATOL:
            raise InvalidCoefficientsError("tensor entries must be probabilities in [0, 1]")
        object.__setattr__(self, "values", _frozen(np.clip(v, 0.0, 1.0)))

    @property
    def K(self) -> int:
        return self.values.ndim

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    def __getitem__(self, idx):
        return self.values[idx]

    def __eq__(self, other):
        if not isinstance(other, PiTensor):
            return NotImplemented
        return np.array_equal(self.values, other.values)


def _require_match(K: int, n: int, panel: AgentPanel) -> None:
    if (panel.K, panel.n) != (K, n):
        raise ShapeError(f"panel has (K, n) = ({panel.K}, {panel.n}); expected ({K}, {n})")


def _require_valid(pool: LinearPool) -> None:
    if not pool.valid:
        raise InvalidCoefficientsError("pool is outside the validity region; see validity_check")


def eval_linear_pool(pool: LinearPool, panel) -> float:
    """Linear-pool event probability ``p + sum_k lambda_k . (f_k - mu_k)``."""
    _require_valid(pool)
    panel = as_panel(panel)
    _require_match(pool.K, pool.n, panel)
    f = panel.as_array()
    return pool.p + float(np.einsum("ki,ki->", pool.lam, f - pool.mu.means))


def eval_linear_pool_batch(pool: LinearPool, forecasts) -> np.ndarray:
    """Vectorized :func:`eval_linear_pool` over draws.

    ``forecasts`` is a sequence of ``K`` arrays, each ``(draws, n + 1)``.
    No simplex validation is done on the draws.
    """
    _require_valid(pool)
    if len(forecasts) != pool.K:
        raise ShapeError(f"expected {pool.K} agents, got {len(forecasts)}")
    out = np.full(np.shape(forecasts[0])[0], pool.p)
    for lam_k, mu_k, f_k in zip(pool.lam, pool.mu.means, forecasts):
        f_k = np.asarray(f_k, dtype=float)
        if f_k.shape[-1] != pool.n + 1:
            raise ShapeError(f"forecast draws have {f_k.shape[-1]} events, expected {pool.n + 1}")
        out += (f_k - mu_k) @ lam_k
    return out


def _vertex_values(pool: LinearPool) -> np.ndarray:
    K, m = pool.K, pool.n + 1
    if m**K > MAX_TENSOR_SIZE:
        raise ShapeError(f"(n + 1)^K = {m**K} exceeds the tensor limit of {MAX_TENSOR_SIZE}")
    t = np.full((m,) * K, pool.base())
    for k in range(K):
        shape = [1] * K
        shape[k] = m
        t = t + pool.lam[k].reshape(shape)
    return t


def pool_to_pi(pool: LinearPool) -> PiTensor:
    """Vertex tensor of a pool: the pool evaluated with every agent certain.

    Entry ``(i_1, ..., i_K)`` equals ``p - sum_k lambda_k . mu_k + sum_k lambda_k[i_k]``.
    """
    t = _vertex_values(pool)
    lo, hi = float(t.min()), float(t.max())
    if lo < -VERTEX_ATOL or hi > 1 + VERTEX_ATOL:
        raise InvalidCoefficientsError(f"vertex values span [{lo!r}, {hi!r}], outside [0, 1]")
    return PiTensor(t)


def pi_to_pool(pi: PiTensor, mu) -> LinearPool:
    """Recover the linear pool whose vertex tensor is ``pi``.

    Coefficients are read off the tensor along each axis through the
    all-residual vertex.  Raises :class:`NonSeparableError` when the tensor is
    not an additive function of the vertex indices (within 1e-10), since no
    linear pool produces such a tensor.
    """
    mu = mu if isinstance(mu, MarginalMeans) else MarginalMeans(mu)
    K, m = pi.K, pi.n + 1
    if (mu.K, mu.n) != (K, pi.n):
        raise ShapeError(f"mu has (K, n) = ({mu.K}, {mu.n}); tensor has ({K}, {pi.n})")
    v = pi.values
    base = float(v[(m - 1,) * K])
    lam = np.empty((K, m))
    recon = np.full(v.shape, base)
    for k in range(K):
        idx = [m - 1] * K
        idx[k] = slice(None)
        lam[k] = v[tuple(idx)] - base
        shape = [1] * K
        shape[k] = m
        recon = recon + lam[k].reshape(shape)
    gap = float(np.max(np.abs(recon - v)))
    if gap > SEPARABILITY_ATOL:
        raise NonSeparableError(f"tensor is not additively separable (max residual {gap:.3e})")
    p = base + float(np.einsum("ki,ki->", lam, mu.means))
    return LinearPool(p, lam, mu)


def eval_pi_form(pi: PiTensor, panel) -> float:
    """Vertex-tensor event probability: the tensor contracted with every forecast."""
    panel = as_panel(panel)
    _require_match(pi.K, pi.n, panel)
    r = pi.values
    for f in reversed(panel.forecasts):
        r = r @ f.weights
    return float(r)


def _sample_chunk(pi: PiTensor, f: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    m = pi.n + 1
    idx = tuple(rng.choice(m, size=size, p=f_k) for f_k in f)
    prob = pi.values[idx]
    return rng.random(size) < prob


def sample_events(pi: PiTensor, panel, draws: int, seed: int, threads: int = 1) -> np.ndarray:
    """Two-stage draws of the event indicator.

    For each draw, pick a vertex index per agent independently from its
    forecast, then draw the event with the tensor probability at that vertex.
    Draws are split into ``threads`` tasks with generators derived from
    ``(seed, task)``; output is reproducible for a fixed ``(seed, threads)``.
    """
    panel = as_panel(panel)
    _require_match(pi.K, pi.n, panel)
    f = panel.as_array()
    chunks = run_tasks(lambda rng, size: _sample_chunk(pi, f, rng, size), draws, seed, threads)
    return np.concatenate(chunks)


def sample_event(pi: PiTensor, panel, seed: int) -> bool:
    """A single two-stage event draw."""
    return bool(sample_events(pi, panel, 1, seed)[0])


@dataclass(frozen=True)
class ValidityReport:
    n_vertices: int
    min_vertex: float
    max_vertex: float
    argmin: tuple[int, ...]
    argmax: tuple[int, ...]
    passed: bool

    def records(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "min_vertex": self.min_vertex,
            "max_vertex": self.max_vertex,
            "argmin": self.argmin,
            "argmax": self.argmax,
            "status": "pass" if self.passed else "fail",
        }


def validity_check(pool: LinearPool) -> ValidityReport:
    """Enumerate every vertex value of ``pool`` and test containment in [0, 1].

    The pool is multilinear in the forecasts, so it maps every panel into
    [0, 1] exactly when all vertex values lie there.
    """
    t = _vertex_values(pool)
    lo_i = np.unravel_index(int(np.argmin(t)), t.shape)
    hi_i = np.unravel_index(int(np.argmax(t)), t.shape)
    lo, hi = float(t[lo_i]), float(t[hi_i])
    ok = lo >= -VERTEX_ATOL and hi <= 1 + VERTEX_ATOL and 0.0 <= pool.p <= 1.0
    return ValidityReport(
        n_vertices=int(t.size),
        min_vertex=lo,
        max_vertex=hi,
        argmin=tuple(int(i) for i in lo_i),
        argmax=tuple(int(i) for i in hi_i),
        passed=bool(ok),
    )


def vertices(K: int, n: int):
    """All joint vertex indices in row-major order."""
    return itertools.product(range(n + 1), repeat=K)

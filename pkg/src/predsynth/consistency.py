"""Numerical checks of the consistency condition and coefficient invariance.

A prior family over agent forecasts is stored as a mixture of independent
products: each component has a weight and one marginal per agent.  A
single component gives an independent prior; several components sharing a
component label across agents give a dependent one.  Finite-support
families allow the expectation of ``p*`` to be computed exactly by
enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._rng import task_rng
from .discrete import (
    LinearPool,
    PiTensor,
    eval_linear_pool,
    eval_linear_pool_batch,
    eval_pi_form,
    pi_to_pool,
    pool_to_pi,
)
from .errors import DegenerateMeanError, SpecificationError, ShapeError
from .forecast_model import AgentPanel, MarginalMeans

MEAN_ATOL = 1e-12
EXACT_ATOL = 1e-12
INVARIANCE_ATOL = 1e-10
EQUIVALENCE_ATOL = 1e-12
SE_BAND = 5.0
DEFAULT_CONCENTRATION = 2.0


@dataclass(frozen=True, eq=False)
class DirichletMarginal:
    alpha: np.ndarray

    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.dirichlet(self.alpha, size=size)


@dataclass(frozen=True, eq=False)
class AtomicMarginal:
    atoms: np.ndarray
    weights: np.ndarray

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return self.atoms[rng.choice(self.weights.size, size=size, p=self.weights)]


@dataclass(frozen=True, eq=False)
class PriorFamily:
    """A prior over agent forecasts with prescribed marginal means."""

    kind: str
    components: tuple[tuple[float, tuple], ...]
    target: MarginalMeans

    def __post_init__(self):
        w = np.array([c[0] for c in self.components])
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be positive and sum to 1")
        for k in range(self.K):
            if np.max(np.abs(self.marginal_mean(k) - self.target[k])) > MEAN_ATOL:
                raise SpecificationError(f"agent {k} mean does not match its target")

    @property
    def K(self) -> int:
        return self.target.K

    @property
    def finite(self) -> bool:
        return all(isinstance(m, AtomicMarginal) for _, ms in self.components for m in ms)

    def marginal_mean(self, k: int) -> np.ndarray:
        return sum(w * ms[k].mean() for w, ms in self.components)

    def sample(self, draws: int, rng: np.random.Generator) -> list[np.ndarray]:
        """``K`` arrays of shape ``(draws, n + 1)``; agents share the component draw."""
        weights = np.array([c[0] for c in self.components])
        comp = rng.choice(weights.size, size=draws, p=weights)
        out = [np.empty((draws, self.target.n + 1)) for _ in range(self.K)]
        for c, (_, margs) in enumerate(self.components):
            sel = np.flatnonzero(comp == c)
            for k, marg in enumerate(margs):
                out[k][sel] = marg.sample(sel.size, rng)
        return out

    def support(self):
        """Yield ``(probability, [f_1, ..., f_K])`` over the full joint support."""
        if not self.finite:
            raise SpecificationError(f"{self.kind} prior does not have finite support")
        for w, margs in self.components:
            for combo in itertools.product(*(zip(m.weights, m.atoms) for m in margs)):
                prob = w * float(np.prod([c[0] for c in combo]))
                yield prob, [c[1] for c in combo]


def _as_means(mu) -> MarginalMeans:
    return mu if isinstance(mu, MarginalMeans) else MarginalMeans(mu)


def _per_agent(value, K: int) -> np.ndarray:
    v = np.broadcast_to(np.asarray(value, dtype=float), (K,))
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("concentrations must be positive and finite")
    return v


def dirichlet_prior(mu, concentration=DEFAULT_CONCENTRATION) -> PriorFamily:
    """Independent Dirichlet(c_k * mu_k) prior for each agent."""
    mu = _as_means(mu)
    c = _per_agent(concentration, mu.K)
    if np.any(mu.means <= 0):
        raise DegenerateMeanError("Dirichlet priors need strictly positive means; use two_point_prior")
    margs = tuple(DirichletMarginal(c[k] * mu[k]) for k in range(mu.K))
    return PriorFamily("independent-dirichlet", ((1.0, margs),), mu)


def _two_point(m: np.ndarray) -> AtomicMarginal:
    # atom at vertex e_0 with weight m_0; the other atom carries the rest
    w0 = m[0]
    vertex = np.zeros_like(m)
    vertex[0] = 1.0
    other = m.copy()
    other[0] = 0.0
    other = other / (1.0 - w0)
    return AtomicMarginal(np.stack([vertex, other]), np.array([w0, 1.0 - w0]))


def _require_interior(mu: MarginalMeans) -> None:
    if np.any(mu.means <= 0) or np.any(mu.means >= 1):
        raise DegenerateMeanError("target means must lie strictly inside the simplex")


def two_point_prior(mu) -> PriorFamily:
    """Independent two-atom prior per agent with exactly the target mean.

    One atom sits at the first vertex with weight ``mu_k[0]``; the other is
    ``(0, mu_k[1:]) / (1 - mu_k[0])``.
    """
    mu = _as_means(mu)
    _require_interior(mu)
    margs = tuple(_two_point(mu[k]) for k in range(mu.K))
    return PriorFamily("two-point-grid", ((1.0, margs),), mu)


def _shift(m: np.ndarray, strength: float) -> np.ndarray:
    # direction towards the largest-mean vertex (lowest index on ties), scaled
    # so both mu + d and mu - d stay strictly inside the simplex
    j = int(np.argmax(m))
    e = np.zeros_like(m)
    e[j] = 1.0
    t = strength * min(1.0, m[j] / (1.0 - m[j]))
    return t * (e - m)


def dependent_mixture_prior(mu, concentration=DEFAULT_CONCENTRATION, base: str = "dirichlet", strength: float = 0.5) -> PriorFamily:
    """Equal mixture of two independent components with means ``mu +/- d``.

    Every agent moves to ``mu_k + d_k`` in one component and ``mu_k - d_k`` in
    the other, which makes the agents' forecasts positively dependent while
    the marginal means stay exactly ``mu``.  ``base`` selects Dirichlet or
    two-point components; the latter has finite support.
    """
    mu = _as_means(mu)
    _require_interior(mu)
    if not 0 < strength < 1:
        raise ValueError("strength must lie in (0, 1)")
    c = _per_agent(concentration, mu.K)
    shifts = [_shift(mu[k], strength) for k in range(mu.K)]
    comps = []
    for sign in (1.0, -1.0):
        means = [mu[k] + sign * shifts[k] for k in range(mu.K)]
        if base == "dirichlet":
            margs = tuple(DirichletMarginal(c[k] * means[k]) for k in range(mu.K))
        elif base == "two-point":
            margs = tuple(_two_point(means[k]) for k in range(mu.K))
        else:
            raise ValueError(f"unknown base {base!r}")
        comps.append((0.5, margs))
    return PriorFamily(f"dependent-mixture-{base}", tuple(comps), mu)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyReport:
    family: str
    exact: bool
    target: float
    estimate: float
    deviation: float
    std_error: float
    draws: int
    passed: bool

    def records(self) -> dict:
        return {
            "family": self.family,
            "method": "enumeration" if self.exact else "monte-carlo",
            "draws": self.draws,
            "target_p": self.target,
            "estimate": self.estimate,
            "deviation": self.deviation,
            "std_error": self.std_error,
            "status": "pass" if self.passed else "fail",
        }


def check_consistency(pool: LinearPool, family: PriorFamily, draws: int = 100_000, seed: int = 0) -> ConsistencyReport:
    """Compare ``E[p*(f)]`` under ``family`` with the baseline ``p``.

    Finite-support families are enumerated and must agree within 1e-12;
    otherwise ``draws`` Monte-Carlo draws must land within 5 standard errors.
    """
    if (family.K, family.target.n) != (pool.K, pool.n):
        raise ShapeError("prior family and pool have different shapes")
    if np.max(np.abs(family.target.means - pool.mu.means)) > MEAN_ATOL:
        raise SpecificationError("prior family means do not match the pool's marginal means")
    if family.finite:
        total = 0.0
        for prob, fs in family.support():
            total += prob * eval_linear_pool(pool, AgentPanel.from_arrays(fs))
        dev = abs(total - pool.p)
        return ConsistencyReport(family.kind, True, pool.p, total, dev, 0.0, 0, dev < EXACT_ATOL)
    values = eval_linear_pool_batch(pool, family.sample(draws, task_rng(seed)))
    est = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(draws)) if draws > 1 else float("inf")
    dev = abs(est - pool.p)
    ok = dev <= SE_BAND * se if se > 0 else dev < EXACT_ATOL
    return ConsistencyReport(family.kind, False, pool.p, est, dev, se, int(draws), bool(ok))


@dataclass(frozen=True)
class InvarianceReport:
    dropped: int
    lam_analytic: np.ndarray
    lam_tensor: np.ndarray
    p_analytic: float
    p_tensor: float
    max_deviation: float
    passed: bool

    def records(self) -> dict:
        return {
            "dropped_agent": self.dropped,
            "p_analytic": self.p_analytic,
            "p_tensor": self.p_tensor,
            "max_lambda_deviation": self.max_deviation,
            "status": "pass" if self.passed else "fail",
        }


def marginalize_agent(pool: LinearPool, agent: int) -> LinearPool:
    """Pool for the remaining agents after averaging ``agent`` out at its mean."""
    if pool.K < 2:
        raise ValueError("need at least two agents to drop one")
    keep = [k for k in range(pool.K) if k != agent]
    mu_d = pool.mu[agent]
    p = pool.p + float(pool.lam[agent] @ (mu_d - mu_d))
    return LinearPool(p, pool.lam[keep], MarginalMeans(pool.mu.means[keep]))


def check_coefficient_invariance(pool: LinearPool, agent_to_drop: int) -> InvarianceReport:
    """Drop one agent two ways and compare the surviving coefficients.

    The analytic route substitutes the dropped agent's mean into the pool.
    The tensor route averages the vertex tensor over the dropped axis with
    weights ``mu`` and reads the coefficients back with :func:`pi_to_pool`.
    """
    if pool.K < 2:
        raise ValueError("need at least two agents to drop one")
    if not 0 <= agent_to_drop < pool.K:
        raise IndexError(f"agent index {agent_to_drop} out of range for K={pool.K}")
    analytic = marginalize_agent(pool, agent_to_drop)
    t = pool_to_pi(pool).values
    marg = np.tensordot(t, pool.mu[agent_to_drop], axes=([agent_to_drop], [0]))
    recon = pi_to_pool(PiTensor(marg), analytic.mu)
    dev = max(float(np.max(np.abs(analytic.lam - recon.lam))), abs(analytic.p - recon.p), abs(analytic.p - pool.p))
    return InvarianceReport(
        dropped=agent_to_drop,
        lam_analytic=analytic.lam,
        lam_tensor=recon.lam,
        p_analytic=analytic.p,
        p_tensor=recon.p,
        max_deviation=dev,
        passed=dev < INVARIANCE_ATOL,
    )


def random_means(K: int, n: int, rng: np.random.Generator) -> MarginalMeans:
    """Means drawn from a flat Dirichlet, kept away from the simplex boundary."""
    m = rng.dirichlet(np.ones(n + 1), size=K)
    m = 0.98 * m + 0.02 / (n + 1)
    return MarginalMeans(m / m.sum(axis=1, keepdims=True))


def random_pool(K: int, n: int, rng: np.random.Generator, mu=None) -> LinearPool:
    """A random pool inside the validity region.

    Raw coefficients are Gaussian; they are then scaled by a uniform fraction
    of the largest factor that keeps every vertex value in [0, 1].
    """
    mu = random_means(K, n, rng) if mu is None else _as_means(mu)
    p = rng.uniform(0.02, 0.98)
    lam = rng.normal(size=(K, n + 1))
    lam[:, -1] = 0.0
    dev = lam - np.einsum("ki,ki->k", lam, mu.means)[:, None]
    hi, lo = dev.max(axis=1).sum(), dev.min(axis=1).sum()
    limit = min((1 - p) / hi if hi > 0 else np.inf, p / -lo if lo < 0 else np.inf)
    scale = rng.uniform(0.0, 1.0) * limit * (1 - 1e-9)
    return LinearPool(p, lam * scale, mu)


def random_panel(K: int, n: int, rng: np.random.Generator) -> AgentPanel:
    """Forecasts drawn from a flat Dirichlet."""
    return AgentPanel.from_arrays(rng.dirichlet(np.ones(n + 1), size=K))


@dataclass(frozen=True)
class EquivalenceReport:
    K: int
    n: int
    trials: int
    seed: int
    max_deviation: float
    worst_trial: int
    passed: bool

    def records(self) -> dict:
        return {
            "K": self.K,
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "max_deviation": self.max_deviation,
            "worst_trial": self.worst_trial,
            "status": "pass" if self.passed else "fail",
        }


def brute_force_equivalence(K: int, n: int, trials: int = 1000, seed: int = 0) -> EquivalenceReport:
    """Evaluate both pool forms on random valid pools and panels.

    Trial ``t`` uses the generator derived from ``(seed, t)``.
    """
    if (n + 1) ** K > 10**5:
        raise ValueError("(n + 1)^K must be at most 1e5")
    worst, worst_t = 0.0, -1
    for t in range(trials):
        rng = task_rng(seed, t)
        pool = random_pool(K, n, rng)
        panel = random_panel(K, n, rng)
        d = abs(eval_linear_pool(pool, panel) - eval_pi_form(pool_to_pi(pool), panel))
        if d > worst or worst_t < 0:
            worst, worst_t = d, t
    return EquivalenceReport(K, n, trials, seed, worst, worst_t, worst < EQUIVALENCE_ATOL)


"""From discrete event synthesis to the continuous integral.

Binning each agent's distribution on a grid turns a continuous problem into
a discrete one: the agents' bin probabilities form a panel, and the kernel
CDF evaluated at one representative point per bin forms the vertex tensor.
Contracting the two gives ``P(Y <= y | H_n)``, a Riemann sum that tends to
``integral of Pi(y | x) h(x) dx`` as the bin width shrinks.
"""

from __future__ import annotations

import io
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .continuous import DiracKernel, Quadrature, SynthesisKernel, SynthesisProblem, analytic_cdf, synthesize_cdf
from .discrete import MAX_TENSOR_SIZE, PiTensor, eval_pi_form
from .errors import CapabilityError, ShapeError
from .forecast_model import AgentDensity, AgentPanel, BinGrid, HypercubeGrid, bin_probabilities

GRID_HALF_WIDTH_SD = 8.0
REFERENCE_NODES = 1024


def _representative_points(grids: Sequence[BinGrid]) -> np.ndarray:
    reps = [g.representatives() for g in grids]
    mesh = np.meshgrid(*reps, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def induced_pi_tensor(kernel: SynthesisKernel, grids: Sequence[BinGrid], y: float) -> PiTensor:
    """Kernel CDF at ``y`` for every combination of bin representatives.

    Interior bins are represented by their midpoints, the two tail bins by
    their finite cut point.
    """
    grids = list(grids)
    if len(grids) != kernel.arity:
        raise ShapeError(f"kernel takes {kernel.arity} agents, got {len(grids)} grids")
    if len({g.n for g in grids}) != 1:
        raise ShapeError("all grids must have the same number of cuts")
    m = grids[0].n + 1
    if m ** len(grids) > MAX_TENSOR_SIZE:
        raise CapabilityError(f"{m ** len(grids)} tensor entries exceed the limit of {MAX_TENSOR_SIZE}")
    X = _representative_points(grids)
    values = kernel.cdf(np.array([y], dtype=float), X)[0]
    return PiTensor(values.reshape((m,) * len(grids)))


def binned_panel(agents: Sequence[AgentDensity], grids: Sequence[BinGrid]) -> AgentPanel:
    return AgentPanel(tuple(bin_probabilities(a, g) for a, g in zip(agents, grids)))


def discrete_cdf_approx(problem: SynthesisProblem, grids: Sequence[BinGrid], y: float) -> float:
    """Discrete synthesis of the binned agents for the event ``{Y <= y}``."""
    grids = list(grids)
    if len(grids) != problem.K:
        raise ShapeError(f"need one grid per agent ({problem.K}), got {len(grids)}")
    return eval_pi_form(induced_pi_tensor(problem.kernel, grids, y), binned_panel(problem.agents, grids))


def default_grids(problem: SynthesisProblem, n: int, half_width_sd: float = GRID_HALF_WIDTH_SD) -> list[BinGrid]:
    """``n`` cuts per agent centred on its mean and spanning +/- 8 standard deviations."""
    return [BinGrid.centered(a.mean(), half_width_sd * a.std(), n) for a in problem.agents]


def reference_cdf(problem: SynthesisProblem, y: float, reference="analytic") -> float:
    """Target value of ``P(Y <= y | H)`` for a convergence study."""
    if isinstance(reference, (int, float)) and not isinstance(reference, bool):
        return float(reference)
    if reference == "analytic":
        if isinstance(problem.kernel, DiracKernel):
            return float(problem.agents[problem.kernel.agent].cdf(y))
        return float(analytic_cdf(problem, y))
    if reference == "quadrature":
        return float(synthesize_cdf(problem, y, Quadrature(REFERENCE_NODES)))
    raise ValueError(f"unknown reference {reference!r}")


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    approx: float
    reference: float
    abs_error: float


@dataclass(frozen=True)
class ConvergenceReport:
    y: float
    description: str
    rows: tuple[ConvergenceRow, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if ns != sorted(ns):
            raise ValueError("rows must be sorted by n")

    @property
    def final_error(self) -> float:
        return self.rows[-1].abs_error

    def errors(self) -> np.ndarray:
        return np.array([r.abs_error for r in self.rows])

    def ratios(self) -> list[tuple[int, float]]:
        """``(n, err(n) / err(previous n))`` for each row after the first."""
        out = []
        for prev, cur in zip(self.rows, self.rows[1:]):
            out.append((cur.n, cur.abs_error / prev.abs_error if prev.abs_error > 0 else float("nan")))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,approx,reference,abs_error\n")
        for r in self.rows:
            buf.write(f"{r.n},{r.approx:.17g},{r.reference:.17g},{r.abs_error:.17g}\n")
        return buf.getvalue()


def convergence_study(
    problem: SynthesisProblem,
    y: float,
    n_values: Sequence[int],
    reference="analytic",
    grids: Callable[[int], Sequence[BinGrid]] | None = None,
) -> ConvergenceReport:
    """Discrete approximations of ``P(Y <= y | H)`` for increasingly fine grids.

    ``reference`` is ``"analytic"``, ``"quadrature"`` (1024-node rule) or a
    number.  ``grids`` maps a cut count to one grid per agent and defaults
    to :func:`default_grids`.
    """
    ns = [int(n) for n in n_values]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise ValueError("n_values must be a non-empty increasing list of positive integers")
    make = grids if grids is not None else (lambda n: default_grids(problem, n))
    ref = reference_cdf(problem, y, reference)
    rows = []
    for n in ns:
        approx = discrete_cdf_approx(problem, make(n), y)
        rows.append(ConvergenceRow(n, approx, ref, abs(approx - ref)))
    desc = f"kernel={problem.kernel.kind} agents={','.join(a.kind for a in problem.agents)} reference={reference}"
    return ConvergenceReport(float(y), desc, tuple(rows))


# ---------------------------------------------------------------------------
# One agent forecasting several coordinates
# ---------------------------------------------------------------------------


class MultivariateAgent(ABC):
    """An agent's joint distribution over ``p`` coordinates."""

    p: int

    @abstractmethod
    def joint_cdf(self, x: np.ndarray) -> np.ndarray:
        """Joint CDF at points ``x`` of shape ``(M, p)``; entries may be +/-inf."""

    def cell_probabilities(self, grid: HypercubeGrid) -> np.ndarray:
        """Mass of every grid cell by inclusion-exclusion on the joint CDF."""
        _check_cells(grid)
        ext = np.concatenate(([-np.inf], grid.grid.cuts, [np.inf]))
        mesh = np.meshgrid(*([ext] * grid.p), indexing="ij")
        F = self.joint_cdf(np.column_stack([m.ravel() for m in mesh])).reshape((ext.size,) * grid.p)
        for axis in range(grid.p):
            F = np.diff(F, axis=axis)
        return np.clip(F, 0.0, 1.0)


def _check_cells(grid: HypercubeGrid) -> None:
    if grid.n_cells > MAX_TENSOR_SIZE:
        raise CapabilityError(f"{grid.n_cells} cells exceed the limit of {MAX_TENSOR_SIZE}")


@dataclass(frozen=True)
class IndependentCoordinates(MultivariateAgent):
    """Coordinates independent under the agent, each with its own marginal."""

    marginals: tuple[AgentDensity, ...]

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def p(self) -> int:
        return len(self.marginals)

    def joint_cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[0])
        for j, h in enumerate(self.marginals):
            out = out * h.cdf(x[:, j])
        return out

    def product_cell_probabilities(self, grid: HypercubeGrid) -> np.ndarray:
        """Cell masses as the outer product of per-coordinate bin probabilities."""
        _check_cells(grid)
        out = np.ones(())
        for h in self.marginals:
            out = np.multiply.outer(out, bin_probabilities(h, grid.grid).weights)
        return out


@dataclass(frozen=True, eq=False)
class JointGaussian(MultivariateAgent):
    """Multivariate normal agent; cell masses come only from the joint CDF."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "cov", np.atleast_2d(np.asarray(self.cov, dtype=float)))

    @property
    def p(self) -> int:
        return self.mean.size

    def joint_cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[0])
        # scipy mishandles points with a -inf coordinate in some versions
        finite_low = ~np.any(np.isneginf(x), axis=1)
        if np.any(finite_low):
            dist = stats.multivariate_normal(self.mean, self.cov)
            out[finite_low] = np.atleast_1d(dist.cdf(x[finite_low]))
        return out


def multivariate_discrete_cdf(agent: MultivariateAgent, kernel: SynthesisKernel, grid: HypercubeGrid, y: float, path: str = "product") -> float:
    """Discrete synthesis for one agent forecasting ``p`` coordinates.

    Every grid cell is an event; the result is the sum over cells of the
    kernel CDF at the cell representative times the agent's cell mass.
    ``path="product"`` builds cell masses from the marginals (independent
    coordinates only); ``path="joint"`` uses inclusion-exclusion on the
    joint CDF.
    """
    if kernel.arity != grid.p or agent.p != grid.p:
        raise ShapeError(f"kernel arity {kernel.arity}, agent dimension {agent.p} and grid dimension {grid.p} must agree")
    _check_cells(grid)
    if path == "product":
        if not isinstance(agent, IndependentCoordinates):
            raise CapabilityError("product path needs an agent with independent coordinates")
        cells = agent.product_cell_probabilities(grid)
    elif path == "joint":
        cells = agent.cell_probabilities(grid)
    else:
        raise ValueError(f"unknown path {path!r}")
    pi = induced_pi_tensor(kernel, grid.grids(), y)
    return float(np.clip(np.sum(pi.values * cells), 0.0, 1.0))

"""Bayesian predictive synthesis.

Combine agent forecasts into a decision maker's forecast, either for events
(:mod:`predsynth.discrete`) or for continuous quantities
(:mod:`predsynth.continuous`), and check numerically how the two connect
(:mod:`predsynth.bridge`, :mod:`predsynth.consistency`).
"""

from .bridge import (
    ConvergenceReport,
    IndependentCoordinates,
    JointGaussian,
    convergence_study,
    default_grids,
    discrete_cdf_approx,
    induced_pi_tensor,
    multivariate_discrete_cdf,
)
from .consistency import (
    PriorFamily,
    brute_force_equivalence,
    check_coefficient_invariance,
    check_consistency,
    dependent_mixture_prior,
    dirichlet_prior,
    random_panel,
    random_pool,
    two_point_prior,
)
from .continuous import (
    DiracKernel,
    LinearGaussianKernel,
    MonteCarlo,
    Quadrature,
    SynthesisProblem,
    TableKernel,
    analytic_reference,
    synthesize_cdf,
    synthesize_density,
    synthesize_moments,
    synthesize_samples,
)
from .discrete import (
    LinearPool,
    PiTensor,
    eval_linear_pool,
    eval_pi_form,
    pi_to_pool,
    pool_to_pi,
    sample_event,
    sample_events,
    validity_check,
)
from .errors import (
    CapabilityError,
    DegenerateMeanError,
    InvalidCoefficientsError,
    InvalidForecastError,
    NonSeparableError,
    PredsynthError,
    ShapeError,
    SpecificationError,
)
from .forecast_model import (
    AgentPanel,
    BinGrid,
    EmpiricalAgent,
    GaussianAgent,
    GaussianMixtureAgent,
    HypercubeGrid,
    MarginalMeans,
    SimplexForecast,
    bin_probabilities,
    make_simplex_forecast,
)

__version__ = "0.1.0"

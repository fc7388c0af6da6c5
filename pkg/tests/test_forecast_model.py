import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predsynth import (
    AgentPanel,
    BinGrid,
    EmpiricalAgent,
    GaussianAgent,
    GaussianMixtureAgent,
    HypercubeGrid,
    InvalidForecastError,
    MarginalMeans,
    ShapeError,
    SimplexForecast,
    bin_probabilities,
    make_simplex_forecast,
)
from predsynth.errors import CapabilityError
from scipy import integrate

from conftest import normal_cdf


class TestMakeSimplexForecast:
    def test_residual_appended(self):
        np.testing.assert_allclose(make_simplex_forecast([0.3, 0.5]).weights, [0.3, 0.5, 0.2], atol=1e-15)

    def test_certainty(self):
        assert make_simplex_forecast([1.0]).weights.tolist() == [1.0, 0.0]

    def test_empty_rejected(self):
        with pytest.raises(InvalidForecastError):
            make_simplex_forecast([])

    @pytest.mark.parametrize("raw", [[0.6, 0.6], [-0.1, 0.5], [1.2]])
    def test_invalid(self, raw):
        with pytest.raises(InvalidForecastError):
            make_simplex_forecast(raw)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=6).filter(lambda v: sum(v) <= 1))
    def test_idempotent_reextraction(self, raw):
        f = make_simplex_forecast(raw)
        g = make_simplex_forecast(f.weights[:-1])
        np.testing.assert_allclose(f.weights, g.weights, atol=1e-15)
        assert abs(f.weights.sum() - 1) < 1e-12


class TestTypes:
    def test_forecast_is_immutable(self):
        f = SimplexForecast([0.5, 0.5])
        with pytest.raises(ValueError):
            f.weights[0] = 1.0

    def test_forecast_sum_checked(self):
        with pytest.raises(InvalidForecastError):
            SimplexForecast([0.5, 0.6])

    def test_panel_shapes(self):
        panel = AgentPanel.from_arrays([[0.2, 0.8], [0.5, 0.5]])
        assert (panel.K, panel.n) == (2, 1)
        with pytest.raises(ShapeError):
            AgentPanel.from_arrays([[0.2, 0.8], [0.2, 0.3, 0.5]])

    def test_text_tolerance(self):
        with pytest.raises(InvalidForecastError):
            MarginalMeans([[0.5, 0.5 + 1e-10]])
        m = MarginalMeans([[0.5, 0.5 + 1e-10]], atol=1e-9)
        assert m.K == 1


class TestAgentDensities:
    @pytest.mark.parametrize(
        "agent",
        [GaussianAgent(0.3, 1.7), GaussianMixtureAgent([0.3, 0.7], [-2.0, 3.0], [0.5, 1.5])],
    )
    def test_density_integrates_to_one(self, agent):
        lo, hi = agent.support()
        total, _ = integrate.quad(agent.pdf, lo, hi, limit=200, points=[agent.mean()])
        assert abs(total - 1) < 1e-6
        x, w = agent.quadrature_rule(128)
        assert abs(w.sum() - 1) < 1e-6

    @pytest.mark.parametrize(
        "agent",
        [GaussianAgent(0.0, 1.0), GaussianMixtureAgent([0.5, 0.5], [-1.0, 1.0], [1.0, 0.5]), EmpiricalAgent(np.random.default_rng(1).normal(size=500))],
    )
    def test_cdf_monotone_with_limits(self, agent):
        x = np.linspace(-30, 30, 2001)
        F = agent.cdf(x)
        assert np.all(np.diff(F) >= 0)
        assert agent.cdf(-np.inf) == 0 and agent.cdf(np.inf) == 1

    def test_mixture_quantile_inverts_cdf(self):
        a = GaussianMixtureAgent([0.3, 0.7], [-2.0, 3.0], [0.5, 1.5])
        q = np.array([0.01, 0.3, 0.5, 0.99])
        np.testing.assert_allclose(a.cdf(a.ppf(q)), q, atol=1e-12)

    def test_mixture_moments(self):
        a = GaussianMixtureAgent([0.3, 0.7], [-2.0, 3.0], [0.5, 1.5])
        x, w = a.quadrature_rule(128)
        assert abs(w @ x - a.mean()) < 1e-10
        assert abs(w @ (x - a.mean()) ** 2 - a.var()) < 1e-9

    def test_empirical_has_no_density(self):
        with pytest.raises(CapabilityError):
            EmpiricalAgent([1.0, 2.0]).pdf(0.0)


class TestBinGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            BinGrid([0.0, 0.0])
        with pytest.raises(ValueError):
            BinGrid([0.0, 1.0, 3.0])
        assert BinGrid([0.0]).spacing == np.inf
        assert BinGrid.centered(0, 8, 5).spacing == pytest.approx(4.0)

    def test_representatives(self):
        np.testing.assert_allclose(BinGrid([-1.0, 0.0, 1.0]).representatives(), [-1.0, -0.5, 0.5, 1.0])

    def test_hypercube(self):
        h = HypercubeGrid(2, BinGrid([0.0, 1.0]))
        assert h.n_cells == 9 and h.spacing == 1.0


class TestBinProbabilities:
    def test_symmetric_single_cut(self):
        np.testing.assert_allclose(bin_probabilities(GaussianAgent(0, 1), BinGrid([0.0])).weights, [0.5, 0.5], atol=1e-15)

    def test_against_high_precision_cdf(self):
        f = bin_probabilities(GaussianAgent(0, 1), BinGrid([-1.0, 1.0])).weights
        expected = [normal_cdf(-1), normal_cdf(1) - normal_cdf(-1), 1 - normal_cdf(1)]
        np.testing.assert_allclose(f, expected, atol=1e-15)
        np.testing.assert_allclose(f, [0.1587, 0.6827, 0.1587], atol=5e-5)

    def test_empirical_large_sample(self):
        x = np.random.default_rng(7).standard_normal(10**6)
        f = bin_probabilities(EmpiricalAgent(x), BinGrid([0.0])).weights
        np.testing.assert_allclose(f, [0.5, 0.5], atol=0.002)

    @settings(max_examples=60)
    @given(
        loc=st.floats(-5, 5),
        scale=st.floats(0.1, 5),
        start=st.floats(-10, 10),
        step=st.floats(0.05, 3),
        n=st.integers(1, 40),
    )
    def test_on_simplex(self, loc, scale, start, step, n):
        grid = BinGrid(start + step * np.arange(n))
        f = bin_probabilities(GaussianAgent(loc, scale), grid).weights
        assert abs(f.sum() - 1) < 1e-12
        assert np.all((f >= 0) & (f <= 1))

    @settings(max_examples=40)
    @given(loc=st.floats(-3, 3), scale=st.floats(0.2, 3), n=st.integers(2, 30))
    def test_refinement_preserves_mass(self, loc, scale, n):
        # doubling the cut density: every coarse bin is a union of fine bins
        coarse = BinGrid(np.linspace(-4, 4, n))
        fine = BinGrid(np.linspace(-4, 4, 2 * n - 1))
        agent = GaussianAgent(loc, scale)
        fc = bin_probabilities(agent, coarse).weights
        ff = bin_probabilities(agent, fine).weights
        merged = np.concatenate(([ff[0]], ff[1:-1].reshape(-1, 2).sum(axis=1), [ff[-1]]))
        np.testing.assert_allclose(merged, fc, atol=1e-12)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from conftest import normal_cdf, normal_pdf
from predsynth import (
    CapabilityError,
    DiracKernel,
    EmpiricalAgent,
    GaussianAgent,
    GaussianMixtureAgent,
    LinearGaussianKernel,
    MonteCarlo,
    Quadrature,
    ShapeError,
    SynthesisProblem,
    TableKernel,
    analytic_reference,
    synthesize_cdf,
    synthesize_density,
    synthesize_moments,
    synthesize_samples,
)

STD = GaussianAgent(0.0, 1.0)
CONV = SynthesisProblem((STD,), LinearGaussianKernel(0.0, [1.0], 1.0))
PAIR = SynthesisProblem((GaussianAgent(0, 1), GaussianAgent(2, 1)), LinearGaussianKernel(1.0, [0.5, 0.5], 0.1))
DIRAC = SynthesisProblem((STD,), DiracKernel(0))


def ramp_table():
    # CDF rows of U(x - 1, x + 1) sampled on a fine y grid, for x in {-1, 0, 1}
    xg = np.array([-1.0, 0.0, 1.0])
    yg = np.linspace(-3, 3, 61)
    table = np.clip((yg[None, :] - (xg[:, None] - 1)) / 2, 0, 1)
    return TableKernel(xg, yg, table)


class TestKernels:
    @pytest.mark.parametrize("kernel,x", [
        (LinearGaussianKernel(0.3, [1.0, -2.0], 0.7), [[0.1, 0.4], [-1.0, 2.0]]),
        (ramp_table(), [[-1.0], [0.25], [5.0]]),
    ])
    def test_density_integrates_to_one(self, kernel, x):
        for row in np.asarray(x):
            f = lambda y: kernel.pdf(np.array([y]), row[None, :])[0, 0]
            total, _ = integrate.quad(f, -30, 30, points=[-3, -2, -1, 0, 1, 2, 3], limit=400)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_cdf_monotone_with_limits(self):
        k = LinearGaussianKernel(0.0, [1.0], 1.0)
        y = np.linspace(-50, 50, 1001)
        c = k.cdf(y, np.array([[0.3]]))[:, 0]
        assert np.all(np.diff(c) >= 0) and c[0] < 1e-12 and c[-1] == 1.0

    def test_linear_gaussian_needs_positive_sd(self):
        with pytest.raises(ValueError):
            LinearGaussianKernel(0.0, [1.0], 0.0)

    def test_arity_mismatch(self):
        with pytest.raises(ShapeError):
            SynthesisProblem((STD, STD), LinearGaussianKernel(0.0, [1.0], 1.0))

    def test_dirac_has_no_pdf(self):
        with pytest.raises(CapabilityError):
            DiracKernel(0).pdf([0.0], [[0.0]])

    def test_table_validation(self):
        with pytest.raises(ValueError):
            TableKernel([0.0], [0.0, 1.0], [[0.0, 0.9]])
        with pytest.raises(ValueError):
            TableKernel([0.0], [0.0, 1.0, 2.0], [[0.0, 0.7, 0.6]])

    def test_table_interpolates_between_rows(self):
        k = ramp_table()
        # halfway between x=0 and x=1 the law is an equal mixture of the two rows
        expect = 0.5 * k.cdf([0.5], [[0.0]]) + 0.5 * k.cdf([0.5], [[1.0]])
        np.testing.assert_allclose(k.cdf([0.5], [[0.5]]), expect, atol=1e-15)


class TestSamples:
    def test_dirac_reproduces_agent_draws(self):
        N = 10**5
        s = synthesize_samples(DIRAC, N, seed=7)
        direct = np.concatenate([STD.sample(N, np.random.default_rng(np.random.SeedSequence(7, spawn_key=(0,))))])
        np.testing.assert_array_equal(s, direct)
        assert abs(s.mean()) < 4 / np.sqrt(N)

    @pytest.mark.slow
    @pytest.mark.parametrize("problem,mean,var", [(CONV, 0.0, 2.0), (PAIR, 2.0, 0.51)])
    def test_moments_at_one_million(self, problem, mean, var):
        s = synthesize_samples(problem, 10**6, seed=11)
        assert abs(s.mean() - mean) < 4 * np.sqrt(var / 10**6)
        assert s.var() == pytest.approx(var, rel=0.01)

    def test_reproducible(self):
        assert np.array_equal(synthesize_samples(PAIR, 1000, 3), synthesize_samples(PAIR, 1000, 3))
        assert np.array_equal(synthesize_samples(PAIR, 1000, 3, threads=2), synthesize_samples(PAIR, 1000, 3, threads=2))
        assert not np.array_equal(synthesize_samples(PAIR, 1000, 3), synthesize_samples(PAIR, 1000, 4))

    def test_needs_positive_count(self):
        with pytest.raises(ValueError):
            synthesize_samples(CONV, 0, 1)

    def test_flat_table_cannot_sample(self):
        yg = np.array([0.0, 1.0, 2.0, 3.0])
        k = TableKernel([0.0], yg, [[0.0, 0.5, 0.5, 1.0]])
        with pytest.raises(CapabilityError):
            synthesize_samples(SynthesisProblem((STD,), k), 10, 0)

    def test_table_sampler_matches_cdf(self):
        xg = np.array([-1.0, 0.0, 1.0])
        yg = np.linspace(-3, 3, 61)
        # strictly increasing rows: a small uniform floor under each ramp
        table = 0.9 * np.clip((yg[None, :] - (xg[:, None] - 1)) / 2, 0, 1) + 0.1 * (yg + 3) / 6
        problem = SynthesisProblem((GaussianAgent(0.0, 0.5),), TableKernel(xg, yg, table))
        s = synthesize_samples(problem, 10**5, 2)
        ys = np.array([-1.0, -0.2, 0.0, 0.7, 1.4])
        eps = np.sqrt(np.log(2 / 0.01) / (2 * s.size))
        emp = (s[:, None] <= ys).mean(axis=0)
        assert np.max(np.abs(emp - synthesize_cdf(problem, ys))) < eps


class TestDensity:
    def test_dirac_at_zero(self):
        assert synthesize_density(DIRAC, 0.0) == pytest.approx(normal_pdf(0.0), abs=1e-5)
        assert normal_pdf(0.0) == pytest.approx(0.39894, abs=1e-5)

    def test_dirac_reproduces_agent_density(self):
        agent = GaussianMixtureAgent([0.3, 0.7], [-2.0, 1.0], [0.5, 1.5])
        ys = np.linspace(-5, 5, 41)
        got = synthesize_density(SynthesisProblem((agent,), DiracKernel(0)), ys)
        np.testing.assert_allclose(got, agent.pdf(ys), atol=1e-15)

    def test_convolution_at_zero(self):
        assert synthesize_density(CONV, 0.0) == pytest.approx(normal_pdf(0.0, sd=np.sqrt(2)), abs=1e-4)
        assert normal_pdf(0.0, sd=np.sqrt(2)) == pytest.approx(0.28209, abs=1e-5)

    def test_matches_analytic_on_grid(self):
        ys = np.linspace(-6, 6, 25)
        oracle = [normal_pdf(y, sd=np.sqrt(2)) for y in ys]
        np.testing.assert_allclose(synthesize_density(CONV, ys), oracle, atol=1e-12)

    def test_symmetric_about_mean(self):
        ys = np.linspace(-8, 8, 161)
        d = synthesize_density(CONV, ys)
        assert np.max(np.abs(d - d[::-1])) < 1e-6
        d2 = synthesize_density(PAIR, 2.0 + ys / 4)
        assert np.max(np.abs(d2 - d2[::-1])) < 1e-6

    @pytest.mark.parametrize("problem", [CONV, PAIR])
    def test_integrates_to_one(self, problem):
        mean, var = analytic_reference(problem)
        sd = np.sqrt(var)
        ys = np.linspace(mean - 12 * sd, mean + 12 * sd, 4001)
        assert integrate.trapezoid(synthesize_density(problem, ys), ys) == pytest.approx(1.0, abs=1e-4)

    def test_monte_carlo_method(self):
        got = synthesize_density(CONV, [0.0, 1.0], MonteCarlo(draws=200_000, seed=5))
        oracle = [normal_pdf(0.0, sd=np.sqrt(2)), normal_pdf(1.0, sd=np.sqrt(2))]
        np.testing.assert_allclose(got, oracle, atol=3e-3)

    def test_k4_quadrature_refused(self):
        agents = (STD,) * 4
        problem = SynthesisProblem(agents, LinearGaussianKernel(0.0, [1.0] * 4, 1.0))
        with pytest.raises(CapabilityError, match="monte-carlo"):
            synthesize_density(problem, [0.0])
        # Monte-Carlo handles the same problem
        assert synthesize_cdf(problem, 0.0, MonteCarlo(draws=20_000, seed=1)) == pytest.approx(0.5, abs=0.02)


class TestCdf:
    def test_examples(self):
        assert synthesize_cdf(CONV, 0.0) == pytest.approx(0.5, abs=1e-14)
        assert synthesize_cdf(CONV, 100.0) == pytest.approx(1.0, abs=1e-12)
        assert synthesize_cdf(CONV, 1.0) == pytest.approx(normal_cdf(1.0, sd=np.sqrt(2)), abs=1e-4)
        assert normal_cdf(1.0, sd=np.sqrt(2)) == pytest.approx(0.76025, abs=1e-5)

    def test_shape_follows_input(self):
        assert isinstance(synthesize_cdf(CONV, 0.0), float)
        assert synthesize_cdf(CONV, np.zeros((2, 3))).shape == (2, 3)

    @settings(max_examples=30, deadline=None)
    @given(ys=st.lists(st.floats(-20, 20), min_size=2, max_size=30))
    def test_monotone(self, ys):
        ys = np.sort(ys)
        assert np.all(np.diff(synthesize_cdf(PAIR, ys)) >= 0)

    def test_value_independent_of_batch(self):
        single = synthesize_cdf(PAIR, 0.0)
        for n in (2, 3, 7):
            assert np.all(synthesize_cdf(PAIR, np.zeros(n)) == single)

    def test_density_is_derivative(self):
        ys = np.linspace(-3, 5, 9)
        h = 1e-5
        fd = (synthesize_cdf(PAIR, ys + h) - synthesize_cdf(PAIR, ys - h)) / (2 * h)
        np.testing.assert_allclose(fd, synthesize_density(PAIR, ys), atol=1e-6)

    def test_monte_carlo_tail_mass(self):
        c = synthesize_cdf(CONV, 100.0, MonteCarlo(draws=10_000, seed=0))
        assert c == pytest.approx(1.0, abs=1e-12)

    def test_empirical_agent(self):
        samples = np.random.default_rng(0).normal(size=5000)
        problem = SynthesisProblem((EmpiricalAgent(samples),), LinearGaussianKernel(0.0, [1.0], 1.0))
        # integration treats the samples as equally weighted atoms
        expect = np.mean(special.ndtr(0.5 - samples))
        assert synthesize_cdf(problem, 0.5) == pytest.approx(expect, abs=1e-14)

    @pytest.mark.slow
    def test_sampler_agrees_with_integrator(self):
        s = synthesize_samples(PAIR, 10**6, seed=21)
        qs = 2.0 + np.sqrt(0.51) * np.array([-1.5, -0.5, 0.0, 0.5, 1.5])
        eps = np.sqrt(np.log(2 / 0.01) / (2 * s.size))
        emp = (s[:, None] <= qs).mean(axis=0)
        assert np.max(np.abs(emp - synthesize_cdf(PAIR, qs))) < eps


class TestMoments:
    @pytest.mark.parametrize("problem,expect", [(CONV, (0.0, 2.0)), (PAIR, (2.0, 0.51))])
    def test_quadrature_matches_reference(self, problem, expect):
        mean, var = synthesize_moments(problem)
        assert mean == pytest.approx(expect[0], abs=1e-12)
        assert var == pytest.approx(expect[1], rel=1e-4)

    def test_analytic_reference(self):
        assert analytic_reference(CONV) == (0.0, 2.0)
        assert analytic_reference(SynthesisProblem((GaussianAgent(-3, 7),), LinearGaussianKernel(5.0, [0.0], 2.0))) == (5.0, 4.0)
        m, v = analytic_reference(PAIR)
        assert m == 2.0 and v == pytest.approx(0.51, abs=1e-15)

    def test_reference_refuses_non_gaussian(self):
        with pytest.raises(CapabilityError):
            analytic_reference(DIRAC)
        mix = GaussianMixtureAgent([0.5, 0.5], [0, 1], [1, 1])
        with pytest.raises(CapabilityError):
            analytic_reference(SynthesisProblem((mix,), LinearGaussianKernel(0.0, [1.0], 1.0)))

    def test_dirac_moments(self):
        m, v = synthesize_moments(SynthesisProblem((GaussianAgent(1.5, 2.0),), DiracKernel(0)))
        assert m == pytest.approx(1.5, abs=1e-12) and v == pytest.approx(4.0, rel=1e-10)

    def test_monte_carlo_moments(self):
        m, v = synthesize_moments(PAIR, MonteCarlo(draws=10**5, seed=3))
        assert m == pytest.approx(2.0, abs=0.01) and v == pytest.approx(0.51, rel=0.02)

    def test_mixture_agent(self):
        mix = GaussianMixtureAgent([0.25, 0.75], [-4.0, 4.0], [1.0, 0.5])
        mean_x = 0.25 * -4 + 0.75 * 4
        var_x = 0.25 * (1 + 16) + 0.75 * (0.25 + 16) - mean_x**2
        m, v = synthesize_moments(SynthesisProblem((mix,), LinearGaussianKernel(1.0, [2.0], 0.5)))
        assert m == pytest.approx(1 + 2 * mean_x, rel=1e-12)
        assert v == pytest.approx(0.25 + 4 * var_x, rel=1e-10)

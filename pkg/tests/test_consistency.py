import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predsynth import (
    DegenerateMeanError,
    LinearPool,
    SpecificationError,
    brute_force_equivalence,
    check_coefficient_invariance,
    check_consistency,
    dependent_mixture_prior,
    dirichlet_prior,
    random_pool,
    two_point_prior,
)
from predsynth._rng import task_rng


class TestDirichletPrior:
    def test_uniform_case(self):
        fam = dirichlet_prior([[0.5, 0.5]], concentration=2.0)
        np.testing.assert_array_equal(fam.components[0][1][0].alpha, [1.0, 1.0])
        draws = fam.sample(10**5, np.random.default_rng(0))[0]
        np.testing.assert_allclose(draws.mean(axis=0), [0.5, 0.5], atol=0.005)

    def test_concentrates_for_large_concentration(self):
        draws = dirichlet_prior([[0.5, 0.5]], concentration=1e6).sample(1000, np.random.default_rng(0))[0]
        assert np.max(np.abs(draws - 0.5)) < 0.005

    def test_degenerate(self):
        with pytest.raises(DegenerateMeanError):
            dirichlet_prior([[1.0, 0.0]])


class TestTwoPointPrior:
    def test_symmetric(self):
        m = two_point_prior([[0.5, 0.5]]).components[0][1][0]
        np.testing.assert_array_equal(m.atoms, [[1, 0], [0, 1]])
        np.testing.assert_array_equal(m.weights, [0.5, 0.5])

    def test_asymmetric(self):
        m = two_point_prior([[0.25, 0.75]]).components[0][1][0]
        np.testing.assert_array_equal(m.atoms, [[1, 0], [0, 1]])
        np.testing.assert_allclose(m.weights, [0.25, 0.75])

    def test_three_events(self):
        m = two_point_prior([[0.2, 0.3, 0.5]]).components[0][1][0]
        np.testing.assert_allclose(m.atoms, [[1, 0, 0], [0, 0.375, 0.625]], atol=1e-15)
        np.testing.assert_allclose(m.weights, [0.2, 0.8], atol=1e-15)
        # mean by explicit summation over the two atoms
        np.testing.assert_allclose(sum(w * a for w, a in zip(m.weights, m.atoms)), [0.2, 0.3, 0.5], atol=1e-15)

    def test_boundary(self):
        with pytest.raises(DegenerateMeanError):
            two_point_prior([[0.0, 1.0]])


class TestDependentMixture:
    @pytest.mark.parametrize("base", ["dirichlet", "two-point"])
    def test_means_exact_and_agents_dependent(self, base):
        mu = [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3]]
        fam = dependent_mixture_prior(mu, base=base)
        for k in range(2):
            np.testing.assert_allclose(fam.marginal_mean(k), mu[k], atol=1e-15)
        f1, f2 = fam.sample(50_000, np.random.default_rng(3))
        corr = np.corrcoef(f1[:, 2], f2[:, 0])[0, 1]
        assert corr > 0.1

    def test_finite_support_flag(self):
        assert dependent_mixture_prior([[0.4, 0.6]], base="two-point").finite
        assert not dependent_mixture_prior([[0.4, 0.6]]).finite


class TestCheckConsistency:
    @settings(max_examples=50, deadline=None)
    @given(K=st.integers(1, 3), n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
    def test_exact_under_finite_priors(self, K, n, seed):
        pool = random_pool(K, n, np.random.default_rng(seed))
        for fam in (two_point_prior(pool.mu), dependent_mixture_prior(pool.mu, base="two-point")):
            rep = check_consistency(pool, fam)
            assert rep.exact and rep.passed and rep.deviation < 1e-12

    def test_dirichlet_k1(self):
        pool = LinearPool(0.5, [[0.4, 0.0]], [[0.5, 0.5]])
        rep = check_consistency(pool, dirichlet_prior(pool.mu, 2.0), draws=10**5, seed=1)
        assert not rep.exact and rep.passed
        assert rep.deviation <= 5 * rep.std_error
        # SE of 0.4 * (f - 0.5) with f ~ U(0, 1)
        assert rep.std_error == pytest.approx(0.4 * np.sqrt(1 / 12) / np.sqrt(10**5), rel=0.02)

    def test_dependent_dirichlet(self):
        pool = random_pool(3, 2, np.random.default_rng(5))
        rep = check_consistency(pool, dependent_mixture_prior(pool.mu), draws=10**5, seed=2)
        assert rep.passed

    def test_mismatched_means(self):
        pool = LinearPool(0.5, [[0.4, 0.0]], [[0.5, 0.5]])
        with pytest.raises(SpecificationError):
            check_consistency(pool, two_point_prior([[0.6, 0.4]]))

    def test_nonlinear_rule_is_detected(self):
        # a quadratic rule is not consistent; the exact enumeration must see it
        fam = two_point_prior([[0.2, 0.3, 0.5]])
        total = sum(prob * (0.2 + 0.6 * fs[0][1] ** 2) for prob, fs in fam.support())
        assert total == pytest.approx(0.2 + 0.6 * 0.8 * 0.375**2, abs=1e-15)
        assert abs(total - (0.2 + 0.6 * 0.3)) > 0.1


class TestCoefficientInvariance:
    def test_k2_example(self):
        pool = LinearPool(0.5, [[0.3, 0.0], [0.2, 0.0]], [[0.5, 0.5]] * 2)
        rep = check_coefficient_invariance(pool, 1)
        np.testing.assert_array_equal(rep.lam_analytic, [[0.3, 0.0]])
        np.testing.assert_allclose(rep.lam_tensor, [[0.3, 0.0]], atol=1e-15)
        assert rep.passed

    def test_zero_pool(self):
        pool = LinearPool(0.3, np.zeros((3, 3)), np.full((3, 3), 1 / 3))
        rep = check_coefficient_invariance(pool, 0)
        assert rep.p_analytic == 0.3 and np.all(rep.lam_analytic == 0)
        assert rep.passed

    @settings(max_examples=60, deadline=None)
    @given(K=st.integers(2, 3), n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1), data=st.data())
    def test_random(self, K, n, seed, data):
        pool = random_pool(K, n, np.random.default_rng(seed))
        drop = data.draw(st.integers(0, K - 1))
        rep = check_coefficient_invariance(pool, drop)
        keep = [k for k in range(K) if k != drop]
        np.testing.assert_array_equal(rep.lam_analytic, pool.lam[keep])
        assert rep.p_analytic == pool.p
        assert rep.max_deviation < 1e-10

    def test_needs_two_agents(self):
        with pytest.raises(ValueError):
            check_coefficient_invariance(LinearPool(0.5, [[0.4, 0.0]], [[0.5, 0.5]]), 0)


class TestBruteForceEquivalence:
    @pytest.mark.parametrize("K,n", [(1, 1), (3, 4)])
    def test_shapes(self, K, n):
        rep = brute_force_equivalence(K, n, trials=1000, seed=9)
        assert rep.passed and rep.max_deviation < 1e-12

    def test_reproducible(self):
        assert brute_force_equivalence(2, 2, 50, seed=4) == brute_force_equivalence(2, 2, 50, seed=4)

    def test_zero_lambda_exact(self):
        pool = LinearPool(0.5, [[0.0, 0.0]], [[0.5, 0.5]])
        from predsynth import eval_linear_pool, eval_pi_form, pool_to_pi

        f = task_rng(0).dirichlet([1, 1])
        assert eval_linear_pool(pool, [f]) == 0.5
        assert eval_pi_form(pool_to_pi(pool), [f]) == 0.5

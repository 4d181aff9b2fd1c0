import numpy as np
import pytest

from knockoff_gc.errors import DimensionMismatch, NotPositiveDefinite, TooFewSamples
from knockoff_gc.knockoffs import (GaussianModel, KnockoffSampler, MixtureKnockoffSampler,
                                   equicorrelated_s, exchangeability_diagnostic, fit_gaussian,
                                   fit_mixture, knockoff_series, sample_knockoffs, swap,
                                   target_joint_covariance)
from knockoff_gc.timeseries import MultivariateSeries


def random_spd(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    return a @ a.T / n + 0.5 * np.eye(n)


def gaussian_rows(sigma, rows, seed, mu=None):
    rng = np.random.default_rng(seed)
    mu = np.zeros(len(sigma)) if mu is None else mu
    return rng.multivariate_normal(mu, sigma, size=rows)


def sampler_for(sigma, s_diag=None, mu=None):
    mu = np.zeros(len(sigma)) if mu is None else np.asarray(mu, float)
    return KnockoffSampler.from_model(GaussianModel(mu, np.asarray(sigma, float)), s_diag)


class TestFitGaussian:
    def test_standard_normal(self):
        model = fit_gaussian(np.random.default_rng(0).standard_normal((10000, 2)))
        assert np.all(np.abs(model.mu) < 0.05)
        assert np.all(np.abs(model.sigma - np.eye(2)) < 0.05)

    def test_population_covariance(self):
        model = fit_gaussian(np.array([[1.0], [3.0]]))
        assert model.mu[0] == 2.0
        assert model.sigma[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(TooFewSamples):
            fit_gaussian(np.ones((5, 2)))
        with pytest.raises(TooFewSamples):
            fit_gaussian(np.random.default_rng(0).normal(size=(2, 2)))

    def test_near_singular_is_shrunk(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(500, 1))
        model = fit_gaussian(np.hstack([x, x + 1e-9 * rng.normal(size=(500, 1))]))
        assert np.linalg.cond(model.sigma) <= 1e6 * (1 + 1e-6)
        assert np.allclose(model.sigma, model.sigma.T, atol=1e-10)


class TestEquicorrelated:
    def test_identity(self):
        np.testing.assert_allclose(equicorrelated_s(np.eye(2)), [1, 1], atol=1e-12)

    def test_correlated_pair(self):
        sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
        s = equicorrelated_s(sigma)
        np.testing.assert_allclose(s, [1, 1], atol=1e-12)
        S = np.diag(s)
        cond = 2 * S - S @ np.linalg.inv(sigma) @ S
        np.testing.assert_allclose(cond, np.full((2, 2), 2 / 3), atol=1e-12)
        sampler = sampler_for(sigma)
        np.testing.assert_allclose(sampler.cond_cov_factor @ sampler.cond_cov_factor.T, cond, atol=1e-10)

    def test_diagonal_rescaled(self):
        np.testing.assert_allclose(equicorrelated_s(np.diag([4.0, 9.0])), [4, 9], atol=1e-12)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            equicorrelated_s(np.array([[1.0, 2.0], [2.0, 1.0]]))

    @pytest.mark.parametrize("seed", range(5))
    def test_psd_invariants(self, seed):
        sigma = random_spd(5, seed)
        s = equicorrelated_s(sigma)
        S = np.diag(s)
        assert np.all(s >= 0)
        assert np.linalg.eigvalsh(2 * sigma - S)[0] >= -1e-8
        assert np.linalg.eigvalsh(2 * S - S @ np.linalg.solve(sigma, S))[0] >= -1e-8

    def test_rejects_too_large_s(self):
        with pytest.raises(NotPositiveDefinite):
            sampler_for(np.eye(2), [3.0, 3.0])


class TestSampling:
    def test_identity_s_is_independent(self):
        sampler = sampler_for(np.eye(3), [1, 1, 1], mu=[1.0, 2.0, 3.0])
        z = np.array([10.0, -4.0, 7.0])
        np.testing.assert_allclose(sampler.conditional_mean(z), [1, 2, 3], atol=1e-12)
        np.testing.assert_allclose(sampler.cond_cov_factor @ sampler.cond_cov_factor.T, np.eye(3), atol=1e-12)

    def test_zero_s_returns_input(self):
        sampler = sampler_for(random_spd(3, 0), [0, 0, 0])
        z = np.array([0.3, -1.2, 2.0])
        assert np.array_equal(sample_knockoffs(sampler, z, 5), z)
        real = MultivariateSeries(gaussian_rows(random_spd(3, 0), 40, 1))
        ks = knockoff_series(real, sampler, 9)
        assert np.array_equal(ks.knockoffs.values, real.values)
        diag = exchangeability_diagnostic(ks, sampler)
        np.testing.assert_array_equal(diag["per_variable_correlation"], [1, 1, 1])

    def test_deterministic(self):
        sampler = sampler_for(random_spd(4, 2))
        z = np.arange(4.0)
        assert np.array_equal(sample_knockoffs(sampler, z, 3), sample_knockoffs(sampler, z, 3))
        assert not np.array_equal(sample_knockoffs(sampler, z, 3), sample_knockoffs(sampler, z, 4))

    def test_series_shape_and_names(self):
        sigma = random_spd(4, 3)
        real = MultivariateSeries(gaussian_rows(sigma, 200, 0), ["a", "b", "c", "d"])
        ks = knockoff_series(real, KnockoffSampler.fit(real.values), 1)
        assert ks.knockoffs.values.shape == (200, 4)
        assert ks.knockoffs.names == ("a_knockoff", "b_knockoff", "c_knockoff", "d_knockoff")
        assert np.all(np.isfinite(ks.knockoffs.values))

    def test_first_row_matches_single_draw(self):
        sampler = sampler_for(random_spd(3, 4))
        rows = gaussian_rows(random_spd(3, 4), 5, 0)
        ks = knockoff_series(MultivariateSeries(rows), sampler, 17)
        assert np.array_equal(ks.knockoffs.values[0], sample_knockoffs(sampler, rows[0], 17))

    def test_dimension_mismatch(self):
        sampler = sampler_for(np.eye(2))
        with pytest.raises(DimensionMismatch):
            knockoff_series(MultivariateSeries(np.zeros((3, 3))), sampler, 0)
        with pytest.raises(DimensionMismatch):
            sample_knockoffs(sampler, np.zeros(3), 0)

    def test_per_variable_correlation(self):
        sigma = random_spd(3, 5)
        rows = gaussian_rows(sigma, 10000, 6)
        sampler = KnockoffSampler.fit(rows)
        diag = exchangeability_diagnostic(knockoff_series(MultivariateSeries(rows), sampler, 2), sampler)
        expected = 1 - sampler.s_diag / np.diag(sampler.model.sigma)
        assert np.all(np.abs(diag["per_variable_correlation"] - expected) < 0.1)

    def test_identity_block_deviation(self):
        rows = gaussian_rows(np.eye(3), 10000, 7)
        sampler = sampler_for(np.eye(3), [1, 1, 1])
        diag = exchangeability_diagnostic(knockoff_series(MultivariateSeries(rows), sampler, 8), sampler)
        assert diag["max_block_deviation"] < 0.06

    def test_univariate_knockoff_is_uncorrelated(self):
        rows = gaussian_rows(np.eye(1), 10000, 9)
        sampler = sampler_for(np.eye(1), [1.0])
        diag = exchangeability_diagnostic(knockoff_series(MultivariateSeries(rows), sampler, 1), sampler)
        assert abs(diag["per_variable_correlation"][0]) < 0.05


class TestJointLaw:
    def test_swap_involution(self):
        joint = np.arange(24.0).reshape(3, 8)
        assert np.array_equal(swap(swap(joint, [0, 2], 4), [0, 2], 4), joint)
        assert np.array_equal(swap(joint, [1], 4)[:, 1], joint[:, 5])

    def test_target_blocks(self):
        sigma = random_spd(2, 0)
        tgt = target_joint_covariance(sigma, [0.1, 0.2])
        assert np.array_equal(tgt[:2, :2], sigma)
        np.testing.assert_allclose(tgt[:2, 2:], sigma - np.diag([0.1, 0.2]))


class TestMixture:
    def test_single_component_matches_gaussian(self):
        rows = gaussian_rows(random_spd(3, 1), 500, 0)
        mix = fit_mixture(rows, 1)
        plain = KnockoffSampler.fit(rows)
        np.testing.assert_array_equal(mix.components[0].s_diag, plain.s_diag)
        real = MultivariateSeries(rows[:30])
        assert np.array_equal(knockoff_series(real, mix, 3).knockoffs.values,
                              knockoff_series(real, plain, 3).knockoffs.values)

    def test_two_clusters(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(600, 2)) * 0.5 + [-4, 0]
        b = rng.normal(size=(400, 2)) * 0.5 + [4, 1]
        mix = fit_mixture(np.vstack([a, b]), 2, seed=1)
        order = np.argsort([c.model.mu[0] for c in mix.components])
        np.testing.assert_allclose(mix.weights[order], [0.6, 0.4], atol=0.02)
        np.testing.assert_allclose(mix.components[order[0]].model.mu, [-4, 0], atol=0.1)
        post = np.exp(mix.log_responsibilities(np.array([[-4.0, 0.0], [4.0, 1.0]])))
        assert post[0, order[0]] > 0.999 and post[1, order[1]] > 0.999
        # knockoffs of a point stay within its own cluster
        ks = knockoff_series(MultivariateSeries(a[:200]), mix, 5)
        assert np.mean(ks.knockoffs.values[:, 0] < 0) > 0.99

    def test_mixture_assignment_uses_posterior(self):
        comp = sampler_for(np.eye(1), [0.0])
        far = KnockoffSampler.from_model(GaussianModel(np.array([100.0]), np.eye(1)), np.array([0.0]))
        mix = MixtureKnockoffSampler(np.array([0.5, 0.5]), (comp, far))
        out = mix.draw(np.array([[0.2]]), np.zeros((1, 1)), np.array([0.999]))
        assert out[0, 0] == 0.2

import math

import numpy as np
import pytest

from src.autodiff import Graph
from src.distributions import (
    SIGMA_FLOOR,
    BernoulliParam,
    BivariateGaussianParams,
    Categorical,
    DiagonalGaussian,
    GmmLatentSpace,
    as_categorical,
    bernoulli_nll,
    bivariate_nll,
    bivariate_sample,
    categorical_kl,
    gaussian_kl,
    gaussian_sample,
    gmm_sample,
    positive_scale,
)
from src.errors import ContractError


def _gauss(g, mu, sigma):
    return DiagonalGaussian.from_values(g, mu, sigma)


class TestGaussianKl:
    def test_identical_is_zero(self):
        g = Graph()
        q = _gauss(g, [0.3, -1.0], [0.5, 2.0])
        assert float(gaussian_kl(q, q)) == pytest.approx(0.0, abs=1e-12)

    def test_unit_mean_shift(self):
        g = Graph()
        assert float(gaussian_kl(_gauss(g, 1.0, 1.0), _gauss(g, 0.0, 1.0))) == pytest.approx(0.5)

    def test_scale_mismatch(self):
        g = Graph()
        kl = gaussian_kl(_gauss(g, 0.0, 2.0), _gauss(g, 0.0, 1.0))
        assert float(kl) == pytest.approx(0.80685, abs=1e-5)

    def test_dimension_mismatch(self):
        g = Graph()
        with pytest.raises(ContractError):
            gaussian_kl(_gauss(g, [0.0, 0.0], [1.0, 1.0]), _gauss(g, [0.0], [1.0]))

    def test_non_negative_for_random_pairs(self, rng):
        g = Graph()
        for _ in range(20):
            q = _gauss(g, rng.normal(size=3), rng.uniform(0.1, 3.0, size=3))
            p = _gauss(g, rng.normal(size=3), rng.uniform(0.1, 3.0, size=3))
            assert float(gaussian_kl(q, p)) >= 0.0

    def test_matches_monte_carlo_estimate(self, rng):
        g = Graph()
        for _ in range(20):
            mu_q, mu_p = rng.normal(size=3), rng.normal(size=3)
            s_q, s_p = rng.uniform(0.5, 2.0, size=3), rng.uniform(0.5, 2.0, size=3)
            x = mu_q + s_q * rng.standard_normal((10 ** 6, 3))
            log_ratio = np.sum(np.log(s_p / s_q) - 0.5 * ((x - mu_q) / s_q) ** 2 + 0.5 * ((x - mu_p) / s_p) ** 2,
                               axis=1)
            kl = float(gaussian_kl(_gauss(g, mu_q, s_q), _gauss(g, mu_p, s_p)))
            assert kl == pytest.approx(log_ratio.mean(), rel=0.01, abs=5e-3)

    def test_batch_rows_are_non_negative(self, rng):
        g = Graph()
        n = 10 ** 4
        q = _gauss(g, rng.normal(size=(n, 4)), rng.uniform(0.05, 5.0, size=(n, 4)))
        p = _gauss(g, rng.normal(size=(n, 4)), rng.uniform(0.05, 5.0, size=(n, 4)))
        kl = gaussian_kl(q, p).value
        assert kl.shape == (n,)
        assert np.all(kl >= 0.0)


class TestCategoricalKl:
    def test_point_mass_against_uniform(self):
        g = Graph()
        kl = categorical_kl(as_categorical(g, [1.0, 0.0]), as_categorical(g, [0.5, 0.5]))
        assert float(kl) == pytest.approx(math.log(2.0), abs=1e-9)

    def test_skewed_against_uniform(self):
        g = Graph()
        kl = categorical_kl(as_categorical(g, [0.5, 0.25, 0.25]), as_categorical(g, [1 / 3] * 3))
        assert float(kl) == pytest.approx(0.05889, abs=1e-5)

    def test_opposite_pair(self):
        g = Graph()
        kl = categorical_kl(as_categorical(g, [0.75, 0.25]), as_categorical(g, [0.25, 0.75]))
        assert float(kl) == pytest.approx(0.54931, abs=1e-5)

    def test_from_logits_is_normalized(self):
        g = Graph()
        c = Categorical.from_logits(g.constant([0.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(c.probs.value, [0.25] * 4)

    def test_bad_probs_are_rejected(self):
        g = Graph()
        with pytest.raises(ContractError):
            as_categorical(g, [0.5, 0.6])

    def test_cross_entropy_range(self):
        g = Graph()
        c = as_categorical(g, [0.5, 0.5])
        assert float(c.cross_entropy(1)) == pytest.approx(math.log(2.0))
        with pytest.raises(ContractError):
            c.cross_entropy(2)

    def test_matches_monte_carlo_estimate(self, rng):
        g = Graph()
        for _ in range(20):
            q, p = rng.dirichlet(np.full(5, 2.0)), rng.dirichlet(np.full(5, 2.0))
            draws = rng.choice(5, size=10 ** 6, p=q)
            estimate = np.mean(np.log(q[draws]) - np.log(p[draws]))
            kl = float(categorical_kl(as_categorical(g, q), as_categorical(g, p)))
            assert kl == pytest.approx(estimate, rel=0.01, abs=5e-3)

    def test_non_negative_on_random_pairs(self, rng):
        g = Graph()
        q = rng.dirichlet(np.full(6, 0.5), size=10 ** 4)
        p = rng.dirichlet(np.full(6, 0.5), size=10 ** 4)
        kl = categorical_kl(as_categorical(g, q), as_categorical(g, p)).value
        assert kl.shape == (10 ** 4,)
        assert np.all(kl >= -1e-9)


class TestBivariate:
    def test_standard_density_at_mean(self):
        g = Graph()
        params = BivariateGaussianParams(g.constant([0.0, 0.0]), g.constant([1.0, 1.0]), g.constant(0.0))
        assert float(bivariate_nll(params, [0.0, 0.0])) == pytest.approx(1.83788, abs=1e-5)

    def test_from_raw_bounds(self):
        g = Graph()
        params = BivariateGaussianParams.from_raw(g.constant([0.0, 0.0, -50.0, 0.0, 50.0]))
        assert params.sigma.value[0] >= SIGMA_FLOOR
        assert abs(float(params.rho)) < 1.0

    def test_rejects_invalid_rho(self):
        g = Graph()
        with pytest.raises(ContractError):
            BivariateGaussianParams(g.constant([0.0, 0.0]), g.constant([1.0, 1.0]), g.constant(1.0))

    def test_greedy_sample_is_mean(self):
        g = Graph()
        params = BivariateGaussianParams(g.constant([0.5, -0.5]), g.constant([1.0, 2.0]), g.constant(0.3))
        np.testing.assert_array_equal(bivariate_sample(params, greedy=True), [0.5, -0.5])
        with pytest.raises(ContractError):
            bivariate_sample(params)

    def test_sample_correlation_matches_rho(self):
        g = Graph()
        params = BivariateGaussianParams(g.constant([0.0, 0.0]), g.constant([1.0, 3.0]), g.constant(0.6))
        rng = np.random.default_rng(5)
        draws = np.array([bivariate_sample(params, rng.standard_normal(2)) for _ in range(100_000)])
        assert np.corrcoef(draws.T)[0, 1] == pytest.approx(0.6, abs=0.02)
        assert draws[:, 1].std() == pytest.approx(3.0, rel=0.02)


class TestBernoulli:
    def test_half(self):
        g = Graph()
        b = BernoulliParam.from_probability(g, 0.5)
        assert float(bernoulli_nll(b, 1)) == pytest.approx(math.log(2.0))

    def test_unlikely_target(self):
        g = Graph()
        b = BernoulliParam.from_probability(g, 0.9)
        assert float(bernoulli_nll(b, 0)) == pytest.approx(2.30259, abs=1e-5)

    def test_clamped_certainty(self):
        g = Graph()
        b = BernoulliParam.from_probability(g, 1.0)
        assert float(bernoulli_nll(b, 1)) == pytest.approx(1e-6, rel=1e-3)
        assert np.isfinite(float(bernoulli_nll(b, 0)))

    def test_target_must_be_binary(self):
        g = Graph()
        with pytest.raises(ContractError):
            bernoulli_nll(BernoulliParam.from_probability(g, 0.5), 2)


class TestSampling:
    def test_zero_noise_returns_mean(self):
        g = Graph()
        q = _gauss(g, [1.0, 2.0], [0.5, 0.5])
        np.testing.assert_array_equal(gaussian_sample(q, np.zeros(2)).value, [1.0, 2.0])

    def test_noise_shape_checked(self):
        g = Graph()
        with pytest.raises(ContractError):
            gaussian_sample(_gauss(g, [1.0, 2.0], [0.5, 0.5]), np.zeros(3))

    def test_gmm_zero_noise_picks_component_mean(self):
        g = Graph()
        mu = np.array([[0.0, 1.0], [2.0, 3.0], [-1.0, -2.0]])
        gmm = GmmLatentSpace(g.param("mu", mu), g.param("log_sigma", np.zeros((3, 2))))
        np.testing.assert_array_equal(gmm_sample(gmm, 1, np.zeros(2)).value, [2.0, 3.0])
        with pytest.raises(ContractError):
            gmm.component(3)

    def test_gmm_gradient_only_reaches_selected_component(self):
        g = Graph()
        gmm = GmmLatentSpace(g.param("mu", np.zeros((3, 2))), g.param("log_sigma", np.zeros((3, 2))))
        phi = gmm_sample(gmm, 2, np.array([0.5, -0.5]))
        grads = g.backward(phi[0] + phi[1])
        np.testing.assert_array_equal(grads["mu"][:2], np.zeros((2, 2)))
        np.testing.assert_array_equal(grads["mu"][2], [1.0, 1.0])
        np.testing.assert_allclose(grads["log_sigma"][2], [0.5, -0.5])

    def test_positive_scale_floor(self):
        g = Graph()
        assert float(positive_scale(g.constant(0.0))) == pytest.approx(math.log(2.0) + 1e-4)

    def test_sample_moments_match_parameters(self, rng):
        g = Graph()
        n = 2 * 10 ** 5
        mu, sigma = np.array([1.5, -0.5, 0.0]), np.array([0.2, 1.0, 3.0])
        q = _gauss(g, np.tile(mu, (n, 1)), np.tile(sigma, (n, 1)))
        x = gaussian_sample(q, rng.standard_normal((n, 3))).value
        np.testing.assert_allclose(x.mean(axis=0), mu, atol=5 * sigma.max() / math.sqrt(n))
        np.testing.assert_allclose(x.std(axis=0), sigma, rtol=0.01)

    def test_gmm_component_variance(self, rng):
        g = Graph()
        n = 2 * 10 ** 5
        mu = np.array([[0.0, 0.0], [4.0, -4.0]])
        log_sigma = np.array([[0.0, 0.0], [-1.0, 0.5]])
        gmm = GmmLatentSpace(g.param("mu", mu), g.param("log_sigma", log_sigma))
        phi = gmm_sample(gmm, np.ones(n, dtype=int), rng.standard_normal((n, 2))).value
        np.testing.assert_allclose(phi.mean(axis=0), mu[1], atol=0.02)
        np.testing.assert_allclose(phi.var(axis=0), np.exp(2 * log_sigma[1]), rtol=0.02)

"""
Unit tests for gp_regression.py
"""
import numpy as np
import pytest
from exceptions import ValidationError
from gp_regression import gp_sample, gp_solve
from observation import ObservationLayout, ObservationSet, apply_K, uniform_layout
from posteriors import preset_params
from spectral_prior import GridField, eigenvalue, sample_prior


@pytest.fixture
def params():
    return preset_params("gp", "small")


@pytest.fixture
def observations(params):
    layout = uniform_layout(3, 0.1)
    truth = sample_prior(params, 32, seed=40).sign()
    return ObservationSet(layout, apply_K(truth, layout), np.eye(9), 0.1)


class TestGPSolve:
    """Tests for gp_solve"""

    def test_zero_data_gives_zero_mean(self, params):
        obs = ObservationSet(uniform_layout(3, 0.1), np.zeros(9), np.eye(9), 0.1)
        post = gp_solve(obs, params, 32)
        assert np.all(post.mean.values == 0.0)

    def test_whole_domain_average(self, params):
        size = 16
        layout = ObservationLayout(np.array([[0.5 / size, 0.5 / size]]), 1.0)
        obs = ObservationSet(layout, np.array([0.8]), np.array([[1.0]]), 0.1)
        post = gp_solve(obs, params, size)

        lam = eigenvalue((0, 0), params)
        expected = lam / (0.01 + lam) * 0.8
        np.testing.assert_allclose(post.mean.values, expected, rtol=1e-10)

    def test_mean_is_stationary_point(self, params, observations):
        post = gp_solve(observations, params, 32)
        at_mean = np.linalg.norm(post.map_gradient(post.mean).values)
        at_zero = np.linalg.norm(post.map_gradient(GridField.constant(32, 0.0)).values)
        assert at_mean / at_zero < 1e-8

    def test_mean_beats_perturbations(self, params, observations):
        post = gp_solve(observations, params, 32)
        best = post.map_objective(post.mean)
        for seed in range(3):
            shift = sample_prior(params, 32, seed=seed).values * 1e-3
            assert post.map_objective(GridField(post.mean.values + shift)) > best

    def test_gram_is_symmetric(self, params, observations):
        post = gp_solve(observations, params, 32)
        np.testing.assert_allclose(post.gram, post.gram.T, rtol=1e-12, atol=0.0)
        assert np.all(np.linalg.eigvalsh(post.system_matrix) > 0)

    def test_residual_shrinks_with_noise(self, params, observations):
        residuals = []
        for scale in (1.0, 0.1, 0.01):
            obs = ObservationSet(observations.layout, observations.y, observations.sigma, scale)
            post = gp_solve(obs, params, 32)
            residuals.append(np.linalg.norm(obs.y - obs.apply(post.mean)))
        assert residuals[0] > residuals[1] > residuals[2]

    def test_variance_bounds(self, params, observations):
        post = gp_solve(observations, params, 32)
        variance = post.pointwise_variance()
        assert variance.shape == (32, 32)
        assert np.all(variance > 0)
        assert np.all(variance <= post.prior.pointwise_variance() * (1 + 1e-12))

    def test_positive_probability(self, params, observations):
        post = gp_solve(observations, params, 32)
        probability = post.positive_probability()
        assert np.all((probability >= 0) & (probability <= 1))
        positive = post.mean.values > 0
        assert np.all(probability[positive] > 0.5)
        assert np.all(probability[~positive] <= 0.5)
        assert post.thresholded_mean.is_binary

    def test_requires_observations(self, params):
        with pytest.raises(ValidationError):
            gp_solve(ObservationSet.empty(), params, 16)

    def test_requires_alpha_two(self, observations):
        with pytest.raises(ValidationError):
            gp_solve(observations, preset_params("gp", "small", alpha=3.0), 32)


class TestGPSample:
    """Tests for Matheron sampling"""

    def test_reproducible(self, params, observations):
        post = gp_solve(observations, params, 16)
        first = gp_sample(post, 3, seed=1)
        second = gp_sample(post, 3, seed=1)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.values, b.values)

    def test_moments(self, params, observations):
        post = gp_solve(observations, params, 16)
        n = 4000
        samples = np.stack([s.values for s in gp_sample(post, n, seed=2)])
        variance = post.pointwise_variance()

        points = [(0, 0), (3, 5), (8, 8), (12, 2), (15, 15)]
        for i, j in points:
            band = 3.0 * np.sqrt(variance[i, j] / n)
            assert abs(samples[:, i, j].mean() - post.mean.values[i, j]) < band
            assert samples[:, i, j].var() == pytest.approx(variance[i, j], rel=0.1)

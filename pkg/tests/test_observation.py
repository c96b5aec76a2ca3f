"""
Unit tests for observation.py
"""
import numpy as np
import pytest
from exceptions import (
    ConfigurationError,
    InvalidCovarianceError,
    InverseCrimeError,
    ValidationError,
)
from observation import (
    ObservationLayout,
    ObservationSet,
    TruthField,
    apply_K,
    cell_overlap_weights,
    default_window,
    misfit,
    random_layout,
    synthesize_data,
    truth_a,
    truth_b,
    truth_c,
    truth_from_mask,
    uniform_layout,
)
from spectral_prior import FieldKind, GridField, PriorParams, grid_coordinates


def stripe(size: int) -> GridField:
    """+1 on x in (1/4, 3/4), -1 elsewhere"""
    x, _ = grid_coordinates(size)
    return GridField(np.where((x > 0.25) & (x < 0.75), 1.0, -1.0), FieldKind.BINARY)


def single_point(point, y, window=0.25, sigma=1.0, noise_scale=1.0):
    layout = ObservationLayout(np.array([point]), window)
    return ObservationSet(layout, np.array([y]), np.array([[sigma]]), noise_scale)


@pytest.fixture
def small_noise_params():
    return PriorParams(delta=1.0, tau=50.0, c=1.5, eps=0.01)


class TestWindows:
    """Tests for cell overlap weights and layouts"""

    def test_weights_sum_to_one(self):
        weights = cell_overlap_weights(np.array([0.0, 0.3, 0.97]), 0.1, 64)
        np.testing.assert_allclose(weights.sum(axis=1), 1.0)

    def test_window_wraps_periodically(self):
        weights = cell_overlap_weights(np.array([0.0]), 4 / 64, 64)
        assert weights[0, -1] > 0 and weights[0, 1] > 0

    def test_default_window(self):
        assert default_window(128) == 2 / 128

    def test_window_below_one_cell(self):
        layout = ObservationLayout(np.array([[0.5, 0.5]]), 0.01)
        with pytest.raises(ConfigurationError):
            layout.matrix(64)

    def test_invalid_window(self):
        with pytest.raises(ValidationError):
            ObservationLayout(np.array([[0.5, 0.5]]), 0.0)

    def test_uniform_layout_count(self):
        assert uniform_layout(15, 0.02).count == 225

    def test_random_layout_reproducible(self):
        a = random_layout(50, 0.02, seed=4)
        b = random_layout(50, 0.02, seed=4)
        assert a.count == 50
        assert np.array_equal(a.points, b.points)

    def test_matrix_cached(self):
        layout = uniform_layout(3, 0.1)
        assert layout.matrix(32) is layout.matrix(32)

    def test_representers_integrate_to_one(self):
        layout = uniform_layout(3, 0.1)
        rows = layout.representers(32).toarray()
        np.testing.assert_allclose(rows.mean(axis=1), 1.0)


class TestApplyK:
    """Tests for apply_K"""

    def test_constant_field(self):
        layout = uniform_layout(4, 0.1)
        np.testing.assert_allclose(apply_K(GridField.constant(64, 1.0), layout), np.ones(16))

    def test_window_inside_stripe(self):
        layout = ObservationLayout(np.array([[0.5, 0.5]]), 4 / 64)
        assert apply_K(stripe(64), layout)[0] == pytest.approx(1.0)

    def test_window_straddling_interface(self):
        size, width = 64, 4 / 64
        layout = ObservationLayout(np.array([[0.25, 0.5]]), width)
        # the discrete interface sits half a cell to the right of x = 1/4
        expected = -(1.0 / size) / width
        assert apply_K(stripe(size), layout)[0] == pytest.approx(expected)

    def test_linear(self):
        rng = np.random.default_rng(4)
        u = GridField(rng.standard_normal((32, 32)))
        v = GridField(rng.standard_normal((32, 32)))
        layout = random_layout(10, 0.1, seed=5)
        combined = apply_K(GridField(2.0 * u.values - 3.0 * v.values), layout)
        np.testing.assert_allclose(combined, 2.0 * apply_K(u, layout) - 3.0 * apply_K(v, layout), atol=1e-12)

    def test_bounded_by_field_maximum(self):
        u = GridField(np.random.default_rng(6).uniform(-2.0, 2.0, (32, 32)))
        layout = uniform_layout(5, 0.12)
        assert np.abs(apply_K(u, layout)).max() <= np.abs(u.values).max() + 1e-12


class TestObservationSet:
    """Tests for ObservationSet"""

    def test_length_mismatch(self):
        layout = uniform_layout(2, 0.1)
        with pytest.raises(ValidationError):
            ObservationSet(layout, np.zeros(3), np.eye(3), 1.0)

    def test_non_symmetric_sigma(self):
        sigma = np.array([[1.0, 0.5], [0.0, 1.0]])
        layout = ObservationLayout(np.array([[0.1, 0.1], [0.5, 0.5]]), 0.1)
        with pytest.raises(InvalidCovarianceError):
            ObservationSet(layout, np.zeros(2), sigma, 1.0)

    def test_indefinite_sigma(self):
        layout = ObservationLayout(np.array([[0.1, 0.1], [0.5, 0.5]]), 0.1)
        with pytest.raises(InvalidCovarianceError):
            ObservationSet(layout, np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), 1.0)

    def test_empty(self):
        obs = ObservationSet.empty()
        assert obs.count == 0
        assert misfit(GridField.constant(8, 0.3), obs) == 0.0


class TestTruths:
    """Tests for truth factories and downsampling"""

    def test_truths_are_binary(self):
        for factory in (truth_a, truth_b, truth_c):
            assert factory(64).field.is_binary

    def test_truth_a_area(self):
        truth = truth_a(256)
        fraction = np.mean(truth.field.values > 0)
        assert fraction == pytest.approx(np.pi * 0.25 ** 2, rel=0.02)

    def test_truth_c_balanced(self):
        assert np.mean(truth_c(320).field.values) == pytest.approx(0.0, abs=0.02)

    def test_truth_requires_binary(self):
        with pytest.raises(ValidationError):
            TruthField(GridField.constant(8, 0.5), "bad")

    def test_downsample_integer_ratio(self):
        agreement = np.mean(truth_a(256).downsample(128).values == truth_a(128).field.values)
        assert agreement > 0.98

    def test_downsample_non_integer_ratio(self):
        coarse = truth_c(320).downsample(128)
        assert coarse.size == 128
        assert coarse.is_binary

    def test_downsample_to_finer_fails(self):
        with pytest.raises(ConfigurationError):
            truth_a(64).downsample(128)

    def test_from_mask(self):
        truth = truth_from_mask(np.eye(4, dtype=bool))
        assert truth.field.values[0, 0] == 1.0 and truth.field.values[0, 1] == -1.0


class TestSynthesizeData:
    """Tests for synthesize_data"""

    def test_inverse_crime_refused(self, small_noise_params):
        with pytest.raises(InverseCrimeError):
            synthesize_data(truth_a(128), uniform_layout(15, 0.02), small_noise_params, 0, 128)

    def test_zero_noise_is_exact(self, small_noise_params):
        truth = truth_a(256)
        layout = uniform_layout(15, 2 / 128)
        obs = synthesize_data(truth, layout, small_noise_params, 1, 128, noise_scale=0.0)
        np.testing.assert_array_equal(obs.y, apply_K(truth.field, layout))
        assert obs.count == 225

    def test_small_noise_std(self, small_noise_params):
        truth = truth_a(256)
        layout = uniform_layout(15, 2 / 128)
        obs = synthesize_data(truth, layout, small_noise_params, 7, 128)
        noise = obs.y - apply_K(truth.field, layout)
        assert obs.noise_scale == pytest.approx(1e-3)
        assert noise.std() == pytest.approx(1e-3, rel=0.15)

    def test_seed_is_recorded(self, small_noise_params):
        obs = synthesize_data(truth_a(256), uniform_layout(3, 0.05), small_noise_params, 42, 128)
        assert obs.seed == 42


class TestMisfit:
    """Tests for misfit"""

    def test_exact_fit(self):
        u = stripe(32)
        layout = uniform_layout(3, 0.1)
        obs = ObservationSet(layout, apply_K(u, layout), np.eye(9), 0.01)
        assert misfit(u, obs) == pytest.approx(0.0, abs=1e-20)

    def test_scalar_example(self):
        u = GridField.constant(16, 0.0)
        obs = single_point((0.5, 0.5), 2.0)
        assert misfit(u, obs) == pytest.approx(2.0)

    def test_matches_dense_inverse(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((3, 3))
        sigma = a @ a.T + 3 * np.eye(3)
        layout = ObservationLayout(rng.uniform(size=(3, 2)), 0.2)
        obs = ObservationSet(layout, rng.standard_normal(3), sigma, 0.1)
        u = GridField(rng.standard_normal((16, 16)))

        residual = obs.y - apply_K(u, layout)
        expected = 0.5 * residual @ np.linalg.inv(sigma) @ residual / 0.01
        assert misfit(u, obs) == pytest.approx(expected, rel=1e-9)

    def test_zero_noise_scale_refused(self):
        obs = single_point((0.5, 0.5), 1.0, noise_scale=0.0)
        with pytest.raises(ValidationError):
            misfit(GridField.constant(16, 0.0), obs)

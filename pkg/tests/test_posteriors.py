"""
Unit tests for posteriors.py
"""
import numpy as np
import pytest
from exceptions import ScalingViolationError, ValidationError
from observation import ObservationSet, apply_K, uniform_layout
from posteriors import (
    TargetKind,
    TargetSpec,
    neg_log_density,
    preset_params,
    resolve_scalings,
    threshold,
)
from spectral_prior import FieldKind, GridField, PriorParams, sample_prior


@pytest.fixture
def level_set_params():
    return preset_params("level_set", "small")


@pytest.fixture
def observations():
    layout = uniform_layout(4, 0.1)
    rng = np.random.default_rng(0)
    return ObservationSet(layout, rng.choice([-1.0, 1.0], size=16), np.eye(16), 0.1)


class TestResolveScalings:
    """Tests for resolve_scalings"""

    def test_small_noise_row(self):
        a1, a2, a3, b = resolve_scalings(1.5, 3.0)
        assert (a1, a2, b) == pytest.approx((0.0, 1.0, 4.0))
        assert a3 == pytest.approx(0.0)

    def test_order_one_row(self):
        a1, a2, a3, b = resolve_scalings(0.0, 2.0)
        assert (a1, a2, b) == pytest.approx((-1.5, -0.5, 1.0))
        assert a3 == pytest.approx(-1.0)

    def test_relations_hold(self):
        a1, a2, a3, b = resolve_scalings(0.7, 1.3)
        params = PriorParams(delta=1.0, tau=1.0, c=0.7, a1=a1, a2=a2, a3=a3, b=b)
        assert params.satisfies_scalings()
        assert params.scaling_gap == pytest.approx(1.3)

    @pytest.mark.parametrize("a", [0.0, -1.0])
    def test_non_positive_gap(self, a):
        with pytest.raises(ScalingViolationError):
            resolve_scalings(1.5, a)

    def test_negative_c(self):
        with pytest.raises(ValidationError):
            resolve_scalings(-0.5, 1.0)


class TestPresets:
    """Tests for preset_params"""

    def test_phase_field_small_noise(self):
        params = preset_params("phase_field", "small")
        assert params.noise_scale == pytest.approx(1e-3)
        assert params.satisfies_scalings()
        assert (params.delta, params.q, params.tau) == (0.01, 0.1, 1.0)

    def test_level_set_borrows_small_noise_exponents(self):
        params = preset_params("level_set", "order_one")
        assert params.c == 0.0
        assert (params.a1, params.a2, params.b) == pytest.approx((0.0, 1.0, 4.0))

    def test_overrides(self):
        params = preset_params("level_set", "small", alpha=3.0, tau=None)
        assert params.alpha == 3.0
        assert params.tau == 50.0


class TestThreshold:
    """Tests for threshold"""

    def test_values(self):
        out = threshold(GridField(np.array([[0.3, -2.0], [0.0, 1e-300]])))
        assert out.kind is FieldKind.BINARY
        np.testing.assert_array_equal(out.values, [[1.0, -1.0], [0.0, 1.0]])

    def test_idempotent(self, level_set_params):
        once = threshold(sample_prior(level_set_params, 32, seed=2))
        assert np.array_equal(threshold(once).values, once.values)


class TestTargetSpec:
    """Tests for TargetSpec construction"""

    def test_phase_field_requires_alpha_two(self, observations):
        params = preset_params("phase_field", "small", alpha=3.0)
        with pytest.raises(ValidationError):
            TargetSpec(TargetKind.PHASE_FIELD, params, observations)

    def test_kind_from_string(self, level_set_params, observations):
        target = TargetSpec("level_set", level_set_params, observations)
        assert target.is_level_set

    def test_prior_is_cached(self, level_set_params, observations):
        target = TargetSpec(TargetKind.LEVEL_SET, level_set_params, observations)
        assert target.spectral_prior(32) is target.spectral_prior(32)


class TestNegLogDensity:
    """Tests for neg_log_density"""

    def test_level_set_depends_only_on_sign(self, level_set_params, observations):
        target = TargetSpec(TargetKind.LEVEL_SET, level_set_params, observations)
        v = sample_prior(level_set_params, 32, seed=9)
        base = neg_log_density(v, target)
        assert neg_log_density(GridField(v.values ** 3), target) == base
        assert neg_log_density(GridField(2.0 * v.values), target) == base

    def test_level_set_exact_fit(self, level_set_params):
        v = sample_prior(level_set_params, 32, seed=3)
        layout = uniform_layout(4, 0.1)
        obs = ObservationSet(layout, apply_K(threshold(v), layout), np.eye(16), 0.1)
        target = TargetSpec(TargetKind.LEVEL_SET, level_set_params, obs)
        assert neg_log_density(v, target) == pytest.approx(0.0, abs=1e-20)

    def test_phase_field_includes_potential(self, observations):
        params = preset_params("phase_field", "small")
        target = TargetSpec(TargetKind.PHASE_FIELD, params, observations)
        u = GridField.constant(32, 0.0)
        expected = params.r / params.eps ** params.b * 0.25 + 0.5 * np.sum(observations.y ** 2) / 0.01
        assert neg_log_density(u, target) == pytest.approx(expected)

    def test_phase_field_decreases_toward_data_sign(self, observations):
        params = preset_params("phase_field", "small")
        target = TargetSpec(TargetKind.PHASE_FIELD, params, observations)
        size = 32
        # the node at the first observation point lies inside that window only
        i, j = np.rint(observations.layout.points[0] * size).astype(int) % size
        preferred = np.sign(observations.y[0])

        energies = []
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            values = np.zeros((size, size))
            values[i, j] = preferred * t
            energies.append(neg_log_density(GridField(values), target))
        assert all(later < earlier for earlier, later in zip(energies, energies[1:]))

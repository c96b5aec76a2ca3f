"""
Unit tests for experiment_config.py configuration values
"""
import pytest
from experiment_config import (
    NOISE_REGIMES,
    DEFAULT_NOISE_REGIME,
    SCALING_GAP,
    PRIOR_PRESETS,
    METHODS,
    DEFAULT_BETA,
    BETA_BANDS,
    ACCEPTANCE_WINDOW,
    DESK_SCALE,
    PAPER_SCALE,
    TRUTH_GRID_SIZES,
    SUPPORTED_GRID_SIZES,
    UNIFORM_LAYOUT_PER_AXIS,
    GAMMA_EPS_LADDER,
    GAMMA_GRID_SIZE,
)


class TestNoiseRegimes:
    """Tests for noise regime settings"""

    def test_default_regime_exists(self):
        assert DEFAULT_NOISE_REGIME in NOISE_REGIMES

    def test_small_noise_std(self):
        regime = NOISE_REGIMES["small"]
        assert regime["eps"] ** regime["c"] == pytest.approx(1e-3)

    def test_order_one_noise(self):
        assert NOISE_REGIMES["order_one"]["c"] == 0.0

    def test_scaling_gaps_positive(self):
        for regime in NOISE_REGIMES:
            assert SCALING_GAP[regime] > 0


class TestPriorPresets:
    """Tests for method presets"""

    def test_every_method_and_regime_has_a_row(self):
        for method in METHODS:
            for regime in NOISE_REGIMES:
                assert (method, regime) in PRIOR_PRESETS

    def test_phase_field_small_noise_row(self):
        row = PRIOR_PRESETS[("phase_field", "small")]
        assert (row["delta"], row["q"], row["tau"], row["r"]) == (0.01, 0.1, 1.0, 1.0)

    def test_phase_field_order_one_row(self):
        row = PRIOR_PRESETS[("phase_field", "order_one")]
        assert (row["delta"], row["q"], row["tau"]) == (100.0, 0.1, 1.0)

    def test_level_set_row(self):
        row = PRIOR_PRESETS[("level_set", "small")]
        assert (row["delta"], row["q"], row["tau"]) == (1.0, 0.0, 50.0)

    def test_gp_rows_have_no_potential(self):
        for regime in NOISE_REGIMES:
            assert PRIOR_PRESETS[("gp", regime)]["r"] == 0.0

    def test_phase_field_uses_alpha_two(self):
        for regime in NOISE_REGIMES:
            assert PRIOR_PRESETS[("phase_field", regime)]["alpha"] == 2.0


class TestSamplerSettings:
    """Tests for pCN defaults"""

    def test_default_beta_inside_band(self):
        for method, beta in DEFAULT_BETA.items():
            low, high = BETA_BANDS[method]
            assert low <= beta <= high

    def test_acceptance_window(self):
        assert ACCEPTANCE_WINDOW == 1000


class TestScaleSettings:
    """Tests for grid and run-length defaults"""

    def test_desk_and_paper_grids(self):
        assert DESK_SCALE["grid_size"] ** 2 == 2 ** 14
        assert PAPER_SCALE["steps"] == 10 * DESK_SCALE["steps"]

    def test_truth_grids_finer_than_inversion(self):
        for size in TRUTH_GRID_SIZES.values():
            assert size > DESK_SCALE["grid_size"]

    def test_supported_sizes_are_powers_of_two(self):
        for size in SUPPORTED_GRID_SIZES:
            assert size & (size - 1) == 0

    def test_uniform_layout_has_225_points(self):
        assert UNIFORM_LAYOUT_PER_AXIS ** 2 == 225

    def test_gamma_ladder_resolved(self):
        assert min(GAMMA_EPS_LADDER) >= 2.0 / GAMMA_GRID_SIZE
        assert list(GAMMA_EPS_LADDER) == sorted(GAMMA_EPS_LADDER, reverse=True)

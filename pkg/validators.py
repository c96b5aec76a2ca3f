"""
Input Validators Module

Centralized validation for prior parameters, grids and experiment configs.
"""
import math
from typing import Any, Callable, Iterable, List, Optional

from experiment_config import METHODS, NOISE_REGIMES, TRUTH_GRID_SIZES


class ValidationResult:
    """Result of a validation check"""

    def __init__(
        self,
        is_valid: bool,
        error: Optional[str] = None,
        field: Optional[str] = None
    ):
        self.is_valid = is_valid
        self.error = error
        self.field = field

    @staticmethod
    def valid() -> "ValidationResult":
        return ValidationResult(True)

    @staticmethod
    def invalid(error: str, field: Optional[str] = None) -> "ValidationResult":
        return ValidationResult(False, error, field)


def validate_positive(value: Any, field_name: str) -> ValidationResult:
    """
    Validate that a value is a finite, strictly positive number.

    Args:
        value: Value to validate
        field_name: Name of field for error messages

    Returns:
        ValidationResult
    """
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        return ValidationResult.invalid(f"{field_name} must be a finite number", field_name)

    if value <= 0:
        return ValidationResult.invalid(f"{field_name} must be > 0, got {value}", field_name)

    return ValidationResult.valid()


def validate_non_negative(value: Any, field_name: str) -> ValidationResult:
    """Validate that a value is a finite number >= 0"""
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        return ValidationResult.invalid(f"{field_name} must be a finite number", field_name)

    if value < 0:
        return ValidationResult.invalid(f"{field_name} must be >= 0, got {value}", field_name)

    return ValidationResult.valid()


def validate_grid_size(size: Any, field_name: str = "grid_size") -> ValidationResult:
    """
    Validate an FFT grid size: a power of two, at least 4.

    Args:
        size: Points per axis
        field_name: Name of field for error messages

    Returns:
        ValidationResult
    """
    if not isinstance(size, int) or isinstance(size, bool):
        return ValidationResult.invalid(f"{field_name} must be an integer", field_name)

    if size < 4 or size & (size - 1):
        return ValidationResult.invalid(
            f"{field_name} must be a power of two >= 4, got {size}",
            field_name
        )

    return ValidationResult.valid()


def validate_beta(beta: Any) -> ValidationResult:
    """Validate the pCN proposal parameter, beta in (0, 1]"""
    if not isinstance(beta, (int, float)) or not 0 < beta <= 1:
        return ValidationResult.invalid(f"beta must lie in (0, 1], got {beta}", "beta")

    return ValidationResult.valid()


def validate_prior_params(params: Any) -> List[ValidationResult]:
    """
    Validate all PriorParams invariants.

    Args:
        params: Object carrying delta, q, tau, eps, c, b, r and alpha

    Returns:
        List of failed checks (empty when valid)
    """
    checks = [
        validate_positive(params.delta, "delta"),
        validate_positive(params.tau, "tau"),
        validate_non_negative(params.q, "q"),
        validate_non_negative(params.c, "c"),
        validate_non_negative(params.r, "r"),
        validate_positive(params.b, "b"),
    ]

    if not isinstance(params.eps, (int, float)) or not 0 < params.eps < 1:
        checks.append(ValidationResult.invalid(f"eps must lie in (0, 1), got {params.eps}", "eps"))

    # d = 2: samples are continuous only for alpha > d/2
    if not isinstance(params.alpha, (int, float)) or params.alpha <= 1:
        checks.append(ValidationResult.invalid(f"alpha must be > 1, got {params.alpha}", "alpha"))

    return [result for result in checks if not result.is_valid]


def collect_errors(validators: Iterable[Callable[[], ValidationResult]]) -> List[ValidationResult]:
    """
    Run every validator and collect all failures.

    Args:
        validators: Zero-argument callables returning ValidationResult

    Returns:
        Failed results, in order
    """
    failures = []
    for validator in validators:
        result = validator()
        if not result.is_valid:
            failures.append(result)
    return failures


def validate_method(method: Optional[str]) -> ValidationResult:
    """Validate the inversion method name"""
    if method not in METHODS:
        return ValidationResult.invalid(
            f"Invalid method: {method}. Available methods: {', '.join(METHODS)}",
            "method"
        )
    return ValidationResult.valid()


def validate_noise_regime(regime: Optional[str]) -> ValidationResult:
    """Validate the noise regime name"""
    if regime not in NOISE_REGIMES:
        available = ', '.join(sorted(NOISE_REGIMES.keys()))
        return ValidationResult.invalid(
            f"Invalid noise_regime: {regime}. Available regimes: {available}",
            "noise_regime"
        )
    return ValidationResult.valid()


def validate_truth(truth: Optional[str], truth_file: Optional[str] = None) -> ValidationResult:
    """Validate the truth selector ("A", "B", "C" or "file" with a path)"""
    if truth == "file":
        if not truth_file:
            return ValidationResult.invalid("truth = file requires truth_file", "truth_file")
        return ValidationResult.valid()

    if truth not in TRUTH_GRID_SIZES:
        return ValidationResult.invalid(
            f"Invalid truth: {truth}. Use A, B, C or file",
            "truth"
        )
    return ValidationResult.valid()


def validate_experiment_config(config: Any) -> List[ValidationResult]:
    """
    Validate every field of an ExperimentConfig, collecting all failures.

    Args:
        config: ExperimentConfig instance

    Returns:
        Failed results (empty when valid)
    """
    validators = [
        lambda: validate_method(config.method),
        lambda: validate_noise_regime(config.noise_regime),
        lambda: validate_truth(config.truth, config.truth_file),
        lambda: validate_grid_size(config.grid_size, "grid_size"),
        lambda: validate_positive(config.steps, "steps"),
        lambda: validate_beta(config.beta) if config.beta is not None else ValidationResult.valid(),
        lambda: validate_positive(config.alpha, "alpha") if config.alpha is not None else ValidationResult.valid(),
    ]
    failures = collect_errors(validators)

    if isinstance(config.truth_size, int) and isinstance(config.grid_size, int):
        if config.truth_size <= config.grid_size:
            failures.append(ValidationResult.invalid(
                f"truth_size ({config.truth_size}) must exceed grid_size ({config.grid_size})",
                "truth_size"
            ))

    if isinstance(config.burn_in, int) and isinstance(config.steps, int):
        if not 0 <= config.burn_in < config.steps:
            failures.append(ValidationResult.invalid(
                f"burn_in must lie in [0, steps), got {config.burn_in}",
                "burn_in"
            ))

    return failures

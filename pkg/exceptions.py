"""
Custom Exceptions Module

Defines application-specific exceptions for better error handling.
"""


class BinverseError(Exception):
    """Base exception for binverse"""

    def __init__(self, message: str, error_code: str = None, details: str = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or "UNKNOWN_ERROR"
        self.details = details

    def to_dict(self) -> dict:
        """Convert exception to dictionary for JSON error documents"""
        result = {
            "error": self.message,
            "error_code": self.error_code
        }
        if self.details:
            result["details"] = self.details
        return result


class ConfigurationError(BinverseError):
    """Raised when configuration is invalid or unsupported"""

    def __init__(self, message: str, invalid_keys: list = None):
        super().__init__(
            message=message,
            error_code="CONFIGURATION_ERROR",
            details=f"Invalid: {', '.join(invalid_keys)}" if invalid_keys else None
        )
        self.invalid_keys = invalid_keys or []


class ValidationError(BinverseError):
    """Raised when a parameter or field violates its invariants"""

    def __init__(self, message: str, field: str = None):
        super().__init__(
            message=message,
            error_code="VALIDATION_ERROR"
        )
        self.field = field

    def to_dict(self) -> dict:
        result = super().to_dict()
        if self.field:
            result["field"] = self.field
        return result


class ScalingViolationError(BinverseError):
    """Raised when the phase-field scaling relations do not hold"""

    def __init__(self, message: str, a: float = None):
        super().__init__(
            message=message,
            error_code="SCALING_VIOLATION",
            details=f"a = {a}" if a is not None else None
        )
        self.a = a


class ResolutionError(BinverseError):
    """Raised when a grid cannot resolve the requested length scale"""

    def __init__(self, message: str, required: float = None, actual: float = None):
        details = None
        if required is not None and actual is not None:
            details = f"required: {required}, actual: {actual}"

        super().__init__(
            message=message,
            error_code="RESOLUTION_ERROR",
            details=details
        )
        self.required = required
        self.actual = actual


class InvalidCovarianceError(BinverseError):
    """Raised when a covariance or Gram matrix is not symmetric positive definite"""

    def __init__(self, message: str, matrix_name: str = None):
        super().__init__(
            message=message,
            error_code="INVALID_COVARIANCE",
            details=f"matrix: {matrix_name}" if matrix_name else None
        )
        self.matrix_name = matrix_name


class InverseCrimeError(ValidationError):
    """Raised when synthetic data would be generated on the inversion grid"""

    def __init__(self, truth_size: int, inversion_size: int):
        super().__init__(
            message=(
                f"Truth grid ({truth_size}) must be strictly finer than "
                f"inversion grid ({inversion_size})"
            ),
            field="truth_size"
        )
        self.error_code = "INVERSE_CRIME"
        self.truth_size = truth_size
        self.inversion_size = inversion_size


class PerimeterRegimeError(BinverseError):
    """Raised when perimeter statistics are requested where level sets have infinite length"""

    def __init__(self, alpha: float):
        super().__init__(
            message=f"Perimeter statistics require alpha > 2, got {alpha}",
            error_code="PERIMETER_REGIME"
        )
        self.alpha = alpha


class GridMismatchError(BinverseError):
    """Raised when two fields cannot be compared on a common grid"""

    def __init__(self, size_a: int, size_b: int):
        super().__init__(
            message=f"Grid mismatch: {size_a} vs {size_b}",
            error_code="GRID_MISMATCH"
        )
        self.size_a = size_a
        self.size_b = size_b

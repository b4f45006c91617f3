from typing import Optional, Sequence


class ClassificationError(Exception):
    """Base exception for model-space and homogeneity classification errors."""
    def __init__(self, message: str, error_code: str = "CLASSIFICATION_ERROR"):
        self.message = message
        self.error_code = error_code
        super().__init__(message)

class HypothesisViolationError(ClassificationError):
    """Raised when a family hypothesis (nonvanishing Delta, h'', ...) fails."""
    def __init__(self, reason: str, point: Optional[Sequence[float]] = None):
        self.reason = reason
        self.point = tuple(point) if point is not None else None
        where = f" at {self.point}" if self.point is not None else ""
        super().__init__(
            message=f"Hypothesis violated{where}: {reason}",
            error_code="HYPOTHESIS_VIOLATED"
        )

class NonCanonicalModelError(ClassificationError):
    """Raised when a model space is not in the expected normal form."""
    def __init__(self, detail: str):
        super().__init__(
            message=f"Model space is not canonical: {detail}",
            error_code="NON_CANONICAL_MODEL"
        )

class FamilySpecError(ClassificationError):
    """Raised when a family specification is inconsistent."""
    def __init__(self, detail: str):
        super().__init__(
            message=f"Invalid family specification: {detail}",
            error_code="FAMILY_SPEC"
        )

class OracleUnavailableError(ClassificationError):
    """Raised when no closed form is known for the requested order."""
    def __init__(self, family: str, order: int):
        self.family = family
        self.order = order
        super().__init__(
            message=f"No closed-form oracle for family '{family}' at order {order}",
            error_code="ORACLE_UNAVAILABLE"
        )

class EmptySampleSetError(ClassificationError):
    def __init__(self):
        super().__init__(
            message="Sample set is empty",
            error_code="EMPTY_SAMPLES"
        )

class ConfigError(Exception):
    """Raised for invalid command-line or config-file input."""
    def __init__(self, message: str, field: Optional[str] = None, error_code: str = "CONFIG_ERROR"):
        self.message = message
        self.field = field
        self.error_code = error_code
        super().__init__(message)

class GeometryError(Exception):
    """Base exception for jet, tensor and curvature computations."""
    def __init__(self, message: str, error_code: str = "GEOMETRY_ERROR"):
        self.message = message
        self.error_code = error_code
        super().__init__(message)

class JetError(GeometryError):
    def __init__(self, message: str, error_code: str = "JET_ERROR"):
        super().__init__(message=message, error_code=error_code)

class JetDivisionError(JetError):
    """Raised when dividing by a jet whose value is zero."""
    def __init__(self):
        super().__init__(
            message="Division by a jet with zero value",
            error_code="JET_DIVISION"
        )

class JetOrderError(JetError):
    """Raised when a derivative beyond the jet order is requested."""
    def __init__(self, requested: int, order: int):
        self.requested = requested
        self.order = order
        super().__init__(
            message=f"Requested derivative of total order {requested} from a jet of order {order}",
            error_code="JET_ORDER"
        )

class SingularMetricError(GeometryError):
    """Raised when a metric is not symmetric or is (numerically) degenerate."""
    def __init__(self, detail: str):
        super().__init__(
            message=f"Singular metric: {detail}",
            error_code="SINGULAR_METRIC"
        )

class SingularFrameError(GeometryError):
    """Raised when a change of basis is not invertible."""
    def __init__(self, determinant: float):
        self.determinant = determinant
        super().__init__(
            message=f"Frame determinant {determinant:.3e} is below the invertibility floor",
            error_code="SINGULAR_FRAME"
        )

class SlotError(GeometryError):
    """Raised when a contraction or index operation names invalid slots."""
    def __init__(self, detail: str):
        super().__init__(
            message=f"Invalid tensor slots: {detail}",
            error_code="SLOT_ERROR"
        )

class MetricFieldError(GeometryError):
    """Raised when a metric field is malformed."""
    def __init__(self, detail: str):
        super().__init__(
            message=f"Invalid metric field: {detail}",
            error_code="METRIC_FIELD"
        )

class JetDomainError(JetError):
    """Raised when a univariate function is composed outside its domain."""
    def __init__(self, function: str, reason: str):
        self.function = function
        self.reason = reason
        super().__init__(
            message=f"{function}: {reason}",
            error_code="JET_DOMAIN"
        )

class ExpressionError(Exception):
    """Base exception for expression parsing and evaluation errors."""
    def __init__(self, message: str, error_code: str = "EXPRESSION_ERROR"):
        self.message = message
        self.error_code = error_code
        super().__init__(message)

class ParseError(ExpressionError):
    """Raised when expression text cannot be parsed."""
    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(
            message=f"{message} at position {position}",
            error_code="PARSE_ERROR"
        )

class ExpressionDomainError(ExpressionError):
    """Raised when a subexpression is evaluated outside its domain."""
    def __init__(self, subexpression: str, reason: str):
        self.subexpression = subexpression
        self.reason = reason
        super().__init__(
            message=f"{reason} in '{subexpression}'",
            error_code="DOMAIN_ERROR"
        )

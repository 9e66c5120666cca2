"""Exception hierarchy shared by every bplab module."""


class BPError(Exception):
    """Base class for all bplab errors."""


class UnsupportedDimensionError(BPError):
    pass


class DimensionMismatchError(BPError):
    pass


class DomainError(BPError, ValueError):
    pass


class AccuracyError(BPError):
    pass


class IntegrandSingularityError(BPError, FloatingPointError):
    """Raised when an integrand is NaN or infinite at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ContinuityError(BPError):
    pass


class DegenerateScenarioError(BPError):
    pass


class ScenarioError(BPError):
    """Scenario parsing or validation failure; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field

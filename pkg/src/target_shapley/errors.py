"""Exception and warning classes raised across the package."""


class TargetShapleyError(Exception):
    """Base class for all package errors."""


class ModelError(TargetShapleyError, ValueError):
    """Invalid probability model (non-SPD covariance, bad weights, ...)."""


class DegenerateConditionalError(TargetShapleyError):
    """Every mixture component has zero density at the conditioning point."""


class ConfigurationError(TargetShapleyError, ValueError):
    """Inconsistent experiment, sampler or estimator settings."""


class CapabilityError(TargetShapleyError):
    """A model lacks an operation an estimator requires."""


class StagnationError(TargetShapleyError):
    """The cross-entropy algorithm cannot make progress."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AggregationError(TargetShapleyError):
    """Shapley aggregation cannot be carried out (e.g. zero variance)."""


class StandardizationError(TargetShapleyError):
    """A coordinate has zero spread and cannot be standardised."""


class RareEventWarning(UserWarning):
    """No failure point was observed; the estimate is exactly zero."""


class ClampWarning(UserWarning):
    """A probability estimate fell outside [0, 1] and was clamped."""

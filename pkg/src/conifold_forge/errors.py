"""Exception types raised across the package."""


class ConifoldError(ValueError):
    """Base class for all domain errors."""


class DegeneratePointError(ConifoldError):
    """Point too close to the cone tip to carry a chart."""


class IllConditionedChartError(ConifoldError):
    """The quadratic branch for the eliminated coordinate is ambiguous."""


class OutsideDomainError(ConifoldError):
    """Input lies outside the domain of a map or potential."""


class InvalidScaleError(ConifoldError):
    """Zero scaling parameter."""


class ShapeError(ConifoldError):
    """Tensor input with the wrong shape or symmetry."""


class OrderError(ConifoldError):
    """Jet order too low for the requested derivative."""


class SingularMetricError(ConifoldError):
    """A metric that must be positive definite is not."""


class NotASquareError(ConifoldError):
    """A (2,2)-form without a positive square root."""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class PerturbationTooLargeError(ConifoldError):
    """Perturbation outside the small regime where the square root is controlled."""


class FitFailureError(ConifoldError):
    """Regression input too small or ill-conditioned."""


class SolveError(ConifoldError):
    """Singular linear system."""


class EvaluationError(ConifoldError):
    """A field could not be evaluated at the requested points."""

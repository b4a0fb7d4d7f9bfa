"""Exception hierarchy shared by all regulus modules."""


class RegulusError(Exception):
    """Base class for every error raised by the toolkit."""


class ParameterError(RegulusError, ValueError):
    """Invalid surface parameters, sampling counts, exponents, ..."""


class DomainError(RegulusError, ValueError):
    """A point lies outside the chart domain."""


class MetricDegeneracyError(RegulusError, ArithmeticError):
    """The metric is not positive definite (or numerically singular)."""


class GridFormatError(RegulusError, ValueError):
    """A gridmetric file could not be parsed."""


class InconsistentFieldError(RegulusError, ValueError):
    """Two samples at the same location carry different values."""


class MissingDataError(RegulusError, ValueError):
    """Derivative samples or pair distances required by a norm are absent."""


class DomainExitError(RegulusError):
    """A geodesic left the chart domain before reaching its end parameter."""

    def __init__(self, message, exit_parameter):
        super().__init__(message)
        self.exit_parameter = float(exit_parameter)


class StepSizeUnderflowError(RegulusError, ArithmeticError):
    """The adaptive integrator could not meet its tolerance."""


class NonConvergenceError(RegulusError):
    """Geodesic shooting failed to connect two points."""


class PreconditionError(RegulusError, ValueError):
    """An operation was called outside its admissible range."""


class UnsupportedConstructionError(RegulusError):
    """No isothermal construction is available for the given ball."""


class NonMonotonePredicateError(RegulusError):
    """A bisection predicate flipped more than once on the probe grid."""

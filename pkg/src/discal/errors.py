"""Exception hierarchy shared across the package.

Every failure mode raised by the library derives from :class:`DiscalError`
so callers (CLI, HTTP service) can map errors to exit codes / status codes
in one place.
"""


class DiscalError(Exception):
    """Base class for all package errors."""


class ConfigError(DiscalError):
    """Invalid scenario or run configuration."""


class AssemblyError(DiscalError):
    """Matrix assembly produced an unusable (singular / non-SPD) operator."""


class ShapeError(DiscalError):
    """Operand dimensions are inconsistent."""


class LinearSolveError(DiscalError):
    """A linear solve failed."""


class RankDeficiencyError(DiscalError):
    """Interpolation inputs are linearly dependent."""


class DegenerateFieldError(DiscalError):
    """A field has zero variance, so no correlation length exists."""


class DegenerateScaleError(DiscalError):
    """A reference vector with zero norm cannot be used for rescaling."""


class ZeroDataError(DiscalError):
    """Data is identically zero where a magnitude is required."""


class InitFailure(DiscalError):
    """Hyper-parameter initialization could not produce a value."""


class OptimizationFailure(DiscalError):
    """The quadratic program could not be solved."""


class CurvatureError(DiscalError):
    """The Hessian is not positive definite."""


class CalibrationError(DiscalError):
    """Posterior assembly or solve failed."""


class ValidationError(DiscalError):
    """A hyper-parameter patch violates the parameter invariants."""


class NotFoundError(DiscalError):
    """A requested session or record does not exist."""


class NoDataError(DiscalError):
    """An operation requires a generated sample dataset."""


class UnsupportedViewError(DiscalError):
    """The requested view does not apply to this scenario."""

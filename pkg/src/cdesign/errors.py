"""Exception hierarchy shared by the solver modules and the command line."""


class DesignError(Exception):
    """Base class for all errors raised by :mod:`cdesign`."""

    exit_code = 1


class InvalidInputError(DesignError, ValueError):
    """Malformed numerical input (non-finite entries, bad shapes, ...)."""


class InvalidDesignError(InvalidInputError):
    """A design measure whose weights are negative or do not sum to one."""


class DomainError(InvalidInputError):
    """A design variable outside the model's domain."""


class NotEstimableError(DesignError):
    """The target vector is not in the column space of the information matrix.

    ``residual`` is the relative norm of the component of ``c`` orthogonal
    to the column space, so callers can turn it into a penalty.
    """

    exit_code = 3

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = float(residual)


class OptimizationFailedError(DesignError):
    exit_code = 2

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = float(residual)


class OracleInfeasibleError(DesignError):
    """The requested verification method cannot run on this instance."""

    exit_code = 4


class TurningPointError(DesignError, ValueError):
    """The quadratic coefficient is zero, so the turning point is undefined."""

    exit_code = 5

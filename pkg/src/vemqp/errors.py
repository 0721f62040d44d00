"""Exception hierarchy shared by all solvers."""


class VemqpError(Exception):
    """Base class for solver errors."""


class InfeasibleError(VemqpError):
    """The generalized simplex is empty or violates the strict interior condition."""


class DegenerateError(VemqpError):
    """A vertex exchange candidate set is empty."""


class NonPositiveCurvatureError(VemqpError):
    """Q_ss + Q_tt - 2 Q_st <= 0 along an exchange direction."""

    def __init__(self, message, s=None, t=None, curvature=None):
        super().__init__(message)
        self.s = s
        self.t = t
        self.curvature = curvature


class DomainError(VemqpError):
    """A point lies outside the domain of an objective or scalar function."""


class DomainViolation(VemqpError):
    """An outer Newton step left the domain of the objective."""


class InnerSolverStall(VemqpError):
    """The inner QP solver ran out of iterations before its stopping rule held."""


class LineSearchFail(VemqpError):
    """Backtracking exceeded its cap."""


class NegativeQuadraticForm(VemqpError):
    """d^T H d is significantly negative for a matrix assumed PSD."""


class DegenerateInstance(VemqpError):
    """Instance generation produced no free coordinates after all retries."""


class InstanceFormatError(VemqpError):
    """An instance file is malformed."""

"""Exception hierarchy shared by all certkit modules."""


class CertkitError(Exception):
    """Base class for every error raised by certkit."""


class ConfigurationError(CertkitError, ValueError):
    """Invalid numerical configuration (grid size, norm order, empty grids)."""


class DomainError(CertkitError, ValueError):
    """Input data outside the admissible domain (non-finite samples, grid mismatch)."""


class SingularProblemError(CertkitError, ArithmeticError):
    """The boundary value problem is at (or numerically near) a resonance."""


class UnsupportedRegimeError(CertkitError):
    """The requested method does not apply to the given matrix structure."""


class StaleSolutionError(CertkitError):
    """A P12 solution does not satisfy the boundary value problem it is used with."""


class NoRootError(CertkitError, ArithmeticError):
    """A monotone scalar equation has no positive root."""


class NumericDegeneracyError(CertkitError, ArithmeticError):
    """A parameter search failed to reach the required strict inequalities."""


class InfeasibleCertificateError(CertkitError):
    """ISS constants were requested from a certificate that is not feasible."""


class DivergenceError(CertkitError, FloatingPointError):
    """A simulated trajectory blew up.

    Carries the step index and time at which the state exceeded the threshold.
    """

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time

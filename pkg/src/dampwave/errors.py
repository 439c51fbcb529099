"""Exception hierarchy shared by all modules.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`NumericalError` to exit code 2.
"""


class DampwaveError(Exception):
    """Base class of all package errors."""


class ValidationError(DampwaveError, ValueError):
    """Raised when inputs violate a documented precondition."""


class NumericalError(DampwaveError, ArithmeticError):
    """Raised when a numerical procedure fails to converge.

    Parameters
    ----------
    msg : str
        Description of the failure.
    partial : object, optional
        Whatever was computed before the failure (eigenvalues found so
        far, Newton trace, ...).
    """

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial

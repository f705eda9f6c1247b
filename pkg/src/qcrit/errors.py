"""Exception types shared across the package.

The CLI maps :class:`ContractError` to exit code 2 and
:class:`NumericalError` to exit code 3.
"""


class QcritError(Exception):
    """Base class for all package errors."""


class ContractError(QcritError, ValueError):
    """Input violates an operation's precondition."""


class NumericalError(QcritError, RuntimeError):
    """A numerical routine failed to reach its accuracy target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

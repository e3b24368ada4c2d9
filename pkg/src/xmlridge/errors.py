"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage errors exit 2, I/O errors
(plain ``OSError``) exit 3, data-format errors exit 4 and numerical failures
exit 5.
"""


class XmlRidgeError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(XmlRidgeError):
    """Invalid combination of options or arguments."""


class ParseError(XmlRidgeError):
    """Malformed dataset text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionMismatchError(XmlRidgeError):
    """Operands whose shapes cannot be combined."""


class NumericalError(XmlRidgeError):
    """Numerical failure inside a solver or factorization."""


class CapacityError(NumericalError):
    """A dense intermediate would exceed the configured memory budget."""


class SingularSystemError(NumericalError):
    """Cholesky factorization failed even after jitter escalation.

    ``pivot`` is the 1-based index of the failing leading minor as reported
    by LAPACK.
    """

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot

class PprError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(PprError, ValueError):
    pass


class ModelError(PprError):
    """
    A covariance model or matrix is not usable, e.g. not positive definite.
    :param minor: 1-based order of the first leading minor that is not positive, when known.
    """

    def __init__(self, message: str, minor: int | None = None):
        super().__init__(message)
        self.minor = minor


class IntegrationDomainError(PprError, ArithmeticError):
    pass


class ConvergenceError(PprError, RuntimeError):
    pass


class BundleFormatError(InvalidArgumentError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column

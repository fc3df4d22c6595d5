from typing import Optional


class FdrPathError(Exception):
    """Base class for all errors raised by fdrpath."""

    pass


class DomainError(FdrPathError, ValueError):
    """
    A parameter or input value lies outside its domain.

    Parameters
    ----------
    field : str
        Name of the offending field.
    message : str
        Error message.

    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericError(FdrPathError, ArithmeticError):
    """
    A numerical computation failed.

    Parameters
    ----------
    message : str
        Error message.
    iteration : int, optional
        Iteration index at which the failure happened.
    index : int, optional
        Index of the test statistic which caused the failure.

    """

    def __init__(
        self, message: str, iteration: Optional[int] = None, index: Optional[int] = None
    ):
        details = []
        if iteration is not None:
            details.append(f"iteration {iteration}")
        if index is not None:
            details.append(f"index {index}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
        self.iteration = iteration
        self.index = index


class UnsupportedMethodError(FdrPathError, NotImplementedError):
    """The requested method is not available for the given model."""

    pass


class ParseError(FdrPathError, ValueError):
    """
    An input file could not be parsed.

    Parameters
    ----------
    line : int
        Line number (starting at 1, header included).
    message : str
        Error message.

    """

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigurationError(FdrPathError, ValueError):
    """Invalid scenario configuration."""

    pass

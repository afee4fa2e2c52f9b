# errors.py

from typing import ClassVar, Optional, Tuple


class TypicalityError(Exception):
    """Base class for every failure raised by the typicality toolkit."""
    exit_code: ClassVar[int] = 2


class InvalidInputError(TypicalityError, ValueError):
    """An argument violates the precondition of the operation it was passed to."""
    exit_code: ClassVar[int] = 1


class DomainError(TypicalityError):
    """The entropy target lies outside the range where a basis can be found."""
    exit_code: ClassVar[int] = 1


class ResourceLimitError(TypicalityError):
    """An enumeration or dense construction would exceed its configured cap."""
    exit_code: ClassVar[int] = 2

    def __init__(self, what: str, requested: int, cap: int):
        self.what = what
        self.requested = requested
        self.cap = cap
        super().__init__(f"{what}: {requested} exceeds the configured cap of {cap}")


class ConvergenceError(TypicalityError):
    """Bisection hit its iteration cap; the last bracket is kept for the report."""
    exit_code: ClassVar[int] = 2

    def __init__(self, message: str, bracket: Optional[Tuple[float, float]] = None):
        self.bracket = bracket
        if bracket is not None:
            message = f"{message} (bracket [{bracket[0]:.17g}, {bracket[1]:.17g}])"
        super().__init__(message)


class NumericError(TypicalityError):
    """A linear-algebra result failed its own consistency check."""
    exit_code: ClassVar[int] = 2


class OutputError(TypicalityError):
    """The finished result could not be written to the requested destination."""
    exit_code: ClassVar[int] = 1

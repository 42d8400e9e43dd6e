"""Exception types raised by ldlab."""
from __future__ import annotations


class LdlabError(Exception):
    """Base class for all package errors."""


class DomainError(LdlabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(LdlabError, OverflowError):
    """A result cannot be represented in double precision."""


class NumericalFlagError(LdlabError, RuntimeError):
    """A numerical routine could not certify its result.

    Raised when truncation, convergence or effective-sample-size checks fail.
    The ``flag`` attribute carries a short machine-readable reason.
    """

    def __init__(self, message: str, flag: str = "numerical"):
        super().__init__(message)
        self.flag = flag


class AdvisoryError(LdlabError, RuntimeError):
    """A requested method is valid but impractical; the message suggests an alternative."""

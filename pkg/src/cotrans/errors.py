"""Exception hierarchy shared by every module."""


class CotransError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class DuplicateSymbol(CotransError):
    pass


class ZeroArity(CotransError):
    pass


class UnknownSymbol(CotransError):
    pass


class ArityMismatch(CotransError):
    pass


class UnboundVariable(CotransError):
    pass


class InvalidState(CotransError):
    pass


class IndexOutOfRange(CotransError):
    pass


class EmptyCycle(CotransError):
    pass


class SignatureMismatch(CotransError):
    pass


class NotStraightWithinBudget(CotransError):
    """No determining decision tree was found within the search budget.

    This covers both genuinely non-straight functions and budgets that are
    too small; ``context`` records where the search gave up.
    """

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context or {}


class NotFinitelyPresentable(CotransError):
    pass


class DSLSyntaxError(CotransError):
    def __init__(self, message, line, col):
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


class UnknownReference(CotransError):
    pass


class ValidationError(CotransError):
    """Wraps a module error raised while validating a parsed form."""

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause

"""
Error types
===========
Every failure raised by the library derives from BWError so the CLI can
catch once at its boundary and map to an exit code.
"""


class BWError(Exception):
    """Base class for all library errors"""


class DomainError(BWError, ValueError):
    """Operation called outside its mathematical domain"""


class InvariantViolation(BWError):
    """A geometric or numeric invariant failed beyond its tolerance"""


class RetryWithPerturbedW(BWError):
    """Betke reference vector hits a forbidden normal"""

    def __init__(self, message, suggested_w):
        super().__init__(message)
        self.suggested_w = suggested_w


class ApproximationError(BWError):
    """Optimizer failed to converge within its budget"""

    def __init__(self, message, best_rho=None):
        super().__init__(message)
        self.best_rho = best_rho


class NotApplicable(BWError):
    """A deformation case condition is not met"""


class InputError(BWError):
    """Unreadable or invalid input file / argument"""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column

"""Exception types shared across the package."""


class SobddeError(Exception):
    """Base class for all package errors."""


class OutOfDomain(SobddeError):
    """Evaluation point lies outside a function's interval."""


class GridMismatch(SobddeError):
    """Two grid functions do not share a compatible grid."""


class DomainViolation(SobddeError):
    """A parameter lies outside its admissible range."""


class NonFinite(SobddeError):
    """A right-hand-side evaluation produced NaN or Inf."""


class WindowTooSmall(SobddeError):
    """The contraction-window formula yielded less than one grid step."""


class NoConvergence(SobddeError):
    """A fixed-point iteration failed to converge."""

    def __init__(self, message, ratio=None, window_index=None):
        super().__init__(message)
        self.ratio = ratio
        self.window_index = window_index


class EscapeBeforeT(SobddeError):
    """The solution escaped before the requested step time."""

    def __init__(self, message, partial_state=None):
        super().__init__(message)
        self.partial_state = partial_state


class ExprSyntaxError(SobddeError):
    """Malformed expression source; carries position information."""

    def __init__(self, message, line=1, column=0, expected=None):
        loc = f"line {line}, column {column}"
        if expected:
            message = f"{message} at {loc} (expected {expected})"
        else:
            message = f"{message} at {loc}"
        super().__init__(message)
        self.line = line
        self.column = column
        self.expected = expected


class UnknownIdentifier(SobddeError):
    """Expression references an identifier outside x1..xN / y1..yN / functions."""

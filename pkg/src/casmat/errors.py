"""Shared exception types."""


class CasmatError(ValueError):
    """Base class for precondition and consistency failures."""


class SpaceMismatchError(CasmatError):
    """Two objects live over different measure spaces (identity check)."""


class ParseError(CasmatError):
    """A casmat text format failed to parse.

    Carries the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

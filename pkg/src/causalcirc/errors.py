"""Shared exception types.

Anything that goes wrong while reading one of the text formats raises
ParseError with the offending line number.  Operations that would require
enumerating more assignments than the desk-scale bound allows raise
EnumerationLimitError instead of silently grinding.
"""


class ParseError(ValueError):
    """A model file or expression could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EnumerationLimitError(ValueError):
    """An operation would enumerate more assignments than supported."""


class ZeroEvidenceError(ValueError):
    """Conditioning or abduction was attempted on probability-zero evidence."""

"""Exception types shared across the package.

Everything raised on bad input derives from SalpresError so callers can
catch one base class at CLI boundaries. Subclasses double as stdlib
exception types where that is the natural fit (ValueError, TypeError).
"""


class SalpresError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SalpresError, ValueError):
    """Numeric input outside its legal range (pixel values, sigma, dims)."""


class ImageTypeError(SalpresError, TypeError):
    """Image has the wrong channel count or encoding for an operation."""


class ParseError(SalpresError, ValueError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(SalpresError, ValueError):
    """Structurally valid input that violates a cross-field constraint."""


class EmptyInputError(SalpresError, ValueError):
    """An operation that needs at least one data point received none."""


class DegenerateMapError(SalpresError, ValueError):
    """A metric precondition failed (e.g. zero-variance saliency map)."""

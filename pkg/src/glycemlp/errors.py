"""Exception types shared across the package."""


class GlycemlpError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(GlycemlpError):
    """CSV header does not match the canonical column schema."""


class ParseError(GlycemlpError):
    """A cell could not be parsed; message carries row and column."""


class ValidationError(GlycemlpError):
    """A value violates a domain invariant (range, positivity, ...)."""


class ShapeError(GlycemlpError):
    """Array shape or length does not match the declared contract."""


class NumericError(GlycemlpError):
    """A non-finite value appeared where training requires finite numbers."""

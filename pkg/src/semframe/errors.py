"""Exception types shared across the toolkit."""


class SemframeError(Exception):
    """Base class for all errors raised on bad input data or configuration."""


class ParseError(SemframeError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SemframeError, ValueError):
    """Well-formed input that violates a data invariant."""


class ConfigError(SemframeError, ValueError):
    """Invalid or inconsistent configuration."""


class DimensionError(SemframeError, ValueError):
    """Vectors or matrices with incompatible shapes."""

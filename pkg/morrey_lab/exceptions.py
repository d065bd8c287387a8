"""Exception hierarchy shared by the services and the CLI."""


class MorreyLabError(Exception):
    """Base class for all toolkit errors."""
    pass


class ParameterDomainError(MorreyLabError):
    """Raised when parameters violate the hypothesis of an inequality."""
    pass


class MemoryGuardError(MorreyLabError):
    """Raised when a dense box or window exceeds the configured cell limit."""
    pass


class LatticeOverflowError(MorreyLabError):
    """Raised when an exact lattice count leaves the int64 range."""
    pass


class SequenceFormatError(MorreyLabError):
    """Raised when a sequence file cannot be parsed."""

    def __init__(self, message: str, line_number: int = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class UndefinedRatioError(MorreyLabError):
    """Raised when a ratio is requested whose denominator is zero."""
    pass


class ConfigError(MorreyLabError):
    """Raised when an experiment config cannot be read or has unknown keys."""
    pass

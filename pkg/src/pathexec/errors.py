"""Exception hierarchy shared across the package."""


class PathexecError(Exception):
    """Base class for all package errors."""


class DomainError(PathexecError):
    """An argument lies outside the mathematical domain of an operation."""


class GridMismatchError(PathexecError):
    """Two sampled paths live on different grids; resample before combining."""


class EstimationError(PathexecError):
    """A statistical fit is degenerate or outside its identifiable regime."""


class CsvParseError(PathexecError):
    """A data file failed validation.  Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(PathexecError):
    """A scenario configuration is missing keys or fails validation."""

"""Exception types shared across the library.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class ShapeError(ValueError):
    """Operands with incompatible shapes."""


class ConfigError(ValueError):
    """Invalid configuration value or flag combination."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class CorpusError(DataError):
    """Dataset file problem, carrying the offending 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(RuntimeError):
    """Non-finite values or inconsistent numeric state at run time."""

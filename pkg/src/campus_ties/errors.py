"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, malformed input
exits 2 and insufficient data exits 3.
"""


class CampusTiesError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ArgumentError(CampusTiesError, ValueError):
    exit_code = 1


class FormatError(CampusTiesError, ValueError):
    """Input file does not follow the expected CSV/TSV layout."""

    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(CampusTiesError, ValueError):
    exit_code = 3


class UndefinedMetricError(InsufficientDataError):
    """A metric is mathematically undefined for the given input
    (zero denominator, too few nodes, ...)."""


class DisconnectedGraphError(CampusTiesError, ValueError):
    exit_code = 3

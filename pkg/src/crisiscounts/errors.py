"""Exception types shared across the toolkit.

Everything user-facing derives from ToolkitError so the CLI can map
validation problems to exit code 1 while real I/O failures (OSError)
keep exit code 2.
"""


class ToolkitError(Exception):
    """Base class for recoverable, user-correctable errors."""


class ConfigError(ToolkitError):
    """Bad schema mapping, unknown column, malformed config file."""


class DataFormatError(ToolkitError):
    """Malformed dataset row. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AnnotationError(ToolkitError):
    """Malformed parse or frame annotation (dangling head, bad span)."""


class UnsupportedVictimTypeError(ToolkitError):
    """Victim type has no extraction patterns or default lexicon."""


class CalibrationError(ToolkitError):
    """Degenerate calibration input (single class, empty set, kind mismatch)."""


class RunnerError(ToolkitError):
    """External model runner failed: nonzero exit or no output file."""

"""Exception types shared across the toolkit."""


class SoftvoteError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SoftvoteError):
    """A domain rule was violated (bad label, duplicate id, coverage gap, ...)."""


class ParseError(SoftvoteError):
    """A file could not be parsed. Carries the offending path and line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        location = ""
        if path is not None:
            location = f"{path}:" if line is None else f"{path}:{line}:"
        super().__init__(f"{location} {message}".strip())
        self.path = path
        self.line = line


class TrainingError(SoftvoteError):
    """Member training failed (degenerate corpus, non-finite parameters)."""

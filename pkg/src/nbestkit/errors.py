"""Exception types shared across the toolkit."""
from __future__ import annotations


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class DataError(ToolkitError):
    """Malformed or inconsistent input data."""


class ManifestError(DataError):
    """Manifest parsing or validation failure, with the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelFormatError(DataError):
    """A model file that cannot be read under the supported format."""


class ScorerError(ToolkitError):
    """An external or in-process scorer failed to produce a score."""


class ConfigError(ToolkitError):
    """Options that are individually valid but mutually inconsistent."""

"""Custom exceptions for the inference subpackage."""

from __future__ import annotations

from ..core.exceptions import ElicitestError


class InferenceConfigurationError(ElicitestError, ValueError):
    """Raised when a test or confidence sequence gets a bad level, an empty grid or mismatched inputs."""

"""Custom exceptions for the simulation lab."""

from __future__ import annotations

from ..core.exceptions import ElicitestError


class ParamError(ElicitestError, ValueError):
    """Raised when generator parameters are invalid (e.g. a non-stationary AR(1) with a stationary start)."""


class PresetError(ElicitestError, KeyError):
    """Raised when an experiment preset or scenario name is unknown."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ArtifactExportError(ElicitestError, OSError):
    """Raised when run artifacts cannot be written."""

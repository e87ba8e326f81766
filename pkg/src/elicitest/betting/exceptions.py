"""Custom exceptions for the betting subpackage."""

from __future__ import annotations

from ..core.exceptions import ElicitestError


class StrategyConfigurationError(ElicitestError, ValueError):
    """Raised when a betting strategy cannot be built for a family."""


class MixtureWeightsError(ElicitestError, ValueError):
    """Raised when mixture weights are negative, misaligned or do not sum to one."""


class SolverFailure(ElicitestError, RuntimeError):
    """Raised when the inner argmax solver hits its iteration cap."""

    def __init__(self, iterations: int, last_step: float) -> None:
        self.iterations = iterations
        self.last_step = last_step
        super().__init__(
            f"Inner solver stopped after {iterations} iterations without reaching "
            f"tolerance (last step {last_step:.3g})."
        )

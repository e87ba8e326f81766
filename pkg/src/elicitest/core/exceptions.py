"""Custom exceptions for the core models: functionals, ψ catalog and families."""

from __future__ import annotations


class ElicitestError(Exception):
    """Base class for every error raised by the engine."""


class InvalidObservationError(ElicitestError, ValueError):
    """Raised when an observation is empty, has the wrong dimension or is not finite."""


class UnknownFunctionalError(ElicitestError, ValueError):
    """Raised when a functional id does not resolve against the catalog."""


class UnsupportedScoreError(ElicitestError):
    """Raised when a scoring function is requested from a functional without one."""


class DomainError(ElicitestError, ValueError):
    """Raised when a parameter lies outside the functional's domain."""


class DegenerateInputError(ElicitestError, ValueError):
    """Raised when a regression observation has an all-zero covariate vector."""


class UnsupportedPairError(ElicitestError):
    """Raised when no ground-truth oracle exists for a functional/reference pair."""


class PsiRangeError(ElicitestError, ValueError):
    """Raised when ψ is evaluated outside [0, u_max)."""


class PsiSpecError(ElicitestError, ValueError):
    """Raised when a ψ specification is malformed or violates ψ(0) = ψ'(0) = 0."""


class SizeError(ElicitestError):
    """Raised when a discrete model is too large for exhaustive enumeration."""


class VarianceProcessError(ElicitestError, ValueError):
    """Raised when a variance process has negative or missing increments."""


class FamilyConfigurationError(ElicitestError, ValueError):
    """Raised when a test-supermartingale family cannot be built as requested."""


class DataRangeError(ElicitestError, ValueError):
    """Raised when an observation leaves the data range a family was certified on."""


class NonpositiveIncrementError(ElicitestError, ArithmeticError):
    """Raised when a multiplicative wealth increment is not strictly positive."""

    def __init__(self, value: float, step: int | None = None) -> None:
        self.value = float(value)
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"Nonpositive multiplicative increment {self.value!r}{where}; "
            "the bet lies outside the admissible set for the realized data."
        )

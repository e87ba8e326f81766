"""Catalog of elicitable and identifiable functionals.

Each functional carries its scoring function s(λ, x) and/or identification
function m(λ, x), a parameter domain Λ and, when a data range is declared,
a uniform bound on ‖m‖. Observations are 1-d float vectors; regression
observations pack the response first: (y, x_1, ..., x_k).

All batch methods take observations as an (n, d) array and are vectorized
over rows.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import (
    DataRangeError,
    DegenerateInputError,
    DomainError,
    InvalidObservationError,
    UnknownFunctionalError,
    UnsupportedScoreError,
)

logger = logging.getLogger(__name__)

DataRange = Optional[Tuple[float, float]]

FUNCTIONAL_IDS = ("mean", "quantile:<alpha>", "regression:<k>", "mean_sd", "var_cvar:<alpha>")


def as_observation(x, dim: int | None = None) -> np.ndarray:
    """Coerce a single observation into a finite 1-d float vector."""
    try:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
    except (TypeError, ValueError) as exc:
        raise InvalidObservationError(f"Observation {x!r} is not numeric.") from exc
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidObservationError(f"Observation must be a non-empty vector, got shape {arr.shape}.")
    if dim is not None and arr.size != dim:
        raise InvalidObservationError(f"Observation has dimension {arr.size}, expected {dim}.")
    if not np.all(np.isfinite(arr)):
        raise InvalidObservationError("Observation contains NaN or infinite values.")
    return arr


def as_observations(xs, dim: int) -> np.ndarray:
    """Coerce a batch of observations into a finite (n, dim) float array."""
    try:
        arr = np.asarray(xs, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidObservationError("Observations are not numeric.") from exc
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise InvalidObservationError(f"Observations must have shape (n, {dim}), got {arr.shape}.")
    if not np.all(np.isfinite(arr)):
        raise InvalidObservationError("Observations contain NaN or infinite values.")
    return arr


class Functional(ABC):
    """A statistical functional with a scoring and/or identification function.

    Attributes:
        name: catalog tag ("mean", "quantile", ...).
        param_dim: dimension k of λ and of m(λ, x).
        obs_dim: dimension d of an observation.
        has_score / has_ident: which functions the catalog provides.
        convex_score: whether s(·, x) is convex in λ for every x.
        ident_sign: +1 or -1 when m = ident_sign · ∇_λ s exactly, None otherwise.
        data_range: declared (lo, hi) for scalar observations, or None.
    """

    name: str = ""
    param_dim: int = 1
    obs_dim: int = 1
    has_score: bool = True
    has_ident: bool = True
    convex_score: bool = True
    ident_sign: Optional[int] = None

    def __init__(self, data_range: DataRange = None) -> None:
        if data_range is not None:
            lo, hi = (float(v) for v in data_range)
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
                raise DomainError(f"Data range must be finite with lo < hi, got {data_range!r}.")
            data_range = (lo, hi)
        self.data_range = data_range

    # -- identity -------------------------------------------------------
    @property
    def id(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{type(self).__name__}(id={self.id!r}, data_range={self.data_range!r})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Functional)
            and self.id == other.id
            and self.data_range == other.data_range
        )

    def __hash__(self) -> int:
        return hash((self.id, self.data_range))

    # -- domain Λ -------------------------------------------------------
    def domain_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinate bounds of Λ (±inf where unbounded)."""
        if self.data_range is None:
            lower = np.full(self.param_dim, -np.inf)
            upper = np.full(self.param_dim, np.inf)
        else:
            lower = np.full(self.param_dim, self.data_range[0])
            upper = np.full(self.param_dim, self.data_range[1])
        return lower, upper

    def ordered_pair(self) -> Optional[Tuple[int, int]]:
        """(i, j) when Λ additionally requires λ_j ≤ λ_i."""
        return None

    def in_domain(self, lam, tol: float = 1e-12) -> bool:
        lam = np.asarray(lam, dtype=float).reshape(-1)
        if lam.size != self.param_dim or not np.all(np.isfinite(lam)):
            return False
        lower, upper = self.domain_bounds()
        if np.any(lam < lower - tol) or np.any(lam > upper + tol):
            return False
        pair = self.ordered_pair()
        if pair is not None and lam[pair[1]] > lam[pair[0]] + tol:
            return False
        return True

    def check_param(self, lam) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(lam, dtype=float)).reshape(-1)
        if not self.in_domain(arr):
            raise DomainError(f"λ={arr.tolist()} is outside the domain of {self.id} ({self.describe_domain()}).")
        return arr

    def describe_domain(self) -> str:
        lower, upper = self.domain_bounds()
        text = " × ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(lower, upper))
        pair = self.ordered_pair()
        if pair is not None:
            text += f" ∩ {{λ{pair[1]} ≤ λ{pair[0]}}}"
        return text

    def check_range(self, xs: np.ndarray) -> None:
        """Raise DataRangeError when scalar observations leave the declared range."""
        if self.data_range is None:
            return
        lo, hi = self.data_range
        bad = (xs[:, 0] < lo) | (xs[:, 0] > hi)
        if np.any(bad):
            value = float(xs[np.argmax(bad), 0])
            raise DataRangeError(f"Observation {value!r} is outside the declared data range [{lo:g}, {hi:g}].")

    # -- scoring function ----------------------------------------------
    def scores(self, lam, xs) -> np.ndarray:
        if not self.has_score:
            raise UnsupportedScoreError(f"Functional {self.id} has no scoring function in the catalog.")
        lam = self.check_param(lam)
        return self._score(lam, as_observations(xs, self.obs_dim))

    def score(self, lam, x) -> float:
        return float(self.scores(lam, as_observation(x, self.obs_dim).reshape(1, -1))[0])

    def score_gradients(self, lam, xs) -> np.ndarray:
        """(Sub)gradients of s(·, x) in λ, one row per observation."""
        if not self.has_score:
            raise UnsupportedScoreError(f"Functional {self.id} has no scoring function in the catalog.")
        lam = self.check_param(lam)
        return self._score_gradient(lam, as_observations(xs, self.obs_dim))

    # -- identification function ----------------------------------------
    def idents(self, lam, xs, strict: bool = True) -> np.ndarray:
        lam = self.check_param(lam)
        return self._ident(lam, as_observations(xs, self.obs_dim), strict)

    def ident(self, lam, x, strict: bool = True) -> np.ndarray:
        return self.idents(lam, as_observation(x, self.obs_dim).reshape(1, -1), strict)[0]

    def degenerate_rows(self, xs: np.ndarray) -> np.ndarray:
        """Boolean mask of rows where m is replaced by zero in streaming mode."""
        return np.zeros(len(xs), dtype=bool)

    # -- bounds ---------------------------------------------------------
    def ident_extremes(self, lam0) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Per-coordinate [min, max] of m(λ₀, x) over the data range, or None."""
        return None

    def _parameter_corners(self) -> Sequence[np.ndarray]:
        lower, upper = self.domain_bounds()
        return [lower, upper]

    def ident_bound(self, lam0=None) -> Optional[float]:
        """Uniform bound on ‖m(λ₀, x)‖ over the data range (and over Λ when λ₀ is None)."""
        candidates = [lam0] if lam0 is not None else self._parameter_corners()
        best = 0.0
        for lam in candidates:
            extremes = self.ident_extremes(np.asarray(lam, dtype=float))
            if extremes is None:
                return None
            lo, hi = extremes
            best = max(best, float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))))
        return best

    def breakpoints(self, lam) -> np.ndarray:
        """Observation values where s or m has a kink at λ (used by grid scans)."""
        return np.empty(0)

    # -- per-functional formulas ----------------------------------------
    def _score(self, lam: np.ndarray, xs: np.ndarray) -> np.ndarray:
        raise UnsupportedScoreError(f"Functional {self.id} has no scoring function in the catalog.")

    def _score_gradient(self, lam: np.ndarray, xs: np.ndarray) -> np.ndarray:
        raise UnsupportedScoreError(f"Functional {self.id} has no scoring function in the catalog.")

    @abstractmethod
    def _ident(self, lam: np.ndarray, xs: np.ndarray, strict: bool) -> np.ndarray:
        raise NotImplementedError


class Mean(Functional):
    """Mean: s = ½(x−λ)², m = x − λ."""

    name = "mean"
    ident_sign = -1

    def _score(self, lam, xs):
        return 0.5 * (xs[:, 0] - lam[0]) ** 2

    def _score_gradient(self, lam, xs):
        return (lam[0] - xs[:, :1])

    def _ident(self, lam, xs, strict):
        return xs[:, :1] - lam[0]

    def ident_extremes(self, lam0):
        if self.data_range is None:
            return None
        lo, hi = self.data_range
        lam0 = np.asarray(lam0, dtype=float).reshape(-1)
        return np.array([lo - lam0[0]]), np.array([hi - lam0[0]])


class Quantile(Functional):
    """Quantile with upper-tail mass α: the λ at which P(X > λ) = α.

    s = |x−λ|(α·1{x<λ} + (1−α)·1{x>λ}),  m = 1{x>λ} − α.
    """

    name = "quantile"
    ident_sign = -1

    def __init__(self, alpha: float, data_range: DataRange = None) -> None:
        if not 0.0 < float(alpha) < 1.0:
            raise DomainError(f"Quantile level must lie in (0, 1), got {alpha!r}.")
        super().__init__(data_range)
        self.alpha = float(alpha)

    @property
    def id(self) -> str:
        return f"quantile:{self.alpha:g}"

    def _score(self, lam, xs):
        x = xs[:, 0]
        weight = np.where(x < lam[0], self.alpha, np.where(x > lam[0], 1.0 - self.alpha, 0.0))
        return np.abs(x - lam[0]) * weight

    def _score_gradient(self, lam, xs):
        return (self.alpha - (xs[:, :1] > lam[0])).astype(float)

    def _ident(self, lam, xs, strict):
        return (xs[:, :1] > lam[0]).astype(float) - self.alpha

    def ident_extremes(self, lam0):
        hi = 1.0 - self.alpha
        lo = -self.alpha
        if self.data_range is not None and lam0 is not None:
            lam = float(np.asarray(lam0).reshape(-1)[0])
            if lam >= self.data_range[1]:
                hi = lo
            if lam < self.data_range[0]:
                lo = hi
        return np.array([lo]), np.array([hi])

    def ident_bound(self, lam0=None) -> Optional[float]:
        return max(self.alpha, 1.0 - self.alpha)

    def breakpoints(self, lam):
        return np.asarray(lam, dtype=float).reshape(-1)[:1]


class Regression(Functional):
    """Linear regression coefficients for observations packed as (y, x_1..x_k).

    s = ½(⟨λ, x⟩ − y)²; m = (⟨λ, x⟩ − y)·x/‖x‖, so that ∇s = ‖x‖·m.
    """

    name = "regression"
    ident_sign = None

    def __init__(self, k: int, data_range: DataRange = None) -> None:
        k = int(k)
        if k < 1:
            raise DomainError(f"Regression order must be at least 1, got {k!r}.")
        super().__init__(None)
        if data_range is not None:
            logger.debug("Data range ignored for regression:%d; the covariates are unbounded.", k)
        self.k = k
        self.param_dim = k
        self.obs_dim = k + 1

    @property
    def id(self) -> str:
        return f"regression:{self.k}"

    def _residual(self, lam, xs):
        return xs[:, 1:] @ lam - xs[:, 0]

    def _score(self, lam, xs):
        return 0.5 * self._residual(lam, xs) ** 2

    def _score_gradient(self, lam, xs):
        return self._residual(lam, xs)[:, None] * xs[:, 1:]

    def degenerate_rows(self, xs):
        return np.linalg.norm(xs[:, 1:], axis=1) == 0.0

    def _ident(self, lam, xs, strict):
        norms = np.linalg.norm(xs[:, 1:], axis=1)
        zero = norms == 0.0
        if strict and np.any(zero):
            raise DegenerateInputError("Regression covariates are all zero; m(λ, x) is undefined.")
        safe = np.where(zero, 1.0, norms)
        out = self._residual(lam, xs)[:, None] * xs[:, 1:] / safe[:, None]
        out[zero] = 0.0
        return out

    def subgradient_scale(self, xs) -> np.ndarray:
        """Per-row factor c with ∇s = c·m."""
        return np.linalg.norm(as_observations(xs, self.obs_dim)[:, 1:], axis=1)


class MeanSd(Functional):
    """Mean and standard deviation: m = (λ_μ − x, λ_μ² + λ_σ² − x²)."""

    name = "mean_sd"
    param_dim = 2
    has_score = False
    convex_score = False

    def domain_bounds(self):
        if self.data_range is None:
            return np.array([-np.inf, 0.0]), np.array([np.inf, np.inf])
        lo, hi = self.data_range
        return np.array([lo, 0.0]), np.array([hi, (hi - lo) / 2.0])

    def _ident(self, lam, xs, strict):
        x = xs[:, 0]
        return np.column_stack([lam[0] - x, lam[0] ** 2 + lam[1] ** 2 - x ** 2])

    def _square_range(self) -> Tuple[float, float]:
        lo, hi = self.data_range
        low = 0.0 if lo <= 0.0 <= hi else min(lo * lo, hi * hi)
        return low, max(lo * lo, hi * hi)

    def ident_extremes(self, lam0):
        if self.data_range is None:
            return None
        lo, hi = self.data_range
        mu, sd = np.asarray(lam0, dtype=float).reshape(-1)
        sq_lo, sq_hi = self._square_range()
        second = mu * mu + sd * sd
        return (
            np.array([mu - hi, second - sq_hi]),
            np.array([mu - lo, second - sq_lo]),
        )

    def _parameter_corners(self):
        lower, upper = self.domain_bounds()
        mus = {lower[0], upper[0], float(np.clip(0.0, lower[0], upper[0]))}
        return [np.array([mu, sd]) for mu in mus for sd in (lower[1], upper[1])]


class VarCvar(Functional):
    """Joint lower-tail Value-at-Risk and CVaR at level α₀, λ = (v, c) with c ≤ v.

    m = (1{x≤v} − α₀, x·1{x≤v} − α₀·c). The scoring function is the joint
    strictly consistent score with G₁(v) = v and 𝒢₂(c) = c²/2, which is not
    convex in (v, c).
    """

    name = "var_cvar"
    param_dim = 2
    convex_score = False

    def __init__(self, alpha: float, data_range: DataRange = None) -> None:
        if not 0.0 < float(alpha) < 1.0:
            raise DomainError(f"VaR level must lie in (0, 1), got {alpha!r}.")
        super().__init__(data_range)
        self.alpha = float(alpha)

    @property
    def id(self) -> str:
        return f"var_cvar:{self.alpha:g}"

    def ordered_pair(self):
        return (0, 1)

    def _score(self, lam, xs):
        v, c = lam
        x = xs[:, 0]
        below = (x <= v).astype(float)
        return (below - self.alpha) * v - below * x + 0.5 * c * c - c * v + (c / self.alpha) * below * (v - x)

    def _score_gradient(self, lam, xs):
        v, c = lam
        x = xs[:, 0]
        below = (x <= v).astype(float)
        dv = (below - self.alpha) - c + (c / self.alpha) * below
        dc = c - v + below * (v - x) / self.alpha
        return np.column_stack([dv, dc])

    def _ident(self, lam, xs, strict):
        v, c = lam
        x = xs[:, 0]
        below = (x <= v).astype(float)
        return np.column_stack([below - self.alpha, x * below - self.alpha * c])

    def ident_extremes(self, lam0):
        if self.data_range is None:
            return None
        lo, hi = self.data_range
        v, c = np.asarray(lam0, dtype=float).reshape(-1)
        first, second = [], []
        if v >= lo:
            first.append(1.0 - self.alpha)
            second += [lo - self.alpha * c, min(v, hi) - self.alpha * c]
        if v < hi:
            first.append(-self.alpha)
            second.append(-self.alpha * c)
        return np.array([min(first), min(second)]), np.array([max(first), max(second)])

    def _parameter_corners(self):
        lower, upper = self.domain_bounds()
        lo, hi = lower[0], upper[0]
        return [np.array([lo, lo]), np.array([hi, lo]), np.array([hi, hi])]

    def breakpoints(self, lam):
        return np.asarray(lam, dtype=float).reshape(-1)[:1]


def get_functional(ident: str, data_range: DataRange = None) -> Functional:
    """Resolve a catalog id such as ``quantile:0.05`` or ``regression:1``."""
    text = str(ident).strip().lower()
    name, _, arg = text.partition(":")
    try:
        if name == "mean" and not arg:
            return Mean(data_range)
        elif name == "quantile" and arg:
            return Quantile(float(arg), data_range)
        elif name == "regression" and arg:
            return Regression(int(arg), data_range)
        elif name == "mean_sd" and not arg:
            return MeanSd(data_range)
        elif name == "var_cvar" and arg:
            return VarCvar(float(arg), data_range)
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise UnknownFunctionalError(f"Malformed functional id '{ident}'.") from exc
    raise UnknownFunctionalError(
        f"Unknown functional '{ident}'. Use one of: {', '.join(FUNCTIONAL_IDS)}."
    )


def score(f: Functional, lam, x) -> float:
    """s(λ, x) for a single observation."""
    return f.score(lam, x)


def ident(f: Functional, lam, x, strict: bool = True) -> np.ndarray:
    """m(λ, x) for a single observation."""
    return f.ident(lam, x, strict=strict)


def ident_bound(f: Functional, lam0=None) -> Optional[float]:
    return f.ident_bound(lam0)

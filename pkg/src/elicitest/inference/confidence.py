"""Confidence sequences by inverting one test per candidate on a finite grid."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np

from ..betting.strategies import Strategy, get_strategy
from ..core.families import FamilySpec
from ..core.functionals import Functional
from .exceptions import InferenceConfigurationError
from .sequential import log_threshold

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 101


@dataclass
class ConfidenceUpdate:
    t: int
    mask: np.ndarray
    hull: Optional[Tuple[np.ndarray, np.ndarray]]

    def to_row(self) -> dict:
        return {
            "t": self.t,
            "members": int(self.mask.sum()),
            "lower": self.hull[0].tolist() if self.hull else None,
            "upper": self.hull[1].tolist() if self.hull else None,
            "mask": self.mask.astype(int).tolist(),
        }


@dataclass
class ConfidenceGrid:
    """Candidates λ with their strategies and running max log-wealths.

    C_t = {λ : max_{i≤t} log W_i^λ ≤ log(1/α)} only shrinks.
    """

    grid: np.ndarray
    alpha: float
    strategies: List[Strategy]
    running_max: np.ndarray = field(init=False)
    t: int = 0

    def __post_init__(self) -> None:
        if len(self.strategies) == 0:
            raise InferenceConfigurationError("A confidence grid needs at least one candidate.")
        self.grid = np.asarray(self.grid, dtype=float).reshape(len(self.strategies), -1)
        self._bound = log_threshold(self.alpha)
        self.running_max = np.zeros(len(self.strategies))

    @property
    def mask(self) -> np.ndarray:
        return self.running_max <= self._bound

    @property
    def log_wealth(self) -> np.ndarray:
        return np.array([s.log_wealth for s in self.strategies])

    def members(self) -> np.ndarray:
        return self.grid[self.mask]

    def hull(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Coordinate-wise [min, max] over the surviving candidates, None when C_t is empty."""
        inside = self.members()
        if inside.size == 0:
            return None
        return inside.min(axis=0), inside.max(axis=0)

    def snapshot(self) -> ConfidenceUpdate:
        return ConfidenceUpdate(self.t, self.mask.copy(), self.hull())


def lambda_grid(functional: Functional, points: int = DEFAULT_POINTS, lower=None, upper=None) -> np.ndarray:
    """Regular grid over Λ (or the given bounds) with ``points`` per axis, ordering constraint applied."""
    lo_default, hi_default = functional.domain_bounds()
    lower = np.asarray(lo_default if lower is None else lower, dtype=float).reshape(-1)
    upper = np.asarray(hi_default if upper is None else upper, dtype=float).reshape(-1)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise InferenceConfigurationError(f"Λ of {functional.id} is unbounded; pass explicit grid bounds.")
    if points < 1:
        raise InferenceConfigurationError(f"Grid resolution must be positive, got {points}.")
    axes = [np.linspace(lo, hi, points) for lo, hi in zip(lower, upper)]
    grid = np.array(list(itertools.product(*axes)), dtype=float)
    keep = np.array([functional.in_domain(lam) for lam in grid], dtype=bool)
    return grid[keep]


def build_confidence_grid(
    lambdas,
    family_factory: Callable[[np.ndarray], FamilySpec],
    strategy: Union[str, Callable[[FamilySpec], Strategy]],
    alpha: float,
    **hyper,
) -> ConfidenceGrid:
    """One family and one strategy per candidate λ."""
    lambdas = np.asarray(lambdas, dtype=float)
    lambdas = lambdas.reshape(-1, 1) if lambdas.ndim == 1 else lambdas
    if lambdas.size == 0:
        raise InferenceConfigurationError("The candidate grid is empty.")
    strategies = []
    for lam in lambdas:
        fam = family_factory(lam)
        strategies.append(strategy(fam) if callable(strategy) else get_strategy(strategy, fam, **hyper))
    logger.info("Confidence grid with %d candidates at alpha=%g.", len(strategies), alpha)
    return ConfidenceGrid(lambdas, float(alpha), strategies)


def update_confidence(grid: ConfidenceGrid, x) -> ConfidenceUpdate:
    """Advance every surviving candidate by one observation and recompute C_t."""
    grid.t += 1
    for idx in np.flatnonzero(grid.mask):
        strat = grid.strategies[idx]
        strat.step(x)
        grid.running_max[idx] = max(grid.running_max[idx], strat.log_wealth)
    return grid.snapshot()


def iter_confidence_sequence(grid: ConfidenceGrid, stream: Iterable) -> Iterator[ConfidenceUpdate]:
    """Yield C_t as each observation arrives; nothing is retained between steps."""
    for x in stream:
        yield update_confidence(grid, x)


def run_confidence_sequence(
    grid: ConfidenceGrid,
    stream: Iterable,
    on_step: Optional[Callable[[ConfidenceUpdate], None]] = None,
) -> List[ConfidenceUpdate]:
    """Consume a stream and return the per-step hulls and masks."""
    updates = []
    for update in iter_confidence_sequence(grid, stream):
        updates.append(update)
        if on_step is not None:
            on_step(update)
    return updates


def nearest_candidate(grid: ConfidenceGrid, truth) -> int:
    truth = np.asarray(truth, dtype=float).reshape(-1)
    return int(np.argmin(np.linalg.norm(grid.grid - truth, axis=1)))


def covers(grid: ConfidenceGrid, truth) -> bool:
    """True when the grid point nearest to ``truth`` has survived every step so far.

    Masks only shrink, so the current mask carries the whole history.
    """
    return bool(grid.mask[nearest_candidate(grid, truth)])

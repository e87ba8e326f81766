"""Inner argmax solver shared by the leader-following strategies and the regret ledger.

Projected gradient ascent with Barzilai-Borwein steps and an Armijo
backtracking safeguard on the projected arc. Deterministic: the only
input besides the objective is the warm start.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..core.domains import ThetaDomain
from .exceptions import SolverFailure

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
ARMIJO = 1e-4
MIN_STEP = 1e-14
MAX_STEP = 1e10

Objective = Callable[[np.ndarray], Tuple[float, Optional[np.ndarray]]]


@dataclass
class SolverResult:
    theta: np.ndarray
    value: float
    iterations: int


def maximize_concave(
    objective: Objective,
    domain: ThetaDomain,
    start,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SolverResult:
    """Maximize a concave objective over Θ from a warm start.

    ``objective(θ)`` returns (value, gradient); value is -inf outside the
    admissible set, in which case the step is shortened.
    """
    theta = domain.project(start)
    value, grad = objective(theta)
    if not np.isfinite(value):
        raise SolverFailure(0, 0.0)
    step = 1.0
    for iteration in range(1, max_iter + 1):
        accepted = False
        while step >= MIN_STEP:
            candidate = domain.project(theta + step * grad)
            move = candidate - theta
            if np.linalg.norm(move) <= tol * (1.0 + np.linalg.norm(theta)):
                return SolverResult(theta, value, iteration)
            cand_value, cand_grad = objective(candidate)
            if np.isfinite(cand_value) and cand_value >= value + ARMIJO * float(grad @ move):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return SolverResult(theta, value, iteration)
        delta_grad = cand_grad - grad
        curvature = float(move @ delta_grad)
        theta, value, grad = candidate, cand_value, cand_grad
        if curvature < 0:
            step = float(np.clip((move @ move) / -curvature, MIN_STEP, MAX_STEP))
        else:
            step = min(2.0 * step, MAX_STEP)
        if np.linalg.norm(move) <= tol * (1.0 + np.linalg.norm(theta)):
            return SolverResult(theta, value, iteration)
    raise SolverFailure(max_iter, step)


def grid_points_per_axis(dim: int) -> int:
    """Grid resolution used for seeding and for best-fixed-bet searches."""
    return {1: 201, 2: 41, 3: 15}.get(dim, 0)


def best_on_grid(value_fn: Callable[[np.ndarray], float], domain: ThetaDomain, n: Optional[int] = None):
    """Best grid point of Θ under ``value_fn``; (None, -inf) when Θ is too high-dimensional."""
    n = grid_points_per_axis(domain.dim) if n is None else n
    if n <= 0:
        return None, -np.inf
    best_theta, best_value = None, -np.inf
    for point in domain.grid(n):
        value = value_fn(point)
        if value > best_value:
            best_theta, best_value = point, value
    return best_theta, best_value


def maximize_from_starts(
    objective: Objective,
    domain: ThetaDomain,
    starts: Sequence[np.ndarray],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SolverResult:
    """Run the solver from several feasible starts and keep the best result."""
    best: Optional[SolverResult] = None
    for start in starts:
        if start is None or not np.isfinite(objective(domain.project(start))[0]):
            continue
        result = maximize_concave(objective, domain, start, tol=tol, max_iter=max_iter)
        if best is None or result.value > best.value:
            best = result
    if best is None:
        raise SolverFailure(0, 0.0)
    return best

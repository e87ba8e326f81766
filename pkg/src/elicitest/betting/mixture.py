"""Predictable mixtures of fixed bets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..core.exceptions import NonpositiveIncrementError
from ..core.families import FamilySpec
from ..core.functionals import as_observation
from .exceptions import MixtureWeightsError


@dataclass(frozen=True, eq=False)
class MixtureWeights:
    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        probs = np.atleast_1d(np.asarray(self.probs, dtype=float))
        if atoms.shape[0] != probs.size:
            raise MixtureWeightsError(f"{atoms.shape[0]} atoms but {probs.size} probabilities.")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise MixtureWeightsError("Mixture probabilities must be nonnegative and sum to 1.")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def dirac(cls, theta) -> "MixtureWeights":
        return cls(np.atleast_2d(np.asarray(theta, dtype=float)), np.ones(1))

    @classmethod
    def uniform(cls, atoms) -> "MixtureWeights":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        return cls(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))


def mixture_step(weights: MixtureWeights, fam: FamilySpec, x, step: int = 1) -> float:
    """log Σ_j w_j exp(log_increment(θ_j, x)) with max-shift stabilization.

    Every atom with positive weight must have a positive, finite increment.
    """
    for theta in weights.atoms:
        if not fam.theta_domain.contains(theta):
            raise MixtureWeightsError(f"Atom {theta.tolist()} is outside {fam.theta_domain!r}.")
    feats = fam.features(as_observation(x, fam.functional.obs_dim).reshape(1, -1), start=step)
    live = weights.probs > 0
    logs = np.empty(int(live.sum()))
    for j, theta in enumerate(weights.atoms[live]):
        values, _, factor = fam.evaluate(theta, feats)
        if factor is not None and not factor[0] > 0:
            raise NonpositiveIncrementError(float(factor[0]), step=step)
        if not np.isfinite(values[0]):
            raise NonpositiveIncrementError(float(np.exp(values[0])), step=step)
        logs[j] = values[0]
    return float(logsumexp(logs, b=weights.probs[live]))


def mixture_log_wealth(weights: MixtureWeights, fam: FamilySpec, xs) -> np.ndarray:
    """Cumulative log-wealth of a static mixture over a stream."""
    path = []
    total = 0.0
    for t, x in enumerate(np.asarray(xs, dtype=float).reshape(len(xs), -1), start=1):
        total += mixture_step(weights, fam, x, step=t)
        path.append(total)
    return np.asarray(path)

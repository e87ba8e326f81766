"""Reference distributions with ground-truth oracles for catalog functionals."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import integrate, optimize, special

from .exceptions import DomainError, UnsupportedPairError
from .functionals import Functional, Mean, MeanSd, Quantile, Regression, VarCvar

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-10


class ReferenceDistribution:
    """Marker base class for the catalog of reference laws."""

    name = "reference"


@dataclass(frozen=True)
class BetaReference(ReferenceDistribution):
    a: float
    b: float
    name = "beta"

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise DomainError(f"Beta parameters must be positive, got ({self.a}, {self.b}).")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def sd(self) -> float:
        a, b = self.a, self.b
        return float(np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0))))

    def cdf(self, x):
        return special.betainc(self.a, self.b, np.clip(x, 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            log_pdf = (self.a - 1) * np.log(x) + (self.b - 1) * np.log1p(-x) - special.betaln(self.a, self.b)
        return np.where((x > 0) & (x < 1), np.exp(log_pdf), 0.0)

    def ppf(self, level: float) -> float:
        """Quantile by bracketed root finding on the regularized incomplete beta function."""
        if level <= 0.0:
            return 0.0
        if level >= 1.0:
            return 1.0
        return float(optimize.brentq(lambda x: self.cdf(x) - level, 0.0, 1.0, xtol=ORACLE_TOL * 1e-2))

    def lower_tail_mean(self, level: float) -> float:
        """E[X·1{X ≤ VaR}]/level by adaptive quadrature."""
        var = self.ppf(level)
        value, _ = integrate.quad(lambda x: x * self.pdf(x), 0.0, var, epsabs=1e-13, epsrel=1e-12, limit=200)
        return value / level

    def discretize(self, atoms: int) -> "DiscreteReference":
        """Equal-mass atoms at the quantile midpoints (k + ½)/n."""
        levels = (np.arange(atoms) + 0.5) / atoms
        return DiscreteReference(
            atoms=tuple(self.ppf(level) for level in levels),
            probs=tuple(np.full(atoms, 1.0 / atoms)),
        )


@dataclass(frozen=True)
class GaussianReference(ReferenceDistribution):
    mu: float = 0.0
    sigma: float = 1.0
    name = "gaussian"

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise DomainError(f"Gaussian scale must be positive, got {self.sigma}.")

    @property
    def mean(self) -> float:
        return float(self.mu)

    @property
    def sd(self) -> float:
        return float(self.sigma)

    def ppf(self, level: float) -> float:
        return float(self.mu + self.sigma * special.ndtri(level))

    def lower_tail_mean(self, level: float) -> float:
        z = special.ndtri(level)
        return float(self.mu - self.sigma * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi) / level)


@dataclass(frozen=True)
class AR1Reference(ReferenceDistribution):
    """Stationary AR(1): X_t = β X_{t−1} + ξ_t with ξ_t ~ N(0, noise_var)."""

    beta: float
    noise_var: float = 1.0
    name = "ar1"

    def __post_init__(self) -> None:
        if abs(self.beta) >= 1.0:
            raise DomainError(f"AR(1) reference needs |β| < 1, got {self.beta}.")
        if self.noise_var <= 0:
            raise DomainError(f"AR(1) noise variance must be positive, got {self.noise_var}.")

    @property
    def stationary_sd(self) -> float:
        return float(np.sqrt(self.noise_var / (1.0 - self.beta ** 2)))


@dataclass(frozen=True)
class DiscreteReference(ReferenceDistribution):
    atoms: Tuple[float, ...]
    probs: Tuple[float, ...] = field(default=())
    name = "discrete"

    def __post_init__(self) -> None:
        atoms = np.asarray(self.atoms, dtype=float)
        probs = np.asarray(self.probs, dtype=float) if len(self.probs) else np.full(atoms.size, 1.0 / atoms.size)
        if atoms.size == 0 or atoms.shape != probs.shape:
            raise DomainError("Discrete reference needs one probability per atom.")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise DomainError("Discrete probabilities must be nonnegative and sum to 1.")
        order = np.argsort(atoms, kind="stable")
        object.__setattr__(self, "atoms", tuple(atoms[order]))
        object.__setattr__(self, "probs", tuple(probs[order]))

    @property
    def support(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.atoms), np.asarray(self.probs)

    def expectation(self, values) -> np.ndarray:
        """Σ_j p_j · values[j] along the first axis."""
        _, probs = self.support
        return np.tensordot(probs, np.asarray(values, dtype=float), axes=(0, 0))

    @property
    def mean(self) -> float:
        atoms, probs = self.support
        return float(probs @ atoms)

    @property
    def sd(self) -> float:
        atoms, probs = self.support
        return float(np.sqrt(max(probs @ atoms ** 2 - self.mean ** 2, 0.0)))

    def lower_quantile(self, level: float) -> float:
        """inf{x : F(x) ≥ level}."""
        atoms, probs = self.support
        cdf = np.cumsum(probs)
        idx = int(np.searchsorted(cdf, level - 1e-15, side="left"))
        return float(atoms[min(idx, atoms.size - 1)])

    def upper_tail_quantile(self, alpha: float) -> float:
        """inf{x : P(X > x) ≤ alpha}."""
        return self.lower_quantile(1.0 - alpha)

    def lower_tail_mean(self, level: float) -> float:
        """(1/level)·∫_0^level VaR_u du."""
        atoms, probs = self.support
        remaining = level
        total = 0.0
        for atom, prob in zip(atoms, probs):
            take = min(prob, remaining)
            total += take * atom
            remaining -= take
            if remaining <= 0:
                break
        return total / level


def true_value(f: Functional, ref: ReferenceDistribution) -> np.ndarray:
    """Ground-truth T(ref) by closed form, root finding or quadrature."""
    if isinstance(ref, AR1Reference):
        if isinstance(f, Regression) and f.k == 1:
            return np.array([ref.beta])
        if isinstance(f, Mean):
            return np.array([0.0])
        if isinstance(f, MeanSd):
            return np.array([0.0, ref.stationary_sd])
        raise UnsupportedPairError(f"No oracle for {f.id} under an AR(1) reference.")

    if isinstance(f, Regression):
        raise UnsupportedPairError(f"{f.id} needs an AR(1) reference, got {ref.name}.")
    if not isinstance(ref, (BetaReference, GaussianReference, DiscreteReference)):
        raise UnsupportedPairError(f"No oracle for reference {ref!r}.")

    if isinstance(f, Mean):
        return np.array([ref.mean])
    if isinstance(f, MeanSd):
        return np.array([ref.mean, ref.sd])
    if isinstance(f, Quantile):
        if isinstance(ref, DiscreteReference):
            return np.array([ref.upper_tail_quantile(f.alpha)])
        return np.array([ref.ppf(1.0 - f.alpha)])
    if isinstance(f, VarCvar):
        if isinstance(ref, DiscreteReference):
            return np.array([ref.lower_quantile(f.alpha), ref.lower_tail_mean(f.alpha)])
        return np.array([ref.ppf(f.alpha), ref.lower_tail_mean(f.alpha)])
    raise UnsupportedPairError(f"No oracle for {f.id} under {ref.name}.")

"""Seeded data generators on numpy's Philox counter-based bit generator.

A stream is fully determined by (kind, parameters, seed). Replication
seeds are derived from a master seed and a scenario id through
``numpy.random.SeedSequence``, so any Monte Carlo row can be rebuilt alone.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, Tuple

import numpy as np

from ..core.references import (
    AR1Reference,
    BetaReference,
    DiscreteReference,
    GaussianReference,
    ReferenceDistribution,
)
from .exceptions import ParamError

logger = logging.getLogger(__name__)


class GeneratorKind(str, Enum):
    IID_BETA = "iid_beta"
    IID_GAUSSIAN = "iid_gaussian"
    AR1 = "ar1"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class Generator:
    """Parameters of one synthetic data source plus its 64-bit seed.

    ``params`` holds (a, b) for Beta, (μ, σ) for Gaussian, (β, noise) for
    AR(1) and atoms followed by probabilities for the discrete kind.
    """

    kind: GeneratorKind
    params: Tuple[float, ...]
    seed: int = 0
    noise_is_variance: bool = True
    stationary: bool = True
    x0: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ParamError(f"Seeds are 64-bit unsigned integers, got {self.seed!r}.")
        self._validate()

    def _validate(self) -> None:
        p = self.params
        if self.kind is GeneratorKind.IID_BETA:
            if len(p) != 2 or min(p) <= 0:
                raise ParamError(f"Beta generator needs two positive shapes, got {p}.")
        elif self.kind is GeneratorKind.IID_GAUSSIAN:
            if len(p) != 2 or p[1] <= 0:
                raise ParamError(f"Gaussian generator needs (mu, sigma > 0), got {p}.")
        elif self.kind is GeneratorKind.AR1:
            if len(p) != 2 or p[1] <= 0:
                raise ParamError(f"AR(1) generator needs (beta, noise > 0), got {p}.")
            if self.stationary and abs(p[0]) >= 1.0:
                raise ParamError(f"A stationary start needs |beta| < 1, got {p[0]}.")
        else:
            atoms, probs = self.support
            if atoms.size == 0 or atoms.size != probs.size:
                raise ParamError("Discrete generator needs one probability per atom.")
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise ParamError("Discrete probabilities must be nonnegative and sum to 1.")

    @classmethod
    def iid_beta(cls, a: float, b: float, seed: int = 0) -> "Generator":
        return cls(GeneratorKind.IID_BETA, (a, b), seed)

    @classmethod
    def iid_gaussian(cls, mu: float, sigma: float, seed: int = 0) -> "Generator":
        return cls(GeneratorKind.IID_GAUSSIAN, (mu, sigma), seed)

    @classmethod
    def ar1(cls, beta: float, noise: float, seed: int = 0, noise_is_variance: bool = True,
            stationary: bool = True, x0: float = 0.0) -> "Generator":
        return cls(GeneratorKind.AR1, (beta, noise), seed, noise_is_variance, stationary, x0)

    @classmethod
    def discrete(cls, atoms, probs, seed: int = 0) -> "Generator":
        return cls(GeneratorKind.DISCRETE, tuple(atoms) + tuple(probs), seed)

    @property
    def support(self) -> Tuple[np.ndarray, np.ndarray]:
        n = len(self.params) // 2
        return np.asarray(self.params[:n]), np.asarray(self.params[n:])

    @property
    def obs_dim(self) -> int:
        return 2 if self.kind is GeneratorKind.AR1 else 1

    @property
    def noise_sd(self) -> float:
        noise = self.params[1]
        return float(np.sqrt(noise)) if self.noise_is_variance else noise

    def with_seed(self, seed: int) -> "Generator":
        return replace(self, seed=int(seed))

    def reference(self) -> ReferenceDistribution:
        """The law the generator samples from, for ground-truth oracles."""
        if self.kind is GeneratorKind.IID_BETA:
            return BetaReference(*self.params)
        if self.kind is GeneratorKind.IID_GAUSSIAN:
            return GaussianReference(*self.params)
        if self.kind is GeneratorKind.AR1:
            return AR1Reference(self.params[0], self.noise_sd ** 2)
        atoms, probs = self.support
        return DiscreteReference(tuple(atoms), tuple(probs))

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": list(self.params),
            "seed": int(self.seed),
            "noise_is_variance": self.noise_is_variance,
            "stationary": self.stationary,
        }


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def scenario_key(scenario_id: str) -> int:
    """Stable 64-bit integer for a scenario name."""
    digest = hashlib.sha256(str(scenario_id).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(master_seed: int, scenario_id: str, replication: int) -> int:
    """Per-replication seed from (master seed, scenario id, replication index)."""
    sequence = np.random.SeedSequence([int(master_seed), scenario_key(scenario_id), int(replication)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def generate(g: Generator, n: int) -> np.ndarray:
    """n observations as an (n, obs_dim) array; AR(1) rows are (X_t, X_{t−1})."""
    if n < 1:
        raise ParamError(f"Need at least one observation, got n={n}.")
    rng = make_rng(g.seed)
    if g.kind is GeneratorKind.IID_BETA:
        a, b = g.params
        ga = rng.standard_gamma(a, n)
        gb = rng.standard_gamma(b, n)
        return (ga / (ga + gb)).reshape(-1, 1)
    if g.kind is GeneratorKind.IID_GAUSSIAN:
        mu, sigma = g.params
        return rng.normal(mu, sigma, n).reshape(-1, 1)
    if g.kind is GeneratorKind.DISCRETE:
        atoms, probs = g.support
        return rng.choice(atoms, size=n, p=probs).reshape(-1, 1)

    beta = g.params[0]
    sd = g.noise_sd
    if g.stationary:
        x_prev = rng.normal(0.0, sd / np.sqrt(1.0 - beta ** 2))
    else:
        x_prev = g.x0
    noise = rng.normal(0.0, sd, n)
    out = np.empty((n, 2))
    for t in range(n):
        x_next = beta * x_prev + noise[t]
        out[t] = (x_next, x_prev)
        x_prev = x_next
    return out


def iter_observations(g: Generator, n: int) -> Iterator[np.ndarray]:
    """Yield the rows of ``generate(g, n)`` one at a time."""
    yield from generate(g, n)

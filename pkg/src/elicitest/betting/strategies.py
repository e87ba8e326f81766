"""Online convex optimization strategies that pick the predictable bet θ_t.

Each strategy owns one family and one stream. ``step(x)`` charges the bet
chosen from X_1..X_{t−1} against x, records the log-increment in the
regret ledger, and only then moves θ using x.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..core.domains import ProductDomain
from ..core.exceptions import VarianceProcessError
from ..core.families import (
    SCAN_THETA_POINTS,
    FamilySpec,
    Features,
    _scan_grid,
    certify_concavity,
)
from ..core.functionals import as_observation, as_observations
from .exceptions import StrategyConfigurationError
from .ledger import RegretLedger, regret
from .solvers import best_on_grid, maximize_from_starts

logger = logging.getLogger(__name__)

GRADIENT_SLACK = 1.1
INITIAL_CAPACITY = 64
SEED_POINTS = {1: 41, 2: 15, 3: 7}

_WARNED: set = set()


class Algorithm(str, Enum):
    FTL = "ftl"
    FTRL = "ftrl"
    OGD = "ogd"
    FTLP = "ftlp"


STRATEGY_NAMES = tuple(a.value for a in Algorithm)


class History:
    """Growable store of per-step features; views are handed to the solver."""

    def __init__(self, obs_dim: int, aux_shape: Tuple[int, ...]) -> None:
        self._xs = np.empty((INITIAL_CAPACITY, obs_dim))
        self._v = np.empty(INITIAL_CAPACITY)
        self._aux = np.empty((INITIAL_CAPACITY,) + aux_shape)
        self._elicitable = aux_shape == ()
        self.n = 0

    def __len__(self) -> int:
        return self.n

    def _grow(self) -> None:
        size = 2 * self._xs.shape[0]
        for name in ("_xs", "_v", "_aux"):
            old = getattr(self, name)
            new = np.empty((size,) + old.shape[1:])
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def append(self, feats: Features) -> None:
        while self.n + len(feats) > self._xs.shape[0]:
            self._grow()
        end = self.n + len(feats)
        self._xs[self.n:end] = feats.xs
        self._v[self.n:end] = feats.v
        self._aux[self.n:end] = feats.s0 if self._elicitable else feats.m
        self.n = end

    def features(self) -> Features:
        n = self.n
        if self._elicitable:
            return Features(self._xs[:n], self._v[:n], s0=self._aux[:n], start=1)
        return Features(self._xs[:n], self._v[:n], m=self._aux[:n], start=1)


@dataclass(frozen=True, eq=False)
class Predictive:
    """Finite predictive distribution over observations."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.atleast_1d(np.asarray(self.probs, dtype=float))
        if probs.size == 0 or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise StrategyConfigurationError("Predictive probabilities must be nonnegative and sum to 1.")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def empirical(cls, xs) -> "Predictive":
        xs = np.asarray(xs, dtype=float)
        return cls(xs, np.full(len(xs), 1.0 / len(xs)))

    @classmethod
    def point_mass(cls, x) -> "Predictive":
        return cls(np.atleast_2d(np.asarray(x, dtype=float)), np.ones(1))


@dataclass
class StrategyState:
    algo: Algorithm
    theta_next: np.ndarray
    history: Optional[History]
    gradient_bound: Optional[float]
    diam: float
    certified: bool
    t: int = 0
    sum_m: Optional[np.ndarray] = None
    total_v: float = 0.0
    prox_weight: float = 0.0
    prox_anchor_sum: Optional[np.ndarray] = None
    prox_prev: Optional[np.ndarray] = None
    sigmas: List[float] = field(default_factory=list)
    learning_rates: List[float] = field(default_factory=list)
    degenerate_rows: int = 0


def estimate_gradient_bound(fam: FamilySpec) -> Optional[float]:
    """Largest ‖∇_θ log-increment‖ over a Θ-grid and the declared data range, with 10% slack.

    None when the functional has no scalar data range to scan.
    """
    f = fam.functional
    if f.data_range is None or f.obs_dim != 1:
        return None
    domain = fam.theta_domain
    n = SCAN_THETA_POINTS if domain.dim == 1 else 11
    thetas = domain.grid(n)
    lams = [fam.lam0] + ([t[:-1] if isinstance(domain, ProductDomain) else t for t in thetas] if fam.is_elicitable else [])
    feats = fam.features(_scan_grid(f, lams), check_range=False)
    worst = 0.0
    for theta in thetas:
        _, grads, factor = fam.evaluate(theta, feats, need_grad=True)
        norms = np.linalg.norm(grads, axis=1)
        if factor is not None:
            norms = norms[factor > 0]
        if norms.size:
            worst = max(worst, float(norms.max()))
    return GRADIENT_SLACK * worst if worst > 0 else 1.0


def _leader_starts(state: StrategyState, fam: FamilySpec, value_fn: Callable[[np.ndarray], float]) -> list:
    """Warm start; at t = 1, 2, 4, 8, ... also the neutral point and, for uncertified families, the best grid point."""
    starts = [state.theta_next]
    t = max(state.t, 1)
    if t & (t - 1) != 0:
        return starts
    starts.append(fam.neutral_point())
    if not state.certified:
        grid_theta, _ = best_on_grid(value_fn, fam.theta_domain, SEED_POINTS.get(fam.dim, 0))
        starts.insert(0, grid_theta)
    return starts


def _total_value(fam: FamilySpec, feats: Features, weights=None) -> Callable[[np.ndarray], float]:
    return lambda theta: fam.objective(theta, feats, weights)[0]


def ftl_update(state: StrategyState, fam: FamilySpec, history: Features) -> np.ndarray:
    """argmax over Θ of log L_t^θ."""
    if len(history) == 0:
        return fam.neutral_point()
    if fam.has_closed_form_leader:
        return fam.closed_form_leader(state.sum_m, state.total_v)
    starts = _leader_starts(state, fam, _total_value(fam, history))
    return maximize_from_starts(lambda th: fam.objective(th, history), fam.theta_domain, starts).theta


def proximal_strength(gradient_bound: float, diam: float, i: int) -> float:
    """σ_i = (G/D)(√(i+1) − √i); Σ_{i<t} σ_i = (G/D)√t."""
    return gradient_bound / diam * (np.sqrt(i + 1.0) - np.sqrt(float(i)))


def ftrl_update(state: StrategyState, fam: FamilySpec, history: Features) -> np.ndarray:
    """argmax of log L_t^θ − Σ_{i≤t} (σ_{i−1}/2)‖θ − θ_{i−1}‖², θ_0 = θ_1 = start."""
    t = len(history)
    if t == 0:
        return fam.neutral_point()
    sigma = proximal_strength(state.gradient_bound, state.diam, t - 1)
    state.sigmas.append(sigma)
    state.prox_weight += sigma
    state.prox_anchor_sum = state.prox_anchor_sum + sigma * state.prox_prev
    state.prox_prev = state.theta_next.copy()
    weight, anchor_sum = state.prox_weight, state.prox_anchor_sum

    def objective(theta):
        value, grad = fam.objective(theta, history)
        if grad is None:
            return value, None
        return value - 0.5 * weight * float(theta @ theta) + float(theta @ anchor_sum), grad - weight * theta + anchor_sum

    starts = _leader_starts(state, fam, lambda th: objective(th)[0])
    return maximize_from_starts(objective, fam.theta_domain, starts).theta


def ogd_update(state: StrategyState, fam: FamilySpec, nu) -> np.ndarray:
    """θ_{t+1} = Π_Θ(θ_t − η_t ν_t) with η_t = D/(G√t) and ν_t a subgradient of the loss."""
    t = max(state.t, 1)
    eta = state.diam / (state.gradient_bound * np.sqrt(t))
    state.learning_rates.append(eta)
    return fam.theta_domain.project(state.theta_next - eta * np.asarray(nu, dtype=float))


def _next_features(fam: FamilySpec, xs, t: int) -> Features:
    """Features of candidate observations as if seen at step t."""
    try:
        return fam.features(xs, start=t)
    except VarianceProcessError:
        return fam.features(xs, start=max(t - 1, 1))


def ftlp_update(state: StrategyState, fam: FamilySpec, predictive: Predictive) -> np.ndarray:
    """argmax over Θ of E_predictive[log-increment at step t+1]."""
    atoms = as_observations(predictive.atoms, fam.functional.obs_dim)
    feats = _next_features(fam, atoms, state.t + 1)
    probs = predictive.probs
    if fam.has_closed_form_leader:
        return fam.closed_form_leader(probs @ feats.m, float(probs @ feats.v))
    starts = _leader_starts(state, fam, _total_value(fam, feats, probs))
    return maximize_from_starts(lambda th: fam.objective(th, feats, probs), fam.theta_domain, starts).theta


class Strategy(ABC):
    """A predictable betting rule bound to one family and one stream."""

    algorithm: Algorithm
    needs_history = True
    needs_gradient_bound = False

    def __init__(
        self,
        family: FamilySpec,
        gradient_bound: Optional[float] = None,
        keep_history: bool = True,
        regret_every: Optional[int] = None,
        keep_rows: bool = False,
    ) -> None:
        self.family = family
        self.certificate = certify_concavity(family)
        if gradient_bound is None and self.needs_gradient_bound:
            gradient_bound = estimate_gradient_bound(family)
            if gradient_bound is None:
                raise StrategyConfigurationError(
                    f"{self.algorithm.value} needs a gradient bound G; declare a data range or pass gradient_bound."
                )
        if gradient_bound is not None and not gradient_bound > 0:
            raise StrategyConfigurationError(f"Gradient bound must be positive, got {gradient_bound!r}.")
        diam = family.theta_domain.diam
        if self.needs_gradient_bound and not (np.isfinite(diam) and diam > 0):
            raise StrategyConfigurationError(f"{self.algorithm.value} needs a bounded domain with positive diameter.")
        if self.needs_history and not keep_history and not self._closed_form():
            raise StrategyConfigurationError(f"{self.algorithm.value} on this family needs the stored history.")
        f = family.functional
        aux_shape = () if family.is_elicitable else (f.param_dim,)
        start = family.neutral_point()
        self.state = StrategyState(
            algo=self.algorithm,
            theta_next=start,
            history=History(f.obs_dim, aux_shape) if keep_history else None,
            gradient_bound=gradient_bound,
            diam=diam,
            certified=self.certificate.certified,
            sum_m=np.zeros(f.param_dim),
            prox_anchor_sum=np.zeros(family.dim),
            prox_prev=start.copy(),
        )
        self.regret_every = regret_every
        self.ledger = RegretLedger(family, self.history_features, keep_rows=keep_rows)
        logger.info(
            "Strategy %s on %s: G=%s, diam=%.6g, certified=%s.",
            self.algorithm.value, family.kind.value, gradient_bound, diam, self.certificate.certified,
        )

    def _closed_form(self) -> bool:
        return False

    def history_features(self) -> Features:
        if self.state.history is None:
            raise StrategyConfigurationError("Regret needs the stored history; build the strategy with keep_history=True.")
        return self.state.history.features()

    @property
    def theta(self) -> np.ndarray:
        return self.state.theta_next.copy()

    @property
    def t(self) -> int:
        return self.state.t

    @property
    def log_wealth(self) -> float:
        return self.ledger.log_wealth

    def regret(self) -> float:
        return regret(self.ledger, self.family)

    def step(self, x) -> float:
        """Charge θ_t against x, then update θ with x included."""
        fam = self.family
        state = self.state
        t = state.t + 1
        feats = fam.features(as_observation(x, fam.functional.obs_dim).reshape(1, -1), start=t)
        theta = state.theta_next
        increment = float(fam.increments(theta, feats)[0])
        degenerate = int(fam.functional.degenerate_rows(feats.xs).sum())
        if degenerate:
            state.degenerate_rows += degenerate
            logger.debug("Step %d: covariates are all zero, identification set to 0.", t)
        if state.history is not None:
            state.history.append(feats)
        if feats.m is not None:
            state.sum_m = state.sum_m + feats.m[0]
        state.total_v += float(feats.v[0])
        state.t = t
        with_regret = bool(self.regret_every) and t % self.regret_every == 0
        self.ledger.record(theta, increment, with_regret=with_regret)
        state.theta_next = np.asarray(self._update(feats, theta), dtype=float)
        return increment

    @abstractmethod
    def _update(self, feats: Features, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class FollowTheLeader(Strategy):
    algorithm = Algorithm.FTL

    def __init__(self, family: FamilySpec, **options) -> None:
        super().__init__(family, **options)
        if not self.certificate.certified and self.certificate.reason not in _WARNED:
            _WARNED.add(self.certificate.reason)
            logger.warning("FTL on an uncertified family (%s); the inner argmax is local.", self.certificate.reason)

    def _closed_form(self) -> bool:
        return self.family.has_closed_form_leader

    def _update(self, feats, theta):
        if self.state.history is None:
            return self.family.closed_form_leader(self.state.sum_m, self.state.total_v)
        return ftl_update(self.state, self.family, self.state.history.features())


class FollowTheRegularizedLeader(Strategy):
    """Proximal FTRL with σ_i = (G/D)(√(i+1) − √i)."""

    algorithm = Algorithm.FTRL
    needs_gradient_bound = True

    def _update(self, feats, theta):
        return ftrl_update(self.state, self.family, self.state.history.features())


class OnlineGradientDescent(Strategy):
    algorithm = Algorithm.OGD
    needs_history = False
    needs_gradient_bound = True

    def _update(self, feats, theta):
        _, grads, _ = self.family.evaluate(theta, feats, need_grad=True)
        return ogd_update(self.state, self.family, -grads[0])


class FollowTheLeaderPredictive(Strategy):
    """FTL against a predictive distribution; the empirical measure by default."""

    algorithm = Algorithm.FTLP

    def __init__(self, family: FamilySpec, predictive_fn: Optional[Callable[[np.ndarray], Predictive]] = None, **options) -> None:
        super().__init__(family, **options)
        self.predictive_fn = predictive_fn or Predictive.empirical

    def _update(self, feats, theta):
        return ftlp_update(self.state, self.family, self.predictive_fn(self.state.history.features().xs))


def step(strategy: Strategy, x) -> Tuple[StrategyState, float]:
    increment = strategy.step(x)
    return strategy.state, increment


def get_strategy(name: str, family: FamilySpec, **hyper) -> Strategy:
    """Build a strategy from its name: ftl, ftrl, ogd or ftlp."""
    key = str(getattr(name, "value", name)).strip().lower()
    if key == Algorithm.FTL.value:
        return FollowTheLeader(family, **hyper)
    elif key == Algorithm.FTRL.value:
        return FollowTheRegularizedLeader(family, **hyper)
    elif key == Algorithm.OGD.value:
        return OnlineGradientDescent(family, **hyper)
    elif key == Algorithm.FTLP.value:
        return FollowTheLeaderPredictive(family, **hyper)
    raise StrategyConfigurationError(f"Unknown strategy '{name}'. Use one of: {', '.join(STRATEGY_NAMES)}.")

"""Ville-threshold tests on a single null and e-process tests on a finite set of nulls."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Union

import numpy as np

from ..betting.strategies import Strategy, get_strategy
from ..core.families import FamilySpec
from .exceptions import InferenceConfigurationError

logger = logging.getLogger(__name__)

StepCallback = Callable[[dict], None]


@dataclass
class TestOutcome:
    """Result of a sequential test; ``rejected_at`` is the 1-based first crossing."""

    __test__ = False

    alpha: float
    threshold: float
    rejected_at: Optional[int] = None
    running_max_log_wealth: float = 0.0
    final_log_wealth: float = 0.0
    steps: int = 0
    log_wealth_path: List[float] = field(default_factory=list)
    member_log_wealth: Optional[List[float]] = None

    @property
    def rejected(self) -> bool:
        return self.rejected_at is not None

    def summary(self) -> dict:
        out = {
            "alpha": self.alpha,
            "threshold": self.threshold,
            "rejected": self.rejected,
            "rejected_at": self.rejected_at,
            "running_max_log_wealth": self.running_max_log_wealth,
            "final_log_wealth": self.final_log_wealth,
            "steps": self.steps,
        }
        if self.member_log_wealth is not None:
            out["member_log_wealth"] = self.member_log_wealth
        return out


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InferenceConfigurationError(f"alpha must lie in (0, 1), got {alpha!r}.")
    return alpha


def log_threshold(alpha: float) -> float:
    return math.log(1.0 / check_alpha(alpha))


def first_crossing(log_path: Sequence[float], alpha: float) -> Optional[int]:
    """First t (1-based) with log W_t > log(1/α), or None."""
    above = np.asarray(log_path, dtype=float) > log_threshold(alpha)
    return int(np.argmax(above)) + 1 if above.any() else None


def _resolve_strategy(fam: FamilySpec, strategy: Union[Strategy, str], **hyper) -> Strategy:
    if isinstance(strategy, Strategy):
        if strategy.family is not fam:
            raise InferenceConfigurationError("The strategy was built for a different family.")
        return strategy
    return get_strategy(strategy, fam, **hyper)


def run_test(
    fam: FamilySpec,
    strategy: Union[Strategy, str],
    stream: Iterable,
    alpha: float,
    continue_after_rejection: bool = False,
    on_step: Optional[StepCallback] = None,
    record_path: bool = True,
    **hyper,
) -> TestOutcome:
    """Feed the stream through the strategy and reject at the first log W_t > log(1/α).

    With ``record_path=False`` the outcome keeps no per-step path, so memory
    stays bounded when the strategy itself keeps no history.
    """
    bound = log_threshold(alpha)
    strategy = _resolve_strategy(fam, strategy, **hyper)
    outcome = TestOutcome(alpha=float(alpha), threshold=1.0 / float(alpha))
    for x in stream:
        theta = strategy.theta
        strategy.step(x)
        log_w = strategy.log_wealth
        outcome.steps = strategy.t
        if record_path:
            outcome.log_wealth_path.append(log_w)
        outcome.running_max_log_wealth = max(outcome.running_max_log_wealth, log_w)
        crossed = outcome.rejected_at is None and log_w > bound
        if crossed:
            outcome.rejected_at = strategy.t
            logger.info("Rejected %s at t=%d (log W=%.4f > %.4f).", fam.functional.id, strategy.t, log_w, bound)
        if on_step is not None:
            on_step({"t": strategy.t, "theta": theta.tolist(), "log_wealth": log_w, "rejected": outcome.rejected})
        if crossed and not continue_after_rejection:
            break
    outcome.final_log_wealth = strategy.log_wealth
    return outcome


def run_set_test(
    fams: Sequence[FamilySpec],
    strategies: Union[Sequence[Strategy], str],
    stream: Iterable,
    alpha: float,
    continue_after_rejection: bool = False,
    on_step: Optional[StepCallback] = None,
    **hyper,
) -> TestOutcome:
    """Test a composite null through M_t = min over the grid of the per-null wealths.

    Rejection uses the current-time crossing log M_t > log(1/α).
    """
    if not fams:
        raise InferenceConfigurationError("The null grid is empty.")
    bound = log_threshold(alpha)
    if isinstance(strategies, str):
        members = [get_strategy(strategies, fam, **hyper) for fam in fams]
    else:
        if len(strategies) != len(fams):
            raise InferenceConfigurationError(f"{len(fams)} families but {len(strategies)} strategies.")
        members = [_resolve_strategy(fam, strat) for fam, strat in zip(fams, strategies)]
    outcome = TestOutcome(alpha=float(alpha), threshold=1.0 / float(alpha))
    t = 0
    for x in stream:
        t += 1
        for member in members:
            member.step(x)
        wealths = np.array([member.log_wealth for member in members])
        log_m = float(wealths.min())
        outcome.steps = t
        outcome.log_wealth_path.append(log_m)
        outcome.running_max_log_wealth = max(outcome.running_max_log_wealth, log_m)
        crossed = outcome.rejected_at is None and log_m > bound
        if crossed:
            outcome.rejected_at = t
            logger.info("Rejected the composite null (%d members) at t=%d.", len(members), t)
        if on_step is not None:
            on_step({"t": t, "log_wealth": wealths.tolist(), "min_log_wealth": log_m, "rejected": outcome.rejected})
        if crossed and not continue_after_rejection:
            break
    outcome.member_log_wealth = [member.log_wealth for member in members]
    outcome.final_log_wealth = min(outcome.member_log_wealth)
    return outcome

"""Regret bookkeeping: realized log-wealth against the best fixed bet in hindsight."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, List, Optional, TextIO

import numpy as np

from ..core.families import Features, FamilySpec
from .solvers import SolverResult, best_on_grid, maximize_from_starts

logger = logging.getLogger(__name__)


@dataclass
class LedgerRow:
    t: int
    theta: List[float]
    log_wealth: float
    regret: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def fixed_bet_log_wealth(fam: FamilySpec, theta, feats: Features) -> float:
    """log L_t^θ over a block of observations; -inf when θ is inadmissible for the data."""
    logs, _, factor = fam.evaluate(theta, feats)
    if factor is not None and np.any(factor <= 0):
        return -np.inf
    return float(logs.sum())


def best_fixed_bet(fam: FamilySpec, feats: Features, starts: Iterable[np.ndarray] = ()) -> SolverResult:
    """max over Θ of log L_t^θ: closed form when available, else grid search refined by the solver."""
    if len(feats) == 0:
        theta = fam.neutral_point()
        return SolverResult(theta, 0.0, 0)
    if fam.has_closed_form_leader:
        theta = fam.closed_form_leader(feats.m.sum(axis=0), float(feats.v.sum()))
        return SolverResult(theta, fixed_bet_log_wealth(fam, theta, feats), 0)
    grid_theta, _ = best_on_grid(lambda th: fixed_bet_log_wealth(fam, th, feats), fam.theta_domain)
    candidates = [grid_theta, fam.neutral_point(), *starts]
    return maximize_from_starts(lambda th: fam.objective(th, feats), fam.theta_domain, candidates)


class RegretLedger:
    """Running log W_t plus an evaluator of θ ↦ log L_t^θ over the same history."""

    def __init__(self, family: FamilySpec, history: Callable[[], Features], keep_rows: bool = False) -> None:
        self.family = family
        self._history = history
        self.log_wealth = 0.0
        self.t = 0
        self.regret_t: Optional[float] = None
        self.keep_rows = keep_rows
        self.rows: List[LedgerRow] = []

    def best_fixed_log_wealth_fn(self, theta) -> float:
        return fixed_bet_log_wealth(self.family, theta, self._history())

    def record(self, theta, increment: float, with_regret: bool = False) -> LedgerRow:
        self.t += 1
        self.log_wealth += float(increment)
        row = LedgerRow(self.t, [float(v) for v in np.atleast_1d(theta)], self.log_wealth)
        if with_regret:
            row.regret = regret(self)
        if self.keep_rows:
            self.rows.append(row)
        return row

    def write_json_lines(self, handle: TextIO) -> None:
        for row in self.rows:
            handle.write(row.to_json() + "\n")


def regret(ledger: RegretLedger, fam: Optional[FamilySpec] = None) -> float:
    """max_θ log L_t^θ − log W_t (0 before the first observation)."""
    fam = fam or ledger.family
    if ledger.t == 0:
        return 0.0
    best = best_fixed_bet(fam, ledger._history())
    ledger.regret_t = best.value - ledger.log_wealth
    return ledger.regret_t

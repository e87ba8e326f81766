"""Monte Carlo harness: Type-I error, power, coverage and regret slopes over seeded replications."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from ..betting.ledger import fixed_bet_log_wealth
from ..betting.solvers import best_on_grid, maximize_from_starts
from ..betting.strategies import Strategy
from ..core.families import FamilySpec
from ..inference.confidence import build_confidence_grid, covers, iter_confidence_sequence, nearest_candidate
from ..inference.sequential import check_alpha, run_test
from .exceptions import ParamError
from .generators import Generator, derive_seed, generate
from .presets import get_preset

logger = logging.getLogger(__name__)

MIN_RECOMMENDED_REPLICATIONS = 100
CI_LEVEL = 0.95


@dataclass(frozen=True)
class MonteCarloConfig:
    scenario: str
    replications: int = 200
    horizon: Optional[int] = None
    alpha: float = 0.05
    master_seed: int = 0
    strategy: Optional[str] = None
    horizons: Tuple[int, ...] = ()
    regret_checkpoints: Tuple[int, ...] = ()
    coverage: bool = False
    grid_points: Optional[int] = None
    workers: int = 1


@dataclass
class ReplicationResult:
    replication: int
    seed: int
    rejected_at: Optional[int]
    final_log_wealth: float
    regrets: Dict[int, float] = field(default_factory=dict)
    covered: Optional[bool] = None


@dataclass
class ScenarioSummary:
    scenario: str
    replications: int
    horizon: int
    alpha: float
    master_seed: int
    strategy: str
    rejections: int
    rejection_rate: float
    ci_low: float
    ci_high: float
    ville_margin: float
    median_rejection_time: Optional[float]
    rejection_by_horizon: Dict[int, float] = field(default_factory=dict)
    regret_slopes: Dict[int, float] = field(default_factory=dict)
    regret_max: Dict[int, float] = field(default_factory=dict)
    coverage: Optional[float] = None
    coverage_ci: Optional[Tuple[float, float]] = None

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("rejection_by_horizon", "regret_slopes", "regret_max"):
            out[key] = {str(k): v for k, v in out[key].items()}
        return out

    def table_rows(self) -> List[dict]:
        """One row per reported horizon, flat enough for CSV."""
        rows = []
        for horizon in sorted(set(self.rejection_by_horizon) | set(self.regret_slopes)):
            rows.append({
                "scenario": self.scenario,
                "horizon": horizon,
                "rejection_rate": self.rejection_by_horizon.get(horizon, ""),
                "regret_over_t": self.regret_slopes.get(horizon, ""),
                "regret_max": self.regret_max.get(horizon, ""),
            })
        return rows


def binomial_interval(successes: int, trials: int, level: float = CI_LEVEL) -> Tuple[float, float]:
    """Wilson interval for a binomial proportion."""
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def ville_margin(alpha: float, replications: int) -> float:
    """Two binomial standard errors around α."""
    return 2.0 * math.sqrt(alpha * (1.0 - alpha) / replications)


def run_replication(config: MonteCarloConfig, replication: int) -> ReplicationResult:
    """One seeded path of the scenario; a pure function of (config, replication)."""
    preset = get_preset(config.scenario)
    seed = derive_seed(config.master_seed, preset.name, replication)
    horizon = config.horizon or preset.horizon
    xs = generate(preset.generator.with_seed(seed), horizon)
    fam = preset.family()
    strategy = preset.make_strategy(fam, config.strategy)
    checkpoints = {t for t in config.regret_checkpoints if t <= horizon}
    regrets: Dict[int, float] = {}

    def on_step(row: dict) -> None:
        if row["t"] in checkpoints:
            regrets[row["t"]] = strategy.regret()

    outcome = run_test(
        fam, strategy, xs, config.alpha,
        continue_after_rejection=bool(checkpoints),
        on_step=on_step if checkpoints else None,
    )
    covered = None
    if config.coverage:
        grid = build_confidence_grid(preset.lambda_grid(config.grid_points), preset.family,
                                     lambda f: preset.make_strategy(f, config.strategy), config.alpha)
        truth = nearest_candidate(grid, preset.truth())
        for update in iter_confidence_sequence(grid, xs):
            if not update.mask[truth]:
                break
        covered = covers(grid, preset.truth())
    return ReplicationResult(replication, seed, outcome.rejected_at, outcome.final_log_wealth, regrets, covered)


def _run_all(config: MonteCarloConfig) -> List[ReplicationResult]:
    n = config.replications
    step = max(n // 10, 1)
    results: List[ReplicationResult] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for result in pool.map(run_replication, [config] * n, range(n), chunksize=max(n // (4 * config.workers), 1)):
                results.append(result)
                if len(results) % step == 0:
                    logger.info("%s: %d/%d replications done.", config.scenario, len(results), n)
    else:
        for rep in range(n):
            results.append(run_replication(config, rep))
            if len(results) % step == 0:
                logger.info("%s: %d/%d replications done.", config.scenario, len(results), n)
    return sorted(results, key=lambda r: r.replication)


def summarize(config: MonteCarloConfig, results: List[ReplicationResult]) -> ScenarioSummary:
    preset = get_preset(config.scenario)
    horizon = config.horizon or preset.horizon
    n = len(results)
    times = [r.rejected_at for r in results if r.rejected_at is not None]
    low, high = binomial_interval(len(times), n)
    summary = ScenarioSummary(
        scenario=preset.name,
        replications=n,
        horizon=horizon,
        alpha=config.alpha,
        master_seed=config.master_seed,
        strategy=config.strategy or preset.strategy,
        rejections=len(times),
        rejection_rate=len(times) / n,
        ci_low=low,
        ci_high=high,
        ville_margin=ville_margin(config.alpha, n),
        median_rejection_time=float(np.median(times)) if times else None,
    )
    for t in sorted(set(config.horizons) | {horizon}):
        if t <= horizon:
            summary.rejection_by_horizon[t] = sum(1 for r in times if r <= t) / n
    for t in sorted({t for r in results for t in r.regrets}):
        values = np.array([r.regrets[t] for r in results if t in r.regrets])
        summary.regret_slopes[t] = float(values.mean() / t)
        summary.regret_max[t] = float(values.max())
    covered = [r.covered for r in results if r.covered is not None]
    if covered:
        summary.coverage = sum(covered) / len(covered)
        summary.coverage_ci = binomial_interval(sum(covered), len(covered))
    return summary


def monte_carlo(config: MonteCarloConfig) -> ScenarioSummary:
    """Run every replication (in worker processes when ``workers > 1``) and aggregate."""
    check_alpha(config.alpha)
    if config.replications < 1:
        raise ParamError(f"Need at least one replication, got {config.replications}.")
    if config.replications < MIN_RECOMMENDED_REPLICATIONS:
        logger.warning("Only %d replications; binomial intervals will be wide.", config.replications)
    logger.info("Monte Carlo %s: %d replications, master seed %d.", config.scenario, config.replications, config.master_seed)
    return summarize(config, _run_all(config))


@dataclass
class GrowthRate:
    theta: np.ndarray
    rate: float
    stderr: float
    samples: int


def growth_rate_oracle(fam: FamilySpec, generator: Generator, samples: int = 100_000) -> GrowthRate:
    """Best fixed bet θ* for E[log-increment] under the generator's law, by grid search plus refinement."""
    feats = fam.features(generate(generator, samples))
    grid_theta, _ = best_on_grid(lambda theta: fixed_bet_log_wealth(fam, theta, feats), fam.theta_domain)
    weights = np.full(samples, 1.0 / samples)
    best = maximize_from_starts(lambda th: fam.objective(th, feats, weights), fam.theta_domain,
                                [grid_theta, fam.neutral_point()])
    logs = fam.increments(best.theta, feats)
    return GrowthRate(best.theta, float(logs.mean()), float(logs.std(ddof=1) / math.sqrt(samples)), samples)


def power_bound_gap(strategy: Strategy, theta_star) -> float:
    """log W_T/T − (log L_T^{θ*}/T − Regret_T/T); nonnegative up to solver tolerance."""
    t = strategy.t
    if t == 0:
        return 0.0
    log_star = fixed_bet_log_wealth(strategy.family, theta_star, strategy.history_features())
    return strategy.log_wealth / t - (log_star / t - strategy.regret() / t)

"""Experiment presets: the Beta mean/sd, Beta VaR/CVaR and AR(1) coefficient studies.

Every preset also has a ``<name>:null`` scenario with the null moved to the
generator's true value, used for Type-I checks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..betting.strategies import Strategy, get_strategy
from ..core.families import FamilyKind, FamilySpec, make_family
from ..core.functionals import Functional, get_functional
from ..core.references import true_value
from ..core.tail_models import get_psi, get_variance
from ..inference.confidence import build_confidence_grid, iter_confidence_sequence, lambda_grid, nearest_candidate
from ..inference.sequential import TestOutcome, run_test
from .exceptions import PresetError
from .generators import Generator, generate

logger = logging.getLogger(__name__)

NULL_SUFFIX = ":null"
SURFACE_POINTS = 61
BAND_POINTS = 101
AR1_NOISE_VAR = 0.8


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    generator: Generator
    functional_id: str
    data_range: Optional[Tuple[float, float]]
    null: Tuple[float, ...]
    family_kind: FamilyKind
    family_options: Dict[str, object] = field(default_factory=dict)
    strategy: str = "ftl"
    strategy_options: Dict[str, object] = field(default_factory=dict)
    alpha: float = 0.05
    horizon: int = 500
    grid_lower: Tuple[float, ...] = ()
    grid_upper: Tuple[float, ...] = ()
    grid_points: int = SURFACE_POINTS
    snapshots: Tuple[int, ...] = (50,)
    band: bool = False

    @property
    def is_null(self) -> bool:
        return self.name.endswith(NULL_SUFFIX)

    def functional(self) -> Functional:
        return get_functional(self.functional_id, self.data_range)

    def truth(self) -> np.ndarray:
        return true_value(self.functional(), self.generator.reference())

    def family(self, null=None) -> FamilySpec:
        options = dict(self.family_options)
        if "psi" in options:
            options["psi"] = get_psi(options["psi"])
        if "variance" in options:
            options["variance"] = get_variance(options["variance"])
        return make_family(self.family_kind, self.functional(), self.null if null is None else null, **options)

    def make_strategy(self, fam: FamilySpec, name: Optional[str] = None, **hyper) -> Strategy:
        """The preset's strategy (or ``name``) with its declared options, overridden by ``hyper``."""
        return get_strategy(name or self.strategy, fam, **{**self.strategy_options, **hyper})

    def lambda_grid(self, points: Optional[int] = None) -> np.ndarray:
        return lambda_grid(self.functional(), points or self.grid_points, self.grid_lower, self.grid_upper)

    def null_scenario(self) -> "ExperimentPreset":
        truth = tuple(float(v) for v in self.truth())
        return replace(self, name=self.name + NULL_SUFFIX, null=truth,
                       description=self.description + " (null at the true value)")

    def describe(self) -> dict:
        return {
            "name": self.name,
            "generator": self.generator.describe(),
            "functional": self.functional_id,
            "data_range": list(self.data_range) if self.data_range else None,
            "null": list(self.null),
            "family": self.family_kind.value,
            "family_options": {k: v for k, v in self.family_options.items()},
            "strategy": self.strategy,
            "strategy_options": dict(self.strategy_options),
            "alpha": self.alpha,
            "horizon": self.horizon,
            "grid": {"lower": list(self.grid_lower), "upper": list(self.grid_upper), "points": self.grid_points},
            "snapshots": list(self.snapshots),
        }


_PRESETS: Dict[str, ExperimentPreset] = {
    "mean_sd_beta": ExperimentPreset(
        name="mean_sd_beta",
        description="Mean and standard deviation of i.i.d. Beta(2, 5) data",
        generator=Generator.iid_beta(2.0, 5.0),
        functional_id="mean_sd",
        data_range=(0.0, 1.0),
        null=(0.4, 0.4),
        family_kind=FamilyKind.BOUNDED_IDENTIFIABLE,
        horizon=500,
        grid_lower=(0.0, 0.0),
        grid_upper=(1.0, 0.5),
        snapshots=(50,),
    ),
    "var_cvar_beta": ExperimentPreset(
        name="var_cvar_beta",
        description="5% VaR and CVaR of i.i.d. Beta(2, 5) data",
        generator=Generator.iid_beta(2.0, 5.0),
        functional_id="var_cvar:0.05",
        data_range=(0.0, 1.0),
        null=(0.2, 0.1),
        family_kind=FamilyKind.BOUNDED_ELICITABLE,
        family_options={"scale": "auto", "half_width": 0.15},
        horizon=500,
        grid_lower=(0.0, 0.0),
        grid_upper=(0.5, 0.5),
        snapshots=(50, 150),
    ),
    "ar1_coeff": ExperimentPreset(
        name="ar1_coeff",
        description="Coefficient of a stationary AR(1) with N(0, 0.8) noise",
        generator=Generator.ar1(0.5, AR1_NOISE_VAR),
        functional_id="regression:1",
        data_range=None,
        null=(0.65,),
        family_kind=FamilyKind.SUB_PSI_IDENTIFIABLE,
        family_options={
            "psi": f"gaussian:{math.sqrt(AR1_NOISE_VAR)!r}",
            "mode": "scaled",
            "radius": 1.0,
            "variance": "covariate",
        },
        strategy_options={"gradient_bound": 4.0},
        horizon=1000,
        grid_lower=(0.0,),
        grid_upper=(1.0,),
        grid_points=BAND_POINTS,
        snapshots=(),
        band=True,
    ),
}

PRESET_NAMES = tuple(_PRESETS)


def get_preset(name: str) -> ExperimentPreset:
    """Look up ``mean_sd_beta``, ``var_cvar_beta``, ``ar1_coeff`` or any of them with ``:null``."""
    key = str(name).strip().lower()
    base, null = (key[: -len(NULL_SUFFIX)], True) if key.endswith(NULL_SUFFIX) else (key, False)
    if base not in _PRESETS:
        known = ", ".join(PRESET_NAMES + tuple(p + NULL_SUFFIX for p in PRESET_NAMES))
        raise PresetError(f"Unknown preset '{name}'. Use one of: {known}.")
    preset = _PRESETS[base]
    return preset.null_scenario() if null else preset


@dataclass
class PresetRun:
    """Plot-ready data of one seeded run."""

    preset: ExperimentPreset
    seed: int
    outcome: TestOutcome
    surfaces: Dict[int, List[dict]] = field(default_factory=dict)
    band: List[dict] = field(default_factory=list)

    def path_rows(self) -> List[dict]:
        bound = float(np.log(1.0 / self.preset.alpha))
        return [
            {"t": t, "log_wealth": w, "log_threshold": bound, "rejected": int(self.outcome.rejected_at is not None
                                                                              and t >= self.outcome.rejected_at)}
            for t, w in enumerate(self.outcome.log_wealth_path, start=1)
        ]

    def summary(self) -> dict:
        truth = self.preset.truth()
        out = {
            "preset": self.preset.describe(),
            "seed": int(self.seed),
            "truth": [float(v) for v in truth],
            "test": self.outcome.summary(),
            "surface_times": sorted(self.surfaces),
        }
        if self.band:
            out["band_covers_truth"] = all(row["covers_truth"] for row in self.band)
        for t, rows in self.surfaces.items():
            members = [row for row in rows if row["member"]]
            out[f"confidence_set_size_t{t}"] = len(members)
        return out


def _surfaces(preset: ExperimentPreset, xs: np.ndarray, points: Optional[int]) -> Dict[int, List[dict]]:
    """log W_t^λ over the λ-grid and the confidence membership at each snapshot time."""
    times = sorted(t for t in preset.snapshots if t <= len(xs))
    if not times:
        return {}
    grid = preset.lambda_grid(points)
    bound = float(np.log(1.0 / preset.alpha))
    strategies = [preset.make_strategy(preset.family(lam)) for lam in grid]
    running = np.zeros(len(grid))
    out: Dict[int, List[dict]] = {}
    logger.info("Surface over %d candidates up to t=%d.", len(grid), times[-1])
    for t, x in enumerate(xs[: times[-1]], start=1):
        for idx, strat in enumerate(strategies):
            strat.step(x)
            running[idx] = max(running[idx], strat.log_wealth)
        if t in times:
            out[t] = [
                {"t": t, "lambda": lam.tolist(), "log_wealth": strat.log_wealth, "member": int(running[idx] <= bound)}
                for idx, (lam, strat) in enumerate(zip(grid, strategies))
            ]
    return out


def _band(preset: ExperimentPreset, xs: np.ndarray, points: Optional[int]) -> List[dict]:
    grid = build_confidence_grid(preset.lambda_grid(points), preset.family, preset.make_strategy, preset.alpha)
    idx = nearest_candidate(grid, preset.truth())
    rows = []
    for update in iter_confidence_sequence(grid, xs):
        row = update.to_row()
        row["covers_truth"] = bool(update.mask[idx])
        rows.append(row)
    return rows


def run_preset(
    preset: ExperimentPreset,
    seed: int,
    horizon: Optional[int] = None,
    grid_points: Optional[int] = None,
    alpha: Optional[float] = None,
    strategy: Optional[str] = None,
) -> PresetRun:
    """Test path, log-wealth surfaces and (for band presets) the running confidence band."""
    if alpha is not None or strategy is not None:
        preset = replace(preset, alpha=alpha if alpha is not None else preset.alpha,
                         strategy=strategy or preset.strategy)
    horizon = horizon or preset.horizon
    xs = generate(preset.generator.with_seed(seed), horizon)
    fam = preset.family()
    outcome = run_test(fam, preset.make_strategy(fam), xs, preset.alpha, continue_after_rejection=True)
    run = PresetRun(preset, seed, outcome)
    run.surfaces = _surfaces(preset, xs, grid_points)
    if preset.band:
        run.band = _band(preset, xs, grid_points)
    logger.info("Preset %s seed %d: rejected_at=%s.", preset.name, seed, outcome.rejected_at)
    return run

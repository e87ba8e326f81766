"""Sub-ψ machinery: ψ catalog, variance processes, conjugates and an exhaustive oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import optimize

from .exceptions import PsiRangeError, PsiSpecError, SizeError, VarianceProcessError

logger = logging.getLogger(__name__)

CONJUGATE_XTOL = 1e-10
ORACLE_SLACK = 1e-12
MAX_ATOMS = 20
MAX_STEPS = 10
MAX_NODES = 200_000

PSI_IDS = ("gaussian:<sigma>", "hoeffding:<a>:<b>")
VARIANCE_RULES = ("unit", "custom", "covariate")


@dataclass(frozen=True)
class PsiSpec:
    """A ψ function with ψ(0) = ψ'(0) = 0, convex and nonnegative on [0, u_max).

    ``kind`` is "gaussian" (params: σ), "hoeffding" (params: a, b) or
    "table" (params: u knots followed by ψ values, linear interpolation).
    """

    kind: str
    params: Tuple[float, ...]
    u_max: float = float("inf")

    @property
    def id(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian:{self.params[0]:g}"
        if self.kind == "hoeffding":
            return f"hoeffding:{self.params[0]:g}:{self.params[1]:g}"
        return f"table:{len(self.params) // 2}"

    @property
    def quadratic_coefficient(self):
        """k with ψ(u) = k·u²/2 for the quadratic kinds, None otherwise."""
        if self.kind == "gaussian":
            return self.params[0] ** 2
        if self.kind == "hoeffding":
            a, b = self.params
            return (b - a) ** 2 / 4.0
        return None

    @property
    def deriv0(self) -> float:
        return float(self.deriv(0.0))

    def _table(self) -> Tuple[np.ndarray, np.ndarray]:
        n = len(self.params) // 2
        return np.asarray(self.params[:n]), np.asarray(self.params[n:])

    def __call__(self, u):
        """Vectorized ψ(u) without range checks."""
        u = np.asarray(u, dtype=float)
        k = self.quadratic_coefficient
        if k is not None:
            return 0.5 * k * u * u
        knots, values = self._table()
        return np.interp(u, knots, values)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        k = self.quadratic_coefficient
        if k is not None:
            return k * u
        knots, values = self._table()
        slopes = np.diff(values) / np.diff(knots)
        idx = np.clip(np.searchsorted(knots, u, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    def in_range(self, u) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(np.all((u >= 0.0) & (u < self.u_max)))


def gaussian(sigma: float = 1.0) -> PsiSpec:
    if not sigma > 0:
        raise PsiSpecError(f"Gaussian ψ needs σ > 0, got {sigma!r}.")
    return PsiSpec("gaussian", (float(sigma),))


def hoeffding(a: float, b: float) -> PsiSpec:
    """ψ(u) = u²(b−a)²/8, valid for increments in [a, b]."""
    if not b > a:
        raise PsiSpecError(f"Hoeffding ψ needs a < b, got ({a!r}, {b!r}).")
    return PsiSpec("hoeffding", (float(a), float(b)))


def from_table(knots: Sequence[float], values: Sequence[float]) -> PsiSpec:
    """Piecewise-linear ψ through (knots, values); u_max is the last knot."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
        raise PsiSpecError("A ψ table needs matching knot and value vectors with at least two points.")
    if knots[0] != 0.0 or values[0] != 0.0:
        raise PsiSpecError("A ψ table must start at ψ(0) = 0.")
    if np.any(np.diff(knots) <= 0):
        raise PsiSpecError("ψ table knots must be strictly increasing.")
    slopes = np.diff(values) / np.diff(knots)
    if abs(slopes[0]) > 1e-12:
        raise PsiSpecError("ψ'(0) must be 0: the first table segment has to be flat.")
    if np.any(np.diff(slopes) < -1e-12) or np.any(values < 0):
        raise PsiSpecError("ψ table must be convex and nonnegative.")
    return PsiSpec("table", tuple(knots) + tuple(values), u_max=float(knots[-1]))


def get_psi(ident: str) -> PsiSpec:
    """Resolve ``gaussian:1.0`` or ``hoeffding:0:1``."""
    name, *args = str(ident).strip().lower().split(":")
    try:
        if name == "gaussian" and len(args) <= 1:
            return gaussian(float(args[0]) if args else 1.0)
        elif name == "hoeffding" and len(args) == 2:
            return hoeffding(float(args[0]), float(args[1]))
    except ValueError as exc:
        if isinstance(exc, PsiSpecError):
            raise
        raise PsiSpecError(f"Malformed ψ id '{ident}'.") from exc
    raise PsiSpecError(f"Unknown ψ '{ident}'. Use one of: {', '.join(PSI_IDS)}.")


def psi_eval(spec: PsiSpec, u: float) -> float:
    if not (0.0 <= u < spec.u_max):
        raise PsiRangeError(f"u={u!r} is outside [0, {spec.u_max:g}) for ψ {spec.id}.")
    return float(spec(u))


def psi_conjugate(spec: PsiSpec, c: float) -> float:
    """ψ*(c) = sup{u·c − ψ(u) : u ∈ [0, u_max)}."""
    c = float(c)
    if c <= 0.0:
        return 0.0
    if spec.kind == "gaussian":
        return c * c / (2.0 * spec.params[0] ** 2)

    def payoff(u: float) -> float:
        return u * c - float(spec(u))

    if np.isfinite(spec.u_max):
        upper = spec.u_max * (1.0 - 1e-12)
    else:
        upper = 1.0
        while payoff(2.0 * upper) > payoff(upper) and upper < 2.0 ** 60:
            upper *= 2.0
        upper *= 2.0
    result = optimize.minimize_scalar(
        lambda u: -payoff(u),
        bounds=(0.0, upper),
        method="bounded",
        options={"xatol": CONJUGATE_XTOL},
    )
    return max(-float(result.fun), payoff(upper), 0.0)


@dataclass(frozen=True)
class VarianceProcess:
    """Per-step variance increments v_t.

    ``unit`` is 1 per step, ``custom`` a caller-supplied sequence and ``covariate``
    the squared covariate norm of each observation, which only a family can
    compute from the data.
    """

    rule: str = "unit"
    values: Tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.rule not in VARIANCE_RULES:
            raise VarianceProcessError(f"Unknown variance rule '{self.rule}'. Use one of: {', '.join(VARIANCE_RULES)}.")
        if self.rule == "custom":
            vals = np.asarray(self.values, dtype=float)
            if vals.size == 0 or np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise VarianceProcessError("Custom variance increments must be finite and nonnegative.")

    @classmethod
    def unit(cls) -> "VarianceProcess":
        return cls("unit")

    @classmethod
    def custom(cls, values: Sequence[float]) -> "VarianceProcess":
        return cls("custom", tuple(float(v) for v in values))

    @classmethod
    def covariate(cls) -> "VarianceProcess":
        return cls("covariate")

    @property
    def data_driven(self) -> bool:
        return self.rule == "covariate"

    def increment(self, t: int) -> float:
        """v_t for the 1-indexed step t."""
        if t < 1:
            raise VarianceProcessError(f"Variance steps are 1-indexed, got {t}.")
        if self.data_driven:
            raise VarianceProcessError("Covariate variance increments depend on the observations.")
        if self.rule == "unit":
            return 1.0
        if t > len(self.values):
            raise VarianceProcessError(f"Variance process defines {len(self.values)} steps, step {t} requested.")
        return self.values[t - 1]

    def increments(self, start: int, count: int) -> np.ndarray:
        if self.rule == "unit":
            return np.ones(count)
        if self.data_driven:
            raise VarianceProcessError("Covariate variance increments depend on the observations.")
        return np.array([self.increment(t) for t in range(start, start + count)])

    def cumulative(self, t: int) -> float:
        """V_t, with V_0 = 0."""
        if t <= 0:
            return 0.0
        return float(self.increments(1, t).sum())


def get_variance(ident: str) -> VarianceProcess:
    """Resolve ``unit`` or ``covariate``; custom sequences are built with ``VarianceProcess.custom``."""
    name = str(ident).strip().lower()
    if name == "unit":
        return VarianceProcess.unit()
    if name == "covariate":
        return VarianceProcess.covariate()
    raise VarianceProcessError(f"Unknown variance process '{ident}'. Use unit or covariate.")


Kernel = Callable[[Tuple[float, ...]], Tuple[Sequence[float], Sequence[float]]]


@dataclass
class DiscreteConditionalModel:
    """Finite conditional model for increments ΔY_t given the past increments."""

    steps: int
    kernel: Kernel

    @classmethod
    def iid(cls, atoms: Sequence[float], probs: Sequence[float], steps: int) -> "DiscreteConditionalModel":
        atoms, probs = tuple(atoms), tuple(probs)
        return cls(steps, lambda history: (atoms, probs))

    def nodes(self):
        """Yield (history, atoms, probs) for every node of the increment tree."""
        if self.steps > MAX_STEPS:
            raise SizeError(f"Exhaustive checks allow at most {MAX_STEPS} steps, got {self.steps}.")
        frontier: List[Tuple[float, ...]] = [()]
        visited = 0
        for _ in range(self.steps):
            next_frontier: List[Tuple[float, ...]] = []
            for history in frontier:
                atoms, probs = self.kernel(history)
                atoms = np.asarray(atoms, dtype=float)
                probs = np.asarray(probs, dtype=float)
                if atoms.size > MAX_ATOMS:
                    raise SizeError(f"Exhaustive checks allow at most {MAX_ATOMS} atoms per step, got {atoms.size}.")
                visited += 1
                if visited > MAX_NODES:
                    raise SizeError(f"Model tree exceeds {MAX_NODES} nodes.")
                yield history, atoms, probs
                next_frontier.extend(history + (float(a),) for a in atoms)
            frontier = next_frontier


@dataclass
class SubPsiReport:
    max_expectation: float
    max_conditional_mean: float
    nodes: int
    violations: List[Tuple[Tuple[float, ...], float, float]]

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_sub_psi_discrete(
    model: DiscreteConditionalModel,
    spec: PsiSpec,
    variance: VarianceProcess,
    u_grid: Sequence[float],
    centered: bool = False,
) -> SubPsiReport:
    """Enumerate E[exp(u·ΔY − Δv·ψ(u)) | past] at every node and u in the grid."""
    u_grid = np.asarray(u_grid, dtype=float)
    if not spec.in_range(u_grid):
        raise PsiRangeError(f"u grid leaves [0, {spec.u_max:g}).")
    psi_u = spec(u_grid)
    worst = -np.inf
    worst_mean = -np.inf
    violations: List[Tuple[Tuple[float, ...], float, float]] = []
    count = 0
    for history, atoms, probs in model.nodes():
        count += 1
        mean = float(probs @ atoms)
        worst_mean = max(worst_mean, mean)
        shifted = atoms - mean if centered else atoms
        dv = variance.increment(len(history) + 1)
        expectations = np.exp(np.outer(u_grid, shifted) - dv * psi_u[:, None]) @ probs
        worst = max(worst, float(expectations.max()))
        for u, value in zip(u_grid, expectations):
            if value > 1.0 + ORACLE_SLACK:
                violations.append((history, float(u), float(value)))
    if violations:
        logger.info("Sub-ψ check for %s found %d violations over %d nodes.", spec.id, len(violations), count)
    return SubPsiReport(worst, worst_mean, count, violations)

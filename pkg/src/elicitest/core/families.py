"""Test-supermartingale families indexed by a bet θ.

Four constructors cover bounded and sub-ψ versions of elicitable and
identifiable nulls. A family is immutable; it turns observations into
per-step log-increments log(L_t^θ / L_{t−1}^θ) and their θ-gradients.

Sub-ψ families come in three parametrizations:

* ``joint``   θ = (base, u): u·g(base, x) − v_t ψ(u)
* ``fixed_u`` θ = base:      u₀·g(base, x) − v_t ψ(u₀)
* ``scaled``  θ = base:      g(base, x) − v_t ψ(‖base − anchor‖)

where g is the score gap s(λ₀, x) − s(λ, x) or the linear identification
payoff ⟨η, m(λ₀, x)⟩, and anchor is λ₀ or 0 respectively.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from .domains import Ball, Box, ProductDomain, ThetaDomain
from .exceptions import (
    DomainError,
    FamilyConfigurationError,
    NonpositiveIncrementError,
)
from .functionals import Functional, as_observation, as_observations
from .tail_models import PsiSpec, VarianceProcess

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 1e-3
DEFAULT_RADIUS = 1.0
SCAN_X_POINTS = 2001
SCAN_THETA_POINTS = 41


class FamilyKind(str, Enum):
    BOUNDED_ELICITABLE = "bounded_elicitable"
    BOUNDED_IDENTIFIABLE = "bounded_identifiable"
    SUB_PSI_ELICITABLE = "sub_psi_elicitable"
    SUB_PSI_IDENTIFIABLE = "sub_psi_identifiable"


class SubPsiMode(str, Enum):
    JOINT = "joint"
    FIXED_U = "fixed_u"
    SCALED = "scaled"


@dataclass(frozen=True)
class ConcavityCertificate:
    certified: bool
    reason: str
    strong_modulus: float = 0.0

    def __bool__(self) -> bool:
        return self.certified


@dataclass
class Features:
    """θ-independent per-observation quantities reused across bets."""

    xs: np.ndarray
    v: np.ndarray
    m: Optional[np.ndarray] = None
    s0: Optional[np.ndarray] = None
    start: int = 1

    def __len__(self) -> int:
        return len(self.xs)


@dataclass(frozen=True, eq=False)
class FamilySpec:
    kind: FamilyKind
    functional: Functional
    null: Tuple[float, ...]
    theta_domain: ThetaDomain
    psi: Optional[PsiSpec] = None
    variance: Optional[VarianceProcess] = None
    mode: Optional[SubPsiMode] = None
    fixed_u: Optional[float] = None
    scale: float = 1.0
    margin: float = DEFAULT_MARGIN

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if self.mode is not None:
            object.__setattr__(self, "mode", SubPsiMode(self.mode))
        self._validate()
        logger.info(
            "Built %s family for %s at λ₀=%s on %r (scale=%g).",
            self.kind.value, self.functional.id, list(self.null), self.theta_domain, self.scale,
        )

    # -- descriptors ------------------------------------------------------
    @property
    def lam0(self) -> np.ndarray:
        return np.asarray(self.null, dtype=float)

    @property
    def dim(self) -> int:
        return self.theta_domain.dim

    @property
    def is_elicitable(self) -> bool:
        return self.kind in (FamilyKind.BOUNDED_ELICITABLE, FamilyKind.SUB_PSI_ELICITABLE)

    @property
    def is_sub_psi(self) -> bool:
        return self.kind in (FamilyKind.SUB_PSI_ELICITABLE, FamilyKind.SUB_PSI_IDENTIFIABLE)

    @property
    def anchor(self) -> np.ndarray:
        return self.lam0 if self.is_elicitable else np.zeros(self.functional.param_dim)

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "functional": self.functional.id,
            "null": list(self.null),
            "domain": repr(self.theta_domain),
            "psi": self.psi.id if self.psi else None,
            "variance": self.variance.rule if self.variance else None,
            "mode": self.mode.value if self.mode else None,
            "fixed_u": self.fixed_u,
            "scale": self.scale,
            "margin": self.margin,
        }

    def neutral_point(self) -> np.ndarray:
        """The bet that leaves wealth unchanged, projected into Θ."""
        base = self.anchor
        if self.mode is SubPsiMode.JOINT:
            return self.theta_domain.project(np.append(base, 0.0))
        return self.theta_domain.project(base)

    # -- validation -------------------------------------------------------
    def _validate(self) -> None:
        f = self.functional
        if self.is_elicitable and not f.has_score:
            raise FamilyConfigurationError(f"{f.id} has no scoring function; use an identifiable family.")
        if not self.is_elicitable and not f.has_ident:
            raise FamilyConfigurationError(f"{f.id} has no identification function.")
        try:
            f.check_param(self.lam0)
        except DomainError as exc:
            raise FamilyConfigurationError(f"Null value is not admissible: {exc}") from exc
        if not self.scale > 0:
            raise FamilyConfigurationError(f"Score scale must be positive, got {self.scale!r}.")

        base_domain = self.theta_domain
        if self.is_sub_psi:
            self._validate_sub_psi()
            if self.mode is SubPsiMode.JOINT:
                base_domain = self.theta_domain.base
        elif self.mode is not None:
            raise FamilyConfigurationError("Bounded families take no sub-ψ mode.")
        if base_domain.dim != f.param_dim:
            raise FamilyConfigurationError(
                f"Domain dimension {base_domain.dim} does not match {f.id} (k={f.param_dim})."
            )
        if self.is_elicitable:
            self._check_inside_lambda(base_domain)
        if self.kind is FamilyKind.BOUNDED_IDENTIFIABLE:
            self._check_identifiable_admissible()
        elif self.kind is FamilyKind.BOUNDED_ELICITABLE:
            worst = worst_score_gap(f, self.lam0, self.theta_domain)
            if worst * self.scale < -1.0 + self.margin - 1e-12:
                raise FamilyConfigurationError(
                    f"Score gap reaches {worst * self.scale:.6g} on the data range; "
                    f"shrink the domain or pass scale ≤ {admissible_scale(worst, self.margin):.6g}."
                )

    def _validate_sub_psi(self) -> None:
        if self.psi is None:
            raise FamilyConfigurationError("Sub-ψ families need a ψ specification.")
        if self.variance is None:
            object.__setattr__(self, "variance", VarianceProcess.unit())
        if self.mode is None:
            raise FamilyConfigurationError("Sub-ψ families need a mode: joint, fixed_u or scaled.")
        if self.variance.data_driven:
            self._check_covariate_variance()
        u_max = self.psi.u_max
        if self.mode is SubPsiMode.JOINT:
            if not isinstance(self.theta_domain, ProductDomain):
                raise FamilyConfigurationError("Joint sub-ψ families need a ProductDomain (base × [u_lo, u_cap]).")
            if self.theta_domain.u_cap >= u_max:
                raise FamilyConfigurationError(f"u_cap {self.theta_domain.u_cap:g} must be below u_max {u_max:g}.")
        elif self.mode is SubPsiMode.FIXED_U:
            if self.fixed_u is None or not (0.0 <= self.fixed_u < u_max):
                raise FamilyConfigurationError(f"fixed_u must lie in [0, {u_max:g}), got {self.fixed_u!r}.")
        elif self.mode is SubPsiMode.SCALED:
            reach = _max_distance(self.theta_domain, self.anchor)
            if reach >= u_max:
                raise FamilyConfigurationError(f"Scaled domain reaches ‖θ − anchor‖ = {reach:g} ≥ u_max {u_max:g}.")

    def _check_covariate_variance(self) -> None:
        """v_t = ‖x_t‖² pairs with m·‖x_t‖, which is sub-ψ only for quadratic ψ."""
        if self.is_elicitable or not hasattr(self.functional, "subgradient_scale"):
            raise FamilyConfigurationError(
                f"Covariate variance needs an identifiable family on a regression functional, not {self.functional.id}."
            )
        if self.psi.quadratic_coefficient is None:
            raise FamilyConfigurationError(f"Covariate variance needs a quadratic ψ, got {self.psi.id}.")

    def _check_inside_lambda(self, domain: ThetaDomain) -> None:
        f = self.functional
        if isinstance(domain, Box):
            corners = domain.vertices()
        elif isinstance(domain, Ball):
            corners = domain.vertices()
            pair = f.ordered_pair()
            if pair is not None:
                i, j = pair
                if (domain.center[i] - domain.center[j]) / np.sqrt(2.0) < domain.radius - 1e-12:
                    raise FamilyConfigurationError("Ball domain crosses the ordering constraint of Λ.")
        else:
            corners = domain.grid(5)
        for corner in corners:
            if not f.in_domain(corner, tol=1e-9):
                raise FamilyConfigurationError(f"Domain point {corner.tolist()} is outside Λ ({f.describe_domain()}).")

    def _check_identifiable_admissible(self) -> None:
        f = self.functional
        if f.data_range is None:
            raise FamilyConfigurationError("Bounded identifiable families need a declared data range.")
        xs = _scan_grid(f, [self.lam0])
        ms = f.idents(self.lam0, xs)
        worst = float(np.min(self.theta_domain.support_min(ms)))
        if worst < -1.0 + self.margin - 1e-12:
            raise FamilyConfigurationError(
                f"inf ⟨η, m(λ₀, x)⟩ = {worst:.6g} over Θ; need ≥ {-1.0 + self.margin:g}."
            )

    # -- increments -------------------------------------------------------
    def features(self, xs, start: int = 1, check_range: bool = True) -> Features:
        """Precompute m(λ₀, x) or s(λ₀, x) for a block of observations starting at step ``start``."""
        f = self.functional
        xs = as_observations(xs, f.obs_dim)
        if check_range:
            f.check_range(xs)
        if self.is_sub_psi and self.variance.data_driven:
            w = f.subgradient_scale(xs)
            return Features(xs, w * w, m=f.idents(self.lam0, xs, strict=False) * w[:, None], start=start)
        v = self.variance.increments(start, len(xs)) if self.is_sub_psi else np.ones(len(xs))
        if self.is_elicitable:
            return Features(xs, v, s0=f.scores(self.lam0, xs), start=start)
        return Features(xs, v, m=f.idents(self.lam0, xs, strict=False), start=start)

    def _gap(self, base: np.ndarray, feats: Features, need_grad: bool):
        if self.is_elicitable:
            f = self.functional
            gap = feats.s0 - f.scores(base, feats.xs)
            grad = -f.score_gradients(base, feats.xs) if need_grad else None
            if self.kind is FamilyKind.BOUNDED_ELICITABLE and self.scale != 1.0:
                gap = gap * self.scale
                grad = grad * self.scale if need_grad else None
            return gap, grad
        return feats.m @ base, (feats.m if need_grad else None)

    def evaluate(self, theta, feats: Features, need_grad: bool = False):
        """Return (log-increments, θ-gradients or None, multiplicative factors or None)."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if self.kind in (FamilyKind.BOUNDED_ELICITABLE, FamilyKind.BOUNDED_IDENTIFIABLE):
            gap, dgap = self._gap(theta, feats, need_grad)
            factor = 1.0 + gap
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.where(factor > 0, np.log(np.where(factor > 0, factor, 1.0)), -np.inf)
                grads = dgap / factor[:, None] if need_grad else None
            return logs, grads, factor

        v = feats.v
        psi = self.psi
        if self.mode is SubPsiMode.JOINT:
            base, u = theta[:-1], float(theta[-1])
            gap, dgap = self._gap(base, feats, need_grad)
            logs = u * gap - v * float(psi(u))
            grads = np.column_stack([u * dgap, gap - v * float(psi.deriv(u))]) if need_grad else None
        elif self.mode is SubPsiMode.FIXED_U:
            u = float(self.fixed_u)
            gap, dgap = self._gap(theta, feats, need_grad)
            logs = u * gap - v * float(psi(u))
            grads = u * dgap if need_grad else None
        else:
            gap, dgap = self._gap(theta, feats, need_grad)
            offset = theta - self.anchor
            radius = float(np.linalg.norm(offset))
            logs = gap - v * float(psi(radius))
            grads = None
            if need_grad:
                direction = offset / radius if radius > 0 else np.zeros_like(offset)
                grads = dgap - np.outer(v, float(psi.deriv(radius)) * direction)
        return logs, grads, None

    def increments(self, theta, feats: Features) -> np.ndarray:
        logs, _, factor = self.evaluate(theta, feats)
        if factor is not None and np.any(factor <= 0):
            idx = int(np.argmax(factor <= 0))
            raise NonpositiveIncrementError(float(factor[idx]), step=feats.start + idx)
        return logs

    def objective(self, theta, feats: Features, weights: Optional[np.ndarray] = None):
        """Weighted total log-increment and its gradient; (-inf, None) outside the admissible set."""
        logs, grads, factor = self.evaluate(theta, feats, need_grad=True)
        if factor is not None and np.any(factor <= 0):
            return -np.inf, None
        if weights is None:
            return float(logs.sum()), grads.sum(axis=0)
        return float(weights @ logs), weights @ grads

    # -- closed forms -----------------------------------------------------
    @property
    def has_closed_form_leader(self) -> bool:
        return (
            self.kind is FamilyKind.SUB_PSI_IDENTIFIABLE
            and self.mode is SubPsiMode.SCALED
            and self.psi.quadratic_coefficient is not None
        )

    def closed_form_leader(self, sum_m: np.ndarray, total_v: float) -> np.ndarray:
        """argmax of ⟨η, Σm⟩ − V·k‖η‖²/2 over Θ, i.e. the projection of Σm/(kV)."""
        if total_v <= 0:
            return self.neutral_point()
        k = self.psi.quadratic_coefficient
        return self.theta_domain.project(np.asarray(sum_m, dtype=float) / (k * total_v))


# -- construction helpers ---------------------------------------------------

def _max_distance(domain: ThetaDomain, point: np.ndarray) -> float:
    if isinstance(domain, Ball):
        return float(np.linalg.norm(domain.center - point) + domain.radius)
    if isinstance(domain, Box):
        far = np.where(np.abs(domain.lower - point) > np.abs(domain.upper - point), domain.lower, domain.upper)
        return float(np.linalg.norm(far - point))
    return float(max(np.linalg.norm(p - point) for p in domain.grid(5)))


def _scan_grid(f: Functional, lams) -> np.ndarray:
    """Observation grid over the data range plus both sides of every kink."""
    lo, hi = f.data_range
    xs = [np.linspace(lo, hi, SCAN_X_POINTS)]
    for lam in lams:
        kinks = f.breakpoints(lam)
        xs.append(np.clip(np.concatenate([kinks, kinks - 1e-9, kinks + 1e-9]), lo, hi))
    return np.unique(np.concatenate(xs)).reshape(-1, 1)


def worst_score_gap(f: Functional, lam0, theta_domain: ThetaDomain) -> float:
    """min over a Θ-grid and the data range of s(λ₀, x) − s(λ, x), before scaling."""
    lam0 = np.asarray(lam0, dtype=float).reshape(-1)
    if f.data_range is None:
        raise FamilyConfigurationError("Bounded elicitable families need a declared data range.")
    domain = theta_domain.base if isinstance(theta_domain, ProductDomain) else theta_domain
    thetas = domain.grid(SCAN_THETA_POINTS if domain.dim == 1 else 15)
    if isinstance(domain, Box):
        thetas = np.vstack([thetas, domain.vertices()])
    xs = _scan_grid(f, list(thetas) + [lam0])
    s0 = f.scores(lam0, xs)
    return float(min((s0 - f.scores(theta, xs)).min() for theta in thetas))


def admissible_scale(worst_gap: float, margin: float = DEFAULT_MARGIN) -> float:
    """Largest c ≤ 1 with c·worst_gap ≥ −1 + margin."""
    if worst_gap >= -1.0 + margin:
        return 1.0
    return (1.0 - margin) / (-worst_gap)


def _lambda_box(f: Functional, center=None, half_width: Optional[float] = None) -> Box:
    lower, upper = f.domain_bounds()
    if half_width is not None:
        if not half_width > 0:
            raise FamilyConfigurationError(f"half_width must be positive, got {half_width!r}.")
        center = np.asarray(center, dtype=float)
        lower, upper = np.maximum(lower, center - half_width), np.minimum(upper, center + half_width)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise FamilyConfigurationError(f"Λ of {f.id} is unbounded; pass an explicit theta_domain.")
    return Box(lower, upper, ordered=f.ordered_pair())


def _fit_ball(domain: Optional[ThetaDomain], dim: int) -> Optional[ThetaDomain]:
    if isinstance(domain, Ball) and domain.dim == 1 and dim > 1:
        return Ball(np.full(dim, domain.center[0]), domain.radius)
    return domain


def bounded_elicitable(
    functional: Functional,
    null,
    theta_domain: Optional[ThetaDomain] = None,
    scale: Union[float, str] = 1.0,
    margin: float = DEFAULT_MARGIN,
    half_width: Optional[float] = None,
) -> FamilySpec:
    """∏(1 + c·(s(λ₀, X_i) − s(λ, X_i))), θ = λ ∈ Θ ⊆ Λ. ``scale="auto"`` fits c.

    Without ``theta_domain``, Θ is Λ, or the box λ₀ ± ``half_width`` inside Λ.
    A smaller Θ keeps the worst score gap small and so admits a larger c.
    """
    null = tuple(np.atleast_1d(np.asarray(null, dtype=float)))
    domain = _fit_ball(theta_domain, functional.param_dim) or _lambda_box(functional, null, half_width)
    if scale == "auto":
        scale = admissible_scale(worst_score_gap(functional, null, domain), margin)
        logger.info("Auto score scale for %s at λ₀=%s: %.6g", functional.id, list(null), scale)
    return FamilySpec(FamilyKind.BOUNDED_ELICITABLE, functional, null, domain, scale=float(scale), margin=margin)


def bounded_identifiable(
    functional: Functional,
    null,
    theta_domain: Optional[ThetaDomain] = None,
    margin: float = DEFAULT_MARGIN,
) -> FamilySpec:
    """∏(1 + ⟨η, m(λ₀, X_i)⟩). Default Θ is the ball of radius (1 − margin)/C."""
    null = tuple(np.atleast_1d(np.asarray(null, dtype=float)))
    domain = _fit_ball(theta_domain, functional.param_dim)
    if domain is None:
        bound = functional.ident_bound(np.asarray(null))
        if bound is None:
            raise FamilyConfigurationError("Bounded identifiable families need a declared data range.")
        domain = Ball(np.zeros(functional.param_dim), (1.0 - margin) / max(bound, 1e-12))
    return FamilySpec(FamilyKind.BOUNDED_IDENTIFIABLE, functional, null, domain, margin=margin)


def _sub_psi(
    kind: FamilyKind,
    functional: Functional,
    null,
    psi: PsiSpec,
    mode: Union[SubPsiMode, str],
    theta_domain: Optional[ThetaDomain],
    variance: Optional[VarianceProcess],
    fixed_u: Optional[float],
    radius: float,
    u_cap: Optional[float],
) -> FamilySpec:
    null = tuple(np.atleast_1d(np.asarray(null, dtype=float)))
    mode = SubPsiMode(mode)
    k = functional.param_dim
    anchor = np.asarray(null) if kind is FamilyKind.SUB_PSI_ELICITABLE else np.zeros(k)
    domain = _fit_ball(theta_domain, k)
    if domain is None:
        if mode is SubPsiMode.SCALED:
            reach = min(radius, 0.5 * psi.u_max)
            if kind is FamilyKind.SUB_PSI_ELICITABLE:
                lower, upper = functional.domain_bounds()
                half = reach / np.sqrt(k)
                domain = Box(np.maximum(anchor - half, lower), np.minimum(anchor + half, upper),
                             ordered=functional.ordered_pair())
            else:
                domain = Ball(anchor, reach)
        else:
            if kind is FamilyKind.SUB_PSI_ELICITABLE and np.all(np.isfinite(functional.domain_bounds()[1])):
                domain = _lambda_box(functional)
            else:
                domain = Ball(anchor, radius)
    if mode is SubPsiMode.JOINT and not isinstance(domain, ProductDomain):
        cap = u_cap if u_cap is not None else min(1.0, 0.5 * psi.u_max)
        domain = ProductDomain(domain, 0.0, cap)
    return FamilySpec(
        kind, functional, null, domain,
        psi=psi, variance=variance or VarianceProcess.unit(), mode=mode, fixed_u=fixed_u,
    )


def sub_psi_elicitable(
    functional: Functional,
    null,
    psi: PsiSpec,
    mode: Union[SubPsiMode, str] = SubPsiMode.JOINT,
    theta_domain: Optional[ThetaDomain] = None,
    variance: Optional[VarianceProcess] = None,
    fixed_u: Optional[float] = None,
    radius: float = DEFAULT_RADIUS,
    u_cap: Optional[float] = None,
) -> FamilySpec:
    return _sub_psi(FamilyKind.SUB_PSI_ELICITABLE, functional, null, psi, mode, theta_domain, variance, fixed_u, radius, u_cap)


def sub_psi_identifiable(
    functional: Functional,
    null,
    psi: PsiSpec,
    mode: Union[SubPsiMode, str] = SubPsiMode.JOINT,
    theta_domain: Optional[ThetaDomain] = None,
    variance: Optional[VarianceProcess] = None,
    fixed_u: Optional[float] = None,
    radius: float = DEFAULT_RADIUS,
    u_cap: Optional[float] = None,
) -> FamilySpec:
    return _sub_psi(FamilyKind.SUB_PSI_IDENTIFIABLE, functional, null, psi, mode, theta_domain, variance, fixed_u, radius, u_cap)


def make_family(kind: Union[FamilyKind, str], functional: Functional, null, **options) -> FamilySpec:
    """Build a family from its kind name, e.g. ``bounded_identifiable``."""
    try:
        kind = FamilyKind(str(getattr(kind, "value", kind)).lower())
    except ValueError:
        names = ", ".join(k.value for k in FamilyKind)
        raise FamilyConfigurationError(f"Unknown family kind '{kind}'. Use one of: {names}.") from None
    if kind is FamilyKind.BOUNDED_ELICITABLE:
        return bounded_elicitable(functional, null, **options)
    elif kind is FamilyKind.BOUNDED_IDENTIFIABLE:
        return bounded_identifiable(functional, null, **options)
    elif kind is FamilyKind.SUB_PSI_ELICITABLE:
        return sub_psi_elicitable(functional, null, **options)
    return sub_psi_identifiable(functional, null, **options)


# -- module-level operations --------------------------------------------------

def log_increment(fam: FamilySpec, theta, x, step: int = 1) -> float:
    theta = _require_in_domain(fam, theta)
    feats = fam.features(as_observation(x, fam.functional.obs_dim).reshape(1, -1), start=step)
    return float(fam.increments(theta, feats)[0])


def log_wealth_path(fam: FamilySpec, theta, xs) -> np.ndarray:
    """log L_t^θ for t = 1..n, accumulated in log space."""
    theta = _require_in_domain(fam, theta)
    feats = fam.features(xs, start=1)
    return np.cumsum(fam.increments(theta, feats))


def _require_in_domain(fam: FamilySpec, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).reshape(-1)
    if theta.size != fam.dim or not fam.theta_domain.contains(theta):
        raise DomainError(f"θ={theta.tolist()} is outside {fam.theta_domain!r}.")
    return theta


def certify_concavity(fam: FamilySpec) -> ConcavityCertificate:
    """Static concavity certificate for θ ↦ log L_t^θ."""
    f = fam.functional
    if fam.kind is FamilyKind.BOUNDED_IDENTIFIABLE:
        return ConcavityCertificate(True, "log of an affine function of η")
    if fam.kind is FamilyKind.BOUNDED_ELICITABLE:
        if f.convex_score:
            return ConcavityCertificate(True, f"log of 1 + gap with {f.id} score convex in λ")
        return ConcavityCertificate(False, f"{f.id} score is not convex in λ")
    if fam.mode is SubPsiMode.JOINT:
        return ConcavityCertificate(False, "joint (base, u) parametrization has a bilinear term u·gap")
    if fam.is_elicitable and not f.convex_score:
        return ConcavityCertificate(False, f"{f.id} score is not convex in λ")
    if fam.mode is SubPsiMode.FIXED_U:
        return ConcavityCertificate(True, "fixed u: affine in the gap minus a constant")
    k = fam.psi.quadratic_coefficient
    modulus = 0.0
    if k is not None and fam.variance.rule == "unit":
        modulus = float(k)
    return ConcavityCertificate(True, "gap minus v·ψ(‖θ − anchor‖) with ψ convex nondecreasing", modulus)


@dataclass
class DominationReport:
    max_violation: float
    violations: int
    elicitable_path: np.ndarray
    identifiable_path: np.ndarray


def domination_check(fam_e: FamilySpec, fam_i: FamilySpec, lam, xs, tol: float = 1e-9) -> DominationReport:
    """Compare log L^{elic, λ} with log L^{ident, η} for the linearized bet η."""
    if fam_e.kind is not FamilyKind.BOUNDED_ELICITABLE or fam_i.kind is not FamilyKind.BOUNDED_IDENTIFIABLE:
        raise FamilyConfigurationError("domination_check needs a bounded elicitable and a bounded identifiable family.")
    f = fam_e.functional
    if f.id != fam_i.functional.id or not np.allclose(fam_e.lam0, fam_i.lam0):
        raise FamilyConfigurationError("Both families must share the functional and the null value.")
    if not f.convex_score or f.ident_sign is None:
        raise FamilyConfigurationError(f"{f.id} needs a convex score whose subgradient is its identification function.")
    lam = _require_in_domain(fam_e, lam)
    eta = fam_e.scale * f.ident_sign * (fam_e.lam0 - lam)
    elic = np.cumsum(fam_e.increments(lam, fam_e.features(xs)))
    ident = np.cumsum(fam_i.increments(eta, fam_i.features(xs)))
    gaps = elic - ident
    return DominationReport(float(max(gaps.max(initial=0.0), 0.0)), int(np.sum(gaps > tol)), elic, ident)

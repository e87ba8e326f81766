"""Convex parameter domains Θ with exact Euclidean projections."""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import FamilyConfigurationError

MAX_GRID_POINTS = 250_000


class ThetaDomain(ABC):
    """A closed convex set of bets."""

    shape: str = ""

    @property
    @abstractmethod
    def dim(self) -> int:
        raise NotImplementedError

    @property
    @abstractmethod
    def diam(self) -> float:
        raise NotImplementedError

    @abstractmethod
    def contains(self, theta, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    @abstractmethod
    def project(self, theta) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def grid(self, n: int) -> np.ndarray:
        """Points of Θ on a regular grid with n points per axis, shape (m, dim)."""
        raise NotImplementedError

    @abstractmethod
    def support_min(self, vec):
        """min over θ ∈ Θ of ⟨θ, vec⟩ (exact, or a lower bound for ordered boxes).

        Accepts one vector or an (n, dim) array of rows.
        """
        raise NotImplementedError

    def _rows(self, vec) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(vec, dtype=float))
        if rows.shape[1] != self.dim:
            raise FamilyConfigurationError(f"Vectors have dimension {rows.shape[1]}, domain has {self.dim}.")
        return rows

    def _check(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).reshape(-1)
        if theta.size != self.dim:
            raise FamilyConfigurationError(f"θ has dimension {theta.size}, domain has {self.dim}.")
        return theta


class Box(ThetaDomain):
    """Coordinate box, optionally cut by the half-space θ_j ≤ θ_i for ordered=(i, j)."""

    shape = "box"

    def __init__(self, lower: Sequence[float], upper: Sequence[float], ordered: Optional[Tuple[int, int]] = None) -> None:
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise FamilyConfigurationError(f"Invalid box bounds {self.lower.tolist()} / {self.upper.tolist()}.")
        self.ordered = tuple(ordered) if ordered is not None else None
        if self.ordered is not None:
            i, j = self.ordered
            if self.lower[j] > self.upper[i]:
                raise FamilyConfigurationError("Ordered box is empty.")

    def __repr__(self) -> str:
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()}, ordered={self.ordered})"

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def diam(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, theta, tol: float = 1e-9) -> bool:
        theta = self._check(theta)
        if np.any(theta < self.lower - tol) or np.any(theta > self.upper + tol):
            return False
        if self.ordered is not None and theta[self.ordered[1]] > theta[self.ordered[0]] + tol:
            return False
        return True

    def project(self, theta) -> np.ndarray:
        theta = self._check(theta)
        out = np.clip(theta, self.lower, self.upper)
        if self.ordered is None:
            return out
        i, j = self.ordered
        if out[j] <= out[i]:
            return out
        # Projection lands on the face θ_i = θ_j; other coordinates stay clipped.
        mid = 0.5 * (theta[i] + theta[j])
        lo = max(self.lower[i], self.lower[j])
        hi = min(self.upper[i], self.upper[j])
        out[i] = out[j] = float(np.clip(mid, lo, hi))
        return out

    def grid(self, n: int) -> np.ndarray:
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise FamilyConfigurationError("Cannot grid an unbounded box.")
        if n ** self.dim > MAX_GRID_POINTS:
            raise FamilyConfigurationError(f"Grid of {n}^{self.dim} points is too large.")
        axes = [np.linspace(lo, hi, n) if n > 1 else np.array([(lo + hi) / 2]) for lo, hi in zip(self.lower, self.upper)]
        points = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, self.dim)
        if self.ordered is not None:
            i, j = self.ordered
            points = points[points[:, j] <= points[:, i] + 1e-12]
        return np.unique(points, axis=0)

    def support_min(self, vec):
        rows = self._rows(vec)
        with np.errstate(invalid="ignore"):
            terms = np.minimum(rows * self.lower, rows * self.upper)
        out = np.sum(np.where(rows == 0.0, 0.0, terms), axis=1)
        return float(out[0]) if np.ndim(vec) == 1 else out

    def vertices(self) -> np.ndarray:
        corners = np.array(list(itertools.product(*zip(self.lower, self.upper))), dtype=float)
        if self.ordered is not None:
            corners = np.array([self.project(c) for c in corners])
        return corners


class Ball(ThetaDomain):
    """Euclidean ball {θ : ‖θ − center‖ ≤ radius}."""

    shape = "ball"

    def __init__(self, center: Sequence[float], radius: float) -> None:
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        if not (self.radius >= 0 and np.isfinite(self.radius)):
            raise FamilyConfigurationError(f"Ball radius must be finite and nonnegative, got {radius!r}.")

    def __repr__(self) -> str:
        return f"Ball(center={self.center.tolist()}, radius={self.radius:g})"

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    def contains(self, theta, tol: float = 1e-9) -> bool:
        return float(np.linalg.norm(self._check(theta) - self.center)) <= self.radius + tol

    def project(self, theta) -> np.ndarray:
        theta = self._check(theta)
        offset = theta - self.center
        norm = float(np.linalg.norm(offset))
        if norm <= self.radius:
            return theta.copy()
        return self.center + offset * (self.radius / norm)

    def grid(self, n: int) -> np.ndarray:
        box = Box(self.center - self.radius, self.center + self.radius)
        points = box.grid(n)
        keep = np.linalg.norm(points - self.center, axis=1) <= self.radius + 1e-12
        points = points[keep]
        return points if points.size else self.center.reshape(1, -1)

    def support_min(self, vec):
        rows = self._rows(vec)
        out = rows @ self.center - self.radius * np.linalg.norm(rows, axis=1)
        return float(out[0]) if np.ndim(vec) == 1 else out

    def vertices(self) -> np.ndarray:
        eye = np.eye(self.dim) * self.radius
        return np.vstack([self.center + eye, self.center - eye])


class ProductDomain(ThetaDomain):
    """Base domain × [u_lo, u_cap] for jointly parametrized sub-ψ families."""

    shape = "product"

    def __init__(self, base: ThetaDomain, u_lo: float, u_cap: float) -> None:
        if isinstance(base, ProductDomain):
            raise FamilyConfigurationError("Product domains cannot be nested.")
        if not (0.0 <= u_lo <= u_cap) or not np.isfinite(u_cap):
            raise FamilyConfigurationError(f"Need 0 ≤ u_lo ≤ u_cap < ∞, got [{u_lo!r}, {u_cap!r}].")
        self.base = base
        self.u_lo = float(u_lo)
        self.u_cap = float(u_cap)

    def __repr__(self) -> str:
        return f"ProductDomain({self.base!r} × [{self.u_lo:g}, {self.u_cap:g}])"

    @property
    def dim(self) -> int:
        return self.base.dim + 1

    @property
    def diam(self) -> float:
        return float(np.hypot(self.base.diam, self.u_cap - self.u_lo))

    def contains(self, theta, tol: float = 1e-9) -> bool:
        theta = self._check(theta)
        return self.base.contains(theta[:-1], tol) and self.u_lo - tol <= theta[-1] <= self.u_cap + tol

    def project(self, theta) -> np.ndarray:
        theta = self._check(theta)
        return np.append(self.base.project(theta[:-1]), np.clip(theta[-1], self.u_lo, self.u_cap))

    def grid(self, n: int) -> np.ndarray:
        base = self.base.grid(n)
        us = np.linspace(self.u_lo, self.u_cap, n) if n > 1 else np.array([self.u_lo])
        if base.shape[0] * us.size > MAX_GRID_POINTS:
            raise FamilyConfigurationError("Product grid is too large.")
        return np.array([np.append(b, u) for b in base for u in us])

    def support_min(self, vec):
        rows = self._rows(vec)
        out = self.base.support_min(rows[:, :-1]) + np.minimum(rows[:, -1] * self.u_lo, rows[:, -1] * self.u_cap)
        return float(out[0]) if np.ndim(vec) == 1 else out


def get_domain(text: str) -> ThetaDomain:
    """Parse ``ball:R``, ``ball:R@c1,c2`` or ``box:lo,hi;lo,hi``."""
    kind, _, body = str(text).strip().lower().partition(":")
    try:
        if kind == "ball":
            radius, _, center = body.partition("@")
            return Ball([float(c) for c in center.split(",")] if center else [0.0], float(radius))
        elif kind == "box":
            pairs = [tuple(float(v) for v in part.split(",")) for part in body.split(";")]
            if any(len(p) != 2 for p in pairs):
                raise ValueError(body)
            return Box([p[0] for p in pairs], [p[1] for p in pairs])
    except ValueError as exc:
        raise FamilyConfigurationError(f"Malformed domain '{text}'.") from exc
    raise FamilyConfigurationError(f"Unknown domain '{text}'. Use 'ball:R[@center]' or 'box:lo,hi[;lo,hi]'.")

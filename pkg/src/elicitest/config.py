"""Run configuration: dataclass defaults < flat ``key = value`` file < command-line flags."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, Optional, Tuple

from .betting.strategies import STRATEGY_NAMES
from .core.domains import get_domain
from .core.exceptions import ElicitestError
from .core.families import FamilyKind, FamilySpec, make_family
from .core.functionals import Functional, get_functional
from .core.tail_models import get_psi, get_variance

logger = logging.getLogger(__name__)

# Keys whose config-file spelling differs from the field name.
KEY_ALIASES = {"continue": "continue_after_rejection", "data-range": "data_range", "gradient-bound": "gradient_bound", "fixed-u": "fixed_u"}


class ConfigError(ElicitestError, ValueError):
    """Raised when a run configuration or input file is invalid."""


class DataFormatError(ConfigError):
    """Raised when a CSV observation row cannot be parsed."""

    def __init__(self, line: int, message: str) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class RunConfig:
    preset: Optional[str] = None
    functional: Optional[str] = None
    data_range: Optional[str] = None
    null: Optional[str] = None
    family: Optional[str] = None
    psi: Optional[str] = None
    mode: str = "scaled"
    variance: str = "unit"
    fixed_u: Optional[float] = None
    domain: Optional[str] = None
    scale: str = "1.0"
    strategy: Optional[str] = None
    gradient_bound: Optional[float] = None
    alpha: float = 0.05
    data: Optional[str] = None
    horizon: Optional[int] = None
    seed: int = 0
    grid: Optional[str] = None
    out: str = "runs"
    continue_after_rejection: bool = False
    replications: int = 200
    workers: int = 1
    horizons: Optional[str] = None
    checkpoints: Optional[str] = None
    coverage: bool = False

    # -- construction ---------------------------------------------------
    @classmethod
    def from_sources(cls, file_values: Optional[Dict[str, str]] = None, cli_values: Optional[Dict[str, object]] = None) -> "RunConfig":
        """Merge with precedence CLI > file > defaults and coerce types."""
        known = {f.name: f for f in fields(cls)}
        merged: Dict[str, object] = {}
        for source in (file_values or {}, cli_values or {}):
            for key, value in source.items():
                name = KEY_ALIASES.get(key, key.replace("-", "_"))
                if name not in known:
                    raise ConfigError(f"Unknown configuration key '{key}'. Use one of: {', '.join(sorted(known))}.")
                if value is None:
                    continue
                merged[name] = value
        config = cls()
        for name, value in merged.items():
            setattr(config, name, _coerce(name, value, getattr(cls, name, None), known[name].type))
        config.validate()
        return config

    def resolved(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        """Flat key = value rendering that ``load_config_file`` reads back."""
        lines = []
        for key, value in self.resolved().items():
            if value is None:
                continue
            lines.append(f"{key} = {str(value).lower() if isinstance(value, bool) else value}")
        return "\n".join(lines) + "\n"

    # -- validation -----------------------------------------------------
    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}.")
        if self.strategy is not None and self.strategy.lower() not in STRATEGY_NAMES:
            raise ConfigError(f"Unknown strategy '{self.strategy}'. Use one of: {', '.join(STRATEGY_NAMES)}.")
        if self.family is not None and self.family.lower() not in {k.value for k in FamilyKind}:
            names = ", ".join(k.value for k in FamilyKind)
            raise ConfigError(f"Unknown family kind '{self.family}'. Use one of: {names}.")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {self.horizon}.")
        if self.replications < 1:
            raise ConfigError(f"replications must be at least 1, got {self.replications}.")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}.")
        if self.preset is None and self.functional is None:
            raise ConfigError("Give either a preset or a functional (with a null value and a family kind).")
        if self.preset is None and self.family is None:
            raise ConfigError("A custom run needs --family.")
        if self.family and self.family.lower().startswith("sub_psi") and not self.psi:
            raise ConfigError("Sub-ψ families need --psi, e.g. gaussian:1.")
        if self.variance.lower() not in ("unit", "covariate"):
            raise ConfigError(f"Unknown variance process '{self.variance}'. Use unit or covariate.")

    # -- typed views ----------------------------------------------------
    @property
    def null_value(self) -> Optional[Tuple[float, ...]]:
        return _floats("null", self.null) if self.null is not None else None

    @property
    def range_value(self) -> Optional[Tuple[float, float]]:
        if self.data_range is None:
            return None
        values = _floats("data_range", self.data_range)
        if len(values) != 2 or values[0] >= values[1]:
            raise ConfigError(f"data_range must be 'lo,hi' with lo < hi, got '{self.data_range}'.")
        return values[0], values[1]

    def grid_spec(self, dim: int) -> Tuple[Optional[Tuple[float, ...]], Optional[Tuple[float, ...]], Optional[int]]:
        """Parse ``points`` or ``lo,hi,points[;lo,hi,points]`` into (lower, upper, points)."""
        if self.grid is None:
            return None, None, None
        parts = [p for p in self.grid.split(";") if p.strip()]
        try:
            if len(parts) == 1 and "," not in parts[0]:
                return None, None, int(parts[0])
            triples = [tuple(v.strip() for v in part.split(",")) for part in parts]
            if len(triples) != dim or any(len(t) != 3 for t in triples):
                raise ValueError(self.grid)
            points = {int(t[2]) for t in triples}
            if len(points) != 1:
                raise ValueError(self.grid)
            return tuple(float(t[0]) for t in triples), tuple(float(t[1]) for t in triples), points.pop()
        except ValueError as exc:
            raise ConfigError(f"Malformed grid '{self.grid}': use 'points' or 'lo,hi,points' per axis.") from exc

    def int_list(self, name: str) -> Tuple[int, ...]:
        text = getattr(self, name)
        if not text:
            return ()
        try:
            return tuple(int(v) for v in str(text).split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"{name} must be a comma-separated list of integers, got '{text}'.") from exc

    # -- engine objects -------------------------------------------------
    def build_functional(self) -> Functional:
        return get_functional(self.functional, self.range_value)

    def family_options(self) -> dict:
        kind = FamilyKind(self.family.lower())
        options: dict = {}
        if self.domain:
            options["theta_domain"] = get_domain(self.domain)
        if kind is FamilyKind.BOUNDED_ELICITABLE:
            options["scale"] = "auto" if self.scale == "auto" else _float("scale", self.scale)
        elif kind in (FamilyKind.SUB_PSI_ELICITABLE, FamilyKind.SUB_PSI_IDENTIFIABLE):
            options["psi"] = get_psi(self.psi)
            options["mode"] = self.mode
            options["variance"] = get_variance(self.variance)
            if self.mode == "fixed_u":
                options["fixed_u"] = 0.5 if self.fixed_u is None else self.fixed_u
        return options

    def build_family(self, null=None) -> FamilySpec:
        """Family at ``null`` (default: the configured null) for a custom run."""
        return make_family(self.family, self.build_functional(), self.null_value if null is None else null,
                           **self.family_options())

    def strategy_options(self) -> dict:
        return {"gradient_bound": self.gradient_bound} if self.gradient_bound is not None else {}


def _float(name: str, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number, got {value!r}.") from exc


def _floats(name: str, text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{name} must be comma-separated numbers, got '{text}'.") from exc


def _coerce(name: str, value, default, annotation: str):
    if isinstance(default, bool) or "bool" in str(annotation):
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name} must be true or false, got {value!r}.")
    if "float" in str(annotation):
        return _float(name, value)
    if "int" in str(annotation):
        try:
            return int(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name} must be an integer, got {value!r}.") from exc
    return str(value).strip()


def parse_config_text(text: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Config line {number}: expected 'key = value', got '{raw.strip()}'.")
        values[key.strip().lower()] = value.strip()
    return values


def load_config_file(path: str) -> Dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}") from exc
    return parse_config_text(text)

"""Experiment configuration files: YAML validated by strict pydantic models.

Unknown keys are rejected at every level.  Each config names one command
and carries exactly the block for that command.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .geometry import DiscreteMeasure
from .symbol import SymbolFunction, log_power_outer_symbol, step_outer_symbol

__all__ = [
    "COMMANDS",
    "ConfigError",
    "SymbolConfig",
    "GridConfig",
    "MeasureConfig",
    "FamilyConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]

COMMANDS = ("eval", "weight-sweep", "bernstein", "embed", "levelset", "riesz")
BLOCK_OF = {c: c.replace("-", "_") for c in COMMANDS}


class ConfigError(ValueError):
    """The configuration file is unreadable or fails validation."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


Point = tuple[float, float]


class SymbolConfig(_Strict):
    """Factorization data or a named preset.

    zeros are [re, im] or [re, im, multiplicity] or [re, im, multiplicity, phase];
    atoms are [t, mass]; pieces are [alpha, beta, level] with YAML .inf allowed
    on one side.
    """

    name: str = ""
    preset: Optional[Literal["zero", "step_outer", "log_power_outer"]] = None
    eps: Optional[float] = None
    zeros: list[list[float]] = Field(default_factory=list)
    exp_mass: float = 0.0
    atoms: list[tuple[float, float]] = Field(default_factory=list)
    pieces: list[tuple[float, float, float]] = Field(default_factory=list)
    cls: bool = False

    @model_validator(mode="after")
    def _preset_alone(self):
        factored = bool(self.zeros or self.atoms or self.pieces or self.exp_mass)
        if self.preset is not None and factored:
            raise ValueError("a preset symbol takes no factorization data")
        if self.preset == "step_outer":
            if self.eps is None or not 0 < self.eps < 1:
                raise ValueError("step_outer needs eps in (0, 1)")
        elif self.eps is not None:
            raise ValueError("eps is only used by the step_outer preset")
        for z in self.zeros:
            if not 2 <= len(z) <= 4:
                raise ValueError("a zero is [re, im], [re, im, mult] or [re, im, mult, phase]")
        return self

    def build(self) -> SymbolFunction:
        if self.preset == "zero":
            return SymbolFunction.zero(self.name or "zero")
        if self.preset == "step_outer":
            return step_outer_symbol(self.eps, name=self.name or f"step_outer({self.eps:g})")
        if self.preset == "log_power_outer":
            return log_power_outer_symbol(name=self.name or "log_power_outer")
        zeros = []
        for z in self.zeros:
            rest = [int(z[2])] if len(z) > 2 else []
            if len(z) > 3:
                rest.append(z[3])
            zeros.append((complex(z[0], z[1]), *rest))
        return SymbolFunction.factored(
            zeros, self.exp_mass, self.atoms, self.pieces, name=self.name, cls_flag=self.cls
        )

    @property
    def label(self) -> str:
        return self.name or self.preset or "symbol"


class GridConfig(_Strict):
    """Points listed directly plus a tensor grid x by y."""

    points: list[Point] = Field(default_factory=list)
    x: list[float] = Field(default_factory=list)
    y: list[float] = Field(default_factory=list)
    x_linspace: Optional[tuple[float, float, int]] = None
    y_geomspace: Optional[tuple[float, float, int]] = None

    @model_validator(mode="after")
    def _nonempty(self):
        if self.x_linspace is not None and self.x_linspace[2] < 1:
            raise ValueError("x_linspace needs a positive count")
        if self.y_geomspace is not None:
            lo, hi, k = self.y_geomspace
            if not (0 < lo <= hi and k >= 1):
                raise ValueError("y_geomspace needs 0 < lo <= hi and a positive count")
        if not self.points and not (self.xs().size and self.ys().size):
            raise ValueError("grid is empty")
        return self

    def xs(self) -> np.ndarray:
        parts = [np.asarray(self.x, dtype=float)]
        if self.x_linspace is not None:
            a, b, k = self.x_linspace
            parts.append(np.linspace(a, b, int(k)))
        return np.concatenate(parts)

    def ys(self) -> np.ndarray:
        parts = [np.asarray(self.y, dtype=float)]
        if self.y_geomspace is not None:
            a, b, k = self.y_geomspace
            parts.append(np.geomspace(a, b, int(k)))
        return np.concatenate(parts)

    def complex_points(self) -> list[complex]:
        """Tensor points (x outer, y inner) followed by the listed points."""
        out = [complex(x, y) for x in self.xs() for y in self.ys()]
        out += [complex(a, b) for a, b in self.points]
        return out


class MeasureConfig(_Strict):
    """masses are [re, im, mass]; segments are [re1, im1, re2, im2, density]."""

    name: str = "mu"
    masses: list[tuple[float, float, float]] = Field(default_factory=list)
    segments: list[tuple[float, float, float, float, float]] = Field(default_factory=list)

    def build(self) -> DiscreteMeasure:
        return DiscreteMeasure.from_lists(masses=self.masses, segments=self.segments, name=self.name)


class FamilyConfig(_Strict):
    size: int = Field(32, ge=1)
    seed: Optional[int] = None
    box: tuple[float, float, float, float] = (-3.0, 3.0, 0.1, 3.0)
    terms: int = Field(3, ge=1)
    doubling: bool = False

    @field_validator("box")
    @classmethod
    def _box(cls, v):
        if not (v[0] < v[1] and 0 < v[2] <= v[3]):
            raise ValueError("box must satisfy x0 < x1 and 0 < y0 <= y1")
        return v


CheckName = Literal["reproducing", "gram", "decomposition", "representation", "recurrence", "boundary_derivative"]


class EvalBlock(_Strict):
    points: list[Point] = Field(default_factory=list)
    derivative_order: int = Field(1, ge=0, le=4)
    checks: list[CheckName] = Field(default_factory=list)
    samples: int = Field(20, ge=1)
    orders: list[int] = Field(default_factory=lambda: [1, 2])
    box: tuple[float, float, float, float] = (-3.0, 3.0, 0.1, 3.0)
    derivative_grid: Optional[GridConfig] = None
    tolerances: dict[CheckName, float] = Field(default_factory=dict)


class WeightSweepBlock(_Strict):
    p: list[float] = Field(min_length=1)
    n: list[int] = Field(default_factory=lambda: [1])
    grid: GridConfig
    lower_bound: bool = False
    refine: bool = False
    refine_tolerance: float = 0.2
    expect_increasing_ratio: bool = False

    @field_validator("p")
    @classmethod
    def _p(cls, v):
        for p in v:
            if not 1 < p <= 2:
                raise ValueError(f"p must lie in (1, 2], got {p}")
        return v

    @field_validator("n")
    @classmethod
    def _n(cls, v):
        if any(k < 1 for k in v):
            raise ValueError("n must be positive")
        return v


class BernsteinBlock(_Strict):
    p: float = 1.5
    n: int = Field(1, ge=1, le=2)
    mode: Literal["measure", "line"] = "measure"
    measure: Optional[MeasureConfig] = None
    family: FamilyConfig = FamilyConfig()
    weighted: bool = True
    bound: Optional[float] = None
    eps: Optional[float] = None
    K: Optional[float] = None
    stability: float = 0.1

    @model_validator(mode="after")
    def _measure(self):
        if self.mode == "measure" and self.measure is None:
            raise ValueError("measure mode needs a measure")
        if not 1 < self.p <= 2:
            raise ValueError(f"p must lie in (1, 2], got {self.p}")
        return self


class EmbedBlock(_Strict):
    measure: MeasureConfig
    grid: GridConfig
    eps: Optional[float] = None
    K: Optional[float] = None
    family: FamilyConfig = FamilyConfig()
    stability: float = 0.1
    brute_force: bool = False
    expect: Optional[Literal["restricted_only"]] = None

    @model_validator(mode="after")
    def _pair(self):
        if (self.eps is None) != (self.K is None):
            raise ValueError("eps and K go together")
        if self.eps is not None and not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        return self


class LevelsetBlock(_Strict):
    eps: float = Field(gt=0, lt=1)
    x: list[float] = Field(default_factory=list)
    x_linspace: Optional[tuple[float, float, int]] = None

    def xs(self) -> np.ndarray:
        parts = [np.asarray(self.x, dtype=float)]
        if self.x_linspace is not None:
            a, b, k = self.x_linspace
            parts.append(np.linspace(a, b, int(k)))
        out = np.concatenate(parts)
        if out.size == 0:
            raise ValueError("no x values")
        return out


class RieszBlock(_Strict):
    nodes: list[Point] = Field(default_factory=list)
    geometric: Optional[tuple[float, float, int]] = None
    p: float = 1.5
    gamma: float = 0.4
    eps: float = 0.05
    trials: int = Field(16, ge=1)
    lam_threshold: float = 0.0
    condition_factor: float = 2.0
    collision_distance: float = 1e-3
    collision_floor: float = 1e3
    outside_factor: float = 4.0

    @field_validator("gamma")
    @classmethod
    def _gamma(cls, v):
        if not v > 1.0 / 3.0:
            raise ValueError(f"gamma must satisfy gamma > 1/3, got {v}")
        return v

    @field_validator("p")
    @classmethod
    def _p(cls, v):
        if not 1 < v < 2:
            raise ValueError(f"p must lie in (1, 2), got {v}")
        return v

    @model_validator(mode="after")
    def _nodes(self):
        if bool(self.nodes) == (self.geometric is not None):
            raise ValueError("give either nodes or geometric [y0, ratio, count]")
        if self.geometric is not None:
            y0, r, k = self.geometric
            if not (y0 > 0 and r > 0 and k >= 1):
                raise ValueError("geometric needs y0 > 0, ratio > 0, count >= 1")
        if any(y <= 0 for _, y in self.nodes):
            raise ValueError("nodes must lie in the open upper half-plane")
        return self

    def node_list(self) -> list[complex]:
        if self.geometric is not None:
            y0, r, k = self.geometric
            return [complex(0.0, y0 * r**j) for j in range(int(k))]
        return [complex(a, b) for a, b in self.nodes]


class ExperimentConfig(_Strict):
    command: Optional[Literal["eval", "weight-sweep", "bernstein", "embed", "levelset", "riesz"]] = None
    seed: int = 0
    rel_tol: float = Field(1e-8, gt=0, lt=1)
    symbol: Optional[SymbolConfig] = None
    symbols: list[SymbolConfig] = Field(default_factory=list)
    eval: Optional[EvalBlock] = None
    weight_sweep: Optional[WeightSweepBlock] = None
    bernstein: Optional[BernsteinBlock] = None
    embed: Optional[EmbedBlock] = None
    levelset: Optional[LevelsetBlock] = None
    riesz: Optional[RieszBlock] = None

    @model_validator(mode="after")
    def _shape(self):
        if (self.symbol is None) == (not self.symbols):
            raise ValueError("give exactly one of symbol or symbols")
        present = [c for c in COMMANDS if getattr(self, BLOCK_OF[c]) is not None]
        if len(present) != 1:
            raise ValueError(f"exactly one command block is required, found {present or 'none'}")
        if self.command is not None and present[0] != self.command:
            raise ValueError(f"command {self.command} does not match block {BLOCK_OF[present[0]]}")
        return self

    @property
    def resolved_command(self) -> str:
        return next(c for c in COMMANDS if getattr(self, BLOCK_OF[c]) is not None)

    @property
    def block(self):
        return getattr(self, BLOCK_OF[self.resolved_command])

    def symbol_configs(self) -> list[SymbolConfig]:
        return [self.symbol] if self.symbol is not None else list(self.symbols)


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_describe(err)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"invalid YAML in {path}: {err}") from None
    return parse_config(data)


def finite_or_none(v: float | None) -> str:
    if v is None:
        return "none"
    return "inf" if math.isinf(v) else f"{v:.17g}"

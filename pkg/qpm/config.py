"""Run configuration: one JSON document per run, every field also settable from flags."""

import logging
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qpm.cascade import scenario_presets
from qpm.lattice import StructureSpec

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """A run configuration that validates field by field but cannot be executed."""


class Command(str, Enum):
    spectrum = "spectrum"
    joint = "joint"
    design = "design"
    verify = "verify"


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"
    svg = "svg"


def _ordered(window: tuple[float, float], name: str, strict: bool = True) -> None:
    lo, hi = window
    if hi < lo or (strict and hi == lo):
        raise ValueError(f"{name} window must be increasing, got {lo}:{hi}")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class SpectrumSection(_Section):
    x_min: float = 0.0
    x_max: float = 7.0
    samples: int | None = Field(default=None, ge=2, description="None picks the density automatically")
    uniform: bool = Field(default=False, description="plot the single-block grating Y_N instead")
    inset: tuple[float, float] | None = Field(default=None, description="x window of the SVG inset")

    @model_validator(mode="after")
    def _check(self) -> "SpectrumSection":
        _ordered((self.x_min, self.x_max), "spectrum x")
        if self.inset is not None:
            _ordered(self.inset, "inset")
        return self


class JointSection(_Section):
    x1: tuple[float, float] = (1.0, 2.0)
    x2: tuple[float, float] = (1.0, 2.0)
    samples: tuple[int, int] = (401, 401)
    extrema: int = Field(default=4, ge=1)
    spot_check_fraction: float = Field(default=0.01, gt=0, le=1)

    @model_validator(mode="after")
    def _check(self) -> "JointSection":
        for window, count, name in ((self.x1, self.samples[0], "x1"), (self.x2, self.samples[1], "x2")):
            if count < 1:
                raise ValueError(f"{name} samples must be >= 1, got {count}")
            _ordered(window, name, strict=count > 1)
        return self


class DesignSection(_Section):
    scenario: str | None = Field(default="triplet", description="preset name; ignored when dk1 and dk2 are set")
    dk1: float | None = None
    dk2: float | None = None
    l_range: tuple[float, float] = (5.0, 15.0)
    n_range: tuple[int, int] = (4, 64)
    m_range: tuple[int, int] = (2, 16)
    max_results: int = Field(default=20, ge=1)
    side_orders: int = Field(default=1, ge=0)
    allow_odd: bool = False
    workers: int = Field(default=1, ge=1)
    min_height: float = Field(default=0.0, ge=0, lt=1, description="ignore maxima of |Y| below this when matching")

    @model_validator(mode="after")
    def _check(self) -> "DesignSection":
        if (self.dk1 is None) != (self.dk2 is None):
            raise ValueError("dk1 and dk2 must be given together")
        if self.dk1 is None and self.scenario is None:
            raise ValueError("design needs a scenario or an explicit dk1/dk2 pair")
        names = [s.name for s in scenario_presets()]
        if self.dk1 is None and self.scenario not in names:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {names}")
        _ordered(self.l_range, "l_range", strict=False)
        _ordered(self.n_range, "n_range", strict=False)
        _ordered(self.m_range, "m_range", strict=False)
        return self


class VerifySection(_Section):
    dk_range: tuple[float, float] = (0.0, 1.0)
    samples: int = Field(default=2048, ge=2)
    pts_per_segment: int = Field(default=16, ge=8)
    random_samples: int = Field(default=10_000, ge=0)
    fourier_order: int | None = Field(default=201, ge=1)
    tol_closed: float = Field(default=1e-9, gt=0)
    tol_quad: float = Field(default=1e-8, gt=0)
    tol_sum_form: float = Field(default=1e-12, gt=0)
    tol_fourier: float = Field(default=0.02, gt=0)
    null_floor: float = Field(default=1e-4, gt=0, description="relative deviations use max(|ref|, null_floor*L*chi0)")
    perturb: float = Field(default=0.0, description="relative error injected into the closed form (negative control)")

    @model_validator(mode="after")
    def _check(self) -> "VerifySection":
        _ordered(self.dk_range, "dk_range")
        return self


class OutputSection(_Section):
    out: str | None = None
    format: OutputFormat | None = Field(default=None, description="inferred from the out suffix when unset")
    svg: str | None = None
    peaks: str | None = Field(default=None, description="refined peak list (spectrum command), JSON")
    extrema: str | None = Field(default=None, description="dominant extrema and spot check (joint command), JSON")
    table: str | None = Field(default=None, description="text table of designs (design command)")
    csv: str | None = Field(default=None, description="per-sample deviations (verify command)")

    @model_validator(mode="after")
    def _check(self) -> "OutputSection":
        if self.format is None and self.out is not None:
            suffix = Path(self.out).suffix.lstrip(".").lower()
            if suffix not in {f.value for f in OutputFormat}:
                raise ValueError(f"cannot infer output format from {self.out!r}; set format")
            self.format = OutputFormat(suffix)
        return self


DEFAULT_STRUCTURE = StructureSpec(l=10.25, n=22, m=9)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command
    structure: StructureSpec = DEFAULT_STRUCTURE
    spectrum: SpectrumSection = Field(default_factory=SpectrumSection)
    joint: JointSection = Field(default_factory=JointSection)
    design: DesignSection = Field(default_factory=DesignSection)
    verify: VerifySection = Field(default_factory=VerifySection)
    output: OutputSection = Field(default_factory=OutputSection)


def load_config(path: Path) -> RunConfig:
    return RunConfig.model_validate_json(Path(path).read_text())


def save_config(config: RunConfig, path: Path) -> None:
    Path(path).write_text(config.model_dump_json(indent=2))
    logger.info("wrote %s", path)


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(base: RunConfig | None, overrides: dict[str, Any]) -> RunConfig:
    """Apply nested flag overrides on top of a config; flags win."""
    if base is None:
        base = RunConfig(command=overrides["command"])
    data = base.model_dump(mode="json")
    return RunConfig.model_validate(_merge(data, overrides))

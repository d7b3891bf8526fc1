"""Joint spectral quantities of cascaded down-conversion in one superlattice.

Amplitudes are in normalized units: the constants C and E0 of the
three-photon amplitude are set to 1.
"""

import logging
import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qpm.analysis import find_peaks
from qpm.lattice import StructureSpec, build_segments
from qpm.oracle import oracle_segment_sum
from qpm.specfun import alpha_phase
from qpm.spectral import g_effective, y_of_x

logger = logging.getLogger(__name__)


class ProcessKind(str, Enum):
    triplet = "triplet"
    four_photon = "four_photon"


# Frequencies as fractions of the pump frequency.
TRIPLET_FREQUENCIES = {"omega0": 1.0, "omega1": 1.0 / 3.0, "omega2": 2.0 / 3.0}
FOUR_PHOTON_FREQUENCIES = {"varpi0": 1.0, "varpi1": 0.25, "varpi2": 0.5}

_FREQ_TOL = 1e-12


class CascadeScenario(BaseModel):
    """A pair of mismatches driven in one lattice, with descriptive metadata."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    name: str
    kind: ProcessKind
    dk1: float = Field(description="first process mismatch, 1/um")
    dk2: float = Field(description="second process mismatch, 1/um")
    pump_wavelength: float | None = Field(default=None, gt=0, description="um, metadata only")
    frequency_labels: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_frequencies(self) -> "CascadeScenario":
        f = self.frequency_labels
        if not f:
            return self
        if self.kind is ProcessKind.triplet:
            # omega0 -> omega1 + omega2, then omega2 -> omega1' + omega1''
            required = ("omega0", "omega1", "omega2")
            pairs = [("omega0", lambda v: v["omega1"] + v["omega2"]),
                     ("omega2", lambda v: 2.0 * v["omega1"])]
        else:
            required = ("varpi0", "varpi1", "varpi2")
            pairs = [("varpi0", lambda v: 2.0 * v["varpi2"]),
                     ("varpi2", lambda v: 2.0 * v["varpi1"])]
        missing = [k for k in required if k not in f]
        if missing:
            raise ValueError(f"{self.kind.value} scenario needs frequency labels {missing}")
        for key, rhs in pairs:
            if abs(f[key] - rhs(f)) > _FREQ_TOL * max(1.0, abs(f[key])):
                raise ValueError(f"frequency labels violate energy conservation at {key}")
        return self


def scenario_presets() -> list[CascadeScenario]:
    """The built-in triplet and four-photon scenarios."""
    return [
        CascadeScenario(name="triplet", kind=ProcessKind.triplet, dk1=0.32, dk2=0.87,
                        pump_wavelength=0.53, frequency_labels=dict(TRIPLET_FREQUENCIES)),
        CascadeScenario(name="four_photon", kind=ProcessKind.four_photon, dk1=1.56, dk2=-1.312,
                        pump_wavelength=0.39, frequency_labels=dict(FOUR_PHOTON_FREQUENCIES)),
    ]


def get_scenario(name: str) -> CascadeScenario:
    for s in scenario_presets():
        if s.name == name:
            return s
    raise ValueError(f"unknown scenario {name!r}; choose from {[s.name for s in scenario_presets()]}")


def coupling_constants(scenario: CascadeScenario, spec: StructureSpec) -> tuple[complex, complex]:
    """(zeta, xi): G(dk1) and G(dk2) in chi0*um, proportionality constants set to 1."""
    return complex(g_effective(scenario.dk1, spec)), complex(g_effective(scenario.dk2, spec))


def joint_h(x1, x2, spec: StructureSpec):
    """h = (M*N)**2 * Y(x1) * Y(x2)."""
    scale = float(spec.m * spec.n) ** 2
    out = scale * np.asarray(y_of_x(x1, spec)) * np.asarray(y_of_x(x2, spec))
    return out.item() if out.ndim == 0 else out


def three_photon_amplitude(x1, x2, spec: StructureSpec):
    """Phi = l**2 * chi0 * exp(-i*alpha1) * exp(-i*alpha2) * h(x1, x2)."""
    dk1 = 2.0 * np.asarray(x1, dtype=float) / spec.l
    dk2 = 2.0 * np.asarray(x2, dtype=float) / spec.l
    phase = np.exp(-1j * np.asarray(alpha_phase(dk1, spec))) * np.exp(-1j * np.asarray(alpha_phase(dk2, spec)))
    out = spec.l ** 2 * spec.chi0 * phase * np.asarray(joint_h(x1, x2, spec))
    return out.item() if out.ndim == 0 else out


class JointGrid(BaseModel):
    """h sampled on x1_axis x x2_axis; h[i, j] belongs to (x1_axis[i], x2_axis[j])."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: StructureSpec
    x1_axis: np.ndarray
    x2_axis: np.ndarray
    h: np.ndarray

    @model_validator(mode="after")
    def _check_shape(self) -> "JointGrid":
        if self.h.shape != (len(self.x1_axis), len(self.x2_axis)):
            raise ValueError(f"h has shape {self.h.shape}, axes give "
                             f"({len(self.x1_axis)}, {len(self.x2_axis)})")
        return self

    def rows(self) -> list[dict[str, float]]:
        """Row-major CSV rows: x1, x2, h."""
        return [
            {"x1": float(a), "x2": float(b), "h": float(self.h[i, j])}
            for i, a in enumerate(self.x1_axis)
            for j, b in enumerate(self.x2_axis)
        ]


def _axis(window: tuple[float, float], samples: int, name: str) -> np.ndarray:
    lo, hi = window
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"{name} window must be finite, got {window}")
    if samples < 1:
        raise ValueError(f"{name} samples must be >= 1, got {samples}")
    if samples == 1:
        return np.array([lo], dtype=float)
    if not hi > lo:
        raise ValueError(f"empty {name} window: {window}")
    return np.linspace(lo, hi, samples)


def joint_grid(spec: StructureSpec, x1_window: tuple[float, float], x2_window: tuple[float, float],
               samples: tuple[int, int] = (401, 401)) -> JointGrid:
    """h over a rectangular window; a one-sample axis holds only the window's lower end."""
    x1 = _axis(x1_window, samples[0], "x1")
    x2 = _axis(x2_window, samples[1], "x2")
    scale = float(spec.m * spec.n) ** 2
    y1 = np.asarray(y_of_x(x1, spec))
    y2 = np.asarray(y_of_x(x2, spec))
    h = scale * y1[:, None] * y2[None, :]
    logger.debug("joint grid %dx%d filled", len(x1), len(x2))
    return JointGrid(spec=spec, x1_axis=x1, x2_axis=x2, h=h)


class JointExtremum(BaseModel):
    x1: float
    x2: float
    h: float


def dominant_extrema(spec: StructureSpec, x1_window: tuple[float, float],
                     x2_window: tuple[float, float], count: int | None = 4) -> list[JointExtremum]:
    """Extrema of h in the window, largest |h| first.

    h is separable, so its extrema are the products of the 1-D peaks of Y
    along each axis. count=None returns all of them.
    """
    p1 = find_peaks(spec, *x1_window)
    p2 = find_peaks(spec, *x2_window)
    scale = float(spec.m * spec.n) ** 2
    out = [JointExtremum(x1=a.x, x2=b.x, h=scale * a.height * b.height) for a in p1 for b in p2]
    out.sort(key=lambda e: (-abs(e.h), e.x1, e.x2))
    return out if count is None else out[:count]


class SpotCheck(BaseModel):
    points: int
    max_dev: float = Field(description="largest | |h| - |G1||G2|/(l chi0)^2 | over (M*N)^2")


def spot_check(grid: JointGrid, fraction: float = 0.01) -> SpotCheck:
    """Recompute an evenly spaced subset of |h| from the segment-sum oracle.

    |G(dk)| / (l*chi0) = M*N*|Y|, so |G1|*|G2| / (l*chi0)**2 must equal |h|.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    spec = grid.spec
    size = grid.h.size
    count = max(1, int(round(fraction * size)))
    flat = np.unique(np.linspace(0, size - 1, count).round().astype(int))
    rows, cols = np.unravel_index(flat, grid.h.shape)

    segments = build_segments(spec)
    g1 = np.abs(oracle_segment_sum(2.0 * grid.x1_axis[rows] / spec.l, segments))
    g2 = np.abs(oracle_segment_sum(2.0 * grid.x2_axis[cols] / spec.l, segments))
    recovered = g1 * g2 / (spec.l * spec.chi0) ** 2
    scale = float(spec.m * spec.n) ** 2
    dev = np.abs(np.abs(grid.h[rows, cols]) - recovered) / scale
    return SpotCheck(points=len(flat), max_dev=float(dev.max()))

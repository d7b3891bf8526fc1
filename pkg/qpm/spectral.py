"""Closed-form QPM spectral functions and the truncated double-Fourier series.

x = l*dk/2 is the dimensionless mismatch. With theta1 = x - pi/2 and
theta2 = N*x - pi/2 the phase-reversed spectral function is

    Y(x) = sinc(x) * [sin(N*theta1) / (N sin theta1)] * [sin(M*theta2) / (M sin theta2)]

and the coupling is G(dk) = L*chi0*exp(-i*alpha)*Y.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qpm.lattice import StructureSpec
from qpm.specfun import alpha_phase, dirichlet_ratio, sinc

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi

# Grid density: samples per x-width pi/(M*N), i.e. 25 per dk-width pi/(M*N*l).
SAMPLES_PER_FEATURE = 50

# Hard floor on grid density, per x-width pi/(M*N).
MIN_SAMPLES_PER_FEATURE = 40

DEFAULT_FOURIER_ORDER = 201


def _out(value):
    arr = np.asarray(value)
    return arr.item() if arr.ndim == 0 else arr


def feature_width(spec: StructureSpec) -> float:
    """Narrowest spectral feature in x, pi/(M*N)."""
    return math.pi / (spec.m * spec.n)


def y_of_x(x, spec: StructureSpec):
    """Y_{M,N} at dimensionless mismatch x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    theta1 = x - HALF_PI
    theta2 = spec.n * x - HALF_PI
    block = np.asarray(dirichlet_ratio(theta1, spec.n)) / spec.n
    reversal = np.asarray(dirichlet_ratio(theta2, spec.m)) / spec.m
    return _out(np.asarray(sinc(x)) * block * reversal)


def y_uniform(dk, l: float, n_domains: int):
    """Y_N of a plain periodic poling of n_domains domains of length l."""
    if l <= 0:
        raise ValueError(f"l must be positive, got {l}")
    if n_domains < 1:
        raise ValueError(f"n_domains must be >= 1, got {n_domains}")
    x = 0.5 * l * np.asarray(dk, dtype=float)
    return _out(np.asarray(sinc(x)) * np.asarray(dirichlet_ratio(x - HALF_PI, n_domains)) / n_domains)


def y_phase_reversed(dk, spec: StructureSpec):
    return y_of_x(0.5 * spec.l * np.asarray(dk, dtype=float), spec)


def _geometric(step, count: int) -> np.ndarray:
    """sum_{j<count} exp(-i*j*step), summed term by term."""
    step = np.mod(step, 2.0 * math.pi)
    total = np.zeros(np.shape(step), dtype=complex)
    for j in range(count):
        total += np.exp(-1j * j * step)
    return total


def y_phase_reversed_sum(dk, spec: StructureSpec):
    """Y_{M,N} from its double-sum representation, as a complex number.

    exp(i*phi) * sum_{n<N} exp(-i*l*n*(dk - G)) * sum_{m<M} exp(-i*N*l*m*(dk - F)),
    times sinc(x)/(M*N), with phi = l*(dk - G)/2. Its magnitude equals |Y| and
    y_phase_reversed_sum * exp(-2i*phi) == exp(-i*alpha) * Y.
    """
    x = 0.5 * spec.l * np.asarray(dk, dtype=float)
    theta1 = x - HALF_PI
    theta2 = spec.n * x - HALF_PI
    inner = _geometric(2.0 * theta1, spec.n)
    outer = _geometric(2.0 * theta2, spec.m)
    value = np.asarray(sinc(x)) / (spec.m * spec.n) * np.exp(1j * theta1) * inner * outer
    return _out(value)


def g_effective(dk, spec: StructureSpec):
    """Effective coupling G(dk) = L*chi0*exp(-i*alpha(dk))*Y(dk), in chi0*um."""
    alpha = np.asarray(alpha_phase(dk, spec))
    y = np.asarray(y_phase_reversed(dk, spec))
    return _out(spec.length * spec.chi0 * np.exp(-1j * alpha) * y)


def fourier_coefficient(n: int) -> float:
    """Square-wave coefficient g_n: 2/(pi*n) for odd n, zero otherwise."""
    return 2.0 / (math.pi * n) if n % 2 else 0.0


def _odd_orders(order: int) -> np.ndarray:
    half = np.arange(1, order + 1, 2)
    return np.concatenate((-half[::-1], half))


def fourier_pheno(dk, spec: StructureSpec, n_max: int = DEFAULT_FOURIER_ORDER,
                  m_max: int = DEFAULT_FOURIER_ORDER):
    """Truncated phenomenological series for G(dk).

    chi0*L * sum_{|n|<=n_max, |m|<=m_max} g_n g_m exp(-i*u) sinc(u),
    u = (L/2)(dk - G_n - F_m), G_n = pi*n/l, F_m = pi*m/(N*l). Only odd
    n, m contribute.
    """
    if n_max < 1 or m_max < 1:
        raise ValueError(f"truncation orders must be >= 1, got n_max={n_max}, m_max={m_max}")
    ns = _odd_orders(n_max)
    ms = _odd_orders(m_max)
    coeff = np.outer([fourier_coefficient(int(n)) for n in ns],
                     [fourier_coefficient(int(m)) for m in ms])
    # u = M*N*x - k*pi/2 with integer k, so the shifts are applied exactly.
    k = spec.m * (spec.n * ns[:, None] + ms[None, :])
    quarter = np.mod(k, 4)
    turn = np.array([1.0, 1j, -1.0, -1j])[quarter]
    mn = spec.m * spec.n
    prefactor = spec.chi0 * spec.length

    def one(value: float) -> complex:
        a = mn * 0.5 * spec.l * value
        sin_a, cos_a = math.sin(a), math.cos(a)
        sin_u = np.choose(quarter, [sin_a, -cos_a, -sin_a, cos_a])
        u = a - k * HALF_PI
        small = np.abs(u) < 1e-8
        with np.errstate(divide="ignore", invalid="ignore"):
            sinc_u = np.where(small, 1.0 - u * u / 6.0, sin_u / u)
        terms = coeff * turn * sinc_u * complex(cos_a, -sin_a)
        return complex(prefactor * terms.sum())

    arr = np.asarray(dk, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"dk must be finite, got {dk!r}")
    if arr.ndim == 0:
        return one(float(arr))
    return np.array([one(float(v)) for v in arr.ravel()], dtype=complex).reshape(arr.shape)


def fourier_convergence(spec: StructureSpec, dk: float,
                        truncations: list[int]) -> list[tuple[int, float]]:
    """Relative deviation of |fourier_pheno| from |g_effective| per truncation order."""
    exact = abs(g_effective(dk, spec))
    if exact == 0.0:
        raise ValueError(f"G vanishes at dk={dk}; relative deviation undefined")
    out = []
    for order in truncations:
        approx = abs(fourier_pheno(dk, spec, order, order))
        out.append((order, abs(approx - exact) / exact))
    return out


def twin_positions(spec: StructureSpec, group: int = 0) -> tuple[float, float]:
    """Nominal twin positions pi/2 + k*pi -/+ pi/(2N) of group k."""
    centre = HALF_PI + group * math.pi
    offset = math.pi / (2 * spec.n)
    return centre - offset, centre + offset


# Rounding slack on |Y| <= 1.
_Y_SLACK = 1e-12


class SpectrumSample(BaseModel):
    """One point of a spectrum: x = l*dk/2, y = Y(x), g = G(dk)."""
    dk: float
    x: float
    y: float = Field(ge=-1.0 - _Y_SLACK, le=1.0 + _Y_SLACK)
    g: complex

    def row(self) -> dict[str, float]:
        return {"dk": self.dk, "x": self.x, "y": self.y,
                "re_g": self.g.real, "im_g": self.g.imag, "abs_g": abs(self.g)}


class SpectrumGrid(BaseModel):
    """Spectrum of one lattice over an increasing dk grid."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: StructureSpec
    dk: np.ndarray
    x: np.ndarray
    y: np.ndarray
    g: np.ndarray
    uniform: bool = False
    samples_per_feature: float = Field(description="samples per x-width pi/(M*N)")

    @model_validator(mode="after")
    def _check_order(self) -> "SpectrumGrid":
        n = len(self.dk)
        if any(len(a) != n for a in (self.x, self.y, self.g)):
            raise ValueError("dk, x, y and g must have equal length")
        if n > 1 and not np.all(np.diff(self.dk) > 0):
            raise ValueError("dk samples must be strictly increasing")
        if not np.allclose(self.x, 0.5 * self.spec.l * self.dk, rtol=1e-12, atol=1e-12):
            raise ValueError("x must equal l*dk/2")
        if n and np.max(np.abs(self.y)) > 1.0 + _Y_SLACK:
            raise ValueError(f"|y| must not exceed 1, got {np.max(np.abs(self.y))}")
        return self

    @property
    def dk_min(self) -> float:
        return float(self.dk[0])

    @property
    def dk_max(self) -> float:
        return float(self.dk[-1])

    @property
    def samples(self) -> list[SpectrumSample]:
        return [SpectrumSample(dk=float(a), x=float(b), y=float(c), g=complex(d))
                for a, b, c, d in zip(self.dk, self.x, self.y, self.g)]

    def rows(self) -> list[dict[str, float]]:
        """CSV rows: dk, x, y, re_g, im_g, abs_g."""
        return [s.row() for s in self.samples]


def auto_samples(spec: StructureSpec, x_min: float, x_max: float,
                 per_feature: float = SAMPLES_PER_FEATURE) -> int:
    return max(2, int(math.ceil((x_max - x_min) / feature_width(spec) * per_feature)) + 1)


def spectrum_grid(spec: StructureSpec, x_min: float, x_max: float,
                  samples: int | None = None, uniform: bool = False) -> SpectrumGrid:
    """Evaluate Y and G on an even x grid; samples=None picks the density automatically.

    With uniform=True, y holds the single-block grating Y_N (same l, N) and g
    the matching L*chi0*Y_N coupling magnitude with the block phase.
    """
    if not (math.isfinite(x_min) and math.isfinite(x_max)) or x_max <= x_min:
        raise ValueError(f"empty window: x_min={x_min}, x_max={x_max}")
    if samples is None:
        samples = auto_samples(spec, x_min, x_max)
    elif samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    density = (samples - 1) * feature_width(spec) / (x_max - x_min)
    if density < MIN_SAMPLES_PER_FEATURE:
        logger.warning("grid has %.1f samples per feature width, below %d; narrow peaks may be missed",
                       density, MIN_SAMPLES_PER_FEATURE)
    logger.debug("spectrum grid: %d samples over x in [%g, %g]", samples, x_min, x_max)

    x = np.linspace(x_min, x_max, samples)
    dk = 2.0 * x / spec.l
    if uniform:
        y = np.asarray(y_uniform(dk, spec.l, spec.n), dtype=float)
        alpha = spec.n * (x - HALF_PI)
        g = spec.n * spec.l * spec.chi0 * np.exp(-1j * alpha) * y
    else:
        y = np.asarray(y_of_x(x, spec), dtype=float)
        g = np.asarray(g_effective(dk, spec), dtype=complex)
    return SpectrumGrid(spec=spec, dk=dk, x=x, y=y, g=g, uniform=uniform, samples_per_feature=density)

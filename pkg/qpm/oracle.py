"""Brute-force evaluations of G(dk) from the segment list, used to cross-check the closed forms.

Both oracles use the exp(-i*dk*z) convention of the multilayer segment sum.
With that convention the closed form and the segment sum differ by the
constant factor SEGMENT_PHASE:

    oracle_segment_sum(dk) == SEGMENT_PHASE * g_effective(dk)

Each comparison is reported two ways against the segment sum g_ref:

    relative  |a - b| / max(|g_ref|, NULL_FLOOR * L*chi0)
    scaled    |a - b| / (L*chi0)

The relative deviation is the one checked against tolerances. The floor keeps
it finite at spectral nulls, where g_ref itself is rounding noise.
"""

import logging
from typing import Callable

import numpy as np
from pydantic import BaseModel, Field

from qpm.lattice import SegmentList, StructureSpec, build_segments, chi_of_z
from qpm.spectral import fourier_pheno, g_effective, twin_positions, y_phase_reversed, y_phase_reversed_sum

logger = logging.getLogger(__name__)

SEGMENT_PHASE = -1j

# Seed for every randomly drawn dk sample in verification runs.
VERIFY_SEED = 1729

MIN_POINTS_PER_SEGMENT = 8

# Below NULL_FLOOR * L*chi0 the relative deviation is taken against the floor.
NULL_FLOOR = 1e-4

# dk values per vectorized quadrature batch.
_CHUNK = 256


class VerificationError(Exception):
    """A cross-check exceeded its tolerance."""

    def __init__(self, message: str, offenders: list[dict] | None = None):
        super().__init__(message)
        self.offenders = offenders or []


def oracle_segment_sum(dk, segments: SegmentList):
    """Exact coupling for piecewise-constant chi(z): each segment integrates analytically.

    G = sum_j l_j chi_j exp(-i(phi_j + dk l_j/2)) sinc(dk l_j/2), phi_j = dk * (left edge of j).
    """
    if len(segments) == 0:
        raise ValueError("segment list is empty")
    arr = np.asarray(dk, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"dk must be finite, got {dk!r}")
    lengths = segments.lengths
    chis = segments.chis
    centres = segments.edges[:-1] + 0.5 * lengths
    flat = arr.reshape(-1, 1)
    half = 0.5 * flat * lengths
    terms = lengths * chis * np.exp(-1j * flat * centres) * np.sinc(half / np.pi)
    out = terms.sum(axis=1)
    return complex(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def oracle_quadrature(dk, spec: StructureSpec, pts_per_segment: int = 16):
    """Composite Gauss-Legendre integral of chi(z)*exp(-i*dk*z) over [0, L]."""
    if pts_per_segment < MIN_POINTS_PER_SEGMENT:
        raise ValueError(f"pts_per_segment must be >= {MIN_POINTS_PER_SEGMENT}, got {pts_per_segment}")
    arr = np.asarray(dk, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"dk must be finite, got {dk!r}")
    nodes, weights = np.polynomial.legendre.leggauss(pts_per_segment)
    count = spec.m * spec.n
    left = np.arange(count) * spec.l
    z = (left[:, None] + 0.5 * spec.l * (nodes[None, :] + 1.0)).ravel()
    w = np.tile(0.5 * spec.l * weights, count)
    wchi = w * chi_of_z(spec, z)

    flat = arr.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, _CHUNK):
        block = flat[start:start + _CHUNK, None]
        out[start:start + _CHUNK] = (wchi * np.exp(-1j * block * z)).sum(axis=1)
    return complex(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


class OracleReport(BaseModel):
    """Three-way comparison at one dk."""
    spec: StructureSpec
    dk: float
    g_closed: complex
    g_segment_sum: complex
    g_quadrature: complex
    rel_dev_closed_vs_sum: float = Field(ge=0, description="relative to |segment sum|, floored near nulls")
    rel_dev_sum_vs_quad: float = Field(ge=0, description="relative to |segment sum|, floored near nulls")
    scaled_dev_closed_vs_sum: float = Field(ge=0, description="relative to L*chi0")
    scaled_dev_sum_vs_quad: float = Field(ge=0, description="relative to L*chi0")


class OracleSummary(BaseModel):
    spec: StructureSpec
    dk_min: float
    dk_max: float
    n_samples: int
    null_floor: float
    max_dev_closed_vs_sum: float
    max_dev_sum_vs_quad: float
    max_scaled_dev_closed_vs_sum: float
    max_scaled_dev_sum_vs_quad: float
    worst_dk_closed_vs_sum: float
    worst_dk_sum_vs_quad: float


def deviations(a: np.ndarray, b: np.ndarray, ref: np.ndarray, spec: StructureSpec,
               null_floor: float = NULL_FLOOR) -> tuple[np.ndarray, np.ndarray]:
    """(relative, scaled) deviations of a from b; relative is taken against |ref| floored."""
    scale = spec.length * spec.chi0
    diff = np.abs(a - b)
    return diff / np.maximum(np.abs(ref), null_floor * scale), diff / scale


def verify_grid(spec: StructureSpec, dk_min: float, dk_max: float, n_samples: int,
                pts_per_segment: int = 16,
                closed: Callable = g_effective,
                null_floor: float = NULL_FLOOR) -> list[OracleReport]:
    """Compare closed form, segment sum and quadrature on an even dk grid.

    closed replaces g_effective, e.g. to check that a perturbed closed form is caught.
    """
    if not dk_min < dk_max:
        raise ValueError(f"dk_min must be below dk_max, got {dk_min} and {dk_max}")
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    if not null_floor > 0:
        raise ValueError(f"null_floor must be positive, got {null_floor}")
    dk = np.linspace(dk_min, dk_max, n_samples)
    g_closed = SEGMENT_PHASE * np.asarray(closed(dk, spec), dtype=complex)
    g_sum = oracle_segment_sum(dk, build_segments(spec))
    g_quad = oracle_quadrature(dk, spec, pts_per_segment)
    rel_cs, scaled_cs = deviations(g_closed, g_sum, g_sum, spec, null_floor)
    rel_sq, scaled_sq = deviations(g_sum, g_quad, g_sum, spec, null_floor)
    logger.debug("verified %d samples: closed/sum %.3g (scaled %.3g), sum/quad %.3g (scaled %.3g)",
                 n_samples, rel_cs.max(), scaled_cs.max(), rel_sq.max(), scaled_sq.max())
    return [
        OracleReport(spec=spec, dk=float(dk[i]), g_closed=complex(g_closed[i]),
                     g_segment_sum=complex(g_sum[i]), g_quadrature=complex(g_quad[i]),
                     rel_dev_closed_vs_sum=float(rel_cs[i]), rel_dev_sum_vs_quad=float(rel_sq[i]),
                     scaled_dev_closed_vs_sum=float(scaled_cs[i]), scaled_dev_sum_vs_quad=float(scaled_sq[i]))
        for i in range(n_samples)
    ]


def summarize(reports: list[OracleReport], null_floor: float = NULL_FLOOR) -> OracleSummary:
    if not reports:
        raise ValueError("no reports to summarize")
    worst_cs = max(reports, key=lambda r: r.rel_dev_closed_vs_sum)
    worst_sq = max(reports, key=lambda r: r.rel_dev_sum_vs_quad)
    return OracleSummary(
        spec=reports[0].spec,
        dk_min=reports[0].dk,
        dk_max=reports[-1].dk,
        n_samples=len(reports),
        null_floor=null_floor,
        max_dev_closed_vs_sum=worst_cs.rel_dev_closed_vs_sum,
        max_dev_sum_vs_quad=worst_sq.rel_dev_sum_vs_quad,
        max_scaled_dev_closed_vs_sum=max(r.scaled_dev_closed_vs_sum for r in reports),
        max_scaled_dev_sum_vs_quad=max(r.scaled_dev_sum_vs_quad for r in reports),
        worst_dk_closed_vs_sum=worst_cs.dk,
        worst_dk_sum_vs_quad=worst_sq.dk,
    )


def random_dk(dk_min: float, dk_max: float, count: int, seed: int = VERIFY_SEED) -> np.ndarray:
    """Sorted uniform dk draws from a fixed seed."""
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(dk_min, dk_max, count))


class CheckResult(BaseModel):
    name: str
    max_dev: float
    tolerance: float
    passed: bool
    worst_dk: float | None = None


class VerificationSummary(BaseModel):
    oracle: OracleSummary
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def offenders(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _check(name: str, devs: np.ndarray, dks: np.ndarray, tolerance: float) -> CheckResult:
    i = int(np.argmax(devs))
    worst = float(devs[i])
    return CheckResult(name=name, max_dev=worst, tolerance=tolerance,
                       passed=bool(worst < tolerance), worst_dk=float(dks[i]))


def cross_validate(spec: StructureSpec, dk_min: float, dk_max: float, n_samples: int,
                   pts_per_segment: int = 16,
                   tol_closed: float = 1e-9,
                   tol_quad: float = 1e-8,
                   tol_sum_form: float = 1e-12,
                   random_samples: int = 10_000,
                   fourier_order: int | None = 201,
                   tol_fourier: float = 0.02,
                   closed: Callable = g_effective,
                   seed: int = VERIFY_SEED,
                   null_floor: float = NULL_FLOOR) -> tuple[list[OracleReport], VerificationSummary]:
    """Run every consistency check on one lattice.

    Checks: closed form vs segment sum and segment sum vs quadrature on the
    even grid; |sum form| vs |product form| on seeded random dk; truncated
    Fourier series vs closed form at the first twin pair (even N, M >= 2,
    skipped when fourier_order is None).
    """
    reports = verify_grid(spec, dk_min, dk_max, n_samples, pts_per_segment, closed, null_floor)
    summary = summarize(reports, null_floor)
    dks = np.array([r.dk for r in reports])
    checks = [
        _check("closed_vs_segment_sum", np.array([r.rel_dev_closed_vs_sum for r in reports]), dks, tol_closed),
        _check("segment_sum_vs_quadrature", np.array([r.rel_dev_sum_vs_quad for r in reports]), dks, tol_quad),
    ]

    if random_samples > 0:
        draws = random_dk(dk_min, dk_max, random_samples, seed)
        product = np.abs(np.asarray(y_phase_reversed(draws, spec)))
        summed = np.abs(np.asarray(y_phase_reversed_sum(draws, spec)))
        checks.append(_check("sum_vs_product_form", np.abs(summed - product), draws, tol_sum_form))

    if fourier_order is not None and spec.n % 2 == 0 and spec.m >= 2:
        twins = np.array([2.0 * x / spec.l for x in twin_positions(spec, 0)])
        exact = np.abs(np.asarray(g_effective(twins, spec)))
        series = np.abs(np.asarray(fourier_pheno(twins, spec, fourier_order, fourier_order)))
        checks.append(_check("fourier_series_at_twins", np.abs(series - exact) / exact, twins, tol_fourier))

    for c in checks:
        level = logging.DEBUG if c.passed else logging.WARNING
        logger.log(level, "%s: max deviation %.3g (tolerance %.3g)", c.name, c.max_dev, c.tolerance)
    return reports, VerificationSummary(oracle=summary, checks=checks)

"""Peak detection and refinement on |Y|, and the double-phase-matching design search.

Positions are in x = l*dk/2, which makes every peak search independent of l.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize, signal

from qpm.lattice import StructureSpec
from qpm.specfun import dirichlet_log_slope, sinc_log_slope
from qpm.spectral import HALF_PI, feature_width, y_of_x

logger = logging.getLogger(__name__)

# Dense-scan density, samples per x-width pi/(M*N).
SCAN_PER_FEATURE = 25

# Chunk of samples evaluated per step of the half-maximum walk.
_WALK_CHUNK = 256


class Peak(BaseModel):
    """A refined local maximum of |Y|."""
    x: float
    dk: float
    height: float = Field(ge=-1.0, le=1.0, description="signed Y at the peak")
    fwhm_x: float = Field(gt=0)
    group_index: int = Field(description="k of the group centred on pi/2 + k*pi")
    twin_index: int = Field(ge=0, description="0/1 for the twin pair, >= 2 subsidiary rank")

    @property
    def is_twin(self) -> bool:
        return self.twin_index < 2


def group_of(x: float) -> int:
    return int(round((x - HALF_PI) / math.pi))


def log_slope(x: float, spec: StructureSpec) -> float:
    """d/dx ln|Y(x)|."""
    theta1 = x - HALF_PI
    theta2 = spec.n * x - HALF_PI
    return (sinc_log_slope(x)
            + dirichlet_log_slope(theta1, spec.n)
            + spec.n * dirichlet_log_slope(theta2, spec.m))


def _abs_y(x, spec: StructureSpec):
    return np.abs(y_of_x(x, spec))


def _polish(spec: StructureSpec, lo: float, mid: float, hi: float) -> float:
    """Golden-section search on -|Y| in [lo, hi], then the root of the log-slope."""
    objective = lambda v: -float(_abs_y(v, spec))
    try:
        res = optimize.minimize_scalar(objective, bracket=(lo, mid, hi), method="golden",
                                       options={"xtol": 1e-12})
        best = float(res.x)
    except (ValueError, RuntimeError):
        best = mid
    if not lo <= best <= hi:
        best = mid
    try:
        f_lo, f_hi = log_slope(lo, spec), log_slope(hi, spec)
    except ZeroDivisionError:
        return best
    if np.isfinite(f_lo) and np.isfinite(f_hi) and f_lo > 0 > f_hi:
        return optimize.brentq(log_slope, lo, hi, args=(spec,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return best


def refine_peak(spec: StructureSpec, x0: float) -> float:
    """Refine the |Y| maximum of the lobe nearest x0; returns its x."""
    width = feature_width(spec)
    xs = np.linspace(x0 - width, x0 + width, 2 * SCAN_PER_FEATURE + 1)
    a = _abs_y(xs, spec)
    idx, _ = signal.find_peaks(a)
    if len(idx) == 0:
        # monotone over the scan: the sampled end is the best available guess
        i = int(np.argmax(a))
        i = min(max(i, 1), len(xs) - 2)
    else:
        i = int(idx[np.argmin(np.abs(xs[idx] - x0))])
    return _polish(spec, float(xs[i - 1]), float(xs[i]), float(xs[i + 1]))


def _edge(spec: StructureSpec, x_peak: float, half: float, direction: int) -> float:
    step = feature_width(spec) / SCAN_PER_FEATURE
    prev_x, prev_a = x_peak, 2.0 * half
    limit = int(math.ceil(math.pi / step))
    for start in range(1, limit + 1, _WALK_CHUNK):
        offsets = np.arange(start, min(start + _WALK_CHUNK, limit + 1))
        xs = x_peak + direction * step * offsets
        a = _abs_y(xs, spec)
        for xv, av in zip(xs, a):
            if av < half:
                f = lambda v: float(_abs_y(v, spec)) - half
                lo, hi = sorted((prev_x, float(xv)))
                return optimize.brentq(f, lo, hi, xtol=1e-13)
            if av > prev_a and prev_x != x_peak:
                # passed a minimum above half height
                return prev_x
            prev_x, prev_a = float(xv), float(av)
    return prev_x


def peak_width(spec: StructureSpec, x_peak: float) -> float:
    """Full width at half maximum of |Y| around a refined peak, in x.

    An edge stops early at a local minimum that stays above half height.
    """
    height = float(_abs_y(x_peak, spec))
    if height == 0.0:
        raise ValueError(f"Y vanishes at x={x_peak}; no peak to measure")
    half = 0.5 * height
    return _edge(spec, x_peak, half, +1) - _edge(spec, x_peak, half, -1)


def make_peak(spec: StructureSpec, x: float, twin_index: int) -> Peak:
    return Peak(
        x=x,
        dk=2.0 * x / spec.l,
        height=float(y_of_x(x, spec)),
        fwhm_x=peak_width(spec, x),
        group_index=group_of(x),
        twin_index=twin_index,
    )


def _label(spec: StructureSpec, xs: list[float], heights: list[float]) -> list[int]:
    """Twin index per peak: 0/1 for the tallest peak on each side of a group centre."""
    labels = [-1] * len(xs)
    if spec.m >= 2:
        reach = 2.0 * math.pi / spec.n
        for k in sorted({group_of(x) for x in xs}):
            centre = HALF_PI + k * math.pi
            for side, lo, hi in ((0, centre - reach, centre), (1, centre, centre + reach)):
                # for N < 4 the reach spills into the neighbouring groups
                near = [i for i, x in enumerate(xs) if lo < x < hi and group_of(x) == k]
                if near:
                    labels[max(near, key=lambda i: abs(heights[i]))] = side
        # both halves must exist for a pair
        for k in {group_of(x) for x in xs}:
            members = [i for i, x in enumerate(xs) if labels[i] >= 0 and group_of(x) == k]
            if len(members) < 2:
                for i in members:
                    labels[i] = -1
    order = sorted((i for i in range(len(xs)) if labels[i] < 0), key=lambda i: -abs(heights[i]))
    for rank, i in enumerate(order):
        labels[i] = 2 + rank
    return labels


def _maxima(spec: StructureSpec, x_min: float, x_max: float) -> list[float]:
    """Refined positions of the sign-consistent local maxima of |Y| in (x_min, x_max)."""
    count = int(math.ceil((x_max - x_min) / feature_width(spec) * SCAN_PER_FEATURE)) + 1
    xs = np.linspace(x_min, x_max, count)
    y = np.asarray(y_of_x(xs, spec))
    idx, _ = signal.find_peaks(np.abs(y))
    logger.debug("scan of %d samples found %d raw maxima", count, len(idx))

    refined: list[float] = []
    for i in idx:
        if np.sign(y[i - 1]) != np.sign(y[i]) or np.sign(y[i + 1]) != np.sign(y[i]):
            continue
        x = _polish(spec, float(xs[i - 1]), float(xs[i]), float(xs[i + 1]))
        if x_min < x < x_max and not any(abs(x - r) < 1e-9 for r in refined):
            refined.append(x)
    refined.sort()
    return refined


def find_peaks(spec: StructureSpec, x_min: float, x_max: float) -> list[Peak]:
    """All sign-consistent local maxima of |Y| in (x_min, x_max), refined and sorted by x."""
    width = feature_width(spec)
    if not x_max > x_min:
        raise ValueError(f"empty window: x_min={x_min}, x_max={x_max}")
    if x_max - x_min < width:
        raise ValueError(f"window ({x_min}, {x_max}) is narrower than one feature width {width:.6g}")

    refined = _maxima(spec, x_min, x_max)
    heights = [float(y_of_x(x, spec)) for x in refined]
    labels = _label(spec, refined, heights)
    return [make_peak(spec, x, t) for x, t in zip(refined, labels)]


def twin_pair(spec: StructureSpec, group: int) -> tuple[Peak, Peak]:
    """The refined twin peaks of a group, left first."""
    centre = HALF_PI + group * math.pi
    reach = 2.0 * math.pi / spec.n
    peaks = find_peaks(spec, centre - reach, centre + reach)
    twins = sorted((p for p in peaks if p.is_twin and p.group_index == group), key=lambda p: p.twin_index)
    if len(twins) != 2:
        raise ValueError(f"no twin pair in group {group} for N={spec.n}, M={spec.m}")
    return twins[0], twins[1]


def count_inter_twin_oscillations(spec: StructureSpec, group: int = 0) -> int:
    """Number of subsidiary maxima of |Y| strictly between the twins of a group."""
    if spec.m == 1:
        return 0
    left, right = twin_pair(spec, group)
    peaks = find_peaks(spec, left.x - feature_width(spec), right.x + feature_width(spec))
    return sum(1 for p in peaks if left.x + 1e-9 < p.x < right.x - 1e-9)


class DesignResult(BaseModel):
    spec: StructureSpec
    dk1: float
    dk2: float
    matched_peaks: tuple[Peak, Peak]
    residuals: tuple[float, float]
    score: float = Field(ge=0)


class DesignSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_results: int = Field(default=20, ge=1)
    side_orders: int = Field(default=1, ge=0, description="subsidiary peaks per side beyond the twins")
    allow_odd: bool = False
    workers: int = Field(default=1, ge=1)
    chi0: float = Field(default=1.0, gt=0)
    min_height: float = Field(
        default=0.0, ge=0, lt=1,
        description="maxima with |Y| below this never match a target; 0 accepts every maximum",
    )


def nearest_peak(spec: StructureSpec, x: float, min_height: float = 0.0) -> float:
    """Refined maximum of |Y| nearest x, among the maxima find_peaks reports.

    The window doubles from two feature widths either side of x until it holds
    a maximum with |Y| >= min_height. Ties go to the smaller x.
    """
    reach = 2.0 * feature_width(spec)
    while reach <= 2.0 * math.pi:
        found = [p for p in _maxima(spec, x - reach, x + reach)
                 if abs(float(y_of_x(p, spec))) >= min_height]
        if found:
            return min(found, key=lambda p: (abs(p - x), p))
        reach *= 2.0
    raise ValueError(f"no maximum of |Y| >= {min_height} within {0.5 * reach:.3g} of x={x}")


def _twin_index(spec: StructureSpec, x: float) -> int:
    """0/1 for twins, 2a + side for the a-th subsidiary lattice peak."""
    offset = (x - HALF_PI - group_of(x) * math.pi) * 2 * spec.n / math.pi
    odd = int(round(abs(offset)))
    if spec.m == 1 or odd == 0:
        return 2 + odd // 2
    side = 0 if offset < 0 else 1
    a = max(0, (odd - 1) // 2)
    return 2 * a + side


def evaluate_design(spec: StructureSpec, dk1: float, dk2: float,
                    settings: DesignSettings | None = None) -> DesignResult:
    """Score a given lattice against two targets by the nearest maxima of |Y|."""
    min_height = settings.min_height if settings else 0.0
    matched = []
    residuals = []
    for dk in (dk1, dk2):
        x_target = 0.5 * spec.l * dk
        xp = nearest_peak(spec, x_target, min_height)
        matched.append(make_peak(spec, xp, _twin_index(spec, xp)))
        residuals.append(abs(x_target - xp))
    score = max(r / p.fwhm_x for r, p in zip(residuals, matched))
    return DesignResult(spec=spec, dk1=dk1, dk2=dk2, matched_peaks=tuple(matched),
                        residuals=tuple(residuals), score=score)


def _candidates(n: int, x_lo: float, x_hi: float, side_orders: int) -> list[float]:
    k_lo = math.floor((x_lo - HALF_PI) / math.pi) - 1
    k_hi = math.ceil((x_hi - HALF_PI) / math.pi) + 1
    out = []
    for k in range(k_lo, k_hi + 1):
        centre = HALF_PI + k * math.pi
        for a in range(side_orders + 1):
            for sign in (-1, 1):
                x = centre + sign * (2 * a + 1) * math.pi / (2 * n)
                if x_lo <= x <= x_hi:
                    out.append(x)
    return out


def _search_pair(n: int, m: int, dk1: float, dk2: float, l_range: tuple[float, float],
                 settings: DesignSettings) -> list[DesignResult]:
    l_lo, l_hi = l_range
    unit = StructureSpec(l=1.0, n=n, m=m, chi0=settings.chi0)
    ends = sorted((0.5 * l_lo * dk1, 0.5 * l_hi * dk1))
    # widen by a feature so peaks pulled off the lattice are not lost at the edges
    margin = feature_width(unit)
    results = []
    seen = set()
    for x0 in _candidates(n, ends[0] - margin, ends[1] + margin, settings.side_orders):
        xp = refine_peak(unit, x0)
        l = 2.0 * xp / dk1
        if not l_lo <= l <= l_hi:
            continue
        key = round(l, 12)
        if key in seen or abs(float(y_of_x(xp, unit))) < settings.min_height:
            continue
        seen.add(key)
        try:
            results.append(evaluate_design(unit.model_copy(update={"l": l}), dk1, dk2, settings))
        except ValueError as exc:
            logger.debug("N=%d M=%d l=%.6g skipped: %s", n, m, l, exc)
    return results


def design_search(dk1: float, dk2: float, l_range: tuple[float, float],
                  n_range: tuple[int, int], m_range: tuple[int, int],
                  settings: DesignSettings | None = None) -> list[DesignResult]:
    """Enumerate lattices that put dk1 exactly on a peak and rank them by how well dk2 lands.

    Ranges are inclusive. Results are ordered by (score, N, M, l) and capped
    at settings.max_results; an empty list means no candidate fits the ranges.
    """
    settings = settings or DesignSettings()
    for name, value in (("dk1", dk1), ("dk2", dk2)):
        if not math.isfinite(value) or value == 0.0:
            raise ValueError(f"{name} must be finite and nonzero, got {value}")
    if not 0 < l_range[0] <= l_range[1]:
        raise ValueError(f"l_range must satisfy 0 < lo <= hi, got {l_range}")
    if not 1 <= n_range[0] <= n_range[1]:
        raise ValueError(f"n_range must satisfy 1 <= lo <= hi, got {n_range}")
    if not 1 <= m_range[0] <= m_range[1]:
        raise ValueError(f"m_range must satisfy 1 <= lo <= hi, got {m_range}")

    ns = [n for n in range(n_range[0], n_range[1] + 1) if settings.allow_odd or n % 2 == 0]
    pairs = [(n, m) for n in ns for m in range(m_range[0], m_range[1] + 1)]
    logger.debug("design search over %d (N, M) pairs", len(pairs))

    search = lambda pair: _search_pair(pair[0], pair[1], dk1, dk2, l_range, settings)
    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            batches = list(pool.map(search, pairs))
    else:
        batches = [search(pair) for pair in pairs]

    results = [r for batch in batches for r in batch]
    results.sort(key=lambda r: (r.score, r.spec.n, r.spec.m, r.spec.l))
    logger.info("design search: %d candidates, keeping %d", len(results), min(len(results), settings.max_results))
    return results[:settings.max_results]

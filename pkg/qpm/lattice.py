"""Phase-reversed superlattice description and its explicit signed-segment realization."""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)


class StructureSpec(BaseModel):
    """A superlattice of M blocks, each holding N domains of length l (um)."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    l: float = Field(gt=0, description="domain length, um")
    n: int = Field(ge=1, description="domains per block N")
    m: int = Field(ge=1, description="number of blocks M")
    chi0: float = Field(default=1.0, gt=0, description="susceptibility magnitude")

    @model_validator(mode="after")
    def _warn_odd_n(self) -> "StructureSpec":
        if self.degenerate:
            logger.warning(
                "N=%d is odd: the block sign pattern degenerates to uniform alternation", self.n)
        return self

    @property
    def degenerate(self) -> bool:
        """True when N is odd and no effective phase reversal happens."""
        return self.n % 2 == 1

    @property
    def d(self) -> float:
        return 2.0 * self.l

    @property
    def period_ph(self) -> float:
        """Phase-reversal period, 2*N*l."""
        return 2.0 * self.n * self.l

    @property
    def length(self) -> float:
        """Total length L = M*N*l."""
        return self.m * self.n * self.l

    @property
    def g_vector(self) -> float:
        return math.pi / self.l

    @property
    def f_vector(self) -> float:
        return math.pi / (self.n * self.l)

    def scaled(self, factor: float) -> "StructureSpec":
        """Same lattice with every length multiplied by factor."""
        return self.model_copy(update={"l": self.l * factor})


class Segment(BaseModel):
    model_config = ConfigDict(frozen=True)

    length: float = Field(gt=0)
    chi: float


class SegmentList(BaseModel):
    """Ordered segments from z = 0 to z = L."""
    model_config = ConfigDict(frozen=True)

    segments: list[Segment] = Field(min_length=1)

    @property
    def total_length(self) -> float:
        return math.fsum(s.length for s in self.segments)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([s.length for s in self.segments], dtype=float)

    @property
    def chis(self) -> np.ndarray:
        return np.array([s.chi for s in self.segments], dtype=float)

    @property
    def edges(self) -> np.ndarray:
        """Left edge of every segment plus the right end, length len(segments) + 1."""
        return np.concatenate(([0.0], np.cumsum(self.lengths)))

    @property
    def signs(self) -> list[int]:
        return [1 if s.chi > 0 else -1 for s in self.segments]

    def __len__(self) -> int:
        return len(self.segments)

    def sign_flips(self) -> int:
        signs = self.signs
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def segment_signs(spec: StructureSpec) -> np.ndarray:
    """Sign of every domain: (-1)**p * (-1)**b for domain j = b*N + p.

    The reversal square wave restarts at every block boundary, so the two
    domains meeting at a boundary share a sign for even N and the pattern
    collapses to plain alternation for odd N.
    """
    j = np.arange(spec.m * spec.n)
    block, pos = np.divmod(j, spec.n)
    return np.where((block + pos) % 2 == 0, 1.0, -1.0)


def build_segments(spec: StructureSpec) -> SegmentList:
    signs = segment_signs(spec)
    return SegmentList(segments=[Segment(length=spec.l, chi=float(s) * spec.chi0) for s in signs])


def chi_of_z(spec: StructureSpec, z):
    """Signed susceptibility at position z; a boundary belongs to the segment on its right.

    z = L returns the last segment's value.
    """
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > spec.length):
        raise ValueError(f"z must lie in [0, L={spec.length}], got {z!r}")
    count = spec.m * spec.n
    index = np.minimum(np.floor(arr / spec.l).astype(int), count - 1)
    signs = segment_signs(spec)
    out = signs[index] * spec.chi0
    return float(out) if out.ndim == 0 else out

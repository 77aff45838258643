"""Half-open score bins ``[origin + k*width, origin + (k+1)*width)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from ..core import RATING, PaperRecord

EDGE_TOL = 1e-9


@dataclass(frozen=True)
class Bin:
    index: int
    lo: float
    hi: float


@dataclass(frozen=True)
class Binning:
    width: float = 0.2
    origin: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("bin width must be positive")

    def index(self, x: float) -> int:
        # values within EDGE_TOL of an edge snap onto it, then go to the upper bin
        q = (x - self.origin) / self.width
        r = round(q)
        if abs(q - r) <= EDGE_TOL * max(1.0, abs(q)):
            return int(r)
        return math.floor(q)

    def bin(self, k: int) -> Bin:
        lo = round(self.origin + k * self.width, 12)
        hi = round(self.origin + (k + 1) * self.width, 12)
        return Bin(k, lo, hi)

    def locate(self, x: float) -> Bin:
        return self.bin(self.index(x))


def bin_scores(
    papers: Iterable[PaperRecord], binning: Binning = Binning(), dimension: str = RATING
) -> dict[str, Bin]:
    """Assign each paper's mean score on ``dimension`` to a bin; unscored papers are skipped."""
    out = {}
    for p in papers:
        mean = p.dimension_avg(dimension)
        if mean is not None:
            out[p.paper_id] = binning.locate(mean)
    return out

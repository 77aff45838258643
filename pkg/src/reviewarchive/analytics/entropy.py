"""Decision entropy of tier assignment within mean-score bins."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ..core import RATING, TIERS, DecisionStatus, PaperRecord
from ..errors import EmptyYear
from .binning import Binning

LN4 = math.log(4)


def shannon_entropy(counts: Iterable[int]) -> float:
    """Natural-log entropy of a count vector, with 0·log 0 = 0."""
    counts = [c for c in counts if c > 0]
    n = sum(counts)
    if n == 0:
        return 0.0
    return 0.0 - math.fsum((c / n) * math.log(c / n) for c in counts)


@dataclass(frozen=True)
class BinEntropy:
    index: int
    lo: float
    hi: float
    count: int
    probabilities: Mapping[DecisionStatus, float]
    entropy: float


@dataclass(frozen=True)
class EntropyReport:
    year: int | None
    binning: Binning
    bins: tuple[BinEntropy, ...]
    weights: tuple[float, ...]
    h_bar: float
    n_papers: int
    excluded_non_tier: int
    excluded_unrated: int


def entropy_from_pairs(
    means: Sequence[float], statuses: Sequence[DecisionStatus], binning: Binning = Binning(), year: int | None = None
) -> EntropyReport:
    tally: dict[int, Counter] = defaultdict(Counter)
    for x, s in zip(means, statuses):
        tally[binning.index(x)][s] += 1
    n_total = sum(sum(c.values()) for c in tally.values())
    if n_total == 0:
        raise EmptyYear(f"no tiered, rated papers for year {year}")
    bins, weights = [], []
    for k in sorted(tally):
        counts = tally[k]
        n = sum(counts.values())
        b = binning.bin(k)
        bins.append(
            BinEntropy(
                index=k,
                lo=b.lo,
                hi=b.hi,
                count=n,
                probabilities={s: counts[s] / n for s in TIERS},
                entropy=shannon_entropy(counts[s] for s in TIERS),
            )
        )
        weights.append(n / n_total)
    h_bar = math.fsum(w * b.entropy for w, b in zip(weights, bins))
    return EntropyReport(
        year=year,
        binning=binning,
        bins=tuple(bins),
        weights=tuple(weights),
        h_bar=h_bar,
        n_papers=n_total,
        excluded_non_tier=0,
        excluded_unrated=0,
    )


def decision_entropy(papers: Iterable[PaperRecord], binning: Binning = Binning(), dimension: str = RATING) -> EntropyReport:
    """Per-bin tier entropy and its count-weighted mean for one venue-year.

    Papers outside the four decision tiers and papers without a score on
    ``dimension`` are excluded and tallied in the report.
    """
    papers = list(papers)
    years = {p.year for p in papers}
    if len(years) > 1:
        raise ValueError(f"decision_entropy expects a single year, got {sorted(years)}")
    means, statuses = [], []
    non_tier = unrated = 0
    for p in papers:
        if not p.final_status.is_tier:
            non_tier += 1
            continue
        m = p.dimension_avg(dimension)
        if m is None:
            unrated += 1
            continue
        means.append(m)
        statuses.append(p.final_status)
    year = years.pop() if years else None
    rep = entropy_from_pairs(means, statuses, binning, year)
    return EntropyReport(
        year=rep.year,
        binning=rep.binning,
        bins=rep.bins,
        weights=rep.weights,
        h_bar=rep.h_bar,
        n_papers=rep.n_papers,
        excluded_non_tier=non_tier,
        excluded_unrated=unrated,
    )

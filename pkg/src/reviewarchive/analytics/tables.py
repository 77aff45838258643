"""Group-by tables over paper records: tier statistics, score combinations, status grids."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..core import CONFIDENCE, RATING, DecisionStatus, PaperRecord
from .binning import Binning


@dataclass(frozen=True)
class TierStat:
    year: int
    status: DecisionStatus
    mean: float
    variance: float
    count: int


def _mean_var(values):
    n = len(values)
    mean = math.fsum(values) / n
    return mean, math.fsum((v - mean) ** 2 for v in values) / n


def tier_stats(papers: Iterable[PaperRecord], dimension: str = RATING) -> list[TierStat]:
    """Mean and population variance of per-paper mean scores, by (year, status)."""
    groups: dict[tuple[int, DecisionStatus], list[float]] = defaultdict(list)
    for p in papers:
        m = p.dimension_avg(dimension)
        if m is not None:
            groups[(p.year, p.final_status)].append(m)
    order = list(DecisionStatus)
    rows = []
    for (year, status) in sorted(groups, key=lambda k: (k[0], order.index(k[1]))):
        mean, var = _mean_var(groups[(year, status)])
        rows.append(TierStat(year, status, mean, var, len(groups[(year, status)])))
    return rows


@dataclass(frozen=True)
class CombinationRow:
    combination: tuple[float, ...]
    count: int
    accepted: int
    acceptance_rate: float
    mean: float
    score_range: float


def acceptance_by_combination(
    papers: Iterable[PaperRecord], cutoff: int = 30, dimension: str = RATING
) -> list[CombinationRow]:
    """Acceptance rate per sorted multiset of final scores.

    Only papers with a tier decision count; Withdrawn, Desk-Reject and
    Unknown are left out of the denominators. Combinations seen fewer than
    ``cutoff`` times are dropped. Rows are ordered by (mean, combination).
    """
    counts: Counter = Counter()
    accepted: Counter = Counter()
    for p in papers:
        if not p.final_status.is_tier:
            continue
        scores = p.scores_of(dimension)
        if not scores:
            continue
        key = tuple(sorted(scores))
        counts[key] += 1
        accepted[key] += p.final_status.accepted
    rows = []
    for key, n in counts.items():
        if n < cutoff:
            continue
        rows.append(
            CombinationRow(
                combination=key,
                count=n,
                accepted=accepted[key],
                acceptance_rate=accepted[key] / n,
                mean=math.fsum(key) / len(key),
                score_range=key[-1] - key[0],
            )
        )
    rows.sort(key=lambda r: (r.mean, r.combination))
    return rows


@dataclass(frozen=True)
class GridCell:
    year: int
    index: int
    lo: float
    hi: float
    volume: int
    proportions: Mapping[DecisionStatus, float]


def status_mix_by_bin(
    papers: Iterable[PaperRecord], dimension: str = RATING, binning: Binning = Binning()
) -> list[GridCell]:
    """Status proportions and paper volume per (year, bin of the per-paper mean)."""
    if dimension not in (RATING, CONFIDENCE):
        raise ValueError("dimension must be rating or confidence")
    cells: dict[tuple[int, int], Counter] = defaultdict(Counter)
    for p in papers:
        m = p.dimension_avg(dimension)
        if m is None:
            continue
        cells[(p.year, binning.index(m))][p.final_status] += 1
    out = []
    for (year, k) in sorted(cells):
        c = cells[(year, k)]
        n = sum(c.values())
        b = binning.bin(k)
        out.append(
            GridCell(
                year=year,
                index=k,
                lo=b.lo,
                hi=b.hi,
                volume=n,
                proportions={s: c[s] / n for s in DecisionStatus if c[s]},
            )
        )
    return out


@dataclass(frozen=True)
class GroupRow:
    group: str
    papers: int
    accepted: int
    acceptance_rate: float


def _group_values(p: PaperRecord, key: str) -> set[str]:
    if key == "year":
        return {str(p.year)}
    if key == "institution":
        return {f.institution for a in p.authors for f in a.affiliations if f.institution}
    if key == "country":
        return {f.country for a in p.authors for f in a.affiliations if f.country}
    raise ValueError(f"unknown group key {key!r}")


def aggregate_by_group(papers: Iterable[PaperRecord], key: str = "institution") -> list[GroupRow]:
    """Paper counts and acceptance rates per institution, country or year.

    A paper counts once for every distinct group value among its authors, so
    two co-authors from the same institution add one paper to it, not two.
    Papers with no value for the key are skipped. The acceptance-rate
    denominator is all papers in the group.
    """
    n: Counter = Counter()
    acc: Counter = Counter()
    for p in papers:
        for g in _group_values(p, key):
            n[g] += 1
            acc[g] += p.final_status.accepted
    return [GroupRow(g, n[g], acc[g], acc[g] / n[g]) for g in sorted(n)]

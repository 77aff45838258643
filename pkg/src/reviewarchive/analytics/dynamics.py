"""Rebuttal-phase dynamics computed from the snapshot archive."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Sequence

from ..archive import SnapshotArchive
from ..core import RATING, DecisionStatus, PaperRecord, VenueConfig
from ..errors import MissingPhaseDates, UnknownPaper
from .binning import Binning
from .tables import CombinationRow, acceptance_by_combination

FLAT_TOL = 1e-12


def _mean_dim(state: Mapping[str, Mapping[str, float]], dimension: str) -> float | None:
    vals = [s[dimension] for s in state.values() if dimension in s]
    return math.fsum(vals) / len(vals) if vals else None


def _phases(cfg: VenueConfig):
    if cfg.phase_dates is None:
        raise MissingPhaseDates(f"{cfg.venue} {cfg.year} has no phase dates")
    return cfg.phase_dates


@dataclass(frozen=True)
class PrePost:
    paper_id: str
    pre: float
    post: float


@dataclass(frozen=True)
class PrePostReport:
    samples: Mapping[DecisionStatus, tuple[PrePost, ...]]
    excluded: int


def prepost_distributions(
    archive: SnapshotArchive, cfg: VenueConfig, papers: Iterable[PaperRecord], dimension: str = RATING
) -> PrePostReport:
    """Mean score at the start of discussion versus the terminal mean, grouped by final status.

    Papers with no scored review by ``discussion_start`` (or absent from the
    archive) are excluded and counted.
    """
    t0 = _phases(cfg).discussion_start
    samples: dict[DecisionStatus, list[PrePost]] = defaultdict(list)
    excluded = 0
    for p in sorted(papers, key=lambda r: r.paper_id):
        try:
            pre = _mean_dim(archive.state_at(p.paper_id, t0), dimension)
            post = _mean_dim(archive.terminal_state(p.paper_id), dimension)
        except UnknownPaper:
            excluded += 1
            continue
        if pre is None or post is None:
            excluded += 1
            continue
        samples[p.final_status].append(PrePost(p.paper_id, pre, post))
    order = list(DecisionStatus)
    return PrePostReport(
        samples={s: tuple(samples[s]) for s in sorted(samples, key=order.index)},
        excluded=excluded,
    )


@dataclass(frozen=True)
class Flow:
    src_bin: float
    dst_bin: float
    status: DecisionStatus
    direction: str
    count: int


def direction_of(pre: float, post: float) -> str:
    d = post - pre
    if d > FLAT_TOL:
        return "up"
    if d < -FLAT_TOL:
        return "down"
    return "flat"


def flow_matrix(
    archive: SnapshotArchive,
    cfg: VenueConfig,
    papers: Iterable[PaperRecord],
    binning: Binning = Binning(),
    dimension: str = RATING,
) -> list[Flow]:
    """Sankey flows initial bin -> final bin -> status, one unit per paper.

    Bins are identified by their lower edge. Direction follows the sign of
    the change in mean score, not the bin change.
    """
    pp = prepost_distributions(archive, cfg, papers, dimension)
    tally: dict[tuple, int] = defaultdict(int)
    for status, rows in pp.samples.items():
        for r in rows:
            key = (binning.locate(r.pre).lo, binning.locate(r.post).lo, status, direction_of(r.pre, r.post))
            tally[key] += 1
    order = list(DecisionStatus)
    keys = sorted(tally, key=lambda k: (k[0], k[1], order.index(k[2]), k[3]))
    return [Flow(*k, tally[k]) for k in keys]


def _window(cfg: VenueConfig, window):
    if window is not None:
        return window
    if cfg.phase_dates is None:
        return None
    return (cfg.phase_dates.discussion_start, cfg.phase_dates.discussion_end)


def dimension_update_fractions(
    archive: SnapshotArchive,
    cfg: VenueConfig,
    paper_ids: Iterable[str] | None = None,
    window: tuple[datetime, datetime] | None = None,
) -> dict[str, float]:
    """Per schema dimension, the fraction of papers with at least one score change.

    Only value-to-value changes count (review arrivals and removals do not),
    and only those observed in ``(start, end]`` of the discussion window,
    which defaults to the venue's discussion phase. Without phase dates every
    change counts. The denominator is the papers in the archive (or
    ``paper_ids``).
    """
    ids = sorted(paper_ids) if paper_ids is not None else archive.paper_ids()
    win = _window(cfg, window)
    changed: dict[str, int] = {d: 0 for d in cfg.schema.names}
    for pid in ids:
        dims = set()
        for ev in archive.events(pid):
            if ev.old_value is None or ev.new_value is None:
                continue
            if win is not None and not (win[0] < ev.observed_at <= win[1]):
                continue
            dims.add(ev.dimension)
        for d in dims:
            changed[d] = changed.get(d, 0) + 1
    n = len(ids)
    return {d: (changed[d] / n if n else 0.0) for d in changed}


def daily_grid(start: datetime, end: datetime, step: timedelta = timedelta(days=1)) -> tuple[datetime, ...]:
    out, t = [], start
    while t <= end:
        out.append(t)
        t += step
    return tuple(out)


@dataclass(frozen=True)
class ConsensusSeries:
    grid: tuple[datetime, ...]
    mean_range: Mapping[DecisionStatus, tuple[float | None, ...]]
    counts: Mapping[DecisionStatus, tuple[int, ...]]
    discussion_start: datetime | None


def consensus_series(
    archive: SnapshotArchive,
    papers: Iterable[PaperRecord],
    grid: Sequence[datetime],
    cfg: VenueConfig | None = None,
    dimension: str = RATING,
) -> ConsensusSeries:
    """Mean (max - min) score spread per final-status group at each grid instant.

    A paper enters the mean at an instant only when it has at least two
    scored reviews then. Instants where no paper qualifies give ``None``.
    """
    groups: dict[DecisionStatus, list[str]] = defaultdict(list)
    for p in papers:
        groups[p.final_status].append(p.paper_id)
    known = set(archive.paper_ids())
    means, counts = {}, {}
    order = list(DecisionStatus)
    for status in sorted(groups, key=order.index):
        ms, cs = [], []
        for t in grid:
            spreads = []
            for pid in groups[status]:
                if pid not in known:
                    continue
                vals = [s[dimension] for s in archive.state_at(pid, t).values() if dimension in s]
                if len(vals) >= 2:
                    spreads.append(max(vals) - min(vals))
            ms.append(math.fsum(spreads) / len(spreads) if spreads else None)
            cs.append(len(spreads))
        means[status] = tuple(ms)
        counts[status] = tuple(cs)
    marker = cfg.phase_dates.discussion_start if cfg is not None and cfg.phase_dates else None
    return ConsensusSeries(grid=tuple(grid), mean_range=means, counts=counts, discussion_start=marker)


@dataclass(frozen=True)
class DynamicsReport:
    prepost: PrePostReport
    flows: tuple[Flow, ...]
    update_fractions: Mapping[str, float]
    consensus: ConsensusSeries
    combinations: tuple[CombinationRow, ...]


def dynamics_report(
    archive: SnapshotArchive,
    cfg: VenueConfig,
    papers: Sequence[PaperRecord],
    binning: Binning = Binning(),
    grid: Sequence[datetime] | None = None,
    cutoff: int = 30,
) -> DynamicsReport:
    phases = _phases(cfg)
    archived = set(archive.paper_ids())
    if grid is None:
        grid = daily_grid(phases.review_release, phases.decision)
    return DynamicsReport(
        prepost=prepost_distributions(archive, cfg, papers),
        flows=tuple(flow_matrix(archive, cfg, papers, binning)),
        update_fractions=dimension_update_fractions(archive, cfg, [p.paper_id for p in papers if p.paper_id in archived]),
        consensus=consensus_series(archive, papers, grid, cfg),
        combinations=tuple(acceptance_by_combination(papers, cutoff)),
    )

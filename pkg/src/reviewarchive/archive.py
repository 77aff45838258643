"""Append-only store of timestamped review snapshots.

On disk an archive is a directory holding ``events.ndjson`` (one canonical
snapshot per line, append-only) and ``index.json``, a sidecar with the
newest content hash per (paper, reviewer). The sidecar is a cache: it is
rebuilt from the log on open and rewritten after each append.

Canonical line format: JSON with sorted keys, ``","``/``":"`` separators,
instants rendered by ``format_instant``, scores rendered as integers when
integral and as the shortest round-tripping float otherwise.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .core import format_instant, parse_instant
from .errors import ClockSkew, KeyMismatch, UnknownPaper

logger = logging.getLogger(__name__)

DEFAULT_SKEW_TOLERANCE = timedelta(minutes=5)
EVENTS_FILE = "events.ndjson"
INDEX_FILE = "index.json"


def _canon_score(v: float | None):
    if v is None:
        return None
    v = float(v)
    return int(v) if v.is_integer() else v


def canonical_scores(scores: Mapping[str, float | None]) -> str:
    return json.dumps(
        {k: _canon_score(scores[k]) for k in sorted(scores)},
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    )


def scores_hash(scores: Mapping[str, float | None]) -> str:
    return hashlib.sha256(canonical_scores(scores).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ReviewSnapshot:
    paper_id: str
    reviewer_id: str
    captured_at: datetime
    scores: Mapping[str, float]
    content_hash: str = ""

    def __post_init__(self):
        # drop explicit nulls: an absent dimension and a null one are the same state
        clean = {k: float(v) for k, v in self.scores.items() if v is not None}
        object.__setattr__(self, "scores", dict(sorted(clean.items())))
        object.__setattr__(self, "content_hash", scores_hash(clean))

    @property
    def key(self) -> tuple[str, str]:
        return (self.paper_id, self.reviewer_id)

    def to_line(self) -> str:
        return json.dumps(
            {
                "captured_at": format_instant(self.captured_at),
                "content_hash": self.content_hash,
                "paper_id": self.paper_id,
                "reviewer_id": self.reviewer_id,
                "scores": {k: _canon_score(v) for k, v in self.scores.items()},
            },
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )

    @classmethod
    def from_line(cls, line: str) -> "ReviewSnapshot":
        d = json.loads(line)
        snap = cls(
            paper_id=d["paper_id"],
            reviewer_id=d["reviewer_id"],
            captured_at=parse_instant(d["captured_at"]),
            scores=d["scores"],
        )
        if d.get("content_hash") and d["content_hash"] != snap.content_hash:
            raise ValueError(f"corrupt archive line for {snap.key}: hash mismatch")
        return snap


@dataclass(frozen=True)
class ScoreChangeEvent:
    paper_id: str
    reviewer_id: str
    dimension: str
    old_value: float | None
    new_value: float | None
    observed_at: datetime

    @property
    def is_arrival(self) -> bool:
        return self.old_value is None

    @property
    def is_removal(self) -> bool:
        return self.new_value is None


@dataclass(frozen=True)
class ScoreFootprint:
    paper_id: str
    series: Mapping[str, Mapping[str, tuple[tuple[datetime, float | None], ...]]]

    def terminal(self) -> dict[str, dict[str, float]]:
        """Last value per reviewer and dimension (removed dimensions omitted)."""
        out: dict[str, dict[str, float]] = {}
        for reviewer, dims in self.series.items():
            vals = {d: pts[-1][1] for d, pts in dims.items() if pts[-1][1] is not None}
            out[reviewer] = dict(sorted(vals.items()))
        return out


def diff(earlier: ReviewSnapshot, later: ReviewSnapshot) -> list[ScoreChangeEvent]:
    """Change events between two captures of the same review, ordered by dimension."""
    if earlier.key != later.key:
        raise KeyMismatch(f"{earlier.key} vs {later.key}")
    if not earlier.captured_at < later.captured_at:
        raise ValueError("earlier snapshot must be captured strictly before later")
    events = []
    for dim in sorted(set(earlier.scores) | set(later.scores)):
        old, new = earlier.scores.get(dim), later.scores.get(dim)
        if old != new:
            events.append(
                ScoreChangeEvent(
                    paper_id=later.paper_id,
                    reviewer_id=later.reviewer_id,
                    dimension=dim,
                    old_value=old,
                    new_value=new,
                    observed_at=later.captured_at,
                )
            )
    return events


def apply_events(scores: Mapping[str, float], events: Iterable[ScoreChangeEvent]) -> dict[str, float]:
    state = dict(scores)
    for ev in events:
        if ev.new_value is None:
            state.pop(ev.dimension, None)
        else:
            state[ev.dimension] = ev.new_value
    return dict(sorted(state.items()))


class SnapshotArchive:
    """Single-writer, many-reader snapshot log; in memory when ``path`` is None."""

    def __init__(self, path: str | Path | None = None, skew_tolerance: timedelta = DEFAULT_SKEW_TOLERANCE):
        self.path = Path(path) if path is not None else None
        self.skew_tolerance = skew_tolerance
        self._log: list[ReviewSnapshot] = []
        self._by_key: dict[tuple[str, str], list[ReviewSnapshot]] = defaultdict(list)
        self._by_paper: dict[str, list[tuple[str, str]]] = defaultdict(list)
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.mkdir(parents=True, exist_ok=True)
            events = self.path / EVENTS_FILE
            if events.exists():
                with open(events, encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            self._index(ReviewSnapshot.from_line(line))
            self._write_index()

    # -- writing ---------------------------------------------------------

    def _index(self, snap: ReviewSnapshot) -> None:
        self._log.append(snap)
        if snap.key not in self._by_key:
            self._by_paper[snap.paper_id].append(snap.key)
        self._by_key[snap.key].append(snap)

    def _write_index(self) -> None:
        newest = {f"{p}\t{r}": snaps[-1].content_hash for (p, r), snaps in sorted(self._by_key.items())}
        tmp = self.path / (INDEX_FILE + ".tmp")
        tmp.write_text(json.dumps({"entries": len(self._log), "newest": newest}, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.path / INDEX_FILE)

    def append(self, snap: ReviewSnapshot, index: bool = True) -> bool:
        """Store ``snap`` unless it repeats the newest stored state for its key.

        A capture older than the newest stored one by more than the skew
        tolerance raises ``ClockSkew``. A smaller backwards step is stored
        one microsecond after the newest capture so per-key time stays
        strictly increasing.
        """
        with self._lock:
            history = self._by_key.get(snap.key)
            if history:
                newest = history[-1]
                if newest.content_hash == snap.content_hash:
                    return False
                if snap.captured_at <= newest.captured_at:
                    if newest.captured_at - snap.captured_at > self.skew_tolerance:
                        logger.error("clock skew for %s: %s < %s", snap.key, snap.captured_at, newest.captured_at)
                        raise ClockSkew(
                            f"{snap.key}: capture {format_instant(snap.captured_at)} precedes "
                            f"stored {format_instant(newest.captured_at)}"
                        )
                    snap = ReviewSnapshot(
                        paper_id=snap.paper_id,
                        reviewer_id=snap.reviewer_id,
                        captured_at=newest.captured_at + timedelta(microseconds=1),
                        scores=snap.scores,
                    )
            if self.path is not None:
                with open(self.path / EVENTS_FILE, "a", encoding="utf-8") as fh:
                    fh.write(snap.to_line() + "\n")
            self._index(snap)
            if self.path is not None and index:
                self._write_index()
            return True

    def extend(self, snaps: Iterable[ReviewSnapshot]) -> int:
        """Append many snapshots, rewriting the index sidecar once at the end."""
        added = sum(self.append(s, index=False) for s in snaps)
        if self.path is not None and added:
            with self._lock:
                self._write_index()
        return added

    # -- reading ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._log)

    def __iter__(self) -> Iterator[ReviewSnapshot]:
        return iter(list(self._log))

    def paper_ids(self) -> list[str]:
        return sorted(self._by_paper)

    def reviewers(self, paper_id: str) -> list[str]:
        if paper_id not in self._by_paper:
            raise UnknownPaper(paper_id)
        return sorted(r for _, r in self._by_paper[paper_id])

    def history(self, paper_id: str, reviewer_id: str) -> list[ReviewSnapshot]:
        if paper_id not in self._by_paper:
            raise UnknownPaper(paper_id)
        return list(self._by_key.get((paper_id, reviewer_id), ()))

    def span(self) -> tuple[datetime, datetime] | None:
        if not self._log:
            return None
        times = [s.captured_at for s in self._log]
        return min(times), max(times)

    def events(self, paper_id: str) -> list[ScoreChangeEvent]:
        """All change events of a paper: consecutive diffs per reviewer, then time-ordered."""
        out: list[ScoreChangeEvent] = []
        for reviewer in self.reviewers(paper_id):
            snaps = self._by_key[(paper_id, reviewer)]
            for a, b in zip(snaps, snaps[1:]):
                out.extend(diff(a, b))
        out.sort(key=lambda e: (e.observed_at, e.reviewer_id, e.dimension))
        return out

    def replay(self, paper_id: str) -> ScoreFootprint:
        """Per-reviewer, per-dimension time series reconstructed from stored snapshots.

        A series starts at the first capture where the dimension has a value;
        a later capture where it disappears contributes a ``None`` point.
        """
        series: dict[str, dict[str, tuple]] = {}
        for reviewer in self.reviewers(paper_id):
            dims: dict[str, list] = defaultdict(list)
            for snap in self._by_key[(paper_id, reviewer)]:
                for dim in sorted(set(snap.scores) | set(dims)):
                    value = snap.scores.get(dim)
                    pts = dims[dim]
                    if not pts or pts[-1][1] != value:
                        pts.append((snap.captured_at, value))
            series[reviewer] = {d: tuple(p) for d, p in sorted(dims.items())}
        return ScoreFootprint(paper_id=paper_id, series=series)

    def state_at(self, paper_id: str, t: datetime) -> dict[str, dict[str, float]]:
        """Scores of the newest capture at or before ``t``, per reviewer."""
        if paper_id not in self._by_paper:
            raise UnknownPaper(paper_id)
        out = {}
        for reviewer in self.reviewers(paper_id):
            snaps = self._by_key[(paper_id, reviewer)]
            i = bisect_right([s.captured_at for s in snaps], t)
            if i:
                out[reviewer] = dict(snaps[i - 1].scores)
        return out

    def terminal_state(self, paper_id: str) -> dict[str, dict[str, float]]:
        if paper_id not in self._by_paper:
            raise UnknownPaper(paper_id)
        return {r: dict(self._by_key[(paper_id, r)][-1].scores) for r in self.reviewers(paper_id)}

    def export_lines(self) -> list[str]:
        return [s.to_line() for s in self._log]


def archive_dir(root: str | Path, venue: str, year: int) -> Path:
    return Path(root) / venue / str(year)

"""Connectors, polite fetching with retries, and ingestion into records + archive.

Raw payloads are written verbatim under ``<raw_root>/<venue>/<year>/<timestamp>.raw``
before anything parses them; normalized records carry the payload's sha256
in their provenance. Replay-from-fixture uses the same layout.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence
from urllib.parse import urlsplit
from urllib.robotparser import RobotFileParser

import httpx

from .archive import ReviewSnapshot, SnapshotArchive, archive_dir
from .core import (
    RATING,
    ConsentRecord,
    DecisionStatus,
    PaperRecord,
    Review,
    Source,
    SourceKind,
    VenueConfig,
    dumps_paperlist,
    format_instant,
    loads_paperlist,
    normalize_batch,
    parse_instant,
    sticky_withdrawn,
)
from .errors import AuthError, EmptyInput, RateLimited, RobotsDisallowed, TransportError

logger = logging.getLogger(__name__)

TOKEN_ENV = "REVIEW_ARCHIVE_TOKEN"
USER_AGENT = "reviewarchive/0.1"
DEFAULT_MIN_INTERVAL = 2.0  # seconds between requests to one host
TIMESTAMP_FMT = "%Y%m%dT%H%M%S%fZ"
COMMUNITY_COLUMNS = (
    "paper_id", "venue", "year", "initial_scores", "final_scores",
    "consent_aggregate", "consent_display", "timestamp",
)


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


# --------------------------------------------------------------------------
# jobs and results


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_base: float = 1.0  # seconds; attempt k waits base * 2**(k-1)

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if not self.backoff_base > 0:
            raise ValueError("backoff_base must be positive")


@dataclass
class ConnectorJob:
    cfg: VenueConfig
    cadence: timedelta = timedelta(days=1)
    retry_policy: RetryPolicy = RetryPolicy()
    last_success: datetime | None = None

    def due(self, now: datetime) -> bool:
        return self.last_success is None or now - self.last_success >= self.cadence


@dataclass(frozen=True)
class FetchResult:
    fetched_at: datetime
    raw_payload: bytes
    record_count: int
    source_kind: SourceKind
    sha256: str
    stored_path: Path | None = None


# --------------------------------------------------------------------------
# politeness


class TokenBucket:
    """Minimum spacing between requests; ``rate`` tokens per second, burst ``capacity``."""

    def __init__(self, rate: float = 1 / DEFAULT_MIN_INTERVAL, capacity: float = 1.0,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        self.rate = rate
        self.capacity = capacity
        self.tokens = capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Block until a token is available; returns the time slept."""
        with self._lock:
            now = self.clock()
            self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
            self.updated = now
            waited = 0.0
            if self.tokens < 1.0:
                waited = (1.0 - self.tokens) / self.rate
                self.sleep(waited)
                self.updated = self.clock()
                self.tokens = 1.0
            self.tokens -= 1.0
            return waited


_HOST_BUCKETS: dict[str, TokenBucket] = {}
_HOST_LOCK = threading.Lock()


def host_bucket(url: str, min_interval: float = DEFAULT_MIN_INTERVAL) -> TokenBucket:
    """The process-wide bucket for a URL's host (created on first use)."""
    host = urlsplit(url).netloc
    with _HOST_LOCK:
        if host not in _HOST_BUCKETS:
            _HOST_BUCKETS[host] = TokenBucket(rate=1 / min_interval)
        return _HOST_BUCKETS[host]


# --------------------------------------------------------------------------
# connectors


def parse_json_papers(payload: bytes) -> list[dict[str, Any]]:
    data = json.loads(payload.decode("utf-8"))
    if isinstance(data, Mapping):
        data = data.get("papers", data.get("notes", []))
    return list(data)


class Connector:
    """Capability-based source interface.

    ``fetch_raw`` returns the payload bytes and, for replayed sources, the
    original capture instant; ``list_papers`` parses a payload into raw
    paper dicts for ``normalize_record``.
    """

    source_kind: SourceKind = SourceKind.API_CONNECTOR
    supports_history = False

    def fetch_raw(self) -> tuple[bytes, datetime | None]:
        raise NotImplementedError

    def list_papers(self, payload: bytes) -> list[dict[str, Any]]:
        return parse_json_papers(payload)


def timestamp_filename(t: datetime) -> str:
    return t.astimezone(timezone.utc).strftime(TIMESTAMP_FMT) + ".raw"


def parse_timestamp_filename(name: str) -> datetime:
    stem = name[: -len(".raw")] if name.endswith(".raw") else name
    for fmt in (TIMESTAMP_FMT, "%Y%m%dT%H%M%SZ"):
        try:
            return datetime.strptime(stem, fmt).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
    raise ValueError(f"fixture file name {name!r} is not a timestamp")


class FixtureConnector(Connector):
    """Replays stored payloads: a single file, or a directory of ``<timestamp>.raw`` files.

    Each fetch returns the next payload in timestamp order; once exhausted
    the last payload repeats, like an unchanged live source.
    """

    supports_history = True

    def __init__(self, path: str | Path, source_kind: SourceKind = SourceKind.API_CONNECTOR):
        self.path = Path(path)
        self.source_kind = source_kind
        if self.path.is_dir():
            self.files = sorted(self.path.glob("*.raw"), key=lambda p: parse_timestamp_filename(p.name))
        elif self.path.exists():
            self.files = [self.path]
        else:
            raise TransportError(f"fixture {self.path} not found")
        if not self.files:
            raise TransportError(f"no .raw payloads under {self.path}")
        self.cursor = 0

    @property
    def pending(self) -> int:
        return len(self.files) - self.cursor

    def skip_before(self, t: datetime) -> None:
        """Resume a replay: move past payloads captured strictly before ``t``."""
        while self.cursor < len(self.files) - 1:
            try:
                ts = parse_timestamp_filename(self.files[self.cursor].name)
            except ValueError:
                break
            if ts >= t:
                break
            self.cursor += 1

    def fetch_raw(self):
        f = self.files[min(self.cursor, len(self.files) - 1)]
        self.cursor = min(self.cursor + 1, len(self.files))
        try:
            captured = parse_timestamp_filename(f.name)
        except ValueError:
            captured = None
        return f.read_bytes(), captured

    def list_papers(self, payload):
        if self.source_kind is SourceKind.COMMUNITY_FORM:
            return read_community_rows(payload.decode("utf-8"))
        return parse_json_papers(payload)


class ApiConnector(Connector):
    """JSON-over-HTTP source (e.g. an open-review platform export endpoint)."""

    supports_history = False

    def __init__(self, endpoint: str, client: httpx.Client | None = None,
                 bucket: TokenBucket | None = None, token: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.client = client or httpx.Client(timeout=timeout, headers={"User-Agent": USER_AGENT})
        self.bucket = bucket or host_bucket(endpoint)
        self.token = token if token is not None else os.environ.get(TOKEN_ENV)

    def _get(self, url: str) -> httpx.Response:
        self.bucket.acquire()
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            resp = self.client.get(url, headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(f"{url}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"{url}: HTTP {resp.status_code}; check ${TOKEN_ENV}")
        if resp.status_code == 429:
            raise RateLimited(f"{url}: HTTP 429")
        if resp.status_code >= 400:
            raise TransportError(f"{url}: HTTP {resp.status_code}")
        return resp

    def fetch_raw(self):
        return self._get(self.endpoint).content, None


class StaticProceedingsConnector(ApiConnector):
    """Static proceedings export (JSON). Refuses paths the host's robots policy disallows."""

    source_kind = SourceKind.STATIC_PROCEEDINGS

    def __init__(self, url: str, **kw):
        super().__init__(url, **kw)
        self._robots: RobotFileParser | None = None

    def allowed(self) -> bool:
        if self._robots is None:
            parts = urlsplit(self.endpoint)
            robots_url = f"{parts.scheme}://{parts.netloc}/robots.txt"
            rp = RobotFileParser()
            try:
                resp = self._get(robots_url)
                rp.parse(resp.text.splitlines())
            except TransportError:
                rp.parse([])  # no robots file: everything allowed
            self._robots = rp
        return self._robots.can_fetch(USER_AGENT, self.endpoint)

    def fetch_raw(self):
        if not self.allowed():
            raise RobotsDisallowed(f"robots policy disallows {self.endpoint}")
        return super().fetch_raw()


class CommunityFormConnector(Connector):
    """A community-form CSV export on disk."""

    source_kind = SourceKind.COMMUNITY_FORM

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def fetch_raw(self):
        if not self.path.exists():
            raise TransportError(f"{self.path} not found")
        return self.path.read_bytes(), None

    def list_papers(self, payload):
        return read_community_rows(payload.decode("utf-8"))


def connector_for(cfg: VenueConfig, fixture: str | Path | None = None) -> Connector:
    if fixture is not None:
        return FixtureConnector(fixture, cfg.source_kind)
    if cfg.source_kind is SourceKind.API_CONNECTOR:
        if not cfg.endpoint:
            raise TransportError(f"{cfg.venue} {cfg.year}: no endpoint configured")
        return ApiConnector(cfg.endpoint)
    if cfg.source_kind is SourceKind.STATIC_PROCEEDINGS:
        if cfg.endpoint:
            return StaticProceedingsConnector(cfg.endpoint)
        if cfg.path:
            return FixtureConnector(cfg.path, cfg.source_kind)
        raise TransportError(f"{cfg.venue} {cfg.year}: no endpoint or path configured")
    if not cfg.path:
        raise TransportError(f"{cfg.venue} {cfg.year}: community form needs a path")
    return CommunityFormConnector(cfg.path)


# --------------------------------------------------------------------------
# fetching


def persist_raw(raw_root: Path, cfg: VenueConfig, fetched_at: datetime, payload: bytes) -> Path:
    d = Path(raw_root) / cfg.venue / str(cfg.year)
    d.mkdir(parents=True, exist_ok=True)
    target = d / timestamp_filename(fetched_at)
    if target.exists() and target.read_bytes() != payload:
        raise FileExistsError(f"{target} exists with different content")
    if not target.exists():
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, target)
    return target


def fetch_snapshot(
    job: ConnectorJob,
    connector: Connector,
    raw_root: str | Path | None = None,
    clock: Callable[[], datetime] = utcnow,
    sleep: Callable[[float], None] = time.sleep,
) -> FetchResult:
    """Fetch one payload with retries, persist it verbatim, then count its records.

    Transport failures and rate limiting are retried with exponential
    backoff up to ``max_attempts``; authentication failures are not retried.
    """
    policy = job.retry_policy
    for attempt in range(1, policy.max_attempts + 1):
        try:
            payload, captured = connector.fetch_raw()
            break
        except AuthError:
            raise
        except (TransportError, RateLimited) as exc:
            logger.warning("%s %s attempt %d/%d failed: %s", job.cfg.venue, job.cfg.year,
                           attempt, policy.max_attempts, exc)
            if attempt == policy.max_attempts:
                raise
            sleep(policy.backoff_base * 2 ** (attempt - 1))
    fetched_at = captured or clock()
    if job.last_success is not None and fetched_at < job.last_success:
        fetched_at = job.last_success
    stored = persist_raw(Path(raw_root), job.cfg, fetched_at, payload) if raw_root is not None else None
    count = len(connector.list_papers(payload))
    job.last_success = fetched_at
    return FetchResult(
        fetched_at=fetched_at,
        raw_payload=payload,
        record_count=count,
        source_kind=connector.source_kind,
        sha256=hashlib.sha256(payload).hexdigest(),
        stored_path=stored,
    )


# --------------------------------------------------------------------------
# community submissions


class RejectReason(str, Enum):
    MISSING_CONSENT = "MissingConsent"
    INVALID_CONSENT = "InvalidConsent"
    SCORE_OUT_OF_RANGE = "ScoreOutOfRange"
    SCORE_OFF_GRID = "ScoreOffGrid"
    MALFORMED_SCORES = "MalformedScores"
    DUPLICATE_SUBMISSION = "DuplicateSubmission"
    VENUE_MISMATCH = "VenueMismatch"
    INVALID_TIMESTAMP = "InvalidTimestamp"
    UNKNOWN_STATUS = "UnknownStatus"


_TRUE = {"1", "true", "yes", "y"}
_FALSE = {"0", "false", "no", "n", ""}


def read_community_rows(text: str) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in COMMUNITY_COLUMNS if c not in (reader.fieldnames or ())]
    if missing:
        raise ValueError(f"community CSV missing columns {missing}")
    return [dict(r) for r in reader]


class _RowError(Exception):
    def __init__(self, reason: RejectReason, detail: str = ""):
        super().__init__(detail)
        self.reason = reason


def _flag(value: Any) -> bool:
    text = str(value if value is not None else "").strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise _RowError(RejectReason.INVALID_CONSENT, text)


def _scores(text: Any, cfg: VenueConfig, required: bool) -> list[float]:
    text = str(text if text is not None else "").strip()
    if not text:
        if required:
            raise _RowError(RejectReason.MALFORMED_SCORES, "no final scores")
        return []
    try:
        values = [float(t) for t in text.split(";")]
    except ValueError:
        raise _RowError(RejectReason.MALFORMED_SCORES, text) from None
    dim = cfg.schema.get(RATING)
    for v in values:
        if not dim.in_range(v):
            raise _RowError(RejectReason.SCORE_OUT_OF_RANGE, f"{v} outside [{dim.scale_min}, {dim.scale_max}]")
        if not dim.on_grid(v):
            raise _RowError(RejectReason.SCORE_OFF_GRID, str(v))
    return values


def _community_record(row: Mapping[str, Any], cfg: VenueConfig) -> PaperRecord:
    if str(row.get("venue", "")).strip() != cfg.venue or str(row.get("year", "")).strip() != str(cfg.year):
        raise _RowError(RejectReason.VENUE_MISMATCH, f"{row.get('venue')} {row.get('year')}")
    aggregate, display = _flag(row.get("consent_aggregate")), _flag(row.get("consent_display"))
    if not (aggregate or display):
        raise _RowError(RejectReason.MISSING_CONSENT)
    try:
        ts = parse_instant(str(row.get("timestamp", "")).strip())
    except ValueError:
        raise _RowError(RejectReason.INVALID_TIMESTAMP, str(row.get("timestamp"))) from None
    final = _scores(row.get("final_scores"), cfg, required=True)
    initial = _scores(row.get("initial_scores"), cfg, required=False)
    if initial and len(initial) != len(final):
        raise _RowError(RejectReason.MALFORMED_SCORES, "initial and final score counts differ")
    try:
        status = cfg.map_status(row.get("status")) if row.get("status") else DecisionStatus.UNKNOWN
    except Exception:
        raise _RowError(RejectReason.UNKNOWN_STATUS, str(row.get("status"))) from None
    pid = str(row["paper_id"]).strip()
    return PaperRecord(
        paper_id=pid,
        venue=cfg.venue,
        year=cfg.year,
        reviews=tuple(
            Review(reviewer_id=f"{pid}-r{i}", scores={RATING: v}, timestamp=ts)
            for i, v in enumerate(final, start=1)
        ),
        final_status=status,
        source=Source.COMMUNITY_SUBMITTED,
        consent=ConsentRecord(aggregate_only=not display, individual_display=display, submitted_at=ts),
        extras={"initial_ratings": initial} if initial else {},
    )


def ingest_community_batch(
    rows: Iterable[Mapping[str, Any]],
    cfg: VenueConfig,
    existing: Iterable[PaperRecord] = (),
) -> tuple[list[PaperRecord], list[tuple[Mapping[str, Any], RejectReason]]]:
    """Validate community form rows; returns accepted records and ``(row, reason)`` rejections.

    Rows need at least one consent answer set. A second submission for the
    same paper (in the batch or in ``existing``) is rejected as a duplicate.
    """
    seen = {r.key for r in existing}
    accepted, rejected = [], []
    for row in rows:
        try:
            rec = _community_record(row, cfg)
            if rec.key in seen:
                raise _RowError(RejectReason.DUPLICATE_SUBMISSION, rec.paper_id)
        except _RowError as exc:
            logger.info("rejected community row %s: %s %s", row.get("paper_id"), exc.reason.value, exc)
            rejected.append((row, exc.reason))
            continue
        seen.add(rec.key)
        accepted.append(rec)
    return accepted, rejected


def community_snapshots(record: PaperRecord, initial_at: datetime) -> list[ReviewSnapshot]:
    """Initial and final rating snapshots for a community record with initial scores."""
    initial = record.extras.get("initial_ratings") or []
    snaps = []
    for i, review in enumerate(record.reviews):
        if initial and initial_at < review.timestamp:
            snaps.append(ReviewSnapshot(record.paper_id, review.reviewer_id, initial_at, {RATING: initial[i]}))
        snaps.append(ReviewSnapshot(record.paper_id, review.reviewer_id, review.timestamp, dict(review.scores)))
    return snaps


@dataclass(frozen=True)
class ConsentStats:
    consented: int
    total: int
    rate: float

    @property
    def percent(self) -> float:
        return round(100.0 * self.rate, 1)


def consent_rate(consented: int, total: int) -> ConsentStats:
    if total <= 0:
        raise EmptyInput("no responses")
    if not 0 <= consented <= total:
        raise ValueError("consented must lie in [0, total]")
    return ConsentStats(consented, total, consented / total)


def consent_stats(records: Sequence[PaperRecord]) -> ConsentStats:
    """Share of community submissions that allow individual display."""
    records = list(records)
    if not records:
        raise EmptyInput("no community records")
    if any(r.source is not Source.COMMUNITY_SUBMITTED for r in records):
        raise ValueError("consent_stats takes community-submitted records only")
    return consent_rate(sum(r.consent.individual_display for r in records), len(records))


# --------------------------------------------------------------------------
# pipeline


@dataclass
class IngestOutcome:
    fetch: FetchResult
    records: list[PaperRecord]
    quarantined: list[tuple[Mapping[str, Any], Exception]]
    rejected: list[tuple[Mapping[str, Any], RejectReason]]
    new_snapshots: int


def records_path(root: str | Path, venue: str, year: int) -> Path:
    return Path(root) / "records" / venue / str(year) / "records.json"


def open_archive(root: str | Path, venue: str, year: int) -> SnapshotArchive:
    """The snapshot archive of a venue-year inside an ingest workspace."""
    return SnapshotArchive(archive_dir(Path(root) / "archive", venue, year))


def load_records(root: str | Path, venue: str, year: int) -> list[PaperRecord]:
    p = records_path(root, venue, year)
    return loads_paperlist(p.read_text(encoding="utf-8")) if p.exists() else []


def save_records(root: str | Path, venue: str, year: int, records: Iterable[PaperRecord]) -> Path:
    p = records_path(root, venue, year)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(".tmp")
    tmp.write_text(dumps_paperlist(sorted(records, key=lambda r: r.key)), encoding="utf-8")
    os.replace(tmp, p)
    return p


def ingest_fetch(
    result: FetchResult,
    connector: Connector,
    cfg: VenueConfig,
    archive: SnapshotArchive,
    previous: Mapping[str, PaperRecord] | None = None,
) -> IngestOutcome:
    """Normalize a fetched payload and append one snapshot per review to ``archive``."""
    previous = previous or {}
    raws = connector.list_papers(result.raw_payload)
    provenance = {"raw_sha256": result.sha256, "fetched_at": format_instant(result.fetched_at)}
    rejected: list = []
    if result.source_kind is SourceKind.COMMUNITY_FORM:
        # records from this very payload are not duplicates of themselves on a re-run
        others = [r for r in previous.values() if r.provenance.get("raw_sha256") != result.sha256]
        recs, rejected = ingest_community_batch(raws, cfg, others)
        quarantined: list = []
    else:
        recs, quarantined = normalize_batch(raws, cfg)
    out, snaps = [], []
    archived = set(archive.paper_ids())
    for rec in recs:
        rec = sticky_withdrawn(previous.get(rec.paper_id), replace(rec, provenance=provenance))
        out.append(rec)
        if result.source_kind is SourceKind.COMMUNITY_FORM and cfg.phase_dates and rec.paper_id not in archived:
            # first sighting: the self-reported initial ratings date from review release
            snaps.extend(community_snapshots(rec, cfg.phase_dates.review_release))
        snaps.extend(ReviewSnapshot(rec.paper_id, rv.reviewer_id, result.fetched_at, dict(rv.scores)) for rv in rec.reviews)
    return IngestOutcome(result, out, quarantined, rejected, archive.extend(snaps))


def run_ingest(
    cfg: VenueConfig,
    root: str | Path,
    connector: Connector,
    once: bool = False,
    job: ConnectorJob | None = None,
    clock: Callable[[], datetime] = utcnow,
    sleep: Callable[[float], None] = time.sleep,
) -> list[IngestOutcome]:
    """Fetch, persist, normalize and archive; replays every pending fixture payload unless ``once``.

    Layout under ``root``: ``raw/``, ``archive/`` and ``records/``, each
    split by ``<venue>/<year>``.
    """
    root = Path(root)
    job = job or ConnectorJob(cfg)
    archive = open_archive(root, cfg.venue, cfg.year)
    current = {r.paper_id: r for r in load_records(root, cfg.venue, cfg.year)}
    seen_at = [parse_instant(r.provenance["fetched_at"]) for r in current.values() if r.provenance.get("fetched_at")]
    if seen_at and job.last_success is None:
        job.last_success = max(seen_at)
    if isinstance(connector, FixtureConnector) and job.last_success is not None:
        connector.skip_before(job.last_success)
    outcomes = []
    while True:
        result = fetch_snapshot(job, connector, root / "raw", clock=clock, sleep=sleep)
        outcome = ingest_fetch(result, connector, cfg, archive, current)
        for rec in outcome.records:
            current[rec.paper_id] = rec
        outcomes.append(outcome)
        logger.info("%s %s: %d records, %d new snapshots", cfg.venue, cfg.year, len(outcome.records), outcome.new_snapshots)
        if once or not isinstance(connector, FixtureConnector) or connector.pending == 0:
            break
    save_records(root, cfg.venue, cfg.year, current.values())
    return outcomes


def run_jobs(jobs: Sequence[tuple[VenueConfig, Connector]], root: str | Path, max_workers: int = 4):
    """Run several venue jobs concurrently; each job owns its own archive directory."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(run_ingest, cfg, root, conn, True) for cfg, conn in jobs]
        return [f.result() for f in futures]

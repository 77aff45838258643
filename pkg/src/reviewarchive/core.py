"""Canonical domain types and the normalization rules shared by every module.

Records produced here are treated as immutable values: dataclasses are frozen
and nothing in the package mutates a record's containers after construction.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import yaml

from .errors import ConfigError, SchemaViolation, UnknownStatusString

logger = logging.getLogger(__name__)

RATING = "rating"
CONFIDENCE = "confidence"
GRID_TOL = 1e-9


# --------------------------------------------------------------------------
# time helpers


def parse_instant(value: Any) -> datetime:
    """Parse an ISO-8601 string, epoch milliseconds, or datetime into aware UTC."""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        dt = datetime.fromtimestamp(value / 1000.0, tz=timezone.utc)
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    else:
        raise ValueError(f"cannot interpret {value!r} as an instant")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_instant(dt: datetime) -> str:
    """Fixed UTC rendering; microseconds only when nonzero."""
    dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


# --------------------------------------------------------------------------
# enums


class DecisionStatus(str, Enum):
    REJECT = "Reject"
    POSTER = "Poster"
    SPOTLIGHT = "Spotlight"
    ORAL = "Oral"
    WITHDRAWN = "Withdrawn"
    DESK_REJECT = "Desk-Reject"
    UNKNOWN = "Unknown"

    @property
    def is_tier(self) -> bool:
        return self in TIERS

    @property
    def rank(self) -> int:
        """Position in Reject < Poster < Spotlight < Oral."""
        if not self.is_tier:
            raise ValueError(f"{self.value} is not a decision tier")
        return TIERS.index(self)

    @property
    def accepted(self) -> bool:
        return self in ACCEPTED


TIERS = (
    DecisionStatus.REJECT,
    DecisionStatus.POSTER,
    DecisionStatus.SPOTLIGHT,
    DecisionStatus.ORAL,
)
ACCEPTED = frozenset(TIERS[1:])


class Source(str, Enum):
    OFFICIAL_API = "OfficialAPI"
    SCRAPED = "Scraped"
    COMMUNITY_SUBMITTED = "CommunitySubmitted"

    @property
    def label(self) -> str:
        return {
            Source.OFFICIAL_API: "Official API",
            Source.SCRAPED: "Scraped",
            Source.COMMUNITY_SUBMITTED: "Community-Submitted",
        }[self]


class SourceKind(str, Enum):
    API_CONNECTOR = "ApiConnector"
    STATIC_PROCEEDINGS = "StaticProceedings"
    COMMUNITY_FORM = "CommunityForm"

    @property
    def source(self) -> Source:
        return {
            SourceKind.API_CONNECTOR: Source.OFFICIAL_API,
            SourceKind.STATIC_PROCEEDINGS: Source.SCRAPED,
            SourceKind.COMMUNITY_FORM: Source.COMMUNITY_SUBMITTED,
        }[self]


# --------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class Dimension:
    name: str
    scale_min: float
    scale_max: float
    step: float
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.scale_min < self.scale_max:
            raise ConfigError(f"dimension {self.name}: scale_min must be < scale_max")
        if not self.step > 0:
            raise ConfigError(f"dimension {self.name}: step must be positive")

    def in_range(self, value: float) -> bool:
        return self.scale_min - GRID_TOL <= value <= self.scale_max + GRID_TOL

    def on_grid(self, value: float) -> bool:
        if not self.in_range(value):
            return False
        q = (value - self.scale_min) / self.step
        return abs(q - round(q)) <= GRID_TOL * max(1.0, abs(q))


@dataclass(frozen=True)
class ReviewDimensionSchema:
    dimensions: tuple[Dimension, ...]

    def __post_init__(self):
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate dimension names in {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dimensions)

    def get(self, name: str) -> Dimension:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise KeyError(name)

    def resolve(self, key: str) -> str | None:
        """Map a source key (name or alias) to the canonical dimension name."""
        for d in self.dimensions:
            if key == d.name or key in d.aliases:
                return d.name
        return None

    def __contains__(self, name: str) -> bool:
        return name in self.names


# --------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class Affiliation:
    institution: str
    department: str | None = None
    country: str | None = None


@dataclass(frozen=True)
class AuthorEntry:
    name: str
    affiliations: tuple[Affiliation, ...] = ()
    email_domain: str | None = None
    position_index: int = 1


@dataclass(frozen=True)
class ConsentRecord:
    aggregate_only: bool
    individual_display: bool
    submitted_at: datetime

    def __post_init__(self):
        if self.individual_display and self.aggregate_only:
            raise ValueError("individual_display implies not aggregate_only")


@dataclass(frozen=True)
class Review:
    reviewer_id: str
    scores: Mapping[str, float]
    timestamp: datetime
    text_lengths: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    venue: str
    year: int
    title: str = ""
    primary_area: str | None = None
    keywords: tuple[str, ...] = ()
    authors: tuple[AuthorEntry, ...] = ()
    reviews: tuple[Review, ...] = ()
    final_status: DecisionStatus = DecisionStatus.UNKNOWN
    source: Source = Source.OFFICIAL_API
    consent: ConsentRecord | None = None
    external_links: tuple[str, ...] = ()
    extras: Mapping[str, Any] = field(default_factory=dict)
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        positions = [a.position_index for a in self.authors]
        if len(set(positions)) != len(positions) or any(p < 1 for p in positions):
            raise ValueError(f"{self.paper_id}: author positions must be unique and 1-based")
        if self.source is Source.COMMUNITY_SUBMITTED and self.consent is None:
            raise ValueError(f"{self.paper_id}: community records require a consent record")

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.venue, self.year, self.paper_id)

    def scores_of(self, dimension: str) -> list[float]:
        return [r.scores[dimension] for r in self.reviews if r.scores.get(dimension) is not None]

    def dimension_avg(self, dimension: str) -> float | None:
        values = self.scores_of(dimension)
        if not values:
            return None
        return math.fsum(values) / len(values)

    @property
    def rating_avg(self) -> float | None:
        return self.dimension_avg(RATING)

    @property
    def confidence_avg(self) -> float | None:
        return self.dimension_avg(CONFIDENCE)

    @property
    def newest_review_at(self) -> datetime:
        return max((r.timestamp for r in self.reviews), default=EPOCH)

    @property
    def individually_displayable(self) -> bool:
        if self.source is not Source.COMMUNITY_SUBMITTED:
            return True
        return self.consent is not None and self.consent.individual_display

    def to_raw(self) -> dict[str, Any]:
        """Render back into the API wire shape accepted by ``normalize_record``."""
        raw: dict[str, Any] = {
            "id": self.paper_id,
            "venue": self.venue,
            "year": self.year,
            "title": self.title,
            "primary_area": self.primary_area,
            "keywords": list(self.keywords),
            "authors": [_author_to_dict(a) for a in self.authors],
            "status": self.final_status.value,
            "source": self.source.value,
            "reviews": [
                {
                    "reviewer_id": r.reviewer_id,
                    "timestamp": format_instant(r.timestamp),
                    "scores": dict(r.scores),
                    "text_lengths": dict(r.text_lengths),
                }
                for r in self.reviews
            ],
            "links": list(self.external_links),
        }
        if self.consent is not None:
            raw["consent"] = _consent_to_dict(self.consent)
        if self.provenance:
            raw["provenance"] = dict(self.provenance)
        for k, v in self.extras.items():
            raw.setdefault(k, v)
        return raw


def _author_to_dict(a: AuthorEntry) -> dict[str, Any]:
    return {
        "name": a.name,
        "position": a.position_index,
        "affiliations": [
            {"institution": f.institution, "department": f.department, "country": f.country}
            for f in a.affiliations
        ],
        "email_domain": a.email_domain,
    }


def _consent_to_dict(c: ConsentRecord) -> dict[str, Any]:
    return {
        "aggregate_only": c.aggregate_only,
        "individual_display": c.individual_display,
        "submitted_at": format_instant(c.submitted_at),
    }


# --------------------------------------------------------------------------
# venue configuration


@dataclass(frozen=True)
class PhaseDates:
    review_release: datetime
    discussion_start: datetime
    discussion_end: datetime
    decision: datetime

    def __post_init__(self):
        seq = [self.review_release, self.discussion_start, self.discussion_end, self.decision]
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ConfigError("phase dates must be strictly increasing")


_CONFIG_KEYS = {
    "venue", "year", "source_kind", "endpoint", "path", "schema",
    "phase_dates", "status_vocabulary",
}


@dataclass(frozen=True)
class VenueConfig:
    venue: str
    year: int
    source_kind: SourceKind
    schema: ReviewDimensionSchema
    status_vocabulary: Mapping[str, DecisionStatus]
    phase_dates: PhaseDates | None = None
    endpoint: str | None = None
    path: str | None = None

    @property
    def source(self) -> Source:
        return self.source_kind.source

    def map_status(self, value: str | None) -> DecisionStatus:
        if value is None or str(value).strip() == "":
            return DecisionStatus.UNKNOWN
        text = str(value).strip()
        if text in self.status_vocabulary:
            return self.status_vocabulary[text]
        folded = {k.casefold(): v for k, v in self.status_vocabulary.items()}
        if text.casefold() in folded:
            return folded[text.casefold()]
        raise UnknownStatusString(text)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "VenueConfig":
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown venue config keys: {sorted(unknown)}")
        for required in ("venue", "year", "source_kind", "schema", "status_vocabulary"):
            if required not in data:
                raise ConfigError(f"venue config missing {required!r}")
        try:
            kind = SourceKind(data["source_kind"])
            dims = tuple(
                Dimension(
                    name=d["name"],
                    scale_min=float(d["min"]),
                    scale_max=float(d["max"]),
                    step=float(d.get("step", 1)),
                    aliases=tuple(d.get("aliases", ())),
                )
                for d in data["schema"]
            )
            vocab = {str(k): DecisionStatus(v) for k, v in data["status_vocabulary"].items()}
            phases = None
            if data.get("phase_dates"):
                p = data["phase_dates"]
                phases = PhaseDates(
                    review_release=parse_instant(p["review_release"]),
                    discussion_start=parse_instant(p["discussion_start"]),
                    discussion_end=parse_instant(p["discussion_end"]),
                    decision=parse_instant(p["decision"]),
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid venue config: {exc}") from exc
        return cls(
            venue=str(data["venue"]),
            year=int(data["year"]),
            source_kind=kind,
            schema=ReviewDimensionSchema(dims),
            status_vocabulary=vocab,
            phase_dates=phases,
            endpoint=data.get("endpoint"),
            path=data.get("path"),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "venue": self.venue,
            "year": self.year,
            "source_kind": self.source_kind.value,
            "endpoint": self.endpoint,
            "path": self.path,
            "schema": [
                {
                    "name": d.name,
                    "min": _plain_number(d.scale_min),
                    "max": _plain_number(d.scale_max),
                    "step": _plain_number(d.step),
                    "aliases": list(d.aliases),
                }
                for d in self.schema.dimensions
            ],
            "status_vocabulary": {k: v.value for k, v in self.status_vocabulary.items()},
            "phase_dates": None,
        }
        if self.phase_dates is not None:
            p = self.phase_dates
            out["phase_dates"] = {
                "review_release": format_instant(p.review_release),
                "discussion_start": format_instant(p.discussion_start),
                "discussion_end": format_instant(p.discussion_end),
                "decision": format_instant(p.decision),
            }
        return out


def load_venue_config(path: str | Path) -> VenueConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: expected a mapping")
    return VenueConfig.from_dict(data)


def dump_venue_config(cfg: VenueConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False), encoding="utf-8")


def _plain_number(x: float) -> int | float:
    return int(x) if float(x).is_integer() else float(x)


# --------------------------------------------------------------------------
# normalization

_LEADING_NUMBER = re.compile(r"^\s*(-?\d+(?:\.\d+)?)")

_CONSUMED_KEYS = {
    "id", "paper_id", "venue", "year", "title", "primary_area", "keywords",
    "authors", "status", "decision", "withdrawn", "reviews", "links",
    "external_links", "source", "consent", "provenance", "extras",
}


def parse_score(value: Any) -> float | None:
    """Numbers pass through; strings like ``"6: marginally above"`` yield 6."""
    if value is None:
        return None
    if isinstance(value, bool):
        raise SchemaViolation(f"boolean is not a score: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _LEADING_NUMBER.match(str(value))
    if not m:
        if str(value).strip() == "":
            return None
        raise SchemaViolation(f"cannot parse score {value!r}")
    return float(m.group(1))


def _parse_keywords(value: Any) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(k.strip() for k in value.split(";") if k.strip())
    return tuple(str(k) for k in value)


def _parse_authors(value: Any) -> tuple[AuthorEntry, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        value = [v.strip() for v in value.split(";") if v.strip()]
    authors = []
    for i, item in enumerate(value, start=1):
        if isinstance(item, str):
            authors.append(AuthorEntry(name=item, position_index=i))
            continue
        affs = []
        for aff in item.get("affiliations") or ():
            if isinstance(aff, str):
                affs.append(Affiliation(institution=aff))
            else:
                affs.append(
                    Affiliation(
                        institution=aff["institution"],
                        department=aff.get("department"),
                        country=aff.get("country"),
                    )
                )
        authors.append(
            AuthorEntry(
                name=item["name"],
                affiliations=tuple(affs),
                email_domain=item.get("email_domain"),
                position_index=int(item.get("position", i)),
            )
        )
    return tuple(authors)


def _parse_consent(value: Any) -> ConsentRecord | None:
    if value is None:
        return None
    if isinstance(value, ConsentRecord):
        return value
    return ConsentRecord(
        aggregate_only=bool(value["aggregate_only"]),
        individual_display=bool(value["individual_display"]),
        submitted_at=parse_instant(value["submitted_at"]),
    )


def _normalize_reviews(raw_reviews: Iterable[Mapping[str, Any]], cfg: VenueConfig, paper_id: str):
    reviews = []
    for rv in raw_reviews or ():
        reviewer = rv.get("reviewer_id", rv.get("reviewer"))
        if reviewer is None:
            raise SchemaViolation(f"{paper_id}: review without reviewer id")
        scores: dict[str, float] = {}
        for key, value in (rv.get("scores") or {}).items():
            name = cfg.schema.resolve(key)
            if name is None:
                raise SchemaViolation(f"{paper_id}: dimension {key!r} not in schema")
            score = parse_score(value)
            if score is None:
                continue
            if not cfg.schema.get(name).on_grid(score):
                raise SchemaViolation(f"{paper_id}: {name}={score} is off the scale grid")
            scores[name] = score
        ts = rv.get("timestamp")
        reviews.append(
            Review(
                reviewer_id=str(reviewer),
                scores={k: scores[k] for k in cfg.schema.names if k in scores},
                timestamp=parse_instant(ts) if ts is not None else EPOCH,
                text_lengths={str(k): int(v) for k, v in (rv.get("text_lengths") or {}).items()},
            )
        )
    return tuple(reviews)


def _revalidate(record: PaperRecord, cfg: VenueConfig) -> PaperRecord:
    for rv in record.reviews:
        for name, score in rv.scores.items():
            if name not in cfg.schema:
                raise SchemaViolation(f"{record.paper_id}: dimension {name!r} not in schema")
            if not cfg.schema.get(name).on_grid(score):
                raise SchemaViolation(f"{record.paper_id}: {name}={score} is off the scale grid")
    return record


def normalize_record(raw: Mapping[str, Any] | PaperRecord, cfg: VenueConfig) -> PaperRecord:
    """Map a source-specific record onto the canonical ``PaperRecord``.

    Dimension keys (and aliases) go through ``cfg.schema``, status strings
    through ``cfg.status_vocabulary``; unrecognized top-level keys are kept
    in ``extras``. A record already in canonical form is validated and
    returned unchanged.

    Raises ``UnknownStatusString`` or ``SchemaViolation``; callers that
    process batches should use ``normalize_batch`` to quarantine instead.
    """
    if isinstance(raw, PaperRecord):
        return _revalidate(raw, cfg)

    paper_id = raw.get("id", raw.get("paper_id"))
    if paper_id is None:
        raise SchemaViolation("record without id")
    paper_id = str(paper_id)

    if raw.get("withdrawn"):
        status = DecisionStatus.WITHDRAWN
    else:
        status_text = raw.get("status", raw.get("decision"))
        if status_text in {s.value for s in DecisionStatus} and status_text not in cfg.status_vocabulary:
            status = DecisionStatus(status_text)
        else:
            status = cfg.map_status(status_text)

    source = Source(raw["source"]) if raw.get("source") else cfg.source
    extras = {k: raw[k] for k in raw if k not in _CONSUMED_KEYS}
    extras.update(raw.get("extras") or {})

    return PaperRecord(
        paper_id=paper_id,
        venue=str(raw.get("venue", cfg.venue)),
        year=int(raw.get("year", cfg.year)),
        title=str(raw.get("title") or ""),
        primary_area=raw.get("primary_area"),
        keywords=_parse_keywords(raw.get("keywords")),
        authors=_parse_authors(raw.get("authors")),
        reviews=_normalize_reviews(raw.get("reviews"), cfg, paper_id),
        final_status=status,
        source=source,
        consent=_parse_consent(raw.get("consent")),
        external_links=tuple(raw.get("links", raw.get("external_links")) or ()),
        extras=dict(sorted(extras.items())),
        provenance=dict(raw.get("provenance") or {}),
    )


def normalize_batch(raws: Iterable[Mapping[str, Any]], cfg: VenueConfig):
    """Normalize many records; failures are quarantined with their error, never dropped."""
    records, quarantined = [], []
    for raw in raws:
        try:
            records.append(normalize_record(raw, cfg))
        except (UnknownStatusString, SchemaViolation, ValueError, KeyError) as exc:
            logger.warning("quarantined record %r: %s", raw.get("id", raw.get("paper_id")), exc)
            quarantined.append((raw, exc))
    return records, quarantined


def sticky_withdrawn(previous: PaperRecord | None, current: PaperRecord) -> PaperRecord:
    """A paper once seen withdrawn stays withdrawn across later snapshots."""
    if previous is not None and previous.final_status is DecisionStatus.WITHDRAWN:
        if current.final_status is not DecisionStatus.WITHDRAWN:
            return replace(current, final_status=DecisionStatus.WITHDRAWN)
    return current


# --------------------------------------------------------------------------
# dedup


def dedup(records: Iterable[PaperRecord]) -> list[PaperRecord]:
    """Keep one record per (venue, year, paper_id), preferring the newest review timestamp.

    Ties on the timestamp are broken by the canonical JSON rendering so the
    result does not depend on input order.
    """
    best: dict[tuple[str, int, str], tuple[tuple, PaperRecord]] = {}
    for rec in records:
        rank = (rec.newest_review_at, canonical_json(paperlist_entry(rec)))
        current = best.get(rec.key)
        if current is None:
            best[rec.key] = (rank, rec)
            continue
        if rank != current[0]:
            logger.info("dedup conflict for %s", rec.key)
        if rank > current[0]:
            best[rec.key] = (rank, rec)
    return [best[k][1] for k in sorted(best)]


# --------------------------------------------------------------------------
# canonical paperlist entry

PAPERLIST_FIELDS: tuple[str, ...] = (
    "paper_id",
    "venue",
    "year",
    "title",
    "primary_area",
    "keywords",
    "status",
    "source",
    "authors",
    "author_count",
    "institutions",
    "countries",
    "email_domains",
    "review_count",
    "reviewer_ids",
    "rating",
    "rating_avg",
    "rating_std",
    "rating_min",
    "rating_max",
    "confidence",
    "confidence_avg",
    "confidence_std",
    "dimension_avg",
    "scores",
    "review_timestamps",
    "last_review_at",
    "text_lengths",
    "consent",
    "external_links",
    "provenance",
    "extras",
)


def _distinct(values: Iterable[Any]) -> list[Any]:
    seen, out = set(), []
    for v in values:
        if v is not None and v not in seen:
            seen.add(v)
            out.append(v)
    return out


def _pstd(values: Sequence[float]) -> float | None:
    if not values:
        return None
    mean = math.fsum(values) / len(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))


def _num(x: float | None) -> int | float | None:
    if x is None:
        return None
    return int(x) if float(x).is_integer() else x


def paperlist_entry(rec: PaperRecord) -> dict[str, Any]:
    """The canonical one-record-per-paper export object, keys in ``PAPERLIST_FIELDS`` order."""
    ratings = rec.scores_of(RATING)
    confidences = rec.scores_of(CONFIDENCE)
    dims = sorted({k for r in rec.reviews for k in r.scores})
    affs = [f for a in rec.authors for f in a.affiliations]
    entry = {
        "paper_id": rec.paper_id,
        "venue": rec.venue,
        "year": rec.year,
        "title": rec.title,
        "primary_area": rec.primary_area,
        "keywords": list(rec.keywords),
        "status": rec.final_status.value,
        "source": rec.source.value,
        "authors": [_author_to_dict(a) for a in rec.authors],
        "author_count": len(rec.authors),
        "institutions": _distinct(f.institution for f in affs),
        "countries": _distinct(f.country for f in affs),
        "email_domains": _distinct(a.email_domain for a in rec.authors),
        "review_count": len(rec.reviews),
        "reviewer_ids": [r.reviewer_id for r in rec.reviews],
        "rating": [_num(r.scores.get(RATING)) for r in rec.reviews],
        "rating_avg": rec.rating_avg,
        "rating_std": _pstd(ratings),
        "rating_min": _num(min(ratings)) if ratings else None,
        "rating_max": _num(max(ratings)) if ratings else None,
        "confidence": [_num(r.scores.get(CONFIDENCE)) for r in rec.reviews],
        "confidence_avg": rec.confidence_avg,
        "confidence_std": _pstd(confidences),
        "dimension_avg": {d: rec.dimension_avg(d) for d in dims},
        "scores": [{k: _num(v) for k, v in sorted(r.scores.items())} for r in rec.reviews],
        "review_timestamps": [format_instant(r.timestamp) for r in rec.reviews],
        "last_review_at": format_instant(rec.newest_review_at) if rec.reviews else None,
        "text_lengths": [dict(sorted(r.text_lengths.items())) for r in rec.reviews],
        "consent": _consent_to_dict(rec.consent) if rec.consent else None,
        "external_links": list(rec.external_links),
        "provenance": dict(sorted(rec.provenance.items())) if rec.provenance else None,
        "extras": dict(sorted(rec.extras.items())),
    }
    assert tuple(entry) == PAPERLIST_FIELDS
    return entry


def record_from_entry(entry: Mapping[str, Any]) -> PaperRecord:
    """Inverse of ``paperlist_entry`` (aggregates are recomputed, not trusted)."""
    reviews = tuple(
        Review(
            reviewer_id=rid,
            scores={k: float(v) for k, v in scores.items()},
            timestamp=parse_instant(ts),
            text_lengths=dict(tl),
        )
        for rid, scores, ts, tl in zip(
            entry["reviewer_ids"], entry["scores"], entry["review_timestamps"], entry["text_lengths"]
        )
    )
    return PaperRecord(
        paper_id=entry["paper_id"],
        venue=entry["venue"],
        year=int(entry["year"]),
        title=entry["title"],
        primary_area=entry["primary_area"],
        keywords=tuple(entry["keywords"]),
        authors=_parse_authors(entry["authors"]),
        reviews=reviews,
        final_status=DecisionStatus(entry["status"]),
        source=Source(entry["source"]),
        consent=_parse_consent(entry["consent"]),
        external_links=tuple(entry["external_links"]),
        extras=dict(entry["extras"]),
        provenance=dict(entry["provenance"] or {}),
    )


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def dumps_paperlist(records: Iterable[PaperRecord]) -> str:
    entries = [paperlist_entry(r) for r in records]
    return json.dumps(entries, ensure_ascii=False, indent=2, allow_nan=False) + "\n"


def loads_paperlist(text: str) -> list[PaperRecord]:
    return [record_from_entry(e) for e in json.loads(text)]

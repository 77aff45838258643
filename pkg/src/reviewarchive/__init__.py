"""Peer-review archive and analytics toolkit."""

from .archive import ReviewSnapshot, ScoreChangeEvent, ScoreFootprint, SnapshotArchive, diff
from .core import (
    AuthorEntry,
    ConsentRecord,
    DecisionStatus,
    PaperRecord,
    Review,
    ReviewDimensionSchema,
    Source,
    SourceKind,
    VenueConfig,
    dedup,
    load_venue_config,
    normalize_record,
)
from .errors import ArchiveError

__version__ = "0.1.0"

"""Ingest a 30-paper capture sequence, then inspect the snapshot archive it builds.

Each fixture payload is one crawl of the venue. Ingestion stores the raw
bytes, normalizes them into paper records and appends one snapshot per
review; unchanged reviews add nothing, so the archive holds only real edits.
"""

import tempfile
from pathlib import Path

from _common import FIXTURES, heading
from reviewarchive.core import load_venue_config
from reviewarchive.ingestion import FixtureConnector, load_records, open_archive, run_ingest

fx = FIXTURES / "dynamics30"
cfg = load_venue_config(fx / "venue.yaml")

with tempfile.TemporaryDirectory() as d:
    root = Path(d)
    outcomes = run_ingest(cfg, root, FixtureConnector(fx), sleep=lambda s: None)
    heading("ingest")
    print(f"{len(outcomes)} payloads, {sum(o.new_snapshots for o in outcomes)} snapshots stored")
    print(f"{len(load_records(root, cfg.venue, cfg.year))} paper records")

    again = run_ingest(cfg, root, FixtureConnector(fx), sleep=lambda s: None)
    print(f"re-ingest stores {sum(o.new_snapshots for o in again)} new snapshots")

    archive = open_archive(root, cfg.venue, cfg.year)
    pid = next(p for p in archive.paper_ids() if archive.events(p))
    heading(f"score changes on {pid}")
    for ev in archive.events(pid):
        print(f"{ev.observed_at:%Y-%m-%d} {ev.reviewer_id} {ev.dimension}: {ev.old_value} -> {ev.new_value}")

    heading("state at the start of discussion versus the end")
    print(archive.state_at(pid, cfg.phase_dates.discussion_start))
    print(archive.terminal_state(pid))

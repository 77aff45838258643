"""Rebuttal-phase dynamics from snapshot history.

Pre/post mean ratings per final status, the flow of papers between score
bins, how often each review dimension is revised, and how reviewer
disagreement (max minus min rating) shrinks over the discussion.
"""

import tempfile
from pathlib import Path

from _common import FIXTURES, heading
from reviewarchive import analytics as an
from reviewarchive.core import load_venue_config
from reviewarchive.ingestion import FixtureConnector, load_records, open_archive, run_ingest

fx = FIXTURES / "dynamics30"
cfg = load_venue_config(fx / "venue.yaml")

with tempfile.TemporaryDirectory() as d:
    root = Path(d)
    run_ingest(cfg, root, FixtureConnector(fx), sleep=lambda s: None)
    records = load_records(root, cfg.venue, cfg.year)
    archive = open_archive(root, cfg.venue, cfg.year)
    rep = an.dynamics_report(archive, cfg, records, cutoff=1)

heading("pre/post means by final status")
for status, rows in rep.prepost.samples.items():
    if rows:
        pre = sum(r.pre for r in rows) / len(rows)
        post = sum(r.post for r in rows) / len(rows)
        print(f"  {status.value:9s} n={len(rows):2d} pre={pre:.2f} post={post:.2f}")

heading("score flows (first five)")
for f in rep.flows[:5]:
    print(f"  {f.src_bin:.1f} -> {f.dst_bin:.1f} {f.status.value:9s} {f.direction:4s} x{f.count}")

heading("share of papers with a revised score, per dimension")
for dim, v in rep.update_fractions.items():
    print(f"  {dim:12s} {100 * v:5.1f}%")

heading("consensus: mean max-min rating, first and last day")
cs = rep.consensus
for status, values in cs.mean_range.items():
    if values and values[0] is not None:
        print(f"  {status.value:9s} {values[0]:.2f} -> {values[-1]:.2f}")

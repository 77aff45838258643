"""The command-line pipeline end to end, plus a consent-filtered release.

synth writes connector fixtures, ingest replays them, analyze writes a
JSON report and plot-ready CSV, and export writes the versioned paperlist
with its manifest. Community submissions without display consent count in
the aggregates but never appear in the paperlist.
"""

import json
import tempfile
from pathlib import Path

from _common import FIXTURES, heading
from reviewarchive.cli import run
from reviewarchive.core import load_venue_config
from reviewarchive.export import export_paperlist
from reviewarchive.ingestion import CommunityFormConnector, run_ingest

with tempfile.TemporaryDirectory() as d:
    work = Path(d)
    vy = ["--venue", "SYNTH", "--year", "2025"]
    heading("synth -> ingest -> analyze -> export")
    run(["synth", "--spec", str(FIXTURES / "seed42" / "spec.yaml"), "--out", str(work / "fx")])
    run(["ingest", "--root", str(work / "ws"), "--fixture", str(work / "fx" / "SYNTH" / "2025"), *vy])
    run(["analyze", "entropy", "--root", str(work / "ws"), *vy])
    run(["export", "--root", str(work / "ws"), *vy, "--out", str(work / "release")])
    print((work / "ws" / "reports" / "SYNTH" / "2025" / "entropy-bins.csv").read_text().splitlines()[0])
    manifest = json.loads((work / "release" / "manifest.json").read_text())
    for f in manifest["versions"][0]["files"]:
        print(f"  {f['path']} {f['sha256'][:16]} records={f['records']} {f['provenance']}")

    heading("consent filtering on community submissions")
    cfg = load_venue_config(FIXTURES / "normalize" / "venue.yaml")
    (outcome,) = run_ingest(cfg, work / "community", CommunityFormConnector(FIXTURES / "community" / "rows_20.csv"), once=True)
    res = export_paperlist(outcome.records, "MINI", 2024, work / "community-release")
    listed = json.loads(res.paperlist.read_text())
    agg = json.loads(res.aggregates.read_text())
    print(f"{len(outcome.records)} accepted rows, {len(outcome.rejected)} rejected")
    print(f"paperlist lists {len(listed)} papers; aggregates count {agg['papers']}")

import json
from pathlib import Path

import pytest

from reviewarchive.core import load_venue_config
from reviewarchive.ingestion import FixtureConnector, load_records, open_archive, run_ingest

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"


def no_sleep(_seconds):
    return None


@pytest.fixture(scope="session")
def mini_cfg():
    return load_venue_config(FIXTURES / "normalize" / "venue.yaml")


@pytest.fixture(scope="session")
def dyn30(tmp_path_factory):
    """The bundled 30-paper capture fixture, ingested once per session."""
    fx = FIXTURES / "dynamics30"
    cfg = load_venue_config(fx / "venue.yaml")
    root = tmp_path_factory.mktemp("dyn30")
    run_ingest(cfg, root, FixtureConnector(fx), sleep=no_sleep)
    return {
        "cfg": cfg,
        "root": root,
        "records": load_records(root, cfg.venue, cfg.year),
        "archive": open_archive(root, cfg.venue, cfg.year),
        "golden": json.loads((GOLDEN / "dynamics30.json").read_text()),
    }


SEED42_SPEC = FIXTURES / "seed42" / "spec.yaml"
SEED42_GOLDEN = GOLDEN / "e2e_seed42.json"


def seed42_pipeline(work: Path) -> dict[str, str]:
    """synth -> ingest --fixture -> analyze entropy -> export; returns sha256 per output file."""
    import hashlib

    from reviewarchive.cli import run

    work.mkdir(parents=True, exist_ok=True)
    root, fx, rel = work / "ws", work / "fx", work / "release"
    vy = ["--venue", "SYNTH", "--year", "2025"]
    steps = [
        ["synth", "--spec", str(SEED42_SPEC), "--out", str(fx)],
        ["ingest", "--root", str(root), "--fixture", str(fx / "SYNTH" / "2025"), *vy],
        ["analyze", "entropy", "--root", str(root), *vy],
        ["export", "--root", str(root), *vy, "--out", str(rel)],
    ]
    for argv in steps:
        rc = run(argv)
        if rc != 0:
            raise RuntimeError(f"{argv[0]} exited {rc}")
    return {
        p.relative_to(work).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(work.rglob("*"))
        if p.is_file()
    }


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

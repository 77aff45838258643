import json
import subprocess
import sys

import pytest

from conftest import FIXTURES, SEED42_GOLDEN, seed42_pipeline
from reviewarchive.cli import build_parser, run

SUBCOMMANDS = ("ingest", "snapshot", "analyze", "validate-extraction", "synth", "export")


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    out = capsys.readouterr().out
    assert all(c in out for c in SUBCOMMANDS)


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_required_flag_is_usage_error():
    assert run(["analyze", "entropy"]) == 2


def test_domain_error_exits_one(tmp_path, capsys):
    assert run(["analyze", "entropy", "--root", str(tmp_path), "--venue", "V", "--year", "2024"]) == 1
    assert "ArchiveError" in capsys.readouterr().err


def test_missing_config_exits_one(tmp_path):
    assert run(["ingest", "--root", str(tmp_path), "--venue", "V", "--year", "2024"]) == 1


def test_snapshot_diff_requires_paper(dyn30):
    assert run(["snapshot", "diff", "--root", str(dyn30["root"]), "--venue", "DYN", "--year", "2025"]) == 2


def test_parser_lists_every_subcommand():
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert tuple(sub.choices) == SUBCOMMANDS


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "reviewarchive", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "synth" in proc.stdout


def test_snapshot_views(dyn30, capsys, tmp_path):
    base = ["--root", str(dyn30["root"]), "--venue", "DYN", "--year", "2025"]
    pid = next(p for p in dyn30["archive"].paper_ids() if dyn30["archive"].events(p))
    assert run(["snapshot", "diff", *base, "--paper", pid]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert len(lines) == len(dyn30["archive"].events(pid))
    assert run(["snapshot", "replay", *base, "--paper", pid]) == 0
    assert json.loads(capsys.readouterr().out)["paper_id"] == pid
    assert run(["snapshot", "export", *base, "--out", str(tmp_path / "a" / "snap.ndjson")]) == 0
    assert len((tmp_path / "a" / "snap.ndjson").read_text().splitlines()) == len(dyn30["archive"])


@pytest.mark.parametrize("analysis", ["entropy", "dynamics", "consensus", "combos", "grid", "tiers", "logit"])
def test_analyze_writes_reports(dyn30, tmp_path, analysis):
    out = tmp_path / "r"
    rc = run(["analyze", analysis, "--root", str(dyn30["root"]), "--venue", "DYN", "--year", "2025", "--cutoff", "1",
              "--config", str(FIXTURES / "dynamics30" / "venue.yaml"), "--out", str(out)])
    assert rc == 0
    assert (out / f"{analysis}.json").exists()
    assert any(out.glob("*.csv"))


def test_validate_extraction(tmp_path, capsys):
    assert run(["validate-extraction", "--corpus", str(FIXTURES / "corpus"), "--out", str(tmp_path / "x" / "r.csv")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["documents"] == 40 and (tmp_path / "x" / "r.csv").exists()


def test_synth_seed_flag_overrides_spec(tmp_path):
    assert run(["synth", "--spec", str(FIXTURES / "seed42" / "spec.yaml"), "--out", str(tmp_path / "a")]) == 0
    assert run(["synth", "--spec", str(FIXTURES / "seed42" / "spec.yaml"), "--out", str(tmp_path / "b"), "--seed", "7"]) == 0
    a = sorted(p.read_bytes() for p in (tmp_path / "a").rglob("*.raw"))
    b = sorted(p.read_bytes() for p in (tmp_path / "b").rglob("*.raw"))
    assert a != b


def test_end_to_end_seed42_matches_golden(tmp_path):
    golden = json.loads(SEED42_GOLDEN.read_text())["sha256"]
    first = seed42_pipeline(tmp_path / "one")
    second = seed42_pipeline(tmp_path / "two")
    assert first == second
    assert first == golden


def test_reingest_and_reexport_are_noops(tmp_path, capsys):
    seed42_pipeline(tmp_path)
    capsys.readouterr()
    vy = ["--venue", "SYNTH", "--year", "2025"]
    assert run(["ingest", "--root", str(tmp_path / "ws"), "--fixture", str(tmp_path / "fx" / "SYNTH" / "2025"), *vy]) == 0
    assert json.loads(capsys.readouterr().out)["new_snapshots"] == 0
    before = (tmp_path / "release" / "manifest.json").read_bytes()
    assert run(["export", "--root", str(tmp_path / "ws"), *vy, "--out", str(tmp_path / "release")]) == 0
    assert (tmp_path / "release" / "manifest.json").read_bytes() == before

import json
import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, GOLDEN
from reviewarchive.core import (
    PAPERLIST_FIELDS,
    ConsentRecord,
    DecisionStatus,
    PaperRecord,
    PhaseDates,
    Review,
    Source,
    VenueConfig,
    dedup,
    dump_venue_config,
    dumps_paperlist,
    format_instant,
    load_venue_config,
    loads_paperlist,
    normalize_batch,
    normalize_record,
    parse_instant,
    parse_score,
    paperlist_entry,
    sticky_withdrawn,
)
from reviewarchive.errors import ConfigError, SchemaViolation, UnknownStatusString

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def raw_paper(pid="p1", ratings=(6, 8), status="Accept (poster)", day=1, **extra):
    return {
        "id": pid,
        "title": "t",
        "status": status,
        "reviews": [
            {"reviewer_id": f"{pid}-R{i}", "scores": {"rating": r}, "timestamp": f"2023-11-{day:02d}T0{i}:00:00Z"}
            for i, r in enumerate(ratings, start=1)
        ],
        **extra,
    }


# --- normalize_record -------------------------------------------------------


def test_rating_average(mini_cfg):
    assert normalize_record(raw_paper(ratings=(6, 8)), mini_cfg).rating_avg == 7.0


def test_status_lookup(mini_cfg):
    assert normalize_record(raw_paper(status="Accept (poster)"), mini_cfg).final_status is DecisionStatus.POSTER


def test_status_lookup_case_insensitive(mini_cfg):
    assert normalize_record(raw_paper(status="accept (ORAL)"), mini_cfg).final_status is DecisionStatus.ORAL


def test_unknown_status_lists_value(mini_cfg):
    with pytest.raises(UnknownStatusString) as exc:
        normalize_record(raw_paper(status="Accept (maybe)"), mini_cfg)
    assert exc.value.value == "Accept (maybe)"
    assert "Accept (maybe)" in str(exc.value)


def test_off_grid_and_unknown_dimension_are_quarantined(mini_cfg):
    bad_grid = raw_paper("p2", ratings=(6.5,))
    bad_dim = raw_paper("p3")
    bad_dim["reviews"][0]["scores"]["novelty"] = 2
    good, quarantined = normalize_batch([raw_paper("p1"), bad_grid, bad_dim], mini_cfg)
    assert [r.paper_id for r in good] == ["p1"]
    assert [q[0]["id"] for q in quarantined] == ["p2", "p3"]
    assert all(isinstance(q[1], SchemaViolation) for q in quarantined)


def test_extras_and_missing_dimensions(mini_cfg):
    rec = normalize_record(raw_paper(forum="x", ratings=(5,)), mini_cfg)
    assert rec.extras == {"forum": "x"}
    assert rec.confidence_avg is None
    assert rec.dimension_avg("soundness") is None


def test_withdrawn_overrides_decision(mini_cfg):
    rec = normalize_record(raw_paper(status="Accept (oral)", withdrawn=True), mini_cfg)
    assert rec.final_status is DecisionStatus.WITHDRAWN


def test_sticky_withdrawn(mini_cfg):
    first = normalize_record(raw_paper(withdrawn=True), mini_cfg)
    later = normalize_record(raw_paper(status="Reject"), mini_cfg)
    assert sticky_withdrawn(first, later).final_status is DecisionStatus.WITHDRAWN
    assert sticky_withdrawn(None, later).final_status is DecisionStatus.REJECT


def test_five_paper_fixture_matches_reference_golden(mini_cfg):
    raws = json.loads((FIXTURES / "normalize" / "raw_5.json").read_text())["papers"]
    records, quarantined = normalize_batch(raws, mini_cfg)
    assert not quarantined and len(records) == 5
    assert dumps_paperlist(records) == (GOLDEN / "normalize_5.json").read_text()


def test_paperlist_has_fixed_32_field_order(mini_cfg):
    entry = paperlist_entry(normalize_record(raw_paper(), mini_cfg))
    assert tuple(entry) == PAPERLIST_FIELDS
    assert len(PAPERLIST_FIELDS) == 32


def test_paperlist_round_trip(mini_cfg):
    raws = json.loads((FIXTURES / "normalize" / "raw_5.json").read_text())["papers"]
    records, _ = normalize_batch(raws, mini_cfg)
    text = dumps_paperlist(records)
    assert dumps_paperlist(loads_paperlist(text)) == text


def test_normalize_is_idempotent_on_fixture(mini_cfg):
    raws = json.loads((FIXTURES / "normalize" / "raw_5.json").read_text())["papers"]
    for rec in normalize_batch(raws, mini_cfg)[0]:
        assert normalize_record(rec, mini_cfg) == rec


@settings(max_examples=60, deadline=None)
@given(
    ratings=st.lists(st.integers(1, 10), min_size=0, max_size=6),
    status=st.sampled_from(["Reject", "Accept (poster)", "Accept (spotlight)", "Accept (oral)", "Desk rejected"]),
)
def test_normalize_idempotent_property(mini_cfg, ratings, status):
    rec = normalize_record(raw_paper(ratings=ratings, status=status), mini_cfg)
    assert normalize_record(rec, mini_cfg) == rec
    for rv in rec.reviews:
        assert set(rv.scores) <= set(mini_cfg.schema.names)


def test_parse_score_forms():
    assert parse_score("6: marginally above") == 6.0
    assert parse_score(3) == 3.0
    assert parse_score("") is None
    with pytest.raises(SchemaViolation):
        parse_score("n/a")


# --- invariants of the value types -----------------------------------------


def test_author_positions_unique(mini_cfg):
    raw = raw_paper(authors=[{"name": "a", "position": 1}, {"name": "b", "position": 1}])
    with pytest.raises(ValueError):
        normalize_record(raw, mini_cfg)


def test_consent_display_implies_not_aggregate_only():
    with pytest.raises(ValueError):
        ConsentRecord(aggregate_only=True, individual_display=True, submitted_at=T0)


def test_phase_dates_strictly_increasing():
    with pytest.raises(ConfigError):
        PhaseDates(T0, T0, T0 + timedelta(days=1), T0 + timedelta(days=2))


def test_community_record_requires_consent():
    with pytest.raises(ValueError):
        PaperRecord("x", "V", 2024, source=Source.COMMUNITY_SUBMITTED)


def test_venue_config_rejects_unknown_keys(mini_cfg):
    d = mini_cfg.to_dict()
    d["colour"] = "blue"
    with pytest.raises(ConfigError):
        VenueConfig.from_dict(d)


def test_venue_config_yaml_round_trip(mini_cfg, tmp_path):
    dump_venue_config(mini_cfg, tmp_path / "v.yaml")
    assert load_venue_config(tmp_path / "v.yaml") == mini_cfg


def test_instant_helpers():
    assert parse_instant("2024-01-01T00:00:00Z") == T0
    assert parse_instant(1704067200000) == T0
    assert format_instant(T0 + timedelta(microseconds=5)) == "2024-01-01T00:00:00.000005Z"


# --- dedup -----------------------------------------------------------------


def test_dedup_identical_records(mini_cfg):
    rec = normalize_record(raw_paper(), mini_cfg)
    assert dedup([rec, rec]) == [rec]


def test_dedup_newer_kept(mini_cfg):
    old = normalize_record(raw_paper(ratings=(3,), day=1), mini_cfg)
    new = normalize_record(raw_paper(ratings=(4,), day=9), mini_cfg)
    assert dedup([new, old]) == [new]
    assert dedup([old, new]) == [new]


def _pairwise_oracle(records):
    """O(n^2): a record survives if no other record with its key is newer (first of identical copies wins)."""
    keep = []
    for i, r in enumerate(records):
        beaten = False
        for j, s in enumerate(records):
            if i == j or s.key != r.key:
                continue
            if s.newest_review_at > r.newest_review_at or (s == r and j < i):
                beaten = True
        if not beaten:
            keep.append(r)
    return sorted(keep, key=lambda r: r.key)


def test_dedup_100_record_fixture(mini_cfg):
    data = json.loads((FIXTURES / "dedup_100.json").read_text())
    records, quarantined = normalize_batch(data["papers"], mini_cfg)
    assert len(records) == 100 and not quarantined
    out = dedup(records)
    assert len(out) == 93
    assert out == _pairwise_oracle(records)
    assert {r.paper_id: format_instant(r.newest_review_at) for r in out} == data["expected_last_review"]


def test_dedup_idempotent_and_order_insensitive(mini_cfg):
    data = json.loads((FIXTURES / "dedup_100.json").read_text())
    records, _ = normalize_batch(data["papers"], mini_cfg)
    once = dedup(records)
    assert dedup(once) == once
    rng = random.Random(5)
    for _ in range(10):
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert dedup(shuffled) == once


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3), st.integers(1, 10)), min_size=1, max_size=25),
       st.randoms(use_true_random=False))
def test_dedup_permutation_property(rows, rnd):
    recs = [
        PaperRecord(f"p{k}", "V", 2024,
                    reviews=(Review("r", {"rating": float(score)}, T0 + timedelta(days=day)),))
        for k, day, score in rows
    ]
    out = dedup(recs)
    rnd.shuffle(recs)
    assert dedup(recs) == out
    assert len({r.key for r in out}) == len(out)

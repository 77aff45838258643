import hashlib
import json
import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from reviewarchive.analytics.entropy import decision_entropy
from reviewarchive.analytics.ordered_logit import tier_probabilities
from reviewarchive.analytics.scaling import fit_log_scaling
from reviewarchive.archive import SnapshotArchive
from reviewarchive.core import TIERS
from reviewarchive.errors import InvalidSpec
from reviewarchive.synth import (
    GeneratorSpec,
    fixture_payloads,
    generate,
    load_spec,
    make_rng,
    sample_tiers,
    softening_kappa,
    venue_growth_sweep,
    write_fixtures,
)

SWEEP = list(range(500, 12001, 500))
# cut points sit between reachable mean ratings (multiples of 1/3, 1/4, 1/5)
SHARP_CUTS = (5.55, 6.55, 7.1)


def tree_digest(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


def test_zero_papers_gives_empty_outputs():
    v = generate(GeneratorSpec(n_papers=0))
    assert v.papers == () and v.snapshots == ()
    assert v.truth.bins == () and v.truth.h_bar == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_large_kappa_tiers_deterministically(seed):
    spec = GeneratorSpec(seed=seed, n_papers=2000, kappa=50.0, thresholds=tuple(50.0 * c for c in SHARP_CUTS))
    v = generate(spec, with_history=False)
    assert decision_entropy(v.papers).h_bar < 0.05
    assert v.truth.h_bar < 0.05


def test_soft_kappa_is_far_from_deterministic():
    v = generate(GeneratorSpec(seed=0, n_papers=2000), with_history=False)
    assert decision_entropy(v.papers).h_bar > 0.5


def test_seed_42_regeneration_byte_identical(tmp_path):
    spec = GeneratorSpec(seed=42, n_papers=100)
    assert fixture_payloads(generate(spec)) == fixture_payloads(generate(spec))
    a = write_fixtures(generate(spec), tmp_path / "a")
    b = write_fixtures(generate(spec), tmp_path / "b")
    assert tree_digest(a) == tree_digest(b)


def test_different_seeds_differ():
    a = fixture_payloads(generate(GeneratorSpec(seed=1, n_papers=20)))
    b = fixture_payloads(generate(GeneratorSpec(seed=2, n_papers=20)))
    assert a != b


@pytest.mark.parametrize("x", [3.0, 5.0, 6.4, 8.0])
def test_law_of_large_numbers_at_fixed_x(x):
    n = 50_000
    ranks = sample_tiers(np.full(n, x), 1.5, (8.25, 9.75, 10.5), make_rng(7))
    freq = np.bincount(ranks, minlength=4) / n
    model = tier_probabilities(np.array([x]), 1.5, (8.25, 9.75, 10.5))[0]
    assert np.all(np.abs(freq - model) <= 0.015)


def test_statuses_follow_ordered_logit_by_mean_rating():
    v = generate(GeneratorSpec(seed=3, n_papers=4000), with_history=False)
    ranks = np.array([TIERS.index(p.final_status) for p in v.papers])
    probs = np.array([v.truth.model_probabilities[p.paper_id] for p in v.papers])
    # observed tier frequencies agree with the mean model probability
    assert np.all(np.abs(np.bincount(ranks, minlength=4) / len(ranks) - probs.mean(axis=0)) < 0.02)


def test_truth_record_enumeration():
    v = generate(GeneratorSpec(seed=5, n_papers=300), with_history=False)
    assert sum(b.count for b in v.truth.bins) == 300
    for b in v.truth.bins:
        assert math.isclose(math.fsum(b.probabilities.values()), 1.0, abs_tol=1e-12)
        assert math.isclose(b.entropy, -math.fsum(p * math.log(p) for p in b.probabilities.values() if p > 0), abs_tol=1e-12)
    assert math.isclose(v.truth.h_bar, math.fsum(b.count / 300 * b.entropy for b in v.truth.bins), abs_tol=1e-12)


def test_history_satisfies_archive_invariants():
    v = generate(GeneratorSpec(seed=6, n_papers=60))
    arc = SnapshotArchive()
    stored = arc.extend(v.snapshots)
    assert stored == len(v.snapshots)
    for p in v.papers:
        assert arc.terminal_state(p.paper_id) == {r.reviewer_id: dict(sorted(r.scores.items())) for r in p.reviews}


def test_withdrawn_probability():
    v = generate(GeneratorSpec(seed=8, n_papers=400, withdraw_prob=1.0), with_history=False)
    assert all(p.final_status.value == "Withdrawn" for p in v.papers)
    assert v.truth.bins == ()


@pytest.mark.parametrize("kw", [
    {"n_papers": -1},
    {"reviewers": (3, 2)},
    {"thresholds": (4.0, 4.0, 7.0)},
    {"thresholds": (4.0, 6.0)},
    {"kappa": math.inf},
    {"withdraw_prob": 1.5},
    {"change_prob": {"rating": -0.1}},
    {"mean_distribution": "normal"},
    {"dimensions": (("confidence", 1, 5, 1),)},
    {"phase_dates": {"review_release": "2024-01-02T00:00:00Z", "discussion_start": "2024-01-01T00:00:00Z",
                     "discussion_end": "2024-01-03T00:00:00Z", "decision": "2024-01-04T00:00:00Z"}},
])
def test_invalid_spec(kw):
    with pytest.raises(InvalidSpec):
        GeneratorSpec(**kw)


def test_spec_file_round_trip(tmp_path):
    spec = GeneratorSpec(seed=4, n_papers=12, mean_distribution="triangular")
    (tmp_path / "s.json").write_text(json.dumps(spec.to_dict()))
    assert load_spec(tmp_path / "s.json") == spec
    (tmp_path / "bad.yaml").write_text("seed: 1\ncolour: blue\n")
    with pytest.raises(InvalidSpec):
        load_spec(tmp_path / "bad.yaml")


def test_written_fixtures_layout(tmp_path):
    d = write_fixtures(generate(GeneratorSpec(seed=1, n_papers=10)), tmp_path)
    assert d == tmp_path / "SYNTH" / "2025"
    assert (d / "venue.yaml").exists() and (d / "truth.json").exists()
    raws = sorted(d.glob("*.raw"))
    final = json.loads(raws[-1].read_text())
    assert len(final["papers"]) == 10 and all(p["status"] for p in final["papers"])
    assert all(p["status"] is None for p in json.loads(raws[0].read_text())["papers"])


def test_venue_growth_sweep():
    rows = venue_growth_sweep(SWEEP, softening_kappa, seed=0)
    h = [r[2] for r in rows]
    # sampling noise makes neighbouring years wobble, so "increasing" is a rank-trend statement
    assert spearmanr(SWEEP, h).statistic > 0.9
    assert h[-1] > h[len(h) // 2] > h[0]
    fit = fit_log_scaling([(y, x, hb) for y, x, hb, _ in rows])
    assert fit.a > 0 and fit.r_squared > 0.9
    assert [r[3] for r in rows] == sorted((r[3] for r in rows), reverse=True)

"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also collected into the "acceptance criteria" terminal summary section.
"""

import hashlib
import json
import math
import os
import random
import tempfile
import time
from contextlib import contextmanager
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, FIXTURES, SEED42_GOLDEN, seed42_pipeline
from consent_sweep import consent_sweep, random_rows, write_rows
from reviewarchive import analytics as an
from reviewarchive.archive import ReviewSnapshot, SnapshotArchive, apply_events
from reviewarchive.core import TIERS, load_venue_config
from reviewarchive.ingestion import consent_rate, consent_stats, ingest_community_batch, load_records, open_archive, read_community_rows
from reviewarchive.synth import GeneratorSpec, generate, make_rng, sample_tiers, softening_kappa, venue_growth_sweep
from reviewarchive.validation import union_bound_check

pytestmark = pytest.mark.acceptance

ICLR_ROOT_ENV = "REVIEW_ARCHIVE_ICLR2025_ROOT"


@contextmanager
def criterion(number, title):
    """Time the block and record one PASS/FAIL line; failures still raise."""
    t0 = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        line = f"FAIL criterion {number}: {title} ({time.perf_counter() - t0:.2f} s) {type(exc).__name__}: {exc}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    extra = "; ".join(f"{k}={v}" for k, v in detail.items())
    line = f"PASS criterion {number}: {title} ({time.perf_counter() - t0:.2f} s){' ' + extra if extra else ''}"
    ACCEPTANCE_LINES.append(line)
    print(line)


# --- 1 ----------------------------------------------------------------------------


def enumeration_entropy(papers):
    """Exact bin membership with rationals, then a direct count per bin and tier."""
    width = Fraction(1, 5)
    counts = {}
    for p in papers:
        if p.final_status not in TIERS or not p.reviews:
            continue
        ratings = [Fraction(r.scores["rating"]).limit_denominator() for r in p.reviews]
        k = math.floor(sum(ratings) / len(ratings) / width)
        counts.setdefault(k, dict.fromkeys(TIERS, 0))[p.final_status] += 1
    n = sum(sum(c.values()) for c in counts.values())
    total = 0.0
    for c in counts.values():
        m = sum(c.values())
        total += m / n * -sum(v / m * math.log(v / m) for v in c.values() if v)
    return total


def test_criterion_1_entropy_oracle_equivalence():
    rng = random.Random(2001)
    datasets = []
    for i in range(200):
        kappa = rng.uniform(0.5, 6.0)
        cuts = sorted(rng.uniform(3.0, 8.0) for _ in range(3))
        if len(set(cuts)) < 3:
            cuts = [4.0, 6.0, 7.0]
        spec = GeneratorSpec(seed=i, n_papers=rng.randint(1, 500), kappa=kappa,
                             thresholds=tuple(kappa * c for c in cuts), reviewers=(rng.randint(1, 3), rng.randint(3, 6)),
                             mean_distribution=rng.choice(["uniform", "triangular"]))
        datasets.append(generate(spec, with_history=False).papers)
    with criterion(1, "decision_entropy equals enumeration oracle on 200 synthetic years") as d:
        t0 = time.perf_counter()
        got = [an.decision_entropy(papers).h_bar for papers in datasets]
        elapsed = time.perf_counter() - t0
        want = [enumeration_entropy(papers) for papers in datasets]
        worst = max(abs(a - b) for a, b in zip(got, want))
        d["max_abs_diff"] = f"{worst:.2e}"
        d["library_time_s"] = f"{elapsed:.2f}"
        assert worst <= 1e-9
        assert elapsed < 5.0


# --- 2 ----------------------------------------------------------------------------


def test_criterion_2_ordered_logit_recovery():
    kappa, tau = 1.5, (4.0, 6.0, 7.0)
    with criterion(2, "ordered-logit recovery, 20 seeds x 5000 papers") as d:
        t0 = time.perf_counter()
        fits = []
        for seed in range(20):
            rng = make_rng(seed)
            x = rng.uniform(1.0, 10.0, 5000)
            y = sample_tiers(x, kappa, tau, rng)
            fits.append(an.fit_ordered_logit_arrays(x, y))
        elapsed = time.perf_counter() - t0
        k = float(np.mean([f.kappa for f in fits]))
        t = np.mean([f.thresholds for f in fits], axis=0)
        d["kappa"] = f"{k:.4f}"
        d["tau"] = "(" + ", ".join(f"{v:.3f}" for v in t) + ")"
        assert abs(k - kappa) <= 0.05 * kappa
        assert np.all(np.abs(t - np.array(tau)) <= 0.1)
        assert all(f.converged for f in fits)
        assert elapsed < 30.0


# --- 3 ----------------------------------------------------------------------------


def test_criterion_3_scaling_law_property():
    with criterion(3, "venue-growth sweep log fit and hardened final year") as d:
        rows = venue_growth_sweep(range(500, 12001, 500), softening_kappa, seed=0)
        fit = an.fit_log_scaling([(y, x, h) for y, x, h, _ in rows])
        # the sweep ends in 2024; 2025 keeps the smallest venue's sharpness at a larger volume
        (final,) = venue_growth_sweep([13000], lambda volume: softening_kappa(500), seed=1, first_year=2025)
        held_out = an.fit_log_scaling([(y, x, h) for y, x, h, _ in rows + [final]], target_year=2025)
        resid = held_out.residuals[2025]
        spread = max(abs(v) for y, v in held_out.residuals.items() if y != 2025)
        d.update(a=f"{fit.a:.4f}", r2=f"{fit.r_squared:.4f}", resid_final=f"{resid:.4f}", max_in_sample=f"{spread:.4f}")
        assert fit.r_squared > 0.9 and fit.a > 0
        assert resid < 0
        assert abs(resid) > 3 * spread


# --- 4 ----------------------------------------------------------------------------

PUBLISHED_CONSENT = [(1115, 1860, 59.9), (191, 357, 53.5), (628, 1034, 60.7), (151, 254, 59.4), (145, 215, 67.4)]


def test_criterion_4_desk_scale_reproduction(dyn30, mini_cfg):
    with criterion(4, "published consent counts exact; bundled 30-paper fixtures match derived goldens") as d:
        assert [consent_rate(c, n).percent for c, n, _ in PUBLISHED_CONSENT] == [p for _, _, p in PUBLISHED_CONSENT]
        g = dyn30["golden"]
        fr = an.dimension_update_fractions(dyn30["archive"], dyn30["cfg"])
        assert fr == pytest.approx(g["update_fractions"], abs=1e-12)
        rows = read_community_rows((FIXTURES / "community" / "rows_20.csv").read_text())
        accepted, _ = ingest_community_batch(rows, mini_cfg)
        adj = json.loads((FIXTURES / "community" / "adjudication.json").read_text())
        stats = consent_stats(accepted)
        assert stats.consented == len(adj["individual_display"]) and stats.total == len(adj["accepted"])
        d["update_fractions"] = ",".join(f"{k}={v:.4f}" for k, v in sorted(fr.items()))
        d["community_consent"] = f"{stats.percent}%"


def test_criterion_4_full_iclr2025_archive():
    """Optional real-data half: needs a workspace with ICLR 2025 already ingested."""
    root = os.environ.get(ICLR_ROOT_ENV)
    if not root:
        line = (f"SKIP criterion 4 (real-data half): set {ICLR_ROOT_ENV} to a workspace holding the "
                "downloaded ICLR 2025 archive; only the desk-scale half ran")
        ACCEPTANCE_LINES.append(line)
        print(line)
        pytest.skip(line)
    with criterion(4, "ICLR 2025 dimension-update fractions") as d:
        cfg = load_venue_config(Path(root) / "configs" / "ICLR" / "2025.yaml")
        fr = an.dimension_update_fractions(open_archive(root, "ICLR", 2025), cfg,
                                           [r.paper_id for r in load_records(root, "ICLR", 2025)])
        d.update({k: f"{100 * v:.1f}%" for k, v in sorted(fr.items())})
        assert abs(100 * fr["rating"] - 54.8) <= 0.5
        for dim, v in fr.items():
            if dim != "rating":
                assert 9.0 <= 100 * v <= 14.0


# --- 5 ----------------------------------------------------------------------------

TABLE1 = {
    "glm-4-plus": ((5.01, 4.94, 0.81), 86.82),
    "glm-4-air": ((49.98, 17.11, 0.51), 44.73),
    "glm-4-flash": ((76.39, 43.27, 0.62), 18.52),
    "glm-3-turbo": ((76.07, 32.34, 1.34), 20.90),
}


def test_criterion_5_table1_audit():
    with criterion(5, "union bound flags exactly the glm-4-plus row") as d:
        inconsistent = sorted(m for m, (marg, s) in TABLE1.items() if not union_bound_check(marg, s, percent=True))
        d["inconsistent"] = ",".join(inconsistent)
        assert inconsistent == ["glm-4-plus"]


# --- 6 ----------------------------------------------------------------------------

DIMS = ("rating", "confidence", "soundness", "presentation", "contribution")
T0 = datetime(2024, 11, 1, tzinfo=timezone.utc)


def random_history(rng, pid):
    t, out = 0, []
    for _ in range(rng.randint(1, 12)):
        t += rng.randint(1, 72)
        dims = rng.sample(DIMS, rng.randint(0, 5))
        out.append(ReviewSnapshot(pid, "r1", T0 + timedelta(hours=t), {d: rng.randint(1, 5) for d in dims}))
    return out


def test_criterion_6_archive_round_trip():
    rng = random.Random(6)
    histories = [random_history(rng, f"h{i:04d}") for i in range(1000)]
    with criterion(6, "1000 histories: first + events == last; append-only hash check") as d, tempfile.TemporaryDirectory() as tmp:
        t0 = time.perf_counter()
        arc = SnapshotArchive(Path(tmp))
        arc.extend(s for h in histories[:500] for s in h)
        log = Path(tmp) / "events.ndjson"
        prefix = log.read_bytes()
        prefix_hash = hashlib.sha256(prefix).hexdigest()
        arc.extend(s for h in histories[500:] for s in h)
        final = log.read_bytes()
        assert hashlib.sha256(final[: len(prefix)]).hexdigest() == prefix_hash
        reopened = SnapshotArchive(Path(tmp))
        for line in final.decode().splitlines():
            stored = ReviewSnapshot.from_line(line)
            assert json.loads(line)["content_hash"] == stored.content_hash
        for h in histories:
            pid = h[0].paper_id
            kept = reopened.history(pid, "r1")
            assert apply_events(kept[0].scores, reopened.events(pid)) == dict(sorted(h[-1].scores.items()))
        elapsed = time.perf_counter() - t0
        d["snapshots_stored"] = len(reopened)
        assert elapsed < 10.0


# --- 7 ----------------------------------------------------------------------------


def test_criterion_7_end_to_end_determinism(tmp_path):
    golden = json.loads(SEED42_GOLDEN.read_text())["sha256"]
    with criterion(7, "seed-42 synth -> ingest -> analyze -> export byte-identical and matching golden hashes") as d:
        first = seed42_pipeline(tmp_path / "run1")
        second = seed42_pipeline(tmp_path / "run2")
        d["files"] = len(first)
        assert first == second
        assert first == golden


# --- 8 ----------------------------------------------------------------------------


def test_criterion_8_consent_safety_sweep(mini_cfg, tmp_path):
    rng = random.Random(8)
    with criterion(8, "no individual-level output for non-consenting community records, every export mode") as d:
        hidden_total = 0
        hidden, leaked = consent_sweep(FIXTURES / "community" / "rows_20.csv", mini_cfg, tmp_path / "fixture")
        assert leaked == set()
        hidden_total += len(hidden)
        for i in range(25):
            work = tmp_path / f"adv{i:02d}"
            work.mkdir()
            write_rows(work / "rows.csv", random_rows(rng, rng.randint(2, 10)))
            hidden, leaked = consent_sweep(work / "rows.csv", mini_cfg, work)
            assert leaked == set(), f"fixture {i} leaked {sorted(leaked)}"
            hidden_total += len(hidden)
        d["fixtures"] = 26
        d["hidden_records_checked"] = hidden_total

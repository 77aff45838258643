"""Seeded synthetic venues drawn from the ordered-logit decision model.

Randomness comes from numpy's Philox counter-based generator keyed by the
spec seed, so output is identical across runs and platforms for a given
numpy version. Each paper gets reviewer scores, a rebuttal-phase update for
some reviewers, and a tier sampled from
``P(s | x) = sigma(tau_s - kappa*x) - sigma(tau_{s-1} - kappa*x)`` at its
final mean rating ``x``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import yaml

from .analytics.binning import Binning
from .analytics.entropy import decision_entropy
from .analytics.ordered_logit import tier_probabilities
from .archive import ReviewSnapshot
from .core import (
    CONFIDENCE,
    RATING,
    TIERS,
    DecisionStatus,
    Dimension,
    PaperRecord,
    PhaseDates,
    Review,
    ReviewDimensionSchema,
    Source,
    SourceKind,
    VenueConfig,
    dump_venue_config,
    format_instant,
    parse_instant,
)
from .errors import InvalidSpec
from .ingestion import timestamp_filename

STATUS_STRINGS = {
    DecisionStatus.REJECT: "Reject",
    DecisionStatus.POSTER: "Accept (Poster)",
    DecisionStatus.SPOTLIGHT: "Accept (Spotlight)",
    DecisionStatus.ORAL: "Accept (Oral)",
    DecisionStatus.WITHDRAWN: "Withdrawn",
}

DEFAULT_DIMENSIONS = (
    (RATING, 1, 10, 1),
    (CONFIDENCE, 1, 5, 1),
    ("soundness", 1, 4, 1),
    ("presentation", 1, 4, 1),
    ("contribution", 1, 4, 1),
)


def _default_phases() -> dict[str, str]:
    return {
        "review_release": "2024-11-12T00:00:00Z",
        "discussion_start": "2024-11-13T00:00:00Z",
        "discussion_end": "2024-12-03T00:00:00Z",
        "decision": "2025-01-22T00:00:00Z",
    }


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int = 0
    n_papers: int = 100
    venue: str = "SYNTH"
    year: int = 2025
    reviewers: tuple[int, int] = (3, 5)
    dimensions: tuple[tuple[str, float, float, float], ...] = DEFAULT_DIMENSIONS
    kappa: float = 1.5
    thresholds: tuple[float, float, float] = (8.25, 9.75, 10.5)
    mean_distribution: str = "uniform"  # or "triangular"
    reviewer_noise: float = 1.0
    change_prob: Mapping[str, float] = field(
        default_factory=lambda: {RATING: 0.3, CONFIDENCE: 0.04, "soundness": 0.04, "presentation": 0.04, "contribution": 0.04}
    )
    upward_bias: float = 0.7
    withdraw_prob: float = 0.0
    phase_dates: Mapping[str, str] = field(default_factory=_default_phases)

    def __post_init__(self):
        if self.n_papers < 0:
            raise InvalidSpec("n_papers must be >= 0")
        lo, hi = self.reviewers
        if not 1 <= lo <= hi:
            raise InvalidSpec("reviewers must satisfy 1 <= min <= max")
        if len(self.thresholds) != 3 or any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise InvalidSpec("thresholds must be three strictly increasing values")
        if not math.isfinite(self.kappa):
            raise InvalidSpec("kappa must be finite")
        probs = [self.upward_bias, self.withdraw_prob, *self.change_prob.values()]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise InvalidSpec("probabilities must lie in [0, 1]")
        if self.mean_distribution not in ("uniform", "triangular"):
            raise InvalidSpec(f"unknown mean distribution {self.mean_distribution!r}")
        if not any(d[0] == RATING for d in self.dimensions):
            raise InvalidSpec("dimensions must include rating")
        try:
            self.venue_config()
        except Exception as exc:
            raise InvalidSpec(str(exc)) from exc

    def venue_config(self, source_kind: SourceKind = SourceKind.API_CONNECTOR) -> VenueConfig:
        p = self.phase_dates
        vocab = {text: status for status, text in STATUS_STRINGS.items()}
        return VenueConfig(
            venue=self.venue,
            year=self.year,
            source_kind=source_kind,
            schema=ReviewDimensionSchema(tuple(Dimension(n, float(a), float(b), float(s)) for n, a, b, s in self.dimensions)),
            status_vocabulary=vocab,
            phase_dates=PhaseDates(
                review_release=parse_instant(p["review_release"]),
                discussion_start=parse_instant(p["discussion_start"]),
                discussion_end=parse_instant(p["discussion_end"]),
                decision=parse_instant(p["decision"]),
            ),
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratorSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown generator spec keys {sorted(unknown)}")
        kw = dict(data)
        if "reviewers" in kw:
            kw["reviewers"] = tuple(kw["reviewers"])
        if "thresholds" in kw:
            kw["thresholds"] = tuple(float(t) for t in kw["thresholds"])
        if "dimensions" in kw:
            kw["dimensions"] = tuple(tuple(d) for d in kw["dimensions"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["reviewers"] = list(self.reviewers)
        d["thresholds"] = list(self.thresholds)
        d["dimensions"] = [list(x) for x in self.dimensions]
        d["change_prob"] = dict(self.change_prob)
        d["phase_dates"] = dict(self.phase_dates)
        return d


def load_spec(path: str | Path) -> GeneratorSpec:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    return GeneratorSpec.from_dict(data)


@dataclass(frozen=True)
class TrueBin:
    index: int
    count: int
    probabilities: Mapping[DecisionStatus, float]
    entropy: float


@dataclass(frozen=True)
class TrueStats:
    """Model-side quantities: per-bin expected tier probabilities and their entropies."""

    kappa: float
    thresholds: tuple[float, float, float]
    binning: Binning
    bins: tuple[TrueBin, ...]
    h_bar: float
    model_probabilities: Mapping[str, tuple[float, float, float, float]]


@dataclass(frozen=True)
class SyntheticVenue:
    spec: GeneratorSpec
    cfg: VenueConfig
    papers: tuple[PaperRecord, ...]
    snapshots: tuple[ReviewSnapshot, ...]
    truth: TrueStats


def sample_tiers(x: np.ndarray, kappa: float, thresholds: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw of tier ranks (0..3) from the ordered-logit law."""
    p = tier_probabilities(x, kappa, thresholds)
    cdf = np.cumsum(p, axis=1)
    u = rng.random(len(p))
    return np.minimum((u[:, None] > cdf).sum(axis=1), len(TIERS) - 1)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _snap(value: float, lo: float, hi: float, step: float) -> float:
    v = lo + round((value - lo) / step) * step
    return float(min(hi, max(lo, v)))


def _true_stats(spec: GeneratorSpec, xs: np.ndarray, tiered: np.ndarray, ids: list[str], binning: Binning) -> TrueStats:
    probs = tier_probabilities(xs, spec.kappa, spec.thresholds) if len(xs) else np.zeros((0, 4))
    groups: dict[int, list[int]] = {}
    for i, x in enumerate(xs):
        if tiered[i]:
            groups.setdefault(binning.index(float(x)), []).append(i)
    n_total = sum(len(v) for v in groups.values())
    bins = []
    for k in sorted(groups):
        idx = groups[k]
        p = probs[idx].mean(axis=0)
        h = -math.fsum(float(q) * math.log(float(q)) for q in p if q > 0)
        bins.append(TrueBin(k, len(idx), dict(zip(TIERS, (float(q) for q in p))), h))
    h_bar = math.fsum(b.count / n_total * b.entropy for b in bins) if n_total else 0.0
    return TrueStats(
        kappa=spec.kappa,
        thresholds=tuple(spec.thresholds),
        binning=binning,
        bins=tuple(bins),
        h_bar=h_bar,
        model_probabilities={pid: tuple(float(q) for q in probs[i]) for i, pid in enumerate(ids)},
    )


def generate(spec: GeneratorSpec, binning: Binning = Binning(), with_history: bool = True) -> SyntheticVenue:
    """Draw papers, their snapshot history and the model-side truth for one venue-year."""
    rng = make_rng(spec.seed)
    cfg = spec.venue_config()
    phases = cfg.phase_dates
    dims = {n: (float(a), float(b), float(s)) for n, a, b, s in spec.dimensions}
    lo_r, hi_r, step_r = dims[RATING]
    n = spec.n_papers
    discussion_days = max(1, (phases.discussion_end - phases.discussion_start).days)

    if spec.mean_distribution == "uniform":
        targets = rng.uniform(lo_r, hi_r, size=n)
    else:
        targets = rng.triangular(lo_r, (lo_r + hi_r) / 2, hi_r, size=n)
    n_reviews = rng.integers(spec.reviewers[0], spec.reviewers[1] + 1, size=n)

    papers_scores = []
    for i in range(n):
        reviewers = []
        for r in range(int(n_reviews[i])):
            initial, final = {}, {}
            for name, (lo, hi, step) in dims.items():
                if name == RATING:
                    v = _snap(targets[i] + rng.normal(0.0, spec.reviewer_noise), lo, hi, step)
                else:
                    v = _snap(rng.uniform(lo, hi), lo, hi, step)
                initial[name] = v
                new = v
                if rng.random() < spec.change_prob.get(name, 0.0):
                    delta = step if rng.random() < spec.upward_bias else -step
                    new = _snap(v + delta, lo, hi, step)
                final[name] = new
            day = int(rng.integers(1, discussion_days + 1))
            reviewers.append((initial, final, day))
        papers_scores.append(reviewers)

    xs = np.array([math.fsum(f[RATING] for _, f, _ in revs) / len(revs) for revs in papers_scores]) if n else np.zeros(0)
    ranks = sample_tiers(xs, spec.kappa, spec.thresholds, rng) if n else np.zeros(0, int)
    withdrawn = rng.random(n) < spec.withdraw_prob if n else np.zeros(0, bool)

    width = max(3, len(str(max(n - 1, 0))))
    ids = [f"{spec.venue}{spec.year}-{i:0{width}d}" for i in range(n)]
    papers, snapshots = [], []
    for i, pid in enumerate(ids):
        reviews = []
        for r, (initial, final, day) in enumerate(papers_scores[i], start=1):
            rid = f"{pid}-R{r}"
            t0 = phases.review_release
            t1 = phases.discussion_start + timedelta(days=day)
            changed = final != initial
            if with_history:
                snapshots.append(ReviewSnapshot(pid, rid, t0, initial))
                if changed:
                    snapshots.append(ReviewSnapshot(pid, rid, t1, final))
            reviews.append(Review(rid, dict(final), t1 if changed else t0))
        status = DecisionStatus.WITHDRAWN if withdrawn[i] else TIERS[int(ranks[i])]
        papers.append(
            PaperRecord(
                paper_id=pid,
                venue=spec.venue,
                year=spec.year,
                title=f"Synthetic paper {i}",
                reviews=tuple(reviews),
                final_status=status,
                source=Source.OFFICIAL_API,
            )
        )
    tiered = ~withdrawn if n else np.zeros(0, bool)
    truth = _true_stats(spec, xs, tiered, ids, binning)
    snapshots.sort(key=lambda s: (s.captured_at, s.paper_id, s.reviewer_id))
    return SyntheticVenue(spec, cfg, tuple(papers), tuple(snapshots), truth)


# --------------------------------------------------------------------------
# fixture emission


def _payload(venue: SyntheticVenue, states: Mapping[str, Mapping[str, tuple]], final: bool) -> bytes:
    notes = []
    for p in venue.papers:
        reviews = [
            {"reviewer_id": rid, "timestamp": format_instant(ts), "scores": {k: _plain(v) for k, v in scores.items()}}
            for rid, (scores, ts) in sorted(states.get(p.paper_id, {}).items())
        ]
        notes.append(
            {
                "id": p.paper_id,
                "title": p.title,
                "status": STATUS_STRINGS[p.final_status] if final else None,
                "reviews": reviews,
            }
        )
    return (json.dumps({"papers": notes}, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def _plain(v: float):
    return int(v) if float(v).is_integer() else v


def fixture_payloads(venue: SyntheticVenue) -> list[tuple[datetime, bytes]]:
    """API-shaped payloads at each capture instant with changes, plus one at decision time."""
    by_time: dict[datetime, list[ReviewSnapshot]] = {}
    for s in venue.snapshots:
        by_time.setdefault(s.captured_at, []).append(s)
    states: dict[str, dict[str, tuple]] = {}
    out = []
    for t in sorted(by_time):
        for s in by_time[t]:
            states.setdefault(s.paper_id, {})[s.reviewer_id] = (dict(s.scores), s.captured_at)
        out.append((t, _payload(venue, states, final=False)))
    decision = venue.cfg.phase_dates.decision
    out.append((decision, _payload(venue, states, final=True)))
    return out


def truth_to_dict(truth: TrueStats) -> dict[str, Any]:
    return {
        "kappa": truth.kappa,
        "thresholds": list(truth.thresholds),
        "bin_width": truth.binning.width,
        "bin_origin": truth.binning.origin,
        "h_bar": truth.h_bar,
        "bins": [
            {"index": b.index, "count": b.count, "entropy": b.entropy,
             "probabilities": {s.value: p for s, p in b.probabilities.items()}}
            for b in truth.bins
        ],
    }


def write_fixtures(venue: SyntheticVenue, out_dir: str | Path) -> Path:
    """Write ``<out>/<venue>/<year>/<timestamp>.raw`` payloads, ``venue.yaml`` and ``truth.json``."""
    d = Path(out_dir) / venue.cfg.venue / str(venue.cfg.year)
    d.mkdir(parents=True, exist_ok=True)
    for t, payload in fixture_payloads(venue):
        (d / timestamp_filename(t)).write_bytes(payload)
    dump_venue_config(venue.cfg, d / "venue.yaml")
    (d / "truth.json").write_text(json.dumps(truth_to_dict(venue.truth), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return d


# --------------------------------------------------------------------------
# venue-growth sweep


def softening_kappa(volume: float, kappa0: float = 3.0, rate: float = 0.35, ref: float = 500.0) -> float:
    """Sensitivity that decays with log volume (larger venues decide less sharply)."""
    return kappa0 / (1.0 + rate * math.log(volume / ref))


def venue_growth_sweep(
    volumes: Sequence[int],
    kappa_of_volume: Callable[[float], float] = softening_kappa,
    cuts: tuple[float, float, float] = (5.5, 6.5, 7.0),
    seed: int = 0,
    binning: Binning = Binning(),
    first_year: int = 2001,
) -> list[tuple[int, int, float, float]]:
    """Generate one synthetic year per volume; return ``(year, X, H_bar, kappa)`` rows.

    Thresholds are ``kappa * cuts`` so the score cut points stay put while
    the sensitivity changes. Only ratings are drawn (no history) for speed.
    """
    rows = []
    for j, volume in enumerate(volumes):
        kappa = kappa_of_volume(volume)
        spec = GeneratorSpec(
            seed=seed * 1_000_003 + j,
            n_papers=int(volume),
            year=first_year + j,
            kappa=kappa,
            thresholds=tuple(kappa * c for c in cuts),
            dimensions=((RATING, 1, 10, 1),),
            change_prob={RATING: 0.0},
        )
        v = generate(spec, binning, with_history=False)
        rep = decision_entropy(v.papers, binning)
        rows.append((spec.year, int(volume), rep.h_bar, kappa))
    return rows

"""Versioned paperlist export, release manifest, and plot-ready CSV emission."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from collections import Counter
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .analytics.dynamics import ConsensusSeries, DynamicsReport
from .analytics.entropy import EntropyReport
from .analytics.scaling import ScalingFit
from .analytics.tables import GridCell, TierStat, acceptance_by_combination
from .core import TIERS, DecisionStatus, PaperRecord, Source, dumps_paperlist, format_instant
from .errors import ManifestConflict, NothingToExport, UnknownFigure

MANIFEST = "manifest.json"


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


# --------------------------------------------------------------------------
# manifest


@dataclasses.dataclass(frozen=True)
class ManifestFile:
    path: str
    sha256: str
    venue: str
    year: int
    provenance: tuple[str, ...]
    records: int


@dataclasses.dataclass(frozen=True)
class ReleaseEntry:
    version: str
    generated_at: str
    files: tuple[ManifestFile, ...]


@dataclasses.dataclass(frozen=True)
class ReleaseManifest:
    """All released versions, oldest first. Versions are only ever appended to."""

    versions: tuple[ReleaseEntry, ...] = ()

    @classmethod
    def load(cls, path: str | Path) -> "ReleaseManifest":
        path = Path(path)
        if not path.exists():
            return cls()
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls(
            tuple(
                ReleaseEntry(
                    v["version"],
                    v["generated_at"],
                    tuple(ManifestFile(f["path"], f["sha256"], f["venue"], f["year"], tuple(f["provenance"]), f["records"])
                          for f in v["files"]),
                )
                for v in data["versions"]
            )
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "versions": [
                    {
                        "version": v.version,
                        "generated_at": v.generated_at,
                        "files": [dict(dataclasses.asdict(f), provenance=list(f.provenance)) for f in v.files],
                    }
                    for v in self.versions
                ]
            },
            indent=2,
            ensure_ascii=False,
        ) + "\n"

    def with_files(self, version: str, generated_at: str, files: Sequence[ManifestFile]) -> "ReleaseManifest":
        for f in files:
            if not f.provenance:
                raise ValueError(f"{f.path}: provenance label required")
        versions = list(self.versions)
        for i, v in enumerate(versions):
            if v.version != version:
                continue
            existing = {f.path: f for f in v.files}
            merged = list(v.files)
            for f in files:
                if f.path in existing:
                    if existing[f.path] != f:
                        raise ManifestConflict(f"{version}: {f.path} already released with different content")
                else:
                    merged.append(f)
            versions[i] = ReleaseEntry(v.version, v.generated_at, tuple(merged))
            return ReleaseManifest(tuple(versions))
        return ReleaseManifest(tuple(versions) + (ReleaseEntry(version, generated_at, tuple(files)),))


# --------------------------------------------------------------------------
# export


def displayable(records: Iterable[PaperRecord]) -> list[PaperRecord]:
    """Records allowed in individual-level output (consent-filtered)."""
    return [r for r in records if r.individually_displayable]


def aggregate_eligible(records: Iterable[PaperRecord]) -> list[PaperRecord]:
    return [r for r in records if r.source is not Source.COMMUNITY_SUBMITTED or r.consent is not None]


def aggregate_tables(records: Sequence[PaperRecord], cutoff: int = 1) -> dict[str, Any]:
    """Anonymous aggregate statistics; no per-paper or per-reviewer rows."""
    status_counts = Counter(r.final_status.value for r in records)
    ratings = Counter(
        f"{v:g}" for r in records for v in r.scores_of("rating")
    )
    combos = acceptance_by_combination(records, cutoff=cutoff)
    return {
        "papers": len(records),
        "status_counts": {s.value: status_counts.get(s.value, 0) for s in DecisionStatus},
        "rating_histogram": dict(sorted(ratings.items(), key=lambda kv: float(kv[0]))),
        "combinations": [
            {
                "combination": ";".join(f"{v:g}" for v in c.combination),
                "count": c.count,
                "acceptance_rate": c.acceptance_rate,
            }
            for c in combos
        ],
    }


@dataclasses.dataclass(frozen=True)
class ExportResult:
    paperlist: Path
    aggregates: Path
    manifest: Path
    files: tuple[ManifestFile, ...]


def export_paperlist(
    records: Sequence[PaperRecord],
    venue: str,
    year: int,
    out_dir: str | Path,
    version: str = "v1",
    generated_at: datetime | None = None,
    consent_filtering: bool = True,
    aggregate_cutoff: int = 30,
) -> ExportResult:
    """Write ``<out>/<venue>/<year>/paperlist.json`` and ``aggregates.json``, then update the manifest.

    With consent filtering (the default, and the only mode that should be
    published), community records lacking individual-display consent are left
    out of the paperlist; they still count in the aggregate tables.
    ``generated_at`` defaults to the newest review time in the data so
    re-exports of unchanged input are byte-identical.
    """
    selected = sorted((r for r in records if r.venue == venue and r.year == year), key=lambda r: r.key)
    if not selected:
        raise NothingToExport(f"no records for {venue} {year}")
    listed = displayable(selected) if consent_filtering else selected
    if generated_at is None:
        generated_at = max(r.newest_review_at for r in selected)

    out = Path(out_dir)
    rel = Path(venue) / str(year)
    pl_path = out / rel / "paperlist.json"
    ag_path = out / rel / "aggregates.json"
    _atomic_write(pl_path, dumps_paperlist(listed).encode("utf-8"))
    agg = aggregate_tables(aggregate_eligible(selected), cutoff=aggregate_cutoff)
    _atomic_write(ag_path, (json.dumps(agg, indent=2, ensure_ascii=False) + "\n").encode("utf-8"))

    def labels(rs):
        return tuple(sorted({r.source.label for r in rs})) or ("Official API",)

    files = (
        ManifestFile(str(rel / "paperlist.json"), sha256_file(pl_path), venue, year, labels(listed), len(listed)),
        ManifestFile(str(rel / "aggregates.json"), sha256_file(ag_path), venue, year, labels(selected), len(selected)),
    )
    man_path = out / MANIFEST
    manifest = ReleaseManifest.load(man_path).with_files(version, format_instant(generated_at), files)
    _atomic_write(man_path, manifest.to_json().encode("utf-8"))
    return ExportResult(pl_path, ag_path, man_path, files)


# --------------------------------------------------------------------------
# JSON rendering of reports


def to_jsonable(obj: Any) -> Any:
    """Dataclasses, enums, datetimes and mappings into plain JSON values (stable order)."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, datetime):
        return format_instant(obj)
    if isinstance(obj, Mapping):
        return {str(to_jsonable(k)): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if hasattr(obj, "item"):  # numpy scalar
        return to_jsonable(obj.item())
    return obj


def report_json(report: Any) -> str:
    return json.dumps(to_jsonable(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# plot data


def fmt(value: Any) -> str:
    """CSV cell rendering with six significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, datetime):
        return format_instant(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    if isinstance(value, tuple):
        return ";".join(fmt(v) for v in value)
    return str(value)


def _entropy_rows(rep: EntropyReport):
    for b, w in zip(rep.bins, rep.weights):
        yield (rep.year, b.lo, b.hi, b.count, w, *[b.probabilities[s] for s in TIERS], b.entropy)


def _scaling_rows(fit: ScalingFit):
    for year, x, h in fit.points:
        yield (year, x, h, fit.residuals[year])


def _logit_rows(m):
    models = m if isinstance(m, (list, tuple)) else [m]
    for mod in models:
        yield (mod.year, mod.kappa, *mod.thresholds, mod.log_likelihood, mod.n, mod.converged, mod.separated)


def _tier_rows(rows: Sequence[TierStat]):
    for r in rows:
        yield (r.year, r.status, r.mean, r.variance, r.count)


def _prepost(rep):
    return rep.prepost if isinstance(rep, DynamicsReport) else rep


def _ridge_rows(rep):
    for status, rows in _prepost(rep).samples.items():
        for r in rows:
            yield (status, r.paper_id, r.pre, r.post)


def _sankey_rows(rep):
    flows = rep.flows if isinstance(rep, DynamicsReport) else rep
    for f in flows:
        yield (f.src_bin, f.dst_bin, f.status, f.direction, f.count)


def _update_rows(rep):
    fr = rep.update_fractions if isinstance(rep, DynamicsReport) else rep
    for d, v in fr.items():
        yield (d, v)


def _consensus_rows(rep):
    cs: ConsensusSeries = rep.consensus if isinstance(rep, DynamicsReport) else rep
    for status, values in cs.mean_range.items():
        for t, v, n in zip(cs.grid, values, cs.counts[status]):
            yield (t, status, v, n, cs.discussion_start)


def _combo_rows(rep):
    rows = rep.combinations if isinstance(rep, DynamicsReport) else rep
    for r in rows:
        yield (r.combination, r.count, r.accepted, r.acceptance_rate, r.mean, r.score_range)


def _grid_rows(cells: Sequence[GridCell]):
    for c in cells:
        for status, p in c.proportions.items():
            yield (c.year, c.lo, c.hi, c.volume, status, p)


FIGURES: dict[str, tuple[tuple[str, ...], Callable]] = {
    "entropy-bins": (("year", "bin_lo", "bin_hi", "count", "weight", "p_reject", "p_poster", "p_spotlight", "p_oral", "entropy"), _entropy_rows),
    "scaling": (("year", "X", "H_bar", "resid"), _scaling_rows),
    "logit": (("year", "kappa", "tau_1", "tau_2", "tau_3", "log_likelihood", "n", "converged", "separated"), _logit_rows),
    "tier-stats": (("year", "status", "mean", "variance", "count"), _tier_rows),
    "ridge": (("status", "paper_id", "pre", "post"), _ridge_rows),
    "sankey": (("src_bin", "dst_bin", "status", "direction", "count"), _sankey_rows),
    "dimension-updates": (("dimension", "fraction"), _update_rows),
    "consensus": (("instant", "status", "mean_range", "n_papers", "discussion_start"), _consensus_rows),
    "combinations": (("combination", "count", "accepted", "acceptance_rate", "mean", "range"), _combo_rows),
    "status-grid": (("year", "bin_lo", "bin_hi", "volume", "status", "proportion"), _grid_rows),
}
DYNAMICS_PANELS = ("ridge", "sankey", "dimension-updates", "consensus", "combinations")


def plot_csv(report: Any, figure: str) -> str:
    if figure not in FIGURES:
        raise UnknownFigure(figure)
    columns, rows = FIGURES[figure]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows(report):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def emit_plot_data(report: Any, figure: str, out_dir: str | Path) -> list[Path]:
    """Write ``<figure>.csv`` under ``out_dir``; ``figure="dynamics"`` writes every dynamics panel."""
    figures = DYNAMICS_PANELS if figure == "dynamics" else (figure,)
    paths = []
    for fig in figures:
        text = plot_csv(report, fig)
        p = Path(out_dir) / f"{fig}.csv"
        _atomic_write(p, text.encode("utf-8"))
        paths.append(p)
    return paths


def read_plot_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))

"""Command-line entry point: ``review-archive <subcommand> ...``.

Workspace layout under ``--root``::

    configs/<venue>/<year>.yaml      venue config captured at ingest time
    raw/<venue>/<year>/*.raw         verbatim payloads
    archive/<venue>/<year>/          events.ndjson + index.json
    records/<venue>/<year>/records.json
    reports/<venue>/<year>/          analyze output (JSON + CSV)

Exit status: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import analytics as an
from .archive import SnapshotArchive, archive_dir, diff
from .core import dump_venue_config, load_venue_config, parse_instant
from .errors import ArchiveError, ConfigError
from .export import emit_plot_data, export_paperlist, report_json, to_jsonable
from .ingestion import connector_for, load_records, run_ingest
from .synth import generate, load_spec, write_fixtures
from .validation import RemoteExtractor, ReplayExtractor, success_rate, token_totals, validate_corpus, write_results_csv

logger = logging.getLogger(__name__)

ANALYSES = ("entropy", "scaling", "logit", "dynamics", "consensus", "combos", "grid", "tiers")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _workspace(p: argparse.ArgumentParser) -> None:
    p.add_argument("--root", default="review-archive", help="workspace directory (default: %(default)s)")
    p.add_argument("--config", help="venue config file (YAML)")


def _venue_year(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--venue", required=required)
    p.add_argument("--year", type=int, required=required)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="review-archive", description="Peer-review archive and analytics toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="{ingest,snapshot,analyze,validate-extraction,synth,export}")
    sub.required = True

    p = sub.add_parser("ingest", help="fetch and archive one venue-year")
    _venue_year(p)
    _workspace(p)
    p.add_argument("--fixture", help="replay payloads from a fixture directory or file")
    p.add_argument("--once", action="store_true", help="process a single fetch")

    p = sub.add_parser("snapshot", help="inspect the snapshot archive")
    p.add_argument("action", choices=("diff", "replay", "export"))
    _venue_year(p)
    _workspace(p)
    p.add_argument("--paper")
    p.add_argument("--reviewer")
    p.add_argument("--out", help="output file (export)")

    p = sub.add_parser("analyze", help="compute a report")
    p.add_argument("analysis", choices=ANALYSES)
    _venue_year(p)
    _workspace(p)
    p.add_argument("--bin-width", type=float, default=0.2)
    p.add_argument("--origin", type=float, default=0.0)
    p.add_argument("--cutoff", type=int, default=30)
    p.add_argument("--dimension", default="rating", choices=("rating", "confidence"))
    p.add_argument("--scope", choices=("leave-target-out", "all-years"), default="leave-target-out")
    p.add_argument("--out", help="report directory (default: <root>/reports/<venue>/<year>)")

    p = sub.add_parser("validate-extraction", help="score extractor outputs for structural consistency")
    p.add_argument("--corpus", required=True)
    p.add_argument("--endpoint", help="chat-completion URL; replay stored outputs when absent")
    p.add_argument("--model", default="glm-4-plus")
    p.add_argument("--prompt", help="prompt template file ({document} placeholder)")
    p.add_argument("--out", help="results CSV path")

    p = sub.add_parser("synth", help="generate a synthetic venue as connector fixtures")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="overrides the spec seed")

    p = sub.add_parser("export", help="write a versioned paperlist release")
    _venue_year(p)
    _workspace(p)
    p.add_argument("--out", required=True)
    p.add_argument("--version", dest="release", default="v1")
    p.add_argument("--generated-at", help="manifest timestamp (default: newest review time)")
    return parser


# --------------------------------------------------------------------------


def _saved_config_path(root: Path, venue: str, year: int) -> Path:
    return root / "configs" / venue / f"{year}.yaml"


def _resolve_config(args, fixture: str | None = None):
    root = Path(args.root)
    candidates = []
    if args.config:
        candidates.append(Path(args.config))
    if fixture:
        f = Path(fixture)
        candidates.append((f if f.is_dir() else f.parent) / "venue.yaml")
    candidates.append(_saved_config_path(root, args.venue, args.year))
    for c in candidates:
        if c.exists():
            cfg = load_venue_config(c)
            if (cfg.venue, cfg.year) != (args.venue, args.year):
                raise ConfigError(f"{c} describes {cfg.venue} {cfg.year}, not {args.venue} {args.year}")
            return cfg
    raise ConfigError(f"no venue config for {args.venue} {args.year}; pass --config")


def _cmd_ingest(args) -> int:
    cfg = _resolve_config(args, args.fixture)
    root = Path(args.root)
    saved = _saved_config_path(root, cfg.venue, cfg.year)
    saved.parent.mkdir(parents=True, exist_ok=True)
    dump_venue_config(cfg, saved)
    outcomes = run_ingest(cfg, root, connector_for(cfg, args.fixture), once=args.once)
    summary = {
        "fetches": len(outcomes),
        "records": outcomes[-1].fetch.record_count if outcomes else 0,
        "new_snapshots": sum(o.new_snapshots for o in outcomes),
        "quarantined": sum(len(o.quarantined) for o in outcomes),
        "rejected": sum(len(o.rejected) for o in outcomes),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _open_archive(args) -> SnapshotArchive:
    d = archive_dir(Path(args.root) / "archive", args.venue, args.year)
    if not (d / "events.ndjson").exists():
        raise ArchiveError(f"no archive for {args.venue} {args.year} under {args.root}")
    return SnapshotArchive(d)


def _hidden_papers(args) -> set[str]:
    return {r.paper_id for r in load_records(args.root, args.venue, args.year) if not r.individually_displayable}


def _cmd_snapshot(args) -> int:
    archive = _open_archive(args)
    hidden = _hidden_papers(args)
    if args.action == "export":
        lines = [l for s, l in zip(archive, archive.export_lines()) if s.paper_id not in hidden]
        text = "".join(l + "\n" for l in lines)
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    if not args.paper:
        raise _UsageError(f"snapshot {args.action} requires --paper")
    if args.paper in hidden:
        raise ArchiveError(f"{args.paper} is not available for individual display")
    if args.action == "replay":
        print(report_json(archive.replay(args.paper)), end="")
        return 0
    reviewers = [args.reviewer] if args.reviewer else archive.reviewers(args.paper)
    for rid in reviewers:
        snaps = archive.history(args.paper, rid)
        for a, b in zip(snaps, snaps[1:]):
            for ev in diff(a, b):
                print(json.dumps(to_jsonable(ev), sort_keys=True))
    return 0


def _years_available(root: Path, venue: str) -> list[int]:
    base = root / "records" / venue
    if not base.exists():
        return []
    return sorted(int(p.name) for p in base.iterdir() if (p / "records.json").exists())


def _cmd_analyze(args) -> int:
    root = Path(args.root)
    binning = an.Binning(args.bin_width, args.origin)
    records = load_records(root, args.venue, args.year)
    if not records and args.analysis != "scaling":
        raise ArchiveError(f"no records for {args.venue} {args.year}; run ingest first")
    out = Path(args.out) if args.out else root / "reports" / args.venue / str(args.year)
    out.mkdir(parents=True, exist_ok=True)
    visible = {r.paper_id for r in records if r.individually_displayable}

    if args.analysis == "entropy":
        report, figures = an.decision_entropy(records, binning, args.dimension), ["entropy-bins"]
    elif args.analysis == "scaling":
        points = []
        for y in _years_available(root, args.venue):
            recs = load_records(root, args.venue, y)
            points.append((y, len(recs), an.decision_entropy(recs, binning).h_bar))
        report = an.fit_log_scaling(points, target_year=args.year, scope=args.scope)
        figures = ["scaling"]
    elif args.analysis == "logit":
        report, figures = an.fit_ordered_logit(records, args.dimension), ["logit"]
    elif args.analysis == "tiers":
        report, figures = an.tier_stats(records, args.dimension), ["tier-stats"]
    elif args.analysis == "combos":
        report, figures = an.acceptance_by_combination(records, args.cutoff), ["combinations"]
    elif args.analysis == "grid":
        report, figures = an.status_mix_by_bin(records, args.dimension, binning), ["status-grid"]
    else:
        cfg = _resolve_config(args)
        archive = _open_archive(args)
        if args.analysis == "consensus":
            p = cfg.phase_dates
            if p is None:
                raise ArchiveError("consensus needs phase dates")
            report = an.consensus_series(archive, records, an.daily_grid(p.review_release, p.decision), cfg)
            figures = ["consensus"]
        else:
            report = an.dynamics_report(archive, cfg, records, binning, cutoff=args.cutoff)
            # per-paper rows only for individually displayable papers
            samples = {s: tuple(r for r in rows if r.paper_id in visible) for s, rows in report.prepost.samples.items()}
            report = replace(report, prepost=replace(report.prepost, samples=samples))
            figures = ["dynamics"]

    (out / f"{args.analysis}.json").write_text(report_json(report), encoding="utf-8")
    for fig in figures:
        emit_plot_data(report, fig, out)
    print(str(out / f"{args.analysis}.json"))
    return 0


def _cmd_validate(args) -> int:
    if args.endpoint:
        kw = {"model": args.model}
        if args.prompt:
            kw["prompt_template"] = Path(args.prompt).read_text(encoding="utf-8")
        extractor = RemoteExtractor(args.endpoint, token=os.environ.get("REVIEW_ARCHIVE_TOKEN"), **kw)
    else:
        extractor = ReplayExtractor()
    results = validate_corpus(args.corpus, extractor)
    if not results:
        raise ArchiveError(f"no documents under {args.corpus}")
    if args.out:
        write_results_csv(args.out, results)
    rep = success_rate([f for _, f in results])
    tokens = token_totals(r for r, _ in results)
    print(json.dumps({
        "documents": rep.n,
        "success_rate": rep.success,
        "delta_aff": rep.aff_rate,
        "delta_email": rep.email_rate,
        "delta_parse": rep.parse_rate,
        "prompt_tokens": tokens.prompt,
        "completion_tokens": tokens.completion,
        "total_tokens": tokens.total,
    }, sort_keys=True))
    return 0


def _cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    d = write_fixtures(generate(spec), args.out)
    print(str(d))
    return 0


def _cmd_export(args) -> int:
    records = load_records(args.root, args.venue, args.year)
    generated = parse_instant(args.generated_at) if args.generated_at else None
    res = export_paperlist(records, args.venue, args.year, args.out, version=args.release, generated_at=generated)
    print(str(res.paperlist))
    return 0


COMMANDS = {
    "ingest": _cmd_ingest,
    "snapshot": _cmd_snapshot,
    "analyze": _cmd_analyze,
    "validate-extraction": _cmd_validate,
    "synth": _cmd_synth,
    "export": _cmd_export,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"review-archive: error: {exc}", file=sys.stderr)
        return 2
    except (ArchiveError, ValueError, OSError) as exc:
        print(f"review-archive: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())

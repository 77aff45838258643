"""Structural-consistency scoring of author/affiliation/email extraction.

Extractor output grammar (one author per line)::

    <name> | <affiliation>; <affiliation>; ... | <email>

``|`` is reserved as the field delimiter and must appear exactly twice per
line; affiliations are ``;``-separated and may be empty, as may the email.
Blank lines and lines starting with ``#`` are ignored. An output fails to
parse when a line has the wrong number of fields, a name is empty, an email
lacks ``@``, or no author line is present. Well-formed lines of a failed
output are still recovered.

Empty affiliation or email fields are not counted, so an extractor that
drops an author's email produces an email list one shorter than the author
list.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import httpx

from .errors import AuthError, EmptyInput, TransportError

logger = logging.getLogger(__name__)

FIELD_DELIM = "|"
AFFIL_DELIM = ";"
RESULT_COLUMNS = ("doc_id", "delta_aff", "delta_email", "delta_parse", "prompt_tokens", "completion_tokens")


@dataclass(frozen=True)
class TokenUsage:
    prompt: int = 0
    completion: int = 0

    def __post_init__(self):
        if self.prompt < 0 or self.completion < 0:
            raise ValueError("token counts must be non-negative")


@dataclass(frozen=True)
class ExtractionRecord:
    document_id: str
    authors: tuple[str, ...] = ()
    affiliations: tuple[tuple[str, ...], ...] = ()
    emails: tuple[str, ...] = ()
    countries: Mapping[str, str | None] = field(default_factory=dict)
    parse_ok: bool = True
    token_usage: TokenUsage = TokenUsage()


@dataclass(frozen=True)
class ConsistencyFlags:
    aff: int
    email: int
    parse: int

    @property
    def failed(self) -> bool:
        return bool(self.aff or self.email or self.parse)


def mismatch(x: Sequence, y: Sequence) -> int:
    """1 when the two collections differ in cardinality."""
    return int(len(x) != len(y))


class CountryLookup:
    """Static institution -> country code table, matched case-insensitively."""

    def __init__(self, table: Mapping[str, str] | None = None, overrides: Mapping[str, str] | None = None):
        if table is None:
            text = resources.files("reviewarchive.data").joinpath("institution_countries.json").read_text("utf-8")
            table = json.loads(text)
        self.table = {k.casefold(): v for k, v in table.items()}
        for k, v in (overrides or {}).items():
            self.table[k.casefold()] = v

    def __call__(self, institution: str) -> str | None:
        return self.table.get(institution.strip().casefold())


def parse_extraction(
    document_id: str,
    text: str,
    usage: TokenUsage = TokenUsage(),
    lookup: CountryLookup | None = None,
) -> ExtractionRecord:
    authors, affiliations, emails = [], [], []
    ok = True
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(FIELD_DELIM)
        if len(parts) != 3:
            ok = False
            continue
        name, aff, email = (p.strip() for p in parts)
        if not name or (email and "@" not in email):
            ok = False
            continue
        authors.append(name)
        affs = tuple(a.strip() for a in aff.split(AFFIL_DELIM) if a.strip())
        if affs:
            affiliations.append(affs)
        if email:
            emails.append(email)
    if not authors:
        ok = False
    lookup = lookup or _default_lookup()
    countries = {a: lookup(a) for group in affiliations for a in group}
    return ExtractionRecord(
        document_id=document_id,
        authors=tuple(authors),
        affiliations=tuple(affiliations),
        emails=tuple(emails),
        countries=dict(sorted(countries.items())),
        parse_ok=ok,
        token_usage=usage,
    )


_LOOKUP: CountryLookup | None = None


def _default_lookup() -> CountryLookup:
    global _LOOKUP
    if _LOOKUP is None:
        _LOOKUP = CountryLookup()
    return _LOOKUP


def check_consistency(rec: ExtractionRecord) -> ConsistencyFlags:
    return ConsistencyFlags(
        aff=mismatch(rec.affiliations, rec.authors),
        email=mismatch(rec.emails, rec.authors),
        parse=int(not rec.parse_ok),
    )


@dataclass(frozen=True)
class SuccessReport:
    success: float
    aff_rate: float
    email_rate: float
    parse_rate: float
    n: int

    @property
    def marginals(self) -> tuple[float, float, float]:
        return (self.aff_rate, self.email_rate, self.parse_rate)


def success_rate(flags: Sequence[ConsistencyFlags]) -> SuccessReport:
    """One minus the share of documents with any mismatch or parse failure, plus the marginal rates."""
    flags = list(flags)
    if not flags:
        raise EmptyInput("no documents")
    n = len(flags)
    return SuccessReport(
        success=1 - sum(f.failed for f in flags) / n,
        aff_rate=sum(f.aff for f in flags) / n,
        email_rate=sum(f.email for f in flags) / n,
        parse_rate=sum(f.parse for f in flags) / n,
        n=n,
    )


def union_bound_check(marginals: Sequence[float], success: float, percent: bool = False, tol: float = 1e-6) -> bool:
    """Whether a reported failure rate can arise from the reported marginals.

    The disjunction in the success rate means failure <= sum of marginals.
    Pass ``percent=True`` when all values are percentages.
    """
    whole = 100.0 if percent else 1.0
    return whole - success <= sum(marginals) + tol


def multi_affiliation_share(records: Sequence[ExtractionRecord], per_author: bool = False) -> float:
    """Share of documents with at least one multi-affiliated author.

    ``per_author=True`` gives the share of authors instead. Only parsed
    records are considered.
    """
    parsed = [r for r in records if r.parse_ok]
    if not parsed:
        raise EmptyInput("no parsed records")
    if per_author:
        groups = [g for r in parsed for g in r.affiliations]
        n_authors = sum(len(r.authors) for r in parsed)
        if n_authors == 0:
            raise EmptyInput("no authors")
        return sum(len(g) > 1 for g in groups) / n_authors
    return sum(any(len(g) > 1 for g in r.affiliations) for r in parsed) / len(parsed)


@dataclass(frozen=True)
class TokenTotals:
    prompt: int
    completion: int

    @property
    def total(self) -> int:
        return self.prompt + self.completion


def token_totals(records: Iterable[ExtractionRecord]) -> TokenTotals:
    p = c = 0
    for r in records:
        p += r.token_usage.prompt
        c += r.token_usage.completion
    return TokenTotals(p, c)


# --------------------------------------------------------------------------
# extractors


def _read_usage(path: Path) -> TokenUsage:
    if not path.exists():
        return TokenUsage()
    d = json.loads(path.read_text(encoding="utf-8"))
    return TokenUsage(int(d.get("prompt_tokens", 0)), int(d.get("completion_tokens", 0)))


def corpus_documents(corpus: str | Path) -> list[Path]:
    """Document directories (``<doc_id>/input.txt``) in name order."""
    return sorted(p for p in Path(corpus).iterdir() if (p / "input.txt").exists())


class ReplayExtractor:
    """Reads stored model outputs: ``<doc_id>/output.txt`` and optional ``usage.json``."""

    def __init__(self, lookup: CountryLookup | None = None):
        self.lookup = lookup

    def extract(self, doc_dir: Path) -> ExtractionRecord:
        out = doc_dir / "output.txt"
        text = out.read_text(encoding="utf-8") if out.exists() else ""
        return parse_extraction(doc_dir.name, text, _read_usage(doc_dir / "usage.json"), self.lookup)


DEFAULT_PROMPT = (
    "List every author of the paper below, one per line, as\n"
    "name | affiliation; affiliation | email\n"
    "Leave a field empty if it is not stated. Output nothing else.\n\n{document}"
)


class RemoteExtractor:
    """Chat-completion HTTP endpoint (OpenAI-style request/response body)."""

    def __init__(self, endpoint: str, model: str = "glm-4-plus", prompt_template: str = DEFAULT_PROMPT,
                 client: httpx.Client | None = None, token: str | None = None, lookup: CountryLookup | None = None,
                 max_in_flight: int = 4):
        self.endpoint = endpoint
        self.model = model
        self.prompt_template = prompt_template
        self.client = client or httpx.Client(timeout=120.0)
        self.token = token
        self.lookup = lookup
        self.max_in_flight = max_in_flight

    @classmethod
    def from_template_file(cls, endpoint: str, template_path: str | Path, **kw) -> "RemoteExtractor":
        return cls(endpoint, prompt_template=Path(template_path).read_text(encoding="utf-8"), **kw)

    def extract(self, doc_dir: Path) -> ExtractionRecord:
        document = (doc_dir / "input.txt").read_text(encoding="utf-8")
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": self.prompt_template.replace("{document}", document)}],
        }
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            resp = self.client.post(self.endpoint, json=body, headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"extractor endpoint returned {resp.status_code}")
        if resp.status_code >= 400:
            raise TransportError(f"extractor endpoint returned {resp.status_code}")
        data = resp.json()
        usage = data.get("usage") or {}
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            text = ""
        return parse_extraction(
            doc_dir.name,
            text or "",
            TokenUsage(int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))),
            self.lookup,
        )


def validate_corpus(corpus: str | Path, extractor=None) -> list[tuple[ExtractionRecord, ConsistencyFlags]]:
    extractor = extractor or ReplayExtractor()
    docs = corpus_documents(corpus)
    workers = getattr(extractor, "max_in_flight", 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(extractor.extract, docs))
    else:
        records = [extractor.extract(d) for d in docs]
    return [(r, check_consistency(r)) for r in records]


def write_results_csv(path: str | Path, results: Iterable[tuple[ExtractionRecord, ConsistencyFlags]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for rec, flags in results:
            w.writerow([rec.document_id, flags.aff, flags.email, flags.parse,
                        rec.token_usage.prompt, rec.token_usage.completion])

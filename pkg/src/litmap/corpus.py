"""Bibliographic records, term normalization and the co-occurrence index.

The index is the only statistical view of the corpus the rest of the
package uses: document frequencies, pairwise co-occurrence counts (overall
and per year) and the debut year of every term.
"""

from __future__ import annotations

import csv
import datetime
import json
import logging
import unicodedata
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from litmap.strings import ngrams

log = logging.getLogger(__name__)

KEYWORDS_ONLY = "keywords_only"
KEYWORDS_TITLE_ABSTRACT = "keywords_title_abstract"
TERM_SOURCES = (KEYWORDS_ONLY, KEYWORDS_TITLE_ABSTRACT)

MIN_TERM_LENGTH = 2
MIN_YEAR = 1900


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Paper:
    id: str
    title: str
    year: int
    abstract: str = ""
    keywords: tuple[str, ...] = ()
    venue: str = ""
    authors: tuple[str, ...] = ()
    citation_count: int = 0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract,
            "keywords": list(self.keywords),
            "venue": self.venue,
            "year": self.year,
            "authors": list(self.authors),
            "citations": self.citation_count,
        }


@dataclass
class Corpus:
    papers: list[Paper] = field(default_factory=list)
    skipped: int = 0
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._by_id: dict[str, Paper] = {}
        for p in self.papers:
            if p.id in self._by_id:
                raise CorpusError(f"duplicate paper id {p.id!r}")
            self._by_id[p.id] = p

    def __len__(self) -> int:
        return len(self.papers)

    def __iter__(self) -> Iterator[Paper]:
        return iter(self.papers)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self._by_id

    def __getitem__(self, paper_id: str) -> Paper:
        return self._by_id[paper_id]

    def subset(self, ids: Iterable[str]) -> "Corpus":
        return Corpus([self._by_id[i] for i in ids])

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for p in self.papers:
                fh.write(json.dumps(p.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def normalize_term(raw: str) -> str:
    """Canonical form of a keyword or phrase.

    Lowercase, hyphens/underscores and any other non-alphanumeric character
    become a single space, apostrophes are dropped.

    >>> normalize_term("Software-Architecture")
    'software architecture'
    >>> normalize_term("  SOA ")
    'soa'
    """
    text = unicodedata.normalize("NFKC", raw).lower()
    out = []
    for ch in text:
        if ch.isalnum():
            out.append(ch)
        elif ch in "'’":
            continue
        else:
            out.append(" ")
    return " ".join("".join(out).split())


def normalize_text(*fields: str) -> str:
    """Normalize each field separately and join them with newlines.

    Phrase containment on the result never matches across field borders.
    """
    return "\n".join(n for n in (normalize_term(f) for f in fields) if n)


def paper_text(paper: Paper) -> str:
    return normalize_text(paper.title, paper.abstract, *paper.keywords)


def paper_tokens(paper: Paper) -> list[list[str]]:
    """Token lists, one per field, so n-grams never straddle two fields."""
    return [line.split() for line in paper_text(paper).split("\n")]


def _current_year() -> int:
    return datetime.date.today().year


# -- ingestion -------------------------------------------------------------

REQUIRED = ("id", "title", "year")


def _split_list(value, sep=";") -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(v.strip() for v in value.split(sep) if v.strip())
    return tuple(str(v).strip() for v in value if str(v).strip())


def _record_to_paper(rec: Mapping) -> Paper:
    for key in REQUIRED:
        if rec.get(key) in (None, ""):
            raise CorpusError(f"missing required field {key!r}")
    try:
        year = int(rec["year"])
    except (TypeError, ValueError):
        raise CorpusError(f"bad year {rec['year']!r}") from None
    if not MIN_YEAR <= year <= _current_year():
        raise CorpusError(f"year {year} out of range")
    cites = rec.get("citations")
    try:
        cites = int(cites) if cites not in (None, "") else 0
    except (TypeError, ValueError):
        raise CorpusError(f"bad citation count {cites!r}") from None
    if cites < 0:
        raise CorpusError("negative citation count")
    return Paper(
        id=str(rec["id"]).strip(),
        title=str(rec["title"]),
        year=year,
        abstract=str(rec.get("abstract") or ""),
        keywords=_split_list(rec.get("keywords")),
        venue=str(rec.get("venue") or ""),
        authors=_split_list(rec.get("authors")),
        citation_count=cites,
    )


def _records(path: Path, fmt: str) -> Iterator[tuple[int, Mapping | None, str]]:
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    yield lineno, None, f"invalid JSON: {exc.msg}"
                    continue
                if not isinstance(rec, dict):
                    yield lineno, None, "record is not an object"
                    continue
                yield lineno, rec, ""
    elif fmt == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, rec in enumerate(reader, 2):
                yield lineno, rec, ""
    else:
        raise CorpusError(f"unknown corpus format {fmt!r}")


def ingest_corpus(path, format: str = "jsonl") -> Corpus:
    """Load papers from a JSONL or CSV file.

    Malformed rows are skipped and counted; a duplicated id aborts the load.
    """
    path = Path(path)
    if format not in ("jsonl", "csv"):
        raise CorpusError(f"unknown corpus format {format!r}")
    if not path.is_file():
        raise CorpusError(f"cannot read corpus file {path}")
    papers: list[Paper] = []
    seen: set[str] = set()
    warnings: list[str] = []
    for lineno, rec, problem in _records(path, format):
        if rec is not None:
            try:
                paper = _record_to_paper(rec)
            except CorpusError as exc:
                problem = str(exc)
            else:
                if paper.id in seen:
                    raise CorpusError(f"duplicate paper id {paper.id!r} at line {lineno}")
                seen.add(paper.id)
                papers.append(paper)
                continue
        msg = f"{path.name}:{lineno}: skipped ({problem})"
        log.warning(msg)
        warnings.append(msg)
    return Corpus(papers, skipped=len(warnings), warnings=warnings)


# -- index -----------------------------------------------------------------

def keyword_terms(paper: Paper) -> set[str]:
    terms = (normalize_term(k) for k in paper.keywords)
    return {t for t in terms if len(t) >= MIN_TERM_LENGTH}


def _text_terms(paper: Paper, vocabulary: frozenset[str], max_words: int) -> set[str]:
    found = keyword_terms(paper)
    sizes = tuple(range(1, max_words + 1))
    for field_text in (paper.title, paper.abstract):
        tokens = normalize_term(field_text).split()
        found.update(g for g in ngrams(tokens, sizes) if g in vocabulary)
    return found


class TermIndex:
    """Read-only document-frequency statistics over normalized terms.

    ``count(x, y)`` is the number of papers containing both terms and
    ``count(x, x)`` the document frequency of ``x``.
    """

    def __init__(self, doc_terms: Mapping[str, frozenset[str]], doc_year: Mapping[str, int],
                 term_source: str = KEYWORDS_ONLY):
        self.term_source = term_source
        self.doc_terms = dict(sorted(doc_terms.items()))
        self.doc_year = dict(doc_year)
        self.doc_count = len(self.doc_terms)
        postings: dict[str, set[str]] = defaultdict(set)
        cooccur: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
        by_year: dict[str, dict[str, dict[int, int]]] = defaultdict(
            lambda: defaultdict(lambda: defaultdict(int)))
        for pid, terms in self.doc_terms.items():
            year = self.doc_year[pid]
            for x in terms:
                postings[x].add(pid)
                row, yrow = cooccur[x], by_year[x]
                for y in terms:
                    row[y] += 1
                    yrow[y][year] += 1
        self.postings = {t: frozenset(ids) for t, ids in sorted(postings.items())}
        self.cooccur = {x: dict(sorted(row.items())) for x, row in sorted(cooccur.items())}
        self.cooccur_by_year = {
            x: {y: dict(sorted(years.items())) for y, years in sorted(row.items())}
            for x, row in sorted(by_year.items())
        }
        self.term_debut = {x: min(self.cooccur_by_year[x][x]) for x in self.postings}

    def __contains__(self, term: str) -> bool:
        return term in self.postings

    @property
    def terms(self) -> list[str]:
        return list(self.postings)

    def _check(self, term: str) -> None:
        if term not in self.postings:
            raise KeyError(f"term {term!r} not in index")

    def df(self, term: str) -> int:
        self._check(term)
        return len(self.postings[term])

    def count(self, x: str, y: str) -> int:
        self._check(x)
        self._check(y)
        return self.cooccur[x].get(y, 0)

    def count_by_year(self, x: str, y: str) -> dict[int, int]:
        self._check(x)
        self._check(y)
        return self.cooccur_by_year[x].get(y, {})

    def context_vector(self, term: str) -> dict[str, int]:
        self._check(term)
        return {k: v for k, v in self.cooccur[term].items() if k != term}

    def merged(self, representative: Mapping[str, str]) -> "TermIndex":
        """New index with every term replaced by its class representative.

        The postings of a class are the union of its members' postings.
        """
        doc_terms = {pid: frozenset(representative.get(t, t) for t in terms)
                     for pid, terms in self.doc_terms.items()}
        return TermIndex(doc_terms, self.doc_year, self.term_source)

    def statistics(self) -> tuple:
        """Everything that defines the index, for equality checks."""
        return (self.doc_count, self.postings, self.cooccur,
                self.cooccur_by_year, self.term_debut)


def build_index(corpus: Corpus | Iterable[Paper], term_source: str = KEYWORDS_ONLY,
                workers: int = 1) -> TermIndex:
    papers = list(corpus)
    if not papers:
        raise CorpusError("cannot index an empty corpus")
    if term_source not in TERM_SOURCES:
        raise CorpusError(f"unknown term source {term_source!r}")
    if term_source == KEYWORDS_ONLY:
        extract = keyword_terms
    else:
        vocabulary = frozenset().union(*(keyword_terms(p) for p in papers))
        max_words = max((len(v.split()) for v in vocabulary), default=1)
        def extract(p):
            return _text_terms(p, vocabulary, max_words)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            term_sets = list(pool.map(extract, papers))
    else:
        term_sets = [extract(p) for p in papers]
    doc_terms = {p.id: frozenset(ts) for p, ts in zip(papers, term_sets)}
    return TermIndex(doc_terms, {p.id: p.year for p in papers}, term_source)


def context_vector(index: TermIndex, term: str) -> dict[str, int]:
    return index.context_vector(term)

"""Search strings for selecting primary studies.

Grammar::

    query     := or_expr
    or_expr   := and_expr ("OR" and_expr)*
    and_expr  := not_expr ("AND" not_expr)*
    not_expr  := "NOT" not_expr | atom
    atom      := "(" query ")" | predicate
    predicate := NAME "(" [arg ("," arg)*] ")"
    arg       := STRING | INTEGER

Predicates: ``term("phrase")``, ``topic("topic id")`` (matches any term of
the topic's expansion), ``venue_in("A", "B", ...)`` and
``year_in(first, last)``. Keywords are case-insensitive; strings use double
quotes with backslash escapes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from litmap.corpus import Corpus, Paper, normalize_term, paper_text
from litmap.taxonomy import Taxonomy, expand_terms


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class QueryError(ValueError):
    pass


# -- tree ------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    phrase: str

    def __str__(self):
        return f"term({json.dumps(self.phrase)})"


@dataclass(frozen=True)
class TopicRef:
    topic: str

    def __str__(self):
        return f"topic({json.dumps(self.topic)})"


@dataclass(frozen=True)
class VenueIn:
    venues: tuple[str, ...]

    def __str__(self):
        return "venue_in(" + ", ".join(json.dumps(v) for v in self.venues) + ")"


@dataclass(frozen=True)
class YearIn:
    first: int
    last: int

    def __str__(self):
        return f"year_in({self.first}, {self.last})"


@dataclass(frozen=True)
class And:
    children: tuple

    def __str__(self):
        return "(" + " AND ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Or:
    children: tuple

    def __str__(self):
        return "(" + " OR ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Not:
    child: object

    def __str__(self):
        return f"NOT {self.child}"


Query = Term | TopicRef | VenueIn | YearIn | And | Or | Not


def walk(q) -> Iterable:
    yield q
    if isinstance(q, (And, Or)):
        for c in q.children:
            yield from walk(c)
    elif isinstance(q, Not):
        yield from walk(q.child)


# -- parser ----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<int>-?\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
""", re.VERBOSE)

PREDICATES = ("term", "topic", "venue_in", "year_in")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "name" and value.upper() in ("AND", "OR", "NOT"):
                kind = value.upper()
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str):
        tok = self.tokens[self.i]
        if tok[0] != kind:
            what = tok[1] or "end of input"
            raise QuerySyntaxError(f"expected {kind}, found {what!r}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        q = self.or_expr()
        self.take("end")
        return q

    def or_expr(self):
        parts = [self.and_expr()]
        while self.peek()[0] == "OR":
            self.i += 1
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_expr(self):
        parts = [self.not_expr()]
        while self.peek()[0] == "AND":
            self.i += 1
            parts.append(self.not_expr())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def not_expr(self):
        if self.peek()[0] == "NOT":
            self.i += 1
            return Not(self.not_expr())
        return self.atom()

    def atom(self):
        kind, value, pos = self.peek()
        if kind == "lparen":
            self.i += 1
            q = self.or_expr()
            self.take("rparen")
            return q
        if kind == "name":
            return self.predicate()
        raise QuerySyntaxError(f"unexpected {value or 'end of input'!r}", pos)

    def predicate(self):
        _, name, pos = self.take("name")
        if name not in PREDICATES:
            raise QuerySyntaxError(f"unknown predicate {name!r}", pos)
        self.take("lparen")
        args = []
        if self.peek()[0] != "rparen":
            args.append(self.arg())
            while self.peek()[0] == "comma":
                self.i += 1
                args.append(self.arg())
        self.take("rparen")
        return _build(name, args, pos)

    def arg(self):
        kind, value, pos = self.peek()
        if kind == "string":
            self.i += 1
            return json.loads(value)
        if kind == "int":
            self.i += 1
            return int(value)
        raise QuerySyntaxError(f"expected a string or integer, found {value or 'end of input'!r}", pos)


def _build(name: str, args: list, pos: int):
    def strings():
        if not args or not all(isinstance(a, str) for a in args):
            raise QuerySyntaxError(f"{name} takes string arguments", pos)
        return args

    if name == "term":
        if len(strings()) != 1:
            raise QuerySyntaxError("term takes exactly one phrase", pos)
        return Term(normalize_term(args[0]))
    if name == "topic":
        if len(strings()) != 1:
            raise QuerySyntaxError("topic takes exactly one topic id", pos)
        return TopicRef(normalize_term(args[0]))
    if name == "venue_in":
        return VenueIn(tuple(sorted({normalize_term(v) for v in strings()})))
    if len(args) != 2 or not all(isinstance(a, int) for a in args):
        raise QuerySyntaxError("year_in takes two integers", pos)
    return YearIn(min(args), max(args))


def parse_query(text: str):
    return _Parser(text).parse()


def venue_clause(venues: Iterable[str]) -> str:
    return "venue_in(" + ", ".join(json.dumps(v) for v in venues) + ")"


def load_venue_list(path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


# -- evaluation --------------------------------------------------------------------

def contains(text: str, phrase: str, word_boundary: bool = False) -> bool:
    """Phrase containment in normalized text."""
    if not phrase:
        return False
    if not word_boundary:
        return phrase in text
    return re.search(r"(?<![^\s])" + re.escape(phrase) + r"(?![^\s])", text) is not None


@dataclass
class _Compiled:
    tax: Taxonomy | None
    word_boundary: bool
    expansions: dict[str, set[str]] = field(default_factory=dict)

    def topic_terms(self, topic: str) -> set[str]:
        if topic not in self.expansions:
            if self.tax is None or topic not in self.tax:
                raise QueryError(f"unknown topic {topic!r} in query")
            self.expansions[topic] = expand_terms(self.tax, topic)
        return self.expansions[topic]

    def match(self, q, paper: Paper, text: str) -> bool:
        if isinstance(q, Term):
            return contains(text, q.phrase, self.word_boundary)
        if isinstance(q, TopicRef):
            return any(contains(text, t, self.word_boundary) for t in sorted(self.topic_terms(q.topic)))
        if isinstance(q, VenueIn):
            return normalize_term(paper.venue) in q.venues
        if isinstance(q, YearIn):
            return q.first <= paper.year <= q.last
        if isinstance(q, And):
            return all(self.match(c, paper, text) for c in q.children)
        if isinstance(q, Or):
            return any(self.match(c, paper, text) for c in q.children)
        if isinstance(q, Not):
            return not self.match(q.child, paper, text)
        raise QueryError(f"not a query node: {q!r}")


@dataclass
class StudySet:
    name: str
    paper_ids: list[str]
    query: str
    taxonomy_version: str

    def __len__(self):
        return len(self.paper_ids)

    def to_json(self) -> dict:
        return {"name": self.name, "query": self.query,
                "taxonomy_version": self.taxonomy_version, "ids": self.paper_ids}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "StudySet":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(d["name"], list(d["ids"]), d["query"], d["taxonomy_version"])


def select_studies(corpus: Corpus, tax: Taxonomy | None, query, name: str = "studies",
                   word_boundary: bool = False) -> StudySet:
    """Papers satisfying ``query``, sorted by id.

    ``query`` may be a parsed tree or query text. Phrases are matched by
    containment in the normalized title, abstract and keywords.
    """
    if isinstance(query, str):
        query = parse_query(query)
    compiled = _Compiled(tax, word_boundary)
    for node in walk(query):
        if isinstance(node, TopicRef):
            compiled.topic_terms(node.topic)
    ids = sorted(p.id for p in corpus if compiled.match(query, p, paper_text(p)))
    version = tax.version if tax is not None else ""
    return StudySet(name, ids, str(query), version)

"""Research-topic taxonomy: topics, labels, relations and expert constraints.

``broaderGeneric`` edges point from the narrower topic to the broader one.
Constraint endpoints are normalized terms; they resolve to whichever topic
carries that term as id or label.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Iterable, Mapping

from litmap.corpus import normalize_term

BROADER = "broaderGeneric"
EQUIVALENT = "relatedEquivalent"
CONTRIBUTES = "contributesTo"
RELATION_KINDS = (BROADER, EQUIVALENT, CONTRIBUTES)

MUST_BROADER = "must_broader"
MUST_EQUIVALENT = "must_equivalent"
MUST_UNRELATED = "must_unrelated"
CONSTRAINT_KINDS = (MUST_BROADER, MUST_EQUIVALENT, MUST_UNRELATED)

FORMAT_HEADER = "# litmap taxonomy v1"


class TaxonomyError(ValueError):
    pass


@dataclass(frozen=True)
class Topic:
    id: str
    preferred_label: str
    alt_labels: frozenset[str] = frozenset()

    @property
    def labels(self) -> list[str]:
        return [self.preferred_label, *sorted(self.alt_labels - {self.preferred_label})]


@dataclass(frozen=True, order=True)
class Relation:
    source: str
    kind: str
    target: str
    weight: float = 0.0

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.source, self.kind, self.target)


@dataclass(frozen=True, order=True)
class Constraint:
    a: str
    kind: str
    b: str


def topic_from_label(label: str, alt_labels: Iterable[str] = ()) -> Topic:
    pref = normalize_term(label)
    alts = frozenset(normalize_term(a) for a in alt_labels) - {pref}
    return Topic(pref, pref, alts)


def find_cycle(edges: Iterable[tuple[str, str]]) -> list[str] | None:
    graph: dict[str, set[str]] = defaultdict(set)
    for s, t in edges:
        graph[s].add(t)
    try:
        # sorted insertion keeps the reported cycle independent of hash order
        TopologicalSorter({s: sorted(ts) for s, ts in sorted(graph.items())}).prepare()
    except CycleError as exc:
        # graphlib lists each node before its predecessor; report edge order
        nodes = list(reversed(exc.args[1]))[:-1]
        i = nodes.index(min(nodes))
        nodes = nodes[i:] + nodes[:i]
        return nodes + nodes[:1]
    return None


@dataclass(frozen=True)
class Taxonomy:
    topics: Mapping[str, Topic] = field(default_factory=dict)
    relations: frozenset[Relation] = frozenset()
    constraints: frozenset[Constraint] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "topics", dict(sorted(self.topics.items())))
        object.__setattr__(self, "relations", frozenset(self.relations))
        object.__setattr__(self, "constraints", frozenset(self.constraints))
        parents: dict[str, set[str]] = defaultdict(set)
        children: dict[str, set[str]] = defaultdict(set)
        equivalents: dict[str, set[str]] = defaultdict(set)
        for r in self.relations:
            if r.kind == BROADER:
                parents[r.source].add(r.target)
                children[r.target].add(r.source)
            elif r.kind == EQUIVALENT:
                equivalents[r.source].add(r.target)
                equivalents[r.target].add(r.source)
        label_owner: dict[str, str] = {}
        for t in self.topics.values():
            for lab in (t.id, *t.labels):
                label_owner.setdefault(lab, t.id)
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_children", children)
        object.__setattr__(self, "_equivalents", equivalents)
        object.__setattr__(self, "_label_owner", label_owner)
        object.__setattr__(self, "_expansions", {})

    # -- structure ---------------------------------------------------------

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self.topics

    def _check(self, topic_id: str) -> None:
        if topic_id not in self.topics:
            raise TaxonomyError(f"unknown topic {topic_id!r}")

    def parents(self, topic_id: str) -> set[str]:
        return set(self._parents.get(topic_id, ()))

    def children(self, topic_id: str) -> set[str]:
        return set(self._children.get(topic_id, ()))

    def equivalents(self, topic_id: str) -> set[str]:
        return set(self._equivalents.get(topic_id, ()))

    def resolve(self, term: str) -> str | None:
        """Topic id carrying ``term`` as id or label, if any."""
        return self._label_owner.get(term)

    def ancestors(self, topic_id: str) -> set[str]:
        self._check(topic_id)
        return _closure(topic_id, self._parents)

    def broader_edges(self) -> list[tuple[str, str]]:
        return sorted((r.source, r.target) for r in self.relations if r.kind == BROADER)

    @property
    def label_count(self) -> int:
        return sum(len(t.labels) for t in self.topics.values())

    @property
    def version(self) -> str:
        return hashlib.sha256(dumps(self).encode("utf-8")).hexdigest()[:16]

    # -- validation --------------------------------------------------------

    def validate(self) -> "Taxonomy":
        """Raise TaxonomyError naming the first broken invariant."""
        owner: dict[str, str] = {}
        for t in self.topics.values():
            if not t.preferred_label:
                raise TaxonomyError(f"topic {t.id!r} has no label")
            for lab in t.labels:
                if lab in owner and owner[lab] != t.id:
                    raise TaxonomyError(
                        f"label {lab!r} used by topics {owner[lab]!r} and {t.id!r}")
                owner[lab] = t.id
        for r in self.relations:
            if r.kind not in RELATION_KINDS:
                raise TaxonomyError(f"unknown relation kind {r.kind!r}")
            if r.source == r.target:
                raise TaxonomyError(f"self relation on {r.source!r}")
            for end in (r.source, r.target):
                if end not in self.topics:
                    raise TaxonomyError(f"relation {r.key} references unknown topic {end!r}")
            if r.kind == EQUIVALENT and not any(
                    o.kind == EQUIVALENT and o.source == r.target and o.target == r.source
                    for o in self.relations):
                raise TaxonomyError(f"relatedEquivalent {r.source!r}-{r.target!r} not symmetric")
        cycle = find_cycle(self.broader_edges())
        if cycle:
            raise TaxonomyError("broaderGeneric cycle: " + " -> ".join(cycle))
        for c in sorted(self.constraints):
            problem = self.constraint_violation(c)
            if problem:
                raise TaxonomyError(problem)
        return self

    def constraint_violation(self, c: Constraint) -> str | None:
        a, b = self.resolve(c.a), self.resolve(c.b)
        if a is None or b is None:
            return None
        if c.kind == MUST_UNRELATED:
            if a == b:
                return f"must_unrelated {c.a!r}/{c.b!r} are labels of the same topic {a!r}"
            if any({r.source, r.target} == {a, b} for r in self.relations):
                return f"relation between {a!r} and {b!r} contradicts must_unrelated"
        elif c.kind == MUST_BROADER:
            if b not in self.ancestors(a):
                return f"must_broader {c.a!r} -> {c.b!r} not satisfied"
        elif c.kind == MUST_EQUIVALENT:
            if a != b and b not in self.equivalents(a):
                return f"must_equivalent {c.a!r} ~ {c.b!r} not satisfied"
        else:
            return f"unknown constraint kind {c.kind!r}"
        return None


def _closure(start: str, edges: Mapping[str, Iterable[str]]) -> set[str]:
    seen: set[str] = set()
    stack = list(edges.get(start, ()))
    while stack:
        node = stack.pop()
        if node not in seen:
            seen.add(node)
            stack.extend(edges.get(node, ()))
    seen.discard(start)
    return seen


def descendants(tax: Taxonomy, topic: str) -> set[str]:
    """All topics below ``topic`` via narrower -> broader edges."""
    tax._check(topic)
    return _closure(topic, tax._children)


def expand_terms(tax: Taxonomy, topic: str) -> set[str]:
    """Every term that signals ``topic`` in a paper.

    Labels of the topic, of its equivalents, of all its descendants and of
    the descendants' equivalents.
    """
    tax._check(topic)
    cached = tax._expansions.get(topic)
    if cached is None:
        members = {topic} | descendants(tax, topic)
        for m in list(members):
            members |= tax.equivalents(m)
        cached = frozenset(lab for m in members for lab in tax.topics[m].labels)
        tax._expansions[topic] = cached
    return set(cached)


def subbranch(tax: Taxonomy, root: str) -> Taxonomy:
    keep = {root} | descendants(tax, root)
    topics = {t: tax.topics[t] for t in keep}
    relations = {r for r in tax.relations if r.source in keep and r.target in keep}
    labels = {lab for t in topics.values() for lab in (t.id, *t.labels)}
    constraints = {c for c in tax.constraints if c.a in labels and c.b in labels}
    return Taxonomy(topics, relations, constraints)


# -- triple file -----------------------------------------------------------

def _fmt_weight(w: float) -> str:
    return repr(float(w))


def dumps(tax: Taxonomy) -> str:
    lines = []
    for t in tax.topics.values():
        lines.append(f"{t.id}\tlabel\t{t.preferred_label}\tpref")
        for alt in sorted(t.alt_labels - {t.preferred_label}):
            lines.append(f"{t.id}\tlabel\t{alt}\talt")
    rel_lines = sorted(f"{r.source}\t{r.kind}\t{r.target}\t{_fmt_weight(r.weight)}"
                       for r in tax.relations)
    con_lines = sorted(f"{c.a}\tconstraint\t{c.b}\t{c.kind}" for c in tax.constraints)
    return "\n".join([FORMAT_HEADER, *lines, *rel_lines, *con_lines]) + "\n"


def loads(text: str) -> Taxonomy:
    pref: dict[str, str] = {}
    alts: dict[str, set[str]] = defaultdict(set)
    relations: set[Relation] = set()
    constraints: set[Constraint] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise TaxonomyError(f"line {lineno}: expected 4 tab-separated fields")
        a, kind, b, extra = parts
        if kind == "label":
            if extra == "pref":
                if a in pref:
                    raise TaxonomyError(f"line {lineno}: second preferred label for {a!r}")
                pref[a] = b
            elif extra == "alt":
                alts[a].add(b)
            else:
                raise TaxonomyError(f"line {lineno}: label flag must be pref or alt")
        elif kind == "constraint":
            if extra not in CONSTRAINT_KINDS:
                raise TaxonomyError(f"line {lineno}: unknown constraint {extra!r}")
            constraints.add(Constraint(a, extra, b))
        elif kind in RELATION_KINDS:
            try:
                weight = float(extra)
            except ValueError:
                raise TaxonomyError(f"line {lineno}: bad weight {extra!r}") from None
            relations.add(Relation(a, kind, b, weight))
        else:
            raise TaxonomyError(f"line {lineno}: unknown relation kind {kind!r}")
    missing = set(alts) - set(pref)
    if missing:
        raise TaxonomyError(f"topics without preferred label: {sorted(missing)}")
    topics = {t: Topic(t, lab, frozenset(alts.get(t, ()))) for t, lab in pref.items()}
    return Taxonomy(topics, relations, constraints).validate()


def serialize(tax: Taxonomy, path) -> None:
    Path(path).write_text(dumps(tax), encoding="utf-8", newline="\n")


def deserialize(path) -> Taxonomy:
    return loads(Path(path).read_text(encoding="utf-8"))


# -- editing helpers ---------------------------------------------------------

def with_changes(tax: Taxonomy, *, topics=None, relations=None, constraints=None) -> Taxonomy:
    return Taxonomy(
        tax.topics if topics is None else topics,
        tax.relations if relations is None else relations,
        tax.constraints if constraints is None else constraints,
    )


def equivalence_pair(a: str, b: str, weight: float = 0.0) -> set[Relation]:
    return {Relation(a, EQUIVALENT, b, weight), Relation(b, EQUIVALENT, a, weight)}


def dump_constraints(constraints: Iterable[Constraint]) -> str:
    lines = sorted(f"{c.a}\tconstraint\t{c.b}\t{c.kind}" for c in constraints)
    return "\n".join([FORMAT_HEADER, *lines]) + "\n"


def load_constraints(path) -> list[Constraint]:
    """Constraint lines of a taxonomy file (other lines are ignored)."""
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split("\t")
        if line.startswith("#") or len(parts) != 4 or parts[1] != "constraint":
            continue
        if parts[3] not in CONSTRAINT_KINDS:
            raise TaxonomyError(f"{path}:{lineno}: unknown constraint {parts[3]!r}")
        out.append(Constraint(parts[0], parts[3], parts[2]))
    return sorted(set(out))

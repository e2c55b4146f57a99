"""Expert review of a learned taxonomy through an editable CSV tree sheet.

The sheet lists one row per topic in pre-order. A topic with several
parents is listed once, under its alphabetically first parent. Experts mark
rows in the ``edit`` column, move rows, add rows or edit the label cell;
``import_feedback`` turns the differences into four kinds of operation:

* ``delete_category(topic)``
* ``add_category(label, parent)``
* ``delete_relationship(source, target, kind)``
* ``add_relationship(source, target, kind)``

Label-cell edits are relationship ops of kind relatedEquivalent between the
label and the row's topic.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from litmap.corpus import Corpus, keyword_terms, normalize_term, paper_text
from litmap.selection import contains
from litmap.taxonomy import (BROADER, EQUIVALENT, MUST_BROADER, MUST_EQUIVALENT, MUST_UNRELATED,
                             Constraint, Relation, Taxonomy, TaxonomyError, Topic, descendants,
                             equivalence_pair, expand_terms, find_cycle)

log = logging.getLogger(__name__)

SHEET_COLUMNS = ["depth", "topic_id", "labels", "paper_count", "edit"]
TERM_COLUMNS = ["term", "frequency"]

DELETE_CATEGORY = "delete_category"
ADD_CATEGORY = "add_category"
DELETE_RELATIONSHIP = "delete_relationship"
ADD_RELATIONSHIP = "add_relationship"
OP_KINDS = (DELETE_CATEGORY, ADD_CATEGORY, DELETE_RELATIONSHIP, ADD_RELATIONSHIP)


class ReviewError(ValueError):
    pass


@dataclass(frozen=True)
class SheetRow:
    depth: int
    topic_id: str
    labels: tuple[str, ...]
    paper_count: int = 0
    edit: str = ""


@dataclass
class ReviewSheet:
    rows: list[SheetRow]
    popular_terms: list[tuple[str, int]] = field(default_factory=list)

    def topic_ids(self) -> list[str]:
        return [r.topic_id for r in self.rows]

    def parents(self) -> dict[str, str | None]:
        """Parent of each row implied by the depth column."""
        out: dict[str, str | None] = {}
        stack: list[str] = []
        for i, row in enumerate(self.rows):
            if row.depth < 0 or row.depth > len(stack) or (i == 0 and row.depth != 0):
                raise ReviewError(f"row {i + 1} ({row.topic_id!r}): depth {row.depth} breaks the tree")
            del stack[row.depth:]
            out[row.topic_id] = stack[-1] if stack else None
            stack.append(row.topic_id)
        return out

    def dumps(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SHEET_COLUMNS)
        for r in self.rows:
            w.writerow([r.depth, r.topic_id, "|".join(r.labels), r.paper_count, r.edit])
        buf.write("\n")
        w.writerow(TERM_COLUMNS)
        for term, freq in self.popular_terms:
            w.writerow([term, freq])
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8", newline="")

    @classmethod
    def loads(cls, text: str) -> "ReviewSheet":
        lines = text.splitlines()
        try:
            cut = next(i for i, line in enumerate(lines) if not line.strip())
        except StopIteration:
            cut = len(lines)
        rows = []
        reader = csv.DictReader(lines[:cut])
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in SHEET_COLUMNS[:2]):
            raise ReviewError(f"sheet header must contain {', '.join(SHEET_COLUMNS)}")
        for n, rec in enumerate(reader, 2):
            try:
                depth = int(rec["depth"])
                count = int(rec.get("paper_count") or 0)
            except (TypeError, ValueError):
                raise ReviewError(f"line {n}: depth and paper_count must be integers") from None
            tid = (rec["topic_id"] or "").strip()
            if not tid:
                raise ReviewError(f"line {n}: empty topic_id")
            labels = tuple(lab.strip() for lab in (rec.get("labels") or "").split("|") if lab.strip())
            rows.append(SheetRow(depth, tid, labels or (tid,), count, (rec.get("edit") or "").strip()))
        terms = []
        tail = [line for line in lines[cut:] if line.strip()]
        for rec in csv.DictReader(tail):
            try:
                terms.append((rec["term"], int(rec["frequency"])))
            except (KeyError, TypeError, ValueError):
                raise ReviewError(f"bad popular-terms line {rec!r}") from None
        seen = Counter(r.topic_id for r in rows)
        dup = sorted(t for t, n in seen.items() if n > 1)
        if dup:
            raise ReviewError(f"topics listed twice: {dup}")
        return cls(rows, terms)

    @classmethod
    def load(cls, path) -> "ReviewSheet":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


# -- export ---------------------------------------------------------------------

def _tree_rows(tax: Taxonomy, root: str) -> list[tuple[int, str]]:
    branch = {root} | descendants(tax, root)
    listed_under: dict[str, list[str]] = defaultdict(list)
    for t in sorted(branch - {root}):
        listed_under[min(tax.parents(t) & branch)].append(t)
    out: list[tuple[int, str]] = []
    stack = [(0, root)]
    while stack:
        depth, t = stack.pop()
        out.append((depth, t))
        stack.extend((depth + 1, c) for c in reversed(listed_under[t]))
    return out


def popular_terms(corpus: Corpus, n: int = 500, exclude: Iterable[str] = ()) -> list[tuple[str, int]]:
    """Most frequent keywords (by paper count) not already in ``exclude``."""
    exclude = set(exclude)
    freq: Counter = Counter()
    for p in corpus:
        freq.update(keyword_terms(p) - exclude)
    return sorted(freq.items(), key=lambda tf: (-tf[1], tf[0]))[:n]


def export_sheet(tax: Taxonomy, corpus: Corpus, root: str, top_terms_n: int = 500,
                 restrict_ids: Iterable[str] | None = None, word_boundary: bool = False) -> ReviewSheet:
    """Review sheet for the subbranch under ``root``.

    paper_count is the number of corpus papers matched by the topic's term
    expansion; ``restrict_ids`` limits the corpus used for the popular terms.
    """
    if root not in tax:
        raise ReviewError(f"unknown root topic {root!r}")
    texts = [paper_text(p) for p in corpus]
    rows = []
    for depth, t in _tree_rows(tax, root):
        terms = sorted(expand_terms(tax, t))
        count = sum(1 for text in texts if any(contains(text, term, word_boundary) for term in terms))
        rows.append(SheetRow(depth, t, tuple(tax.topics[t].labels), count))
    pool = corpus if restrict_ids is None else corpus.subset(restrict_ids)
    labels = {lab for topic in tax.topics.values() for lab in topic.labels}
    return ReviewSheet(rows, popular_terms(pool, top_terms_n, labels))


# -- feedback ops ------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Op:
    kind: str
    a: str
    b: str = ""
    relation: str = ""

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise ReviewError(f"unknown op kind {self.kind!r}")

    @property
    def element(self) -> tuple:
        """What the op acts on; an add and a delete of one element conflict."""
        if self.kind in (ADD_RELATIONSHIP, DELETE_RELATIONSHIP):
            return ("relationship", self.a, self.b, self.relation)
        return ("category", self.a)

    @property
    def is_delete(self) -> bool:
        return self.kind in (DELETE_CATEGORY, DELETE_RELATIONSHIP)

    def __str__(self):
        if self.kind == DELETE_CATEGORY:
            return f"{self.kind}({self.a})"
        if self.kind == ADD_CATEGORY:
            return f"{self.kind}({self.a}, {self.b})"
        return f"{self.kind}({self.a}, {self.b}, {self.relation})"


def delete_category(topic: str) -> Op:
    return Op(DELETE_CATEGORY, topic)


def add_category(label: str, parent: str) -> Op:
    return Op(ADD_CATEGORY, label, parent)


def delete_relationship(source: str, target: str, kind: str = BROADER) -> Op:
    return Op(DELETE_RELATIONSHIP, source, target, kind)


def add_relationship(source: str, target: str, kind: str = BROADER) -> Op:
    return Op(ADD_RELATIONSHIP, source, target, kind)


@dataclass
class FeedbackOps:
    ops: tuple[Op, ...]
    expert_id: str = ""
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.ops = tuple(sorted(set(self.ops)))

    def __len__(self):
        return len(self.ops)

    def to_json(self) -> dict:
        return {"expert_id": self.expert_id, "warnings": self.warnings,
                "ops": [{"kind": o.kind, "a": o.a, "b": o.b, "relation": o.relation} for o in self.ops]}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeedbackOps":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(tuple(Op(o["kind"], o["a"], o.get("b", ""), o.get("relation", "")) for o in d["ops"]),
                   d.get("expert_id", ""), list(d.get("warnings", [])))


def _parse_edit(edit: str, line: str) -> tuple[str, str]:
    if not edit:
        return "", ""
    verb, _, arg = edit.partition(":")
    verb = verb.strip().upper()
    arg = arg.strip()
    if verb == "DELETE" and not arg:
        return verb, ""
    if verb in ("ADD", "MOVE", "EQUIV") and arg:
        return verb, arg
    raise ReviewError(f"{line}: malformed edit {edit!r}")


def import_feedback(sheet, original: ReviewSheet, expert_id: str | None = None) -> FeedbackOps:
    """Differences between an annotated sheet and the exported original."""
    if isinstance(sheet, ReviewSheet):
        annotated, name = sheet, expert_id or "expert"
    else:
        annotated, name = ReviewSheet.load(sheet), expert_id or Path(sheet).stem
    before = original.parents()
    after = annotated.parents()
    orig_rows = {r.topic_id: r for r in original.rows}
    known = set(orig_rows) | set(after)

    def resolvable(ref: str, line: str) -> str:
        if ref not in known:
            raise ReviewError(f"{line}: unknown topic {ref!r}")
        return ref

    ops: set[Op] = set()
    for row in annotated.rows:
        line = f"row {row.topic_id!r}"
        verb, arg = _parse_edit(row.edit, line)
        tid = row.topic_id
        if tid not in orig_rows:
            parent = resolvable(arg, line) if verb == "ADD" else after[tid]
            if verb not in ("", "ADD"):
                raise ReviewError(f"{line}: a new row can only carry ADD")
            if parent is None:
                raise ReviewError(f"{line}: a new topic needs a parent")
            ops.add(add_category(tid, parent))
            ops |= {add_relationship(lab, tid, EQUIVALENT) for lab in row.labels if lab != tid}
            continue
        if verb == "DELETE":
            ops.add(delete_category(tid))
            continue
        new_parent = resolvable(arg, line) if verb == "MOVE" else after[tid]
        old_parent = before[tid]
        if new_parent != old_parent:
            if old_parent is not None:
                ops.add(delete_relationship(tid, old_parent))
            if new_parent is not None:
                ops.add(add_relationship(tid, new_parent))
        if verb == "ADD":
            ops.add(add_relationship(tid, resolvable(arg, line)))
        elif verb == "EQUIV":
            ops.add(add_relationship(tid, resolvable(arg, line), EQUIVALENT))
        old_labels, new_labels = set(orig_rows[tid].labels), set(row.labels)
        ops |= {add_relationship(lab, tid, EQUIVALENT) for lab in new_labels - old_labels}
        ops |= {delete_relationship(lab, tid, EQUIVALENT) for lab in old_labels - new_labels - {tid}}
    ops |= {delete_category(t) for t in orig_rows if t not in after}
    return FeedbackOps(tuple(ops), name)


def merge_feedback(all_ops: Sequence[FeedbackOps], quorum: int | None = None) -> FeedbackOps:
    """Majority vote over experts.

    An op survives when at least ``quorum`` experts propose it (default: a
    strict majority). When experts both add and delete the same element,
    the side with more votes wins; a tie keeps the element as it is.
    """
    n = len(all_ops)
    if n == 0:
        raise ReviewError("need feedback from at least one expert")
    quorum = n // 2 + 1 if quorum is None else quorum
    if not 1 <= quorum <= n:
        raise ReviewError(f"quorum must lie in [1, {n}]")
    votes: Counter = Counter()
    for f in all_ops:
        votes.update(set(f.ops))
    by_element: dict[tuple, dict[bool, int]] = defaultdict(lambda: {True: 0, False: 0})
    for op, v in votes.items():
        side = by_element[op.element]
        side[op.is_delete] = max(side[op.is_delete], v)
    kept, warnings = [], []
    for op, v in sorted(votes.items()):
        side = by_element[op.element]
        rival = side[not op.is_delete]
        if rival and rival == side[op.is_delete]:
            msg = f"tie between add and delete on {op.element}; no change"
            if msg not in warnings:
                warnings.append(msg)
                log.warning(msg)
            continue
        if v >= quorum and v > rival:
            kept.append(op)
    return FeedbackOps(tuple(kept), "majority", warnings)


# -- apply ---------------------------------------------------------------------------

class _Editor:
    def __init__(self, tax: Taxonomy):
        self.topics: dict[str, Topic] = dict(tax.topics)
        self.relations: set[Relation] = set(tax.relations)
        self.constraints: set[Constraint] = set(tax.constraints)
        self.added: list[Constraint] = []

    def snapshot(self) -> Taxonomy:
        return Taxonomy(self.topics, self.relations, self.constraints)

    def resolve(self, ref: str, op: Op) -> str:
        tid = self.snapshot().resolve(ref) if ref not in self.topics else ref
        if tid is None:
            raise ReviewError(f"{op}: cannot resolve {ref!r}")
        return tid

    def emit(self, a: str, kind: str, b: str) -> None:
        c = Constraint(a, kind, b)
        if c not in self.constraints:
            self.constraints.add(c)
            self.added.append(c)

    def forbidden(self, a: str, b: str) -> bool:
        return any(c.kind == MUST_UNRELATED and {c.a, c.b} == {a, b} for c in self.constraints)

    def add_broader(self, a: str, b: str, op: Op) -> None:
        self.relations.add(Relation(a, BROADER, b, 0.0))
        edges = [(r.source, r.target) for r in self.relations if r.kind == BROADER]
        cycle = find_cycle(edges)
        if cycle:
            raise ReviewError(f"{op} would create the cycle " + " -> ".join(cycle))

    def drop(self, a: str, b: str, kind: str) -> None:
        self.relations = {r for r in self.relations
                          if not (r.kind == kind and (r.source, r.target) == (a, b)
                                  or kind == EQUIVALENT and r.kind == kind
                                  and (r.source, r.target) == (b, a))}


def _apply_one(ed: _Editor, op: Op) -> None:
    if op.kind == DELETE_RELATIONSHIP and op.relation == BROADER:
        a, b = ed.resolve(op.a, op), ed.resolve(op.b, op)
        ed.drop(a, b, BROADER)
        ed.emit(a, MUST_UNRELATED, b)
    elif op.kind == DELETE_RELATIONSHIP and op.relation == EQUIVALENT:
        t = ed.resolve(op.b, op)
        label = normalize_term(op.a)
        topic = ed.topics[t]
        if label in topic.alt_labels:
            ed.topics[t] = Topic(t, topic.preferred_label, topic.alt_labels - {label})
        else:
            ed.drop(ed.resolve(op.a, op), t, EQUIVALENT)
        ed.emit(label, MUST_UNRELATED, t)
    elif op.kind == DELETE_CATEGORY:
        t = ed.resolve(op.a, op)
        parents = {r.target for r in ed.relations if r.kind == BROADER and r.source == t}
        children = {r.source for r in ed.relations if r.kind == BROADER and r.target == t}
        ed.relations = {r for r in ed.relations if t not in (r.source, r.target)}
        del ed.topics[t]
        for p in sorted(parents):
            ed.emit(t, MUST_UNRELATED, p)
        for c in sorted(children):
            ed.emit(c, MUST_UNRELATED, t)
            for p in sorted(parents):
                if not ed.forbidden(c, p):
                    ed.relations.add(Relation(c, BROADER, p, 0.0))
    elif op.kind == ADD_CATEGORY:
        parent = ed.resolve(op.b, op)
        label = normalize_term(op.a)
        if not label:
            raise ReviewError(f"{op}: empty label")
        tid = ed.snapshot().resolve(label)
        if tid is None:
            tid = label
            ed.topics[tid] = Topic(tid, tid)
        ed.add_broader(tid, parent, op)
        ed.emit(tid, MUST_BROADER, parent)
    elif op.kind == ADD_RELATIONSHIP and op.relation == BROADER:
        a, b = ed.resolve(op.a, op), ed.resolve(op.b, op)
        if a == b:
            raise ReviewError(f"{op}: a topic cannot be broader than itself")
        ed.add_broader(a, b, op)
        ed.emit(a, MUST_BROADER, b)
    elif op.kind == ADD_RELATIONSHIP and op.relation == EQUIVALENT:
        t = ed.resolve(op.b, op)
        label = normalize_term(op.a)
        owner = ed.snapshot().resolve(label)
        if owner is None:
            topic = ed.topics[t]
            ed.topics[t] = Topic(t, topic.preferred_label, topic.alt_labels | {label})
            ed.emit(label, MUST_EQUIVALENT, t)
        elif owner != t:
            ed.relations |= equivalence_pair(owner, t)
            ed.emit(owner, MUST_EQUIVALENT, t)
    else:
        raise ReviewError(f"unsupported op {op}")


_ORDER = {DELETE_RELATIONSHIP: 0, DELETE_CATEGORY: 1, ADD_CATEGORY: 2, ADD_RELATIONSHIP: 3}


def apply_feedback(tax: Taxonomy, ops: FeedbackOps | Iterable[Op]) -> tuple[Taxonomy, list[Constraint]]:
    """Apply expert edits; return the edited taxonomy and the new constraints.

    Deletions run before additions so a move never passes through a cycle.
    Deleting a topic attaches its children to its parents.
    """
    ops = ops.ops if isinstance(ops, FeedbackOps) else tuple(sorted(set(ops)))
    ed = _Editor(tax)
    for op in sorted(ops, key=lambda o: (_ORDER[o.kind], o)):
        _apply_one(ed, op)
    try:
        out = ed.snapshot().validate()
    except TaxonomyError as exc:
        raise ReviewError(f"edited taxonomy is invalid: {exc}") from exc
    return out, sorted(ed.added)

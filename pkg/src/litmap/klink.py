"""Taxonomy learning from keyword co-occurrence.

For every keyword under analysis the learner looks at its most co-occurring
keywords and decides, pair by pair, whether one is a sub-area of the other
(subsumption score, plain and time-weighted), whether both are spellings of
the same area, or neither. Loops are then broken, equivalent keywords are
merged and the surviving keywords become topics.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

from litmap.corpus import TermIndex, normalize_term
from litmap.strings import levenshtein_norm
from litmap.taxonomy import (
    BROADER,
    EQUIVALENT,
    MUST_BROADER,
    MUST_EQUIVALENT,
    MUST_UNRELATED,
    Constraint,
    Relation,
    Taxonomy,
    Topic,
)

log = logging.getLogger(__name__)


class KlinkError(ValueError):
    pass


@dataclass(frozen=True)
class MetricParams:
    threshold: float = 0.25
    gamma: float = 2.0
    candidate_min_cooccur: int = 3
    candidate_top_n: int = 50
    merge_label_sim: float = 0.9
    merge_context_sim: float = 0.6
    generic_df_ceiling: float = 0.2
    min_df: int = 5
    iteration_cap: int = 10
    transitive_reduction: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.threshold <= 0:
            raise KlinkError("threshold must be positive")
        if self.gamma <= 0:
            raise KlinkError("gamma must be positive")
        for name in ("merge_label_sim", "merge_context_sim"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise KlinkError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.generic_df_ceiling <= 1.0:
            raise KlinkError("generic_df_ceiling must lie in (0, 1]")
        if self.candidate_min_cooccur < 1 or self.candidate_top_n < 1:
            raise KlinkError("candidate bounds must be >= 1")
        if self.iteration_cap < 1:
            raise KlinkError("iteration_cap must be >= 1")

    def snapshot(self) -> dict:
        # workers does not influence results
        d = asdict(self)
        d.pop("workers")
        return d


@dataclass(frozen=True)
class CandidatePair:
    x: str
    y: str
    hr: float
    tr: float
    inferred: Relation | None = None


# -- metrics -----------------------------------------------------------------

def get_candidates(index: TermIndex, k: str, params: MetricParams = MetricParams()) -> list[str]:
    """Most co-occurring terms of ``k`` (count desc, then alphabetical)."""
    ctx = index.context_vector(k)
    ranked = sorted((t for t, n in ctx.items() if n >= params.candidate_min_cooccur),
                    key=lambda t: (-ctx[t], t))
    return ranked[:params.candidate_top_n]


def cosine_context(index: TermIndex, a: str, b: str) -> float:
    """Cosine of the two co-occurrence vectors, ignoring the a and b entries."""
    va = index.context_vector(a)
    vb = index.context_vector(b)
    for v in (va, vb):
        v.pop(a, None)
        v.pop(b, None)
    if not va or not vb:
        return 0.0
    dot = sum(va[k] * vb[k] for k in sorted(va.keys() & vb.keys()))
    if dot == 0:
        return 0.0
    norm_a = math.sqrt(sum(v * v for v in va.values()))
    norm_b = math.sqrt(sum(v * v for v in vb.values()))
    return min(1.0, dot / (norm_a * norm_b))


def _subsumption(ixy: float, ixx: float, iyy: float, c: float, n: float) -> float:
    first = ixy / ixx if ixx else 0.0
    second = ixy / iyy if iyy else 0.0
    return (first - second) * c * n


def hr_metric(index: TermIndex, x: str, y: str, params: MetricParams = MetricParams()) -> float:
    """Subsumption score: positive when papers on x nearly always mention y."""
    ixx, iyy = index.count(x, x), index.count(y, y)
    if ixx == 0 or iyy == 0:
        raise KlinkError(f"zero self count for {x!r} or {y!r}")
    if x == y:
        return 0.0
    return _subsumption(index.count(x, y), ixx, iyy,
                        cosine_context(index, x, y), levenshtein_norm(x, y))


def year_weight(year: int, debut: int, gamma: float) -> float:
    """(year - debut + 1) ** -gamma; years before the debut weigh nothing."""
    if year < debut:
        return 0.0
    return float(year - debut + 1) ** -gamma


def _weighted(counts: Mapping[int, int], debut: int, gamma: float) -> float:
    return sum(year_weight(yr, debut, gamma) * n for yr, n in sorted(counts.items()))


def tr_metric(index: TermIndex, x: str, y: str, params: MetricParams = MetricParams()) -> float:
    """Time-weighted subsumption score favouring the first years of ``x``.

    Every count, self counts included, is a per-year sum weighted by the
    distance from the debut of x, so a single-year corpus gives hr exactly.
    """
    ixx, iyy = index.count(x, x), index.count(y, y)
    if ixx == 0 or iyy == 0:
        raise KlinkError(f"zero self count for {x!r} or {y!r}")
    if x == y:
        return 0.0
    debut, g = index.term_debut[x], params.gamma
    wxy = _weighted(index.count_by_year(x, y), debut, g)
    wxx = _weighted(index.count_by_year(x, x), debut, g)
    wyy = _weighted(index.count_by_year(y, y), debut, g)
    return _subsumption(wxy, wxx, wyy, cosine_context(index, x, y), levenshtein_norm(x, y))


# -- constraints ---------------------------------------------------------------

class ConstraintBook:
    """Constraints looked up by (representative) term pair."""

    def __init__(self, constraints: Iterable[Constraint] = (), rep: Mapping[str, str] | None = None):
        self.rep = rep = dict(rep or {})
        self.constraints = sorted(set(constraints))
        self.by_pair: dict[frozenset[str], list[Constraint]] = defaultdict(list)
        self.unrelated: set[frozenset[str]] = set()
        for c in self.constraints:
            a, b = rep.get(c.a, c.a), rep.get(c.b, c.b)
            if a == b:
                continue
            mapped = Constraint(a, c.kind, b)
            self.by_pair[frozenset((a, b))].append(mapped)
            if c.kind == MUST_UNRELATED:
                self.unrelated.add(frozenset((a, b)))

    def lookup(self, x: str, y: str) -> list[Constraint]:
        return self.by_pair.get(frozenset((x, y)), [])

    def forbids(self, x: str, y: str) -> bool:
        return frozenset((x, y)) in self.unrelated

    def terms(self) -> set[str]:
        return {t for c in self.constraints for t in (c.a, c.b)}

    def asserted_relations(self) -> set[Relation]:
        rep = self.rep
        out: set[Relation] = set()
        for c in self.constraints:
            a, b = rep.get(c.a, c.a), rep.get(c.b, c.b)
            if a == b:
                continue
            if c.kind == MUST_BROADER:
                out.add(Relation(a, BROADER, b, 0.0))
            elif c.kind == MUST_EQUIVALENT:
                out |= {Relation(a, EQUIVALENT, b, 0.0), Relation(b, EQUIVALENT, a, 0.0)}
        return out


def infer_relationship(index: TermIndex, x: str, y: str, params: MetricParams = MetricParams(),
                       constraints: ConstraintBook | Iterable[Constraint] = ()) -> Relation | None:
    """Relation from x to y, or None.

    Expert constraints win; then a score at or above the threshold makes y
    broader than x; then near-identical labels with similar contexts are
    declared equivalent.
    """
    book = constraints if isinstance(constraints, ConstraintBook) else ConstraintBook(constraints)
    asserted = book.lookup(x, y)
    if any(c.kind == MUST_UNRELATED for c in asserted):
        return None
    for c in asserted:
        if c.kind == MUST_BROADER:
            return Relation(c.a, BROADER, c.b, 0.0)
        if c.kind == MUST_EQUIVALENT:
            return Relation(x, EQUIVALENT, y, 0.0)
    if x == y:
        return None
    score = max(hr_metric(index, x, y, params), tr_metric(index, x, y, params))
    if score >= params.threshold:
        return Relation(x, BROADER, y, score)
    label_sim = 1.0 - levenshtein_norm(x, y)
    if (label_sim >= params.merge_label_sim
            and cosine_context(index, x, y) >= params.merge_context_sim):
        return Relation(x, EQUIVALENT, y, label_sim)
    return None


def evaluate_pair(index: TermIndex, x: str, y: str, params: MetricParams,
                  book: ConstraintBook) -> CandidatePair:
    return CandidatePair(x, y, hr_metric(index, x, y, params), tr_metric(index, x, y, params),
                         infer_relationship(index, x, y, params, book))


# -- loop removal ------------------------------------------------------------

def _dedupe(relations: Iterable[Relation]) -> set[Relation]:
    best: dict[tuple, Relation] = {}
    for r in sorted(relations):
        if r.source == r.target:
            continue
        old = best.get(r.key)
        if old is None or r.weight > old.weight:
            best[r.key] = r
    return set(best.values())


def _find_cycle(adj: Mapping[str, list[str]]) -> list[tuple[str, str]] | None:
    """Edges of one cycle, found by a deterministic DFS; None if acyclic."""
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = defaultdict(int)
    for start in sorted(adj):
        if color[start] != WHITE:
            continue
        path = [start]
        iters = [iter(adj.get(start, ()))]
        color[start] = GREY
        while path:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[path.pop()] = BLACK
                iters.pop()
                continue
            if color[nxt] == GREY:
                cyc = path[path.index(nxt):] + [nxt]
                return list(zip(cyc, cyc[1:]))
            if color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                iters.append(iter(adj.get(nxt, ())))
    return None


def remove_loops(relations: Iterable[Relation],
                 protected: Iterable[tuple[str, str]] = ()) -> set[Relation]:
    """Break every broaderGeneric cycle by deleting its lightest edge.

    Ties go to the alphabetically smallest (source, target). Edges listed in
    ``protected`` (expert assertions) are never deleted.
    """
    protected = set(protected)
    rels = _dedupe(relations)
    broader = {(r.source, r.target): r for r in rels if r.kind == BROADER}
    while True:
        adj: dict[str, list[str]] = defaultdict(list)
        for s, t in sorted(broader):
            adj[s].append(t)
        cycle = _find_cycle(adj)
        if cycle is None:
            break
        removable = [e for e in cycle if e not in protected]
        if not removable:
            raise KlinkError("cycle made only of asserted edges: "
                             + " -> ".join([cycle[0][0], *(t for _, t in cycle)]))
        victim = min(removable, key=lambda e: (broader[e].weight, e))
        del broader[victim]
    return {r for r in rels if r.kind != BROADER} | set(broader.values())


# -- merging -----------------------------------------------------------------

class UnionFind:
    def __init__(self, items: Iterable[str] = ()):
        self.parent: dict[str, str] = {}
        self.members: dict[str, set[str]] = {}
        for x in items:
            self.add(x)

    def add(self, x: str) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.members[x] = {x}

    def find(self, x: str) -> str:
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> str:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if len(self.members[ra]) < len(self.members[rb]) or (
                len(self.members[ra]) == len(self.members[rb]) and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.members[ra] |= self.members.pop(rb)
        return ra

    def classes(self) -> list[frozenset[str]]:
        return sorted((frozenset(m) for m in self.members.values()), key=sorted)


def merge_keywords(index: TermIndex, relations: Iterable[Relation], terms: Iterable[str] = (),
                   params: MetricParams = MetricParams(),
                   constraints: ConstraintBook | None = None) -> dict[str, str]:
    """Map every term to the representative of its equivalence class.

    Classes are the transitive closure of relatedEquivalent pairs; the
    representative is the most frequent member (alphabetical on ties).
    Unions that would put a must_unrelated pair in one class are skipped.
    Splitting ambiguous keywords is not supported.
    """
    relations = list(relations)
    uf = UnionFind(sorted(set(terms) | {t for r in relations for t in (r.source, r.target)}))
    for r in sorted(relations):
        if r.kind != EQUIVALENT:
            continue
        if constraints is not None:
            ra, rb = uf.find(r.source), uf.find(r.target)
            if ra != rb and any(constraints.forbids(u, v)
                                for u in uf.members[ra] for v in uf.members[rb]):
                continue
        uf.union(r.source, r.target)

    def df(t: str) -> int:
        return index.df(t) if t in index else 0

    rep: dict[str, str] = {}
    for cls in uf.classes():
        best = min(cls, key=lambda t: (-df(t), t))
        for t in cls:
            rep[t] = best
    return rep


def split_keywords(terms: Iterable[str]) -> dict[str, str]:
    log.info("ambiguous-keyword splitting is not implemented; keywords left as they are")
    return {}


def retarget(relations: Iterable[Relation], rep: Mapping[str, str]) -> set[Relation]:
    """Point hierarchy edges at class representatives; drop intra-class edges."""
    out = []
    for r in relations:
        s, t = rep.get(r.source, r.source), rep.get(r.target, r.target)
        if s != t:
            out.append(Relation(s, r.kind, t, r.weight))
    return _dedupe(out)


# -- filtering -----------------------------------------------------------------

def filter_topics(index: TermIndex, terms: Iterable[str], params: MetricParams = MetricParams(),
                  stoplist: Iterable[str] = (), keep: Iterable[str] = ()) -> list[str]:
    """Drop terms that are too generic, too rare, or stoplisted.

    Terms in ``keep`` (seeds, expert-asserted terms) always survive.
    """
    stop = {normalize_term(s) for s in stoplist}
    keep = set(keep)
    ceiling = params.generic_df_ceiling * index.doc_count
    kept = []
    for t in sorted(set(terms)):
        if t in keep:
            kept.append(t)
            continue
        df = index.df(t) if t in index else 0
        if df > ceiling or df < params.min_df or t in stop:
            continue
        kept.append(t)
    return kept


def load_stoplist(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [normalize_term(line) for line in fh if line.strip() and not line.startswith("#")]


# -- taxonomy generation -------------------------------------------------------

def _reachable(adj: Mapping[str, set[str]], src: str, dst: str, skip: tuple[str, str]) -> bool:
    stack, seen = [src], {src}
    while stack:
        node = stack.pop()
        for nxt in adj.get(node, ()):
            if (node, nxt) == skip or nxt in seen:
                continue
            if nxt == dst:
                return True
            seen.add(nxt)
            stack.append(nxt)
    return False


def transitive_reduction(relations: Iterable[Relation],
                         protected: Iterable[tuple[str, str]] = ()) -> set[Relation]:
    """Drop broaderGeneric edges implied by a longer path (DAG input)."""
    protected = set(protected)
    rels = set(relations)
    broader = sorted(r for r in rels if r.kind == BROADER)
    adj: dict[str, set[str]] = defaultdict(set)
    for r in broader:
        adj[r.source].add(r.target)
    for r in broader:
        e = (r.source, r.target)
        if e in protected:
            continue
        if _reachable(adj, r.source, r.target, skip=e):
            adj[r.source].discard(r.target)
            rels.discard(r)
    return rels


def _bypass_dropped(relations: set[Relation], dropped: Iterable[str],
                    book: ConstraintBook) -> set[Relation]:
    """Remove dropped terms, linking their children to their parents."""
    rels = set(relations)
    for d in sorted(dropped):
        ins = [r for r in rels if r.kind == BROADER and r.target == d]
        outs = [r for r in rels if r.kind == BROADER and r.source == d]
        rels = {r for r in rels if d not in (r.source, r.target)}
        for a in ins:
            for b in outs:
                if a.source != b.target and not book.forbids(a.source, b.target):
                    rels.add(Relation(a.source, BROADER, b.target, min(a.weight, b.weight)))
    return _dedupe(rels)


def generate_taxonomy(relations: Iterable[Relation], members: Mapping[str, Iterable[str]],
                      kept: Iterable[str], constraints: Iterable[Constraint],
                      book: ConstraintBook, params: MetricParams) -> Taxonomy:
    kept = set(kept)
    rels = set(relations)
    involved = {t for r in rels for t in (r.source, r.target)}
    rels = _bypass_dropped(rels, involved - kept, book)
    protected = {(r.source, r.target) for r in book.asserted_relations()}
    if params.transitive_reduction:
        rels = transitive_reduction(rels, protected)
    rels = {r for r in rels if not book.forbids(r.source, r.target)}
    topics = {}
    for t in sorted(kept):
        labels = frozenset(members.get(t, ())) | {t}
        topics[t] = Topic(t, t, labels - {t})
    return Taxonomy(topics, rels, frozenset(constraints)).validate()


# -- main loop -----------------------------------------------------------------

def run_klink(index: TermIndex, seeds: Iterable[str], params: MetricParams = MetricParams(),
              constraints: Iterable[Constraint] = (), stoplist: Iterable[str] = ()) -> Taxonomy:
    """Learn a taxonomy starting from ``seeds``.

    Each pass analyses the unprocessed keywords against their candidates,
    removes loops, merges equivalent keywords and queues newly discovered
    keywords; it stops when nothing is left to process or after
    ``params.iteration_cap`` passes.
    """
    seeds = sorted({normalize_term(s) for s in seeds})
    if not seeds:
        raise KlinkError("at least one seed keyword is required")
    for s in seeds:
        if s not in index:
            raise KlinkError(f"seed {s!r} is not in the index")
    constraints = sorted({Constraint(normalize_term(c.a), c.kind, normalize_term(c.b))
                          for c in constraints})
    base_book = ConstraintBook(constraints)
    constraint_terms = base_book.terms()

    rep: dict[str, str] = {t: t for t in index.terms}
    for t in constraint_terms:
        rep.setdefault(t, t)
    current = index
    relations: set[Relation] = set()
    processed: set[str] = set()
    frontier = list(seeds)
    split_keywords(frontier)

    for iteration in range(1, params.iteration_cap + 1):
        if not frontier:
            break
        book = ConstraintBook(constraints, rep)
        asserted = book.asserted_relations()
        pairs: set[tuple[str, str]] = set()
        discovered: set[str] = set()
        for k1 in frontier:
            processed.add(k1)
            if k1 not in current:
                continue
            for k2 in get_candidates(current, k1, params):
                discovered.add(k2)
                if not book.lookup(k1, k2):
                    pairs.add(tuple(sorted((k1, k2))))
        ordered = sorted(pairs)

        def judge(pair):
            x, y = pair
            return (infer_relationship(current, x, y, params, book),
                    infer_relationship(current, y, x, params, book))

        if params.workers > 1:
            with ThreadPoolExecutor(params.workers) as pool:
                verdicts = list(pool.map(judge, ordered))
        else:
            verdicts = [judge(p) for p in ordered]
        # a fresh verdict replaces whatever the pair had before
        relations = {r for r in relations if tuple(sorted((r.source, r.target))) not in pairs}
        for found in verdicts:
            for r in found:
                if r is None:
                    continue
                relations.add(r)
                if r.kind == EQUIVALENT:
                    relations.add(Relation(r.target, EQUIVALENT, r.source, r.weight))
        relations = _dedupe(relations | asserted)
        protected = {(r.source, r.target) for r in asserted if r.kind == BROADER}
        relations = remove_loops(relations, protected)

        merge_map = merge_keywords(current, relations, params=params, constraints=book)
        rep = {t: merge_map.get(r, r) for t, r in rep.items()}
        relations = retarget(relations, merge_map)
        protected = {(merge_map.get(s, s), merge_map.get(t, t)) for s, t in protected}
        relations = remove_loops(relations, protected)
        current = index.merged(rep)

        # classes that grew this pass are analysed again under their representative
        grown = {r for t, r in merge_map.items() if t != r}
        processed = {rep.get(t, t) for t in processed} - grown
        frontier = sorted(({rep.get(t, t) for t in discovered} | grown) - processed)
        log.info("iteration %d: %d pairs, %d relations, %d keywords queued",
                 iteration, len(ordered), len(relations), len(frontier))
    else:
        if frontier:
            log.info("iteration cap %d reached with %d keywords unprocessed",
                     params.iteration_cap, len(frontier))

    book = ConstraintBook(constraints, rep)
    relations = _dedupe({r for r in relations if r.kind == BROADER}
                        | book.asserted_relations())
    members: dict[str, set[str]] = defaultdict(set)
    for t, r in rep.items():
        members[r].add(t)
    seed_reps = {rep.get(s, s) for s in seeds}
    keep = seed_reps | {rep.get(t, t) for t in constraint_terms}
    candidates = {t for r in relations for t in (r.source, r.target)} | keep
    kept = filter_topics(current, candidates, params, stoplist, keep)
    tax = generate_taxonomy(relations, members, kept, constraints, book, params)
    log.info("taxonomy: %d topics, %d relations", len(tax.topics), len(tax.relations))
    return tax

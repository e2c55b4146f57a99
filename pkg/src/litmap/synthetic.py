"""Deterministic synthetic corpora with known ground truth.

Used by the test-suite and by ``litmap make-fixture``; nothing here is
needed for real data.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from litmap.corpus import Corpus, Paper
from litmap.strings import levenshtein_norm

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
           "br", "dr", "gl", "kr", "pl", "st", "tr", "sk"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]


def pseudo_words(n: int, rng: random.Random, syllables=(3, 4),
                 min_distance: float = 0.7) -> list[str]:
    """``n`` invented words, pairwise at least ``min_distance`` apart.

    Lexically distinct names keep the edit-distance factor of the
    subsumption score from masking the planted co-occurrence structure.
    """
    words: list[str] = []
    while len(words) < n:
        k = rng.choice(syllables)
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(k))
        if all(levenshtein_norm(w, o) >= min_distance for o in words):
            words.append(w)
    return sorted(words)


@dataclass
class PlantedHierarchy:
    corpus: Corpus
    roots: list[str]
    edges: set[tuple[str, str]]  # (narrower, broader)
    topics: list[str]

    def ancestors(self, term: str) -> list[str]:
        parent = dict(self.edges)
        out = []
        while term in parent:
            term = parent[term]
            out.append(term)
        return out


def planted_hierarchy(n_papers: int = 2000, seed: int = 7, shape=(3, 3, 2),
                      p_ancestor: float = 0.9, p_cross: float = 0.05,
                      p_related: float = 0.5, years=(2005, 2014)) -> PlantedHierarchy:
    """Corpus drawn from a known three-level hierarchy.

    Each paper is about one topic, always carries that topic's keyword,
    carries each ancestor with probability ``p_ancestor`` and, with
    probability ``p_cross``, one random topic from another top-level branch.
    """
    rng = random.Random(seed)
    n_roots, n_mid, n_leaf = shape
    total = n_roots * (1 + n_mid * (1 + n_leaf))
    names = pseudo_words(total, rng)
    rng.shuffle(names)
    it = iter(names)
    roots, edges, branch = [], set(), {}
    for _ in range(n_roots):
        r = next(it)
        roots.append(r)
        branch[r] = r
        for _ in range(n_mid):
            m = next(it)
            edges.add((m, r))
            branch[m] = r
            for _ in range(n_leaf):
                leaf = next(it)
                edges.add((leaf, m))
                branch[leaf] = r
    topics = sorted(branch)
    hier = PlantedHierarchy(Corpus(), sorted(roots), edges, topics)
    papers = []
    for i in range(n_papers):
        topic = rng.choice(topics)
        about = [topic]
        if rng.random() < p_related:
            about.append(rng.choice([t for t in topics if branch[t] == branch[topic]]))
        kws = set(about)
        for t in about:
            for anc in hier.ancestors(t):
                if rng.random() < p_ancestor:
                    kws.add(anc)
        if rng.random() < p_cross:
            kws.add(rng.choice([t for t in topics if branch[t] != branch[topic]]))
        papers.append(Paper(
            id=f"P{i:05d}",
            title=f"On {topic}",
            year=rng.randint(*years),
            keywords=tuple(sorted(kws)),
            venue=f"venue {branch[topic]}",
            citation_count=rng.randint(0, 40),
        ))
    hier.corpus = Corpus(papers)
    return hier


# -- software engineering taxonomy fixture ------------------------------------

# (preferred label, alternative labels, children)
_SA_BRANCH = ("software architecture", ["software architectures"], [
    ("design decisions", ["design decision"], [
        ("architectural knowledge", ["architecture knowledge"], []),
        ("design rationale", [], []),
        ("architectural technical debt", [], []),
    ]),
    ("service oriented architectures", ["service oriented architecture", "soa"], [
        ("web services", ["web service"], []),
        ("microservices", ["microservice"], []),
        ("service composition", [], []),
        ("enterprise service bus", [], []),
    ]),
    ("model driven architectures", ["model driven architecture"], [
        ("model driven engineering", [], []),
        ("model transformations", ["model transformation"], []),
        ("unified modeling language", ["uml"], []),
        ("domain specific languages", ["domain specific language"], []),
    ]),
    ("architecture description languages", ["architecture description language"], [
        ("aadl", [], []),
        ("acme", [], []),
        ("wright", [], []),
    ]),
    ("views", ["architectural views"], [
        ("viewpoints", [], []),
        ("architecture documentation", [], []),
    ]),
    ("architecture analysis", ["architectural analysis"], [
        ("architecture evaluation", [], []),
        ("atam", [], []),
        ("performance prediction", [], []),
        ("reliability prediction", [], []),
    ]),
    ("component based software", ["component based software engineering"], [
        ("software components", ["software component"], []),
        ("component models", ["component model"], []),
    ]),
    ("software product lines", ["software product line", "product line"], [
        ("variability management", [], []),
        ("feature models", ["feature model"], []),
    ]),
    ("architectural styles", ["architectural style"], [
        ("architectural patterns", [], []),
        ("pipes and filters", [], []),
        ("layered architectures", [], []),
        ("event driven architectures", ["event driven architecture"], []),
        ("client server", [], []),
        ("peer to peer", [], []),
    ]),
    ("software connectors", [], []),
    ("architecture recovery", ["architecture reconstruction"], [
        ("architecture erosion", ["architectural erosion"], []),
        ("reverse engineering", [], []),
    ]),
    ("self adaptive systems", ["self adaptive software"], [
        ("dynamic reconfiguration", [], []),
    ]),
])

_SE_TREE = ("software engineering", [], [
    _SA_BRANCH,
    ("software testing", [], [
        ("unit testing", [], []),
        ("regression testing", [], []),
        ("test generation", ["test case generation"], []),
    ]),
    ("requirements engineering", [], [
        ("requirements elicitation", [], []),
        ("goal modeling", [], []),
    ]),
    ("software maintenance", [], [
        ("refactoring", [], []),
        ("code smells", ["code smell"], []),
    ]),
])

SA_ROOT = "software architecture"
SE_ROOT = "software engineering"


def se_taxonomy():
    """Hand-built software engineering taxonomy.

    The software architecture branch has 46 topics carrying 71 labels.
    """
    from litmap.taxonomy import BROADER, Relation, Taxonomy, Topic

    topics, relations = {}, set()

    def visit(node, parent):
        label, alts, children = node
        topics[label] = Topic(label, label, frozenset(alts))
        if parent is not None:
            relations.add(Relation(label, BROADER, parent, 1.0))
        for child in children:
            visit(child, label)

    visit(_SE_TREE, None)
    return Taxonomy(topics, relations).validate()


MAIN_VENUES = [
    "European Conference on Software Architecture",
    "Journal of Systems and Software",
    "Working IEEE/IFIP Conference on Software Architecture",
    "International Conference on Software Engineering",
    "IEEE Transactions on Software Engineering",
    "Information and Software Technology",
]
OTHER_VENUES = [
    "Procedia Computer Science",
    "Lecture Notes in Computer Science",
    "International Conference on Web Services",
]


def _one_edit(label: str, rng: random.Random, delete: bool) -> str | None:
    """Copy of ``label`` with one letter deleted (or replaced) inside a long word."""
    spots = [i for i, ch in enumerate(label)
             if ch.isalpha() and 0 < i < len(label) - 1
             and label[i - 1] != " " and label[i + 1] != " "]
    if not spots:
        return None
    i = rng.choice(spots)
    if delete:
        return label[:i] + label[i + 1:]
    repl = rng.choice([c for c in "aeiou" if c != label[i]])
    return label[:i] + repl + label[i + 1:]


@dataclass
class LabelledCorpus:
    corpus: Corpus
    gold: dict[str, set[str]]


def labelled_corpus(tax, n_papers: int = 100, seed: int = 11, root: str = SA_ROOT,
                    p_exact: float = 0.7, p_variant: float = 0.2,
                    p_incidental: float = 0.2, p_near_miss: float = 0.3,
                    years=(2005, 2013)) -> LabelledCorpus:
    """Papers with known topic sets drawn from the subbranch under ``root``.

    A paper focuses on one to three topics; its gold set is those topics and
    their ancestors. Each gold topic is written out exactly with probability
    ``p_exact`` (in the text and as a keyword), misspelled by one letter with
    probability ``p_variant`` and left implicit otherwise. Papers may also mention a topic in passing
    (``p_incidental``) or contain a one-letter look-alike of an absent
    topic's label (``p_near_miss``). Everything else is invented filler.
    """
    from litmap.strings import similarity
    from litmap.taxonomy import descendants

    rng = random.Random(seed)
    pool = sorted(descendants(tax, root))
    branch = set(pool) | {root}
    all_labels = sorted({lab for t in tax.topics.values() for lab in t.labels})
    long_labels = {t: [lab for lab in tax.topics[t].labels if len(lab) >= 17] for t in branch}

    def clean(phrase: str) -> bool:
        return not any(lab in phrase for lab in all_labels)

    filler = [w for w in pseudo_words(300, rng, syllables=(2, 3), min_distance=0.3)
              if clean(w) and all(similarity(w, lab) < 0.75 for lab in all_labels)]

    def misspell(topic: str, delete: bool) -> str | None:
        for _ in range(20):
            if not long_labels[topic]:
                return None
            v = _one_edit(rng.choice(long_labels[topic]), rng, delete)
            if v and clean(v):
                return v
        return None

    papers, gold = [], {}
    for i in range(n_papers):
        focus = rng.sample(pool, rng.choice((1, 2, 3)))
        topics = set(focus)
        for t in focus:
            topics |= tax.ancestors(t) & branch
        phrases, keywords = [], []
        for t in sorted(topics):
            r = rng.random()
            if r < p_exact:
                phrases.append(rng.choice(tax.topics[t].labels))
                keywords.append(t)
            elif r < p_exact + p_variant:
                v = misspell(t, delete=True)
                phrases.append(v if v else rng.choice(tax.topics[t].labels))
        others = [t for t in pool if t not in topics]
        if rng.random() < p_incidental:
            phrases.append(rng.choice(tax.topics[rng.choice(others)].labels))
        if rng.random() < p_near_miss:
            candidates = [t for t in others if long_labels[t]]
            v = misspell(rng.choice(candidates), delete=False)
            if v:
                phrases.append(v)
        rng.shuffle(phrases)
        words = []
        for ph in phrases:
            words.extend(rng.sample(filler, rng.randint(3, 6)))
            words.append(ph)
        words.extend(rng.sample(filler, 3))
        pid = f"S{i:04d}"
        gold[pid] = topics
        papers.append(Paper(
            id=pid,
            title=" ".join(rng.sample(filler, 4)),
            year=rng.randint(*years),
            abstract=" ".join(words),
            keywords=tuple(keywords),
            venue=rng.choice(MAIN_VENUES + OTHER_VENUES),
            authors=(rng.choice(filler).title(),),
            citation_count=rng.randint(0, 30),
        ))
    return LabelledCorpus(Corpus(papers), gold)

"""Assigning taxonomy topics to papers.

Four strategies, all multi-label and deterministic:

* ``dm``: direct mapping, a topic is assigned when any term of its
  expansion (labels, equivalents, descendants) occurs in the text.
* ``sim``: every topic with a label within a Levenshtein-similarity
  threshold of some uni/bi/trigram of the text.
* ``tfidf``: each record's top TF-IDF n-grams mapped to labels by similarity.
* ``lda``: an external topic-term model folded onto each record, strong
  topics' strong terms mapped to labels by similarity.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from litmap.corpus import Corpus, Paper, paper_text, paper_tokens
from litmap.selection import StudySet, contains
from litmap.strings import ngrams, similar_at_least
from litmap.taxonomy import Taxonomy, expand_terms

METHODS = ("dm", "sim", "tfidf", "lda")


class ClassifierError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    sim_threshold_t: float = 0.94
    tfidf_top_n: int = 30
    tfidf_map_sim: float = 0.8
    lda_topic_prob_j: float = 0.1
    lda_term_prob_k: float = 0.01
    lda_map_sim: float = 0.8
    word_boundary: bool = False

    def __post_init__(self):
        for name in ("sim_threshold_t", "tfidf_map_sim", "lda_topic_prob_j",
                     "lda_term_prob_k", "lda_map_sim"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ClassifierError(f"{name} must lie in [0, 1]")
        if self.tfidf_top_n < 1:
            raise ClassifierError("tfidf_top_n must be >= 1")


@dataclass
class IdfModel:
    idf: dict[str, float]
    doc_count: int

    def __post_init__(self):
        if any(v < 0 for v in self.idf.values()):
            raise ClassifierError("idf values must be non-negative")

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({"doc_count": self.doc_count, "idf": dict(sorted(self.idf.items()))},
                                         indent=1, ensure_ascii=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "IdfModel":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls({k: float(v) for k, v in d["idf"].items()}, int(d["doc_count"]))


@dataclass
class LdaModel:
    topics: list[dict[str, float]]

    def __post_init__(self):
        for i, t in enumerate(self.topics):
            if any(not 0.0 <= p <= 1.0 for p in t.values()):
                raise ClassifierError(f"LDA topic {i} has a probability outside [0, 1]")

    @classmethod
    def load(cls, path) -> "LdaModel":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([{k: float(v) for k, v in t.items()} for t in d["topics"]])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({"topics": [dict(sorted(t.items())) for t in self.topics]},
                                         indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def paper_ngrams(paper: Paper) -> Counter:
    """Raw counts of uni/bi/trigrams, never crossing field borders."""
    counts: Counter = Counter()
    for tokens in paper_tokens(paper):
        counts.update(ngrams(tokens))
    return counts


def build_idf(papers: Iterable[Paper]) -> IdfModel:
    """idf(t) = ln(N / df(t)) over the papers' n-grams."""
    df: Counter = Counter()
    n = 0
    for p in papers:
        n += 1
        df.update(set(paper_ngrams(p)))
    if n == 0:
        raise ClassifierError("cannot build an IDF model from no papers")
    return IdfModel({t: math.log(n / c) for t, c in sorted(df.items())}, n)


def _label_index(tax: Taxonomy) -> list[tuple[str, str]]:
    return sorted((lab, tid) for tid, t in tax.topics.items() for lab in t.labels)


def _map_terms(terms: Iterable[str], tax: Taxonomy, threshold: float) -> set[str]:
    """Topics owning a label at least ``threshold``-similar to one of ``terms``."""
    terms = set(terms)
    by_len: dict[int, list[str]] = {}
    for t in sorted(terms):
        by_len.setdefault(len(t), []).append(t)
    found = set()
    for label, tid in _label_index(tax):
        if tid in found:
            continue
        if label in terms:
            found.add(tid)
            continue
        # similarity >= threshold needs |len(a) - len(b)| <= (1 - threshold) * longest
        n = len(label)
        lo = int(n * threshold) - 1
        hi = int(n / threshold) + 1 if threshold > 0 else max(by_len, default=0)
        if any(similar_at_least(label, t, threshold)
               for k in range(max(lo, 1), hi + 1) for t in by_len.get(k, ())):
            found.add(tid)
    return found


def classify_dm(paper: Paper, tax: Taxonomy, word_boundary: bool = False) -> set[str]:
    text = paper_text(paper)
    return {tid for tid in tax.topics
            if any(contains(text, term, word_boundary) for term in sorted(expand_terms(tax, tid)))}


def classify_sim(paper: Paper, tax: Taxonomy, config: ClassifierConfig = ClassifierConfig()) -> set[str]:
    return _map_terms(paper_ngrams(paper), tax, config.sim_threshold_t)


def tfidf_ranking(paper: Paper, idf: IdfModel) -> list[tuple[str, float]]:
    """(term, tf*idf) for every n-gram known to the model, best first.

    N-grams absent from the model are not ranked.
    """
    tf = paper_ngrams(paper)
    scored = [(t, n * idf.idf[t]) for t, n in tf.items() if t in idf.idf]
    return sorted(scored, key=lambda ts: (-ts[1], ts[0]))


def classify_tfidf(paper: Paper, idf: IdfModel, tax: Taxonomy,
                   config: ClassifierConfig = ClassifierConfig()) -> set[str]:
    if not idf.idf:
        raise ClassifierError("empty IDF model")
    top = [t for t, _ in tfidf_ranking(paper, idf)[:config.tfidf_top_n]]
    return _map_terms(top, tax, config.tfidf_map_sim)


def lda_topic_mixture(paper: Paper, model: LdaModel) -> list[float]:
    """Folding-in: dot product of term counts with each topic, normalized to sum 1."""
    tf = paper_ngrams(paper)
    raw = [sum(n * topic.get(t, 0.0) for t, n in sorted(tf.items())) for topic in model.topics]
    total = sum(raw)
    if total <= 0:
        return [0.0] * len(raw)
    return [r / total for r in raw]


def classify_lda_map(paper: Paper, model: LdaModel, tax: Taxonomy,
                     config: ClassifierConfig = ClassifierConfig()) -> set[str]:
    if not model.topics:
        raise ClassifierError("empty LDA model")
    mixture = lda_topic_mixture(paper, model)
    terms = set()
    for weight, topic in zip(mixture, model.topics):
        if weight > 0 and weight >= config.lda_topic_prob_j:
            terms |= {t for t, p in topic.items() if p >= config.lda_term_prob_k}
    return _map_terms(terms, tax, config.lda_map_sim)


# -- batch -------------------------------------------------------------------------

@dataclass
class ClassificationResult:
    classifier: str
    assignments: dict[str, list[str]]
    config: dict = field(default_factory=dict)
    taxonomy_version: str = ""

    def topics_of(self, paper_id: str) -> set[str]:
        return set(self.assignments.get(paper_id, ()))

    def to_json(self) -> dict:
        return {"classifier": self.classifier, "config": self.config,
                "taxonomy_version": self.taxonomy_version,
                "assignments": {k: sorted(v) for k, v in sorted(self.assignments.items())}}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ClassificationResult":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(d["classifier"], {k: list(v) for k, v in d["assignments"].items()},
                   d.get("config", {}), d.get("taxonomy_version", ""))


def classifier_for(method: str, tax: Taxonomy, config: ClassifierConfig,
                   idf: IdfModel | None = None, lda: LdaModel | None = None):
    if method == "dm":
        return lambda p: classify_dm(p, tax, config.word_boundary)
    if method == "sim":
        return lambda p: classify_sim(p, tax, config)
    if method == "tfidf":
        if idf is None:
            raise ClassifierError("tfidf needs an IDF model")
        return lambda p: classify_tfidf(p, idf, tax, config)
    if method == "lda":
        if lda is None:
            raise ClassifierError("lda needs an LDA model")
        return lambda p: classify_lda_map(p, lda, tax, config)
    raise ClassifierError(f"unknown classifier {method!r}; choose from {', '.join(METHODS)}")


def classify_set(studies: StudySet | Iterable[str], corpus: Corpus | Mapping[str, Paper], method: str,
                 tax: Taxonomy, config: ClassifierConfig = ClassifierConfig(),
                 idf: IdfModel | None = None, lda: LdaModel | None = None,
                 workers: int = 1) -> ClassificationResult:
    ids = studies.paper_ids if isinstance(studies, StudySet) else list(studies)
    classify = classifier_for(method, tax, config, idf, lda)

    def one(pid: str) -> list[str]:
        try:
            return sorted(classify(corpus[pid]))
        except Exception as exc:
            raise ClassifierError(f"paper {pid}: {exc}") from exc

    ids = sorted(ids)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            labels = list(pool.map(one, ids))
    else:
        labels = [one(pid) for pid in ids]
    return ClassificationResult(method, dict(zip(ids, labels)),
                                {"method": method, **asdict(config)}, tax.version)

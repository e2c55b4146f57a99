"""Agreement statistics and classifier scoring.

p-values come from a self-contained regularized incomplete gamma function,
so the module needs nothing beyond the standard library and numpy.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

NONE_LABEL = "none"


class EvaluationError(ValueError):
    pass


# -- chi-square distribution ---------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series."""
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def chi2_sf(statistic: float, df: int) -> float:
    """P(X >= statistic) for a chi-square variable with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if statistic <= 0:
        return 1.0
    return gammaincc(df / 2.0, statistic / 2.0)


# -- annotation data -------------------------------------------------------------

@dataclass
class AnnotationSet:
    annotator_id: str
    labels: dict[str, str]
    ties: frozenset[str] = frozenset()

    @classmethod
    def load_csv(cls, path, annotator_id: str | None = None) -> "AnnotationSet":
        path = Path(path)
        labels: dict[str, str] = {}
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                item = row["item_id"].strip()
                if item in labels:
                    raise EvaluationError(f"{path.name}: item {item!r} labeled twice")
                labels[item] = (row.get("label") or NONE_LABEL).strip() or NONE_LABEL
        return cls(annotator_id or path.stem, labels)


def load_gold(path) -> dict[str, set[str]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    gold = {str(k): set(v) for k, v in data.items()}
    empty = [k for k, v in gold.items() if not v]
    if empty:
        raise EvaluationError(f"gold standard items without labels: {sorted(empty)[:5]}")
    return gold


def _same_items(a: Mapping, b: Mapping, what: str = "item sets") -> list:
    if set(a) != set(b):
        diff = sorted(set(a) ^ set(b))[:5]
        raise EvaluationError(f"{what} differ (e.g. {diff})")
    return sorted(a)


# -- pairwise agreement --------------------------------------------------------------

def pairwise_agreement(a: AnnotationSet, b: AnnotationSet) -> float:
    items = _same_items(a.labels, b.labels)
    if not items:
        raise EvaluationError("no items to compare")
    return sum(a.labels[i] == b.labels[i] for i in items) / len(items)


def cohen_kappa(a: AnnotationSet, b: AnnotationSet) -> float:
    """(p_o - p_e) / (1 - p_e) with chance agreement from both marginals."""
    items = _same_items(a.labels, b.labels)
    n = len(items)
    if n == 0:
        raise EvaluationError("no items to compare")
    p_o = sum(a.labels[i] == b.labels[i] for i in items) / n
    ca = Counter(a.labels[i] for i in items)
    cb = Counter(b.labels[i] for i in items)
    p_e = sum(ca[k] * cb[k] for k in sorted(ca.keys() & cb.keys())) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def fleiss_kappa(matrix) -> float:
    """Fleiss' kappa from an items x categories matrix of rating counts."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise EvaluationError("rating matrix must be a non-empty 2-D array")
    if (m < 0).any():
        raise EvaluationError("rating counts must be non-negative")
    raters = m.sum(axis=1)
    if not np.all(raters == raters[0]):
        raise EvaluationError("every item needs the same number of ratings")
    n = raters[0]
    if n < 2:
        raise EvaluationError("at least two ratings per item are required")
    p_j = m.sum(axis=0) / m.sum()
    p_i = ((m * m).sum(axis=1) - n) / (n * (n - 1))
    p_bar = p_i.mean()
    p_e = float((p_j * p_j).sum())
    if p_e == 1.0:
        return 1.0
    return float((p_bar - p_e) / (1.0 - p_e))


def rating_matrix(sets: Sequence[AnnotationSet]) -> tuple[np.ndarray, list[str], list[str]]:
    items = sorted(sets[0].labels)
    for s in sets[1:]:
        _same_items(sets[0].labels, s.labels)
    categories = sorted({lab for s in sets for lab in s.labels.values()})
    col = {c: j for j, c in enumerate(categories)}
    m = np.zeros((len(items), len(categories)), dtype=int)
    for i, item in enumerate(items):
        for s in sets:
            m[i, col[s.labels[item]]] += 1
    return m, items, categories


# -- chi-square homogeneity ------------------------------------------------------------

def chi_square_table(table) -> tuple[float, float, int]:
    """Pearson statistic, p-value and df of a contingency table.

    All-zero columns are dropped first.
    """
    t = np.asarray(table, dtype=float)
    if t.ndim != 2:
        raise EvaluationError("contingency table must be 2-D")
    t = t[:, t.sum(axis=0) > 0]
    if t.shape[0] < 2 or t.shape[1] < 2:
        raise EvaluationError(f"degenerate contingency table of shape {t.shape}")
    if (t.sum(axis=1) == 0).any():
        raise EvaluationError("contingency table has an empty row")
    expected = np.outer(t.sum(axis=1), t.sum(axis=0)) / t.sum()
    stat = float(((t - expected) ** 2 / expected).sum())
    df = (t.shape[0] - 1) * (t.shape[1] - 1)
    return stat, chi2_sf(stat, df), df


def chi_square_homogeneity(groups: Sequence) -> tuple[float, float]:
    """Do the annotators (or pooled groups of annotators) use labels alike?

    Each element of ``groups`` is one row of the table: an AnnotationSet, or a
    sequence of them whose label counts are pooled.
    """
    if len(groups) < 2:
        raise EvaluationError("need at least two groups")
    rows = []
    for g in groups:
        sets = [g] if isinstance(g, AnnotationSet) else list(g)
        rows.append(Counter(lab for s in sets for lab in s.labels.values()))
    labels = sorted(set().union(*rows))
    stat, p, _ = chi_square_table([[r[lab] for lab in labels] for r in rows])
    return stat, p


# -- McNemar ---------------------------------------------------------------------------

def mcnemar(a_correct, b_correct) -> tuple[float, float]:
    """Continuity-corrected McNemar test on paired correctness outcomes.

    Accepts two equal-length sequences or two mappings over the same items.
    """
    if isinstance(a_correct, Mapping) or isinstance(b_correct, Mapping):
        if not (isinstance(a_correct, Mapping) and isinstance(b_correct, Mapping)):
            raise EvaluationError("pass two mappings or two sequences")
        items = _same_items(a_correct, b_correct, "items")
        pairs = [(bool(a_correct[i]), bool(b_correct[i])) for i in items]
    else:
        a_correct, b_correct = list(a_correct), list(b_correct)
        if len(a_correct) != len(b_correct):
            raise EvaluationError("correctness vectors differ in length")
        pairs = [(bool(x), bool(y)) for x, y in zip(a_correct, b_correct)]
    b = sum(1 for x, y in pairs if x and not y)
    c = sum(1 for x, y in pairs if y and not x)
    if b + c == 0:
        return 0.0, 1.0
    stat = (abs(b - c) - 1) ** 2 / (b + c)
    return stat, chi2_sf(stat, 1)


def label_correctness(predicted: Mapping[str, set[str]], gold: Mapping[str, set[str]],
                      universe: set[str] | None = None) -> dict[tuple[str, str], bool]:
    """Per (item, topic) decision correctness, for McNemar on multi-label output."""
    items = _same_items(predicted, gold, "items")
    if universe is None:
        universe = set().union(*gold.values(), *predicted.values()) if items else set()
    return {(i, t): (t in predicted[i]) == (t in gold[i]) for i in items for t in sorted(universe)}


# -- precision / recall ------------------------------------------------------------------

@dataclass(frozen=True)
class PRF:
    precision: float | None
    recall: float | None
    f_measure: float | None

    def __iter__(self):
        return iter((self.precision, self.recall, self.f_measure))


def prf(predicted: Mapping[str, set[str]], gold: Mapping[str, set[str]]) -> PRF:
    """Micro-averaged precision, recall and F-measure over label instances.

    None marks an undefined value (nothing predicted while the gold is not
    empty, or nothing in the gold).
    """
    items = _same_items(predicted, gold, "items")
    hit = sum(len(set(predicted[i]) & set(gold[i])) for i in items)
    n_pred = sum(len(set(predicted[i])) for i in items)
    n_gold = sum(len(set(gold[i])) for i in items)
    if n_pred == 0:
        p = 1.0 if n_gold == 0 else None
    else:
        p = hit / n_pred
    r = hit / n_gold if n_gold else (1.0 if n_pred == 0 else None)
    if p is None or r is None:
        f = None
    elif p + r == 0:
        f = 0.0
    else:
        f = 2 * p * r / (p + r)
    return PRF(p, r, f)


# -- multi-annotator views -----------------------------------------------------------------

def agree_with_n(all_sets: Sequence[AnnotationSet]) -> dict[str, list[float]]:
    """For each annotator, the share of its labels matched by exactly n others.

    Index n of the returned list runs from 0 to (number of annotators - 1).
    """
    if len(all_sets) < 2:
        raise EvaluationError("need at least two annotators")
    items = sorted(all_sets[0].labels)
    for s in all_sets[1:]:
        _same_items(all_sets[0].labels, s.labels)
    k = len(all_sets)
    out = {}
    for idx, s in enumerate(all_sets):
        hist = [0] * k
        for item in items:
            n = sum(1 for j, o in enumerate(all_sets) if j != idx and o.labels[item] == s.labels[item])
            hist[n] += 1
        out[s.annotator_id] = [h / len(items) for h in hist] if items else [0.0] * k
    return out


def majority_label(all_sets: Sequence[AnnotationSet], annotator_id: str = "majority") -> AnnotationSet:
    """Relative-majority label per item; ties become ``none`` and are flagged."""
    if not all_sets:
        raise EvaluationError("need at least one annotator")
    items = sorted(set().union(*(s.labels for s in all_sets)))
    labels, ties = {}, set()
    for item in items:
        votes = Counter(s.labels[item] for s in all_sets if item in s.labels)
        ranked = votes.most_common()
        top = ranked[0][1]
        leaders = [lab for lab, n in ranked if n == top]
        if len(leaders) > 1:
            labels[item] = NONE_LABEL
            ties.add(item)
        else:
            labels[item] = leaders[0]
    return AnnotationSet(annotator_id, labels, frozenset(ties))


# -- report ----------------------------------------------------------------------------------

@dataclass
class Report:
    data: dict = field(default_factory=dict)

    def dumps(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def annotation_report(sets: Sequence[AnnotationSet]) -> dict:
    ids = [s.annotator_id for s in sets]
    agreement = {a.annotator_id: {b.annotator_id: pairwise_agreement(a, b) for b in sets} for a in sets}
    kappas = {a.annotator_id: {b.annotator_id: cohen_kappa(a, b) for b in sets if b is not a} for a in sets}
    pair_kappas = [cohen_kappa(a, b) for a, b in itertools.combinations(sets, 2)]
    majority = majority_label(sets)
    out = {
        "annotators": ids,
        "agreement": agreement,
        "cohen_kappa": kappas,
        "mean_cohen_kappa": sum(pair_kappas) / len(pair_kappas) if pair_kappas else None,
        "agree_with_n": agree_with_n(sets) if len(sets) > 1 else {},
        "majority_ties": sorted(majority.ties),
    }
    if len(sets) > 1:
        m, _, _ = rating_matrix(sets)
        try:
            out["fleiss_kappa"] = fleiss_kappa(m)
        except EvaluationError:
            out["fleiss_kappa"] = None
        try:
            stat, p = chi_square_homogeneity(sets)
            out["chi_square"] = {"statistic": stat, "p_value": p}
        except EvaluationError as exc:
            out["chi_square"] = {"error": str(exc)}
    return out


def classifier_report(results: Mapping[str, Mapping[str, set[str]]], gold: Mapping[str, set[str]]) -> dict:
    """P/R/F of each named prediction map plus pairwise McNemar tests."""
    scores, restricted = {}, {}
    for name, pred in sorted(results.items()):
        pred = {i: set(pred.get(i, ())) for i in gold}
        restricted[name] = pred
        p, r, f = prf(pred, gold)
        scores[name] = {"precision": p, "recall": r, "f_measure": f}
    universe = set().union(*gold.values(), *(set().union(*p.values()) for p in restricted.values()))
    tests = {}
    for a, b in itertools.combinations(sorted(restricted), 2):
        stat, pval = mcnemar(label_correctness(restricted[a], gold, universe),
                             label_correctness(restricted[b], gold, universe))
        tests[f"{a} vs {b}"] = {"statistic": stat, "p_value": pval}
    return {"scores": scores, "mcnemar": tests}

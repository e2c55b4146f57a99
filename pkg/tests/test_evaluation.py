import math
import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st
import pytest
from scipy import special

from litmap.evaluation import (NONE_LABEL, AnnotationSet, EvaluationError, agree_with_n, chi2_sf,
                               chi_square_homogeneity, chi_square_table, classifier_report, cohen_kappa,
                               fleiss_kappa, gammaincc, label_correctness, load_gold, majority_label,
                               mcnemar, pairwise_agreement, prf, rating_matrix)

# 10 items, 14 raters, 5 categories: the textbook Fleiss example
FLEISS_TABLE = [
    [0, 0, 0, 0, 14], [0, 2, 6, 4, 2], [0, 0, 3, 5, 6], [0, 3, 9, 2, 0], [2, 2, 8, 1, 1],
    [7, 7, 0, 0, 0], [3, 2, 6, 3, 0], [2, 5, 3, 2, 2], [6, 5, 2, 1, 0], [0, 2, 2, 3, 7],
]


def fleiss_exact(table):
    n = sum(table[0])
    total = n * len(table)
    p_j = [Fraction(sum(r[j] for r in table), total) for j in range(len(table[0]))]
    p_i = [Fraction(sum(c * c for c in r) - n, n * (n - 1)) for r in table]
    p_bar = sum(p_i) / len(table)
    p_e = sum(p * p for p in p_j)
    return (p_bar - p_e) / (1 - p_e)


def ann(name, labels):
    return AnnotationSet(name, {f"i{k}": lab for k, lab in enumerate(labels)})


def test_pairwise_agreement():
    a = ann("a", "x" * 17 + "y" * 8)
    b = ann("b", "x" * 25)
    assert pairwise_agreement(a, b) == pytest.approx(0.68)
    assert pairwise_agreement(a, a) == 1.0
    assert pairwise_agreement(ann("a", "xy"), ann("b", "yx")) == 0.0
    with pytest.raises(EvaluationError):
        pairwise_agreement(a, ann("c", "x"))


def test_cohen_closed_form():
    # both A: 20, A/B: 5, B/A: 10, both B: 15 -> p_o = 0.7, p_e = 0.5
    a = ann("a", "A" * 20 + "A" * 5 + "B" * 10 + "B" * 15)
    b = ann("b", "A" * 20 + "B" * 5 + "A" * 10 + "B" * 15)
    assert abs(cohen_kappa(a, b) - 0.4) < 1e-9
    assert cohen_kappa(a, a) == 1.0
    assert cohen_kappa(ann("a", "zz"), ann("b", "zz")) == 1.0


def test_cohen_chance_level():
    rng = random.Random(1)
    values = []
    for _ in range(200):
        a = ann("a", rng.choices("ABC", k=200))
        labels = list(a.labels.values())
        rng.shuffle(labels)
        values.append(cohen_kappa(a, ann("b", labels)))
    assert abs(sum(values) / len(values)) < 0.01


def test_fleiss_textbook():
    assert abs(fleiss_kappa(FLEISS_TABLE) - float(fleiss_exact(FLEISS_TABLE))) < 1e-9
    assert fleiss_kappa(FLEISS_TABLE) == pytest.approx(0.20993070442195522, abs=1e-12)
    assert fleiss_kappa([[3, 0], [0, 3]]) == 1.0
    with pytest.raises(EvaluationError):
        fleiss_kappa([[3, 0], [1, 1]])


def test_fleiss_random_is_near_zero():
    rng = random.Random(2)
    table = []
    for _ in range(2000):
        row = [0, 0, 0]
        for _ in range(5):
            row[rng.randrange(3)] += 1
        table.append(row)
    assert abs(fleiss_kappa(table)) < 0.02


@pytest.mark.parametrize("df, stat, p", [(1, 3.841, 0.05), (1, 6.635, 0.01), (2, 5.991, 0.05),
                                         (5, 11.070, 0.05), (10, 23.209, 0.01), (30, 43.773, 0.05)])
def test_chi2_table_values(df, stat, p):
    assert abs(chi2_sf(stat, df) - p) < 1e-3


@settings(max_examples=200)
@given(st.floats(0.05, 60), st.floats(0.01, 200))
def test_gamma_against_scipy(a, x):
    assert gammaincc(a, x) == pytest.approx(float(special.gammaincc(a, x)), rel=1e-9, abs=1e-13)


@given(st.floats(0, 80))
def test_chi2_closed_forms(x):
    assert chi2_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), rel=1e-9, abs=1e-15)
    assert chi2_sf(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-9, abs=1e-15)


@given(st.integers(1, 20), st.floats(0, 50), st.floats(0, 50))
def test_chi2_monotone(df, a, b):
    lo, hi = sorted((a, b))
    assert chi2_sf(hi, df) <= chi2_sf(lo, df) + 1e-15


def test_chi_square_fixtures():
    stat, p, df = chi_square_table([[10, 0], [0, 10]])
    assert abs(stat - 20.0) < 1e-9 and df == 1
    assert abs(p - math.erfc(math.sqrt(10))) < 1e-12
    stat, p = chi_square_homogeneity([ann("a", "xxyy"), ann("b", "yxyx")])
    assert stat == 0 and p == 1.0
    with pytest.raises(EvaluationError):
        chi_square_homogeneity([ann("a", "xx"), ann("b", "xx")])
    with pytest.raises(EvaluationError):
        chi_square_homogeneity([ann("a", "xy")])
    # all-zero columns are dropped
    assert chi_square_table([[10, 0, 0], [0, 10, 0]])[2] == 1


def test_between_groups_differ_more_than_within():
    g1 = [ann(f"s{i}", "A" * (30 + i) + "B" * (20 - i)) for i in range(3)]
    g2 = [ann(f"j{i}", "A" * (15 + i) + "B" * (35 - i)) for i in range(3)]
    within = chi_square_homogeneity(g1)[1]
    between = chi_square_homogeneity([g1, g2])[1]
    assert between < 1e-3 < within


def test_mcnemar():
    stat, p = mcnemar([True] * 10 + [True] * 5, [False] * 10 + [True] * 5)
    assert abs(stat - 8.1) < 1e-9
    assert abs(p - math.erfc(math.sqrt(8.1 / 2))) < 1e-12
    stat, _ = mcnemar([True] * 5 + [False] * 5, [False] * 5 + [True] * 5)
    assert abs(stat - 0.1) < 1e-9
    assert mcnemar([True, False], [True, False]) == (0.0, 1.0)
    with pytest.raises(EvaluationError):
        mcnemar([True], [True, False])
    with pytest.raises(EvaluationError):
        mcnemar({"a": True}, {"b": True})


def test_prf():
    gold = {f"i{k}": {"a", "b"} for k in range(10)}
    pred = {f"i{k}": {"a"} for k in range(10)}
    p, r, f = prf(pred, gold)
    assert (p, r) == (1.0, 0.5) and f == pytest.approx(2 / 3)
    assert tuple(prf(gold, gold)) == (1.0, 1.0, 1.0)
    assert prf({"i": set()}, {"i": {"a"}}).precision is None
    assert prf({"i": set()}, {"i": set()}).precision == 1.0


@given(st.dictionaries(st.sampled_from("abcdef"), st.tuples(st.sets(st.sampled_from("xyz")),
                                                             st.sets(st.sampled_from("xyz"), min_size=1)),
                       min_size=1))
def test_prf_identities(data):
    pred = {k: v[0] for k, v in data.items()}
    gold = {k: v[1] for k, v in data.items()}
    p, r, f = prf(pred, gold)
    if p is None:
        return
    hit = sum(len(pred[k] & gold[k]) for k in data)
    assert p == hit / sum(len(v) for v in pred.values())
    assert r == hit / sum(len(v) for v in gold.values())
    if p + r:
        assert f == pytest.approx(2 * p * r / (p + r))
        assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12


@given(st.lists(st.sampled_from("ABC"), min_size=1, max_size=30), st.randoms())
def test_kappa_symmetric(labels, rnd):
    other = labels[:]
    rnd.shuffle(other)
    a, b = ann("a", labels), ann("b", other)
    assert cohen_kappa(a, b) == cohen_kappa(b, a)


def brute_agree(sets):
    items = sorted(sets[0].labels)
    out = {}
    for s in sets:
        hist = [0] * len(sets)
        for it in items:
            n = 0
            for o in sets:
                if o is not s and o.labels[it] == s.labels[it]:
                    n += 1
            hist[n] += 1
        out[s.annotator_id] = [h / len(items) for h in hist]
    return out


def test_agree_with_n():
    a, b = ann("a", "xyz"), ann("b", "xyz")
    assert agree_with_n([a, b]) == {"a": [0.0, 1.0], "b": [0.0, 1.0]}
    odd = agree_with_n([a, b, ann("c", "zxy")])
    assert odd["c"] == [1.0, 0.0, 0.0]
    rng = random.Random(3)
    seven = [ann(f"u{i}", rng.choices("ABCDE", k=25)) for i in range(7)]
    assert agree_with_n(seven) == brute_agree(seven)


def test_majority_label():
    m = majority_label([ann("a", "xxa"), ann("b", "xyb"), ann("c", "xyc")])
    assert m.labels == {"i0": "x", "i1": "y", "i2": NONE_LABEL}
    assert m.ties == frozenset({"i2"})


def test_io(tmp_path):
    (tmp_path / "u1.csv").write_text("item_id,label\np1,views\np2,\n")
    s = AnnotationSet.load_csv(tmp_path / "u1.csv")
    assert s.annotator_id == "u1" and s.labels == {"p1": "views", "p2": NONE_LABEL}
    (tmp_path / "g.json").write_text('{"p1": ["a", "b"]}')
    assert load_gold(tmp_path / "g.json") == {"p1": {"a", "b"}}
    (tmp_path / "bad.json").write_text('{"p1": []}')
    with pytest.raises(EvaluationError):
        load_gold(tmp_path / "bad.json")


def test_reports():
    sets = [ann("a", "xxyz"), ann("b", "xyyz"), ann("c", "xxyy")]
    m, items, cats = rating_matrix(sets)
    assert m.sum(axis=1).tolist() == [3] * 4 and cats == ["x", "y", "z"]
    gold = {"i0": {"a"}, "i1": {"a", "b"}}
    rep = classifier_report({"one": {"i0": {"a"}, "i1": {"a"}}, "two": gold}, gold)
    assert rep["scores"]["two"]["f_measure"] == 1.0
    assert "one vs two" in rep["mcnemar"]
    corr = label_correctness({"i0": {"a"}}, {"i0": {"b"}})
    assert corr == {("i0", "a"): False, ("i0", "b"): False}

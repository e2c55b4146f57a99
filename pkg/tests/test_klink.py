import math
import random

from hypothesis import given, settings, strategies as st
import pytest

from litmap.corpus import Corpus, Paper, TermIndex, build_index
from litmap.klink import (ConstraintBook, KlinkError, MetricParams, cosine_context, filter_topics,
                          get_candidates, hr_metric, infer_relationship, merge_keywords, remove_loops,
                          run_klink, tr_metric, transitive_reduction, year_weight)
from litmap.synthetic import planted_hierarchy
from litmap.taxonomy import (BROADER, EQUIVALENT, MUST_BROADER, MUST_UNRELATED, Constraint, Relation,
                             find_cycle)

from test_strings import reference_distance


def oracle_hr(docs, x, y):
    """Subsumption score straight from the document sets."""
    with_x = [d for d in docs if x in d]
    with_y = [d for d in docs if y in d]
    both = [d for d in with_x if y in d]
    vocab = sorted({t for d in docs for t in d} - {x, y})
    vx = [sum(t in d for d in with_x) for t in vocab]
    vy = [sum(t in d for d in with_y) for t in vocab]
    nx, ny = math.sqrt(sum(v * v for v in vx)), math.sqrt(sum(v * v for v in vy))
    cos = sum(a * b for a, b in zip(vx, vy)) / (nx * ny) if nx and ny else 0.0
    lev = reference_distance(x, y) / max(len(x), len(y))
    return (len(both) / len(with_x) - len(both) / len(with_y)) * cos * lev


def index_of(docs, years=None):
    years = years or [2010] * len(docs)
    return TermIndex({f"d{i}": frozenset(d) for i, d in enumerate(docs)},
                     {f"d{i}": y for i, y in enumerate(years)})


DOCS = [{"ontology", "semantic web", "rdf"}, {"ontology", "semantic web", "owl"},
        {"semantic web", "rdf"}, {"semantic web", "owl", "linked data"},
        {"ontology", "rdf", "owl"}, {"linked data", "rdf"}]

terms_st = st.sampled_from(["alpha", "beta", "gamma", "delta", "epsilon", "zeta"])
docs_st = st.lists(st.sets(terms_st, min_size=1, max_size=4), min_size=2, max_size=15)


def test_hr_against_oracle():
    ix = index_of(DOCS)
    for x in ("ontology", "rdf", "owl"):
        assert hr_metric(ix, x, "semantic web") == pytest.approx(oracle_hr(DOCS, x, "semantic web"), abs=1e-12)


@settings(max_examples=60)
@given(docs_st)
def test_hr_antisymmetric_and_matches_oracle(docs):
    ix = index_of(docs)
    terms = ix.terms
    for x in terms:
        for y in terms:
            if x != y:
                assert hr_metric(ix, x, y) + hr_metric(ix, y, x) == pytest.approx(0.0, abs=1e-12)
                assert hr_metric(ix, x, y) == pytest.approx(oracle_hr(docs, x, y), abs=1e-12)


@settings(max_examples=40)
@given(docs_st)
def test_single_year_tr_equals_hr(docs):
    ix = index_of(docs)
    for x in ix.terms:
        for y in ix.terms:
            if x != y:
                assert tr_metric(ix, x, y) == hr_metric(ix, x, y)


def test_year_weight():
    assert year_weight(2010, 2010, 2.0) == 1.0
    assert year_weight(2011, 2010, 2.0) == 0.25
    assert year_weight(2009, 2010, 2.0) == 0.0


def test_tr_favours_early_years():
    # in its debut year "ontology" always comes with "semantic web", later less so
    docs = [{"ontology", "semantic web", "rdf"}] * 4 + [{"semantic web", "rdf"}] * 4 \
        + [{"ontology", "rdf"}] * 4 + [{"ontology", "semantic web", "rdf"}] * 1
    years = [2000] * 8 + [2001] * 5
    ix = index_of(docs, years)
    hr, tr = hr_metric(ix, "ontology", "semantic web"), tr_metric(ix, "ontology", "semantic web")
    assert tr > hr
    # frozen from the weighted counts: I(x,y)=4+0.25, I(x,x)=4+1.25, I(y,y)=8+0.25
    c = cosine_context(ix, "ontology", "semantic web")
    n = reference_distance("ontology", "semantic web") / 12
    assert tr == pytest.approx((4.25 / 5.25 - 4.25 / 8.25) * c * n, abs=1e-12)


def test_cosine_ignores_the_pair():
    ix = index_of([{"aa", "bb"}, {"aa", "cc"}, {"bb", "cc"}])
    assert cosine_context(ix, "aa", "bb") == pytest.approx(1.0)


def test_candidates_ranked():
    docs = [{"kk", "aa"}] * 5 + [{"kk", "bb"}] * 3 + [{"kk", "cc"}] * 3 + [{"kk", "dd"}] * 2
    ix = index_of(docs)
    assert get_candidates(ix, "kk") == ["aa", "bb", "cc"]
    assert get_candidates(ix, "kk", MetricParams(candidate_top_n=1)) == ["aa"]


def test_infer_relationship_and_constraints():
    h = planted_hierarchy(400, seed=3)
    ix = build_index(h.corpus)
    child, parent = sorted(h.edges)[0]
    assert infer_relationship(ix, child, parent).kind == BROADER
    assert infer_relationship(ix, parent, child) is None
    forbid = [Constraint(child, MUST_UNRELATED, parent)]
    assert infer_relationship(ix, child, parent, constraints=forbid) is None
    forced = [Constraint(parent, MUST_BROADER, child)]
    assert infer_relationship(ix, child, parent, constraints=forced) == Relation(parent, BROADER, child, 0.0)


def test_equivalence_by_label_and_context():
    docs = [{"web service", "soap", "wsdl"}, {"web services", "soap", "wsdl"}] * 3
    ix = index_of(docs)
    r = infer_relationship(ix, "web service", "web services")
    assert r is not None and r.kind == EQUIVALENT


def random_graph(rng, n=20, m=45):
    rels = set()
    for _ in range(m):
        a, b = rng.sample(range(n), 2)
        rels.add(Relation(f"n{a:02d}", BROADER, f"n{b:02d}", round(rng.random(), 3)))
    return rels


def test_remove_loops_random_graphs():
    rng = random.Random(5)
    for _ in range(20):
        rels = random_graph(rng)
        out = remove_loops(rels)
        assert find_cycle([(r.source, r.target) for r in out]) is None
        assert out <= rels


def test_remove_loops_lightest_and_protected():
    rels = {Relation("aa", BROADER, "bb", 0.5), Relation("bb", BROADER, "cc", 0.3),
            Relation("cc", BROADER, "aa", 0.4)}
    assert Relation("bb", BROADER, "cc", 0.3) not in remove_loops(rels)
    kept = remove_loops(rels, protected={("bb", "cc")})
    assert Relation("bb", BROADER, "cc", 0.3) in kept
    assert Relation("cc", BROADER, "aa", 0.4) not in kept
    with pytest.raises(KlinkError):
        remove_loops(rels, protected={("aa", "bb"), ("bb", "cc"), ("cc", "aa")})


def test_merge_picks_most_frequent():
    docs = [{"product line"}] * 3 + [{"product lines"}] * 5 + [{"software product lines"}]
    ix = index_of(docs)
    rels = {Relation("product line", EQUIVALENT, "product lines"),
            Relation("product lines", EQUIVALENT, "software product lines")}
    rep = merge_keywords(ix, rels)
    assert set(rep.values()) == {"product lines"}
    book = ConstraintBook([Constraint("product line", MUST_UNRELATED, "software product lines")])
    rep = merge_keywords(ix, rels, constraints=book)
    assert rep["product line"] != rep["software product lines"]


def test_filter_topics():
    docs = [{"common", "rare"}] + [{"common", "mid"}] * 5 + [{"other"}] * 20
    ix = index_of(docs)
    assert filter_topics(ix, ["common", "mid", "rare"]) == ["mid"]
    assert filter_topics(ix, ["common", "mid", "rare"], keep=["rare"]) == ["mid", "rare"]
    assert filter_topics(ix, ["mid"], stoplist=["MID"]) == []


def test_transitive_reduction():
    rels = {Relation("aa", BROADER, "bb"), Relation("bb", BROADER, "cc"), Relation("aa", BROADER, "cc")}
    assert Relation("aa", BROADER, "cc") not in transitive_reduction(rels)
    assert Relation("aa", BROADER, "cc") in transitive_reduction(rels, protected={("aa", "cc")})


def test_params_validated():
    with pytest.raises(KlinkError):
        MetricParams(threshold=0)
    with pytest.raises(KlinkError):
        MetricParams(merge_label_sim=2)
    assert "workers" not in MetricParams().snapshot()


def test_run_klink_errors():
    ix = build_index(planted_hierarchy(200, seed=1).corpus)
    with pytest.raises(KlinkError):
        run_klink(ix, [])
    with pytest.raises(KlinkError):
        run_klink(ix, ["not a keyword"])


def test_run_klink_deterministic_across_workers():
    h = planted_hierarchy(600, seed=2)
    ix = build_index(h.corpus)
    a = run_klink(ix, h.roots)
    b = run_klink(ix, h.roots, MetricParams(workers=4))
    assert a == b


def test_run_klink_honours_constraints():
    h = planted_hierarchy(600, seed=2)
    ix = build_index(h.corpus)
    child, parent = sorted(h.edges)[0]
    other = sorted(set(h.roots) - {h.ancestors(child)[-1]})[0]
    cons = [Constraint(child, MUST_UNRELATED, parent), Constraint(child, MUST_BROADER, other)]
    tax = run_klink(ix, h.roots, constraints=cons)
    assert parent not in tax.parents(child)
    assert other in tax.ancestors(child)

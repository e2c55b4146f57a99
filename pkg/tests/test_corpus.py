import json

from hypothesis import given, strategies as st
import pytest

from litmap.corpus import (KEYWORDS_TITLE_ABSTRACT, Corpus, CorpusError, Paper, build_index,
                           ingest_corpus, normalize_term, paper_text)


def paper(pid, year=2010, keywords=(), title="t", abstract=""):
    return Paper(pid, title, year, abstract, tuple(keywords))


def test_normalize_term():
    assert normalize_term("Software-Architecture") == "software architecture"
    assert normalize_term("  SOA ") == "soa"
    assert normalize_term("Architect's  view") == "architects view"
    assert normalize_term("model_driven/ARCH") == "model driven arch"


@given(st.text())
def test_normalize_idempotent(s):
    once = normalize_term(s)
    assert normalize_term(once) == once


def test_fields_do_not_join():
    p = Paper("1", "model", 2010, "driven", ("x",))
    assert "model driven" not in paper_text(p)


def test_ingest_jsonl_skips_bad_rows(tmp_path):
    f = tmp_path / "c.jsonl"
    rows = [
        {"id": "a", "title": "A", "year": 2010, "keywords": ["X", "Y"]},
        {"id": "b", "title": "B"},
        {"id": "c", "title": "C", "year": 1800},
        {"id": "d", "title": "D", "year": "2011", "citations": 4},
    ]
    f.write_text("\n".join(json.dumps(r) for r in rows) + "\nnot json\n")
    c = ingest_corpus(f)
    assert [p.id for p in c] == ["a", "d"]
    assert c.skipped == 3
    assert c["d"].citation_count == 4


def test_ingest_csv(tmp_path):
    f = tmp_path / "c.csv"
    f.write_text("id,title,year,keywords,authors\n1,T,2009,a; b ;c,X;Y\n")
    c = ingest_corpus(f, "csv")
    assert c["1"].keywords == ("a", "b", "c")
    assert c["1"].authors == ("X", "Y")


def test_duplicate_id_is_fatal(tmp_path):
    f = tmp_path / "c.jsonl"
    f.write_text('{"id": "a", "title": "A", "year": 2010}\n' * 2)
    with pytest.raises(CorpusError, match="duplicate"):
        ingest_corpus(f)


def test_missing_file_and_format(tmp_path):
    with pytest.raises(CorpusError):
        ingest_corpus(tmp_path / "none.jsonl")
    with pytest.raises(CorpusError):
        ingest_corpus(tmp_path / "none.jsonl", "xml")


def test_jsonl_round_trip(tmp_path):
    c = Corpus([paper("1", keywords=["a"]), paper("2", 2011)])
    c.write_jsonl(tmp_path / "out.jsonl")
    again = ingest_corpus(tmp_path / "out.jsonl")
    assert again.papers == c.papers


def test_index_counts():
    c = Corpus([paper("1", 2010, ["Aa", "Bb"]), paper("2", 2011, ["aa", "cc"]), paper("3", 2011, ["bb", "x"])])
    ix = build_index(c)
    assert ix.df("aa") == 2
    assert ix.count("aa", "bb") == 1
    assert ix.count("aa", "aa") == 2
    assert ix.count_by_year("aa", "aa") == {2010: 1, 2011: 1}
    assert ix.term_debut["cc"] == 2011
    assert ix.context_vector("aa") == {"bb": 1, "cc": 1}
    assert "x" not in ix  # shorter than the minimum term length
    with pytest.raises(KeyError):
        ix.df("zzz")


def test_index_from_text():
    c = Corpus([paper("1", keywords=["web services"]),
                paper("2", title="Composing web services", keywords=["soa"])])
    ix = build_index(c, KEYWORDS_TITLE_ABSTRACT)
    assert ix.df("web services") == 2


def test_empty_corpus_rejected():
    with pytest.raises(CorpusError):
        build_index(Corpus())


def test_merged_postings_are_unions():
    c = Corpus([paper("1", keywords=["xy"]), paper("2", keywords=["xyz"]), paper("3", keywords=["xy", "xyz"])])
    m = build_index(c).merged({"xyz": "xy"})
    assert m.df("xy") == 3
    assert "xyz" not in m


@given(st.lists(st.sets(st.sampled_from(["aa", "bb", "cc", "dd", "ee"]), max_size=4), min_size=1, max_size=12), st.integers(1, 4))
def test_index_independent_of_workers(docs, workers):
    c = Corpus([paper(str(i), 2000 + i % 3, sorted(d)) for i, d in enumerate(docs)])
    assert build_index(c).statistics() == build_index(c, workers=workers).statistics()

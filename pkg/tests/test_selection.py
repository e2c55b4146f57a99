from hypothesis import given, strategies as st
import pytest

from litmap.corpus import Corpus, Paper
from litmap.selection import (QueryError, QuerySyntaxError, StudySet, contains, parse_query,
                              select_studies, venue_clause)

CORPUS = Corpus([
    Paper("p1", "Design decisions in practice", 2008, "We study architectural knowledge.", (),
          "Journal of Systems and Software"),
    Paper("p2", "ATAM revisited", 2011, "", ("architecture evaluation",), "ECSA"),
    Paper("p3", "Testing web apps", 2012, "Unit testing of services.", (), "ICSE"),
    Paper("p4", "Views", 2004, "Architecture views and viewpoints.", (), "WICSA"),
])


def test_parse_and_print():
    q = parse_query('term("design decisions") AND NOT (year_in(2010, 2005) OR venue_in("ICSE"))')
    assert str(q) == str(parse_query(str(q)))


@pytest.mark.parametrize("bad, pos", [("term(", 5), ('term("a") AND', 13), ('foo("a")', 0),
                                      ('term("a") $', 10), ('year_in("a", 1)', 0)])
def test_syntax_errors_carry_position(bad, pos):
    with pytest.raises(QuerySyntaxError) as err:
        parse_query(bad)
    assert err.value.position == pos


def test_select_by_topic(sa_tax):
    s = select_studies(CORPUS, sa_tax, 'topic("architecture analysis")', "dsa")
    assert s.paper_ids == ["p2"]
    assert s.taxonomy_version == sa_tax.version
    s = select_studies(CORPUS, sa_tax, 'topic("software architecture") AND year_in(2005, 2013)')
    assert s.paper_ids == ["p1", "p2"]


def test_select_by_venue_and_year():
    q = venue_clause(["ICSE", "WICSA"]) + " AND year_in(2010, 2013)"
    assert select_studies(CORPUS, None, q).paper_ids == ["p3"]


def test_unknown_topic():
    with pytest.raises(QueryError):
        select_studies(CORPUS, None, 'topic("views")')


def test_word_boundary_option():
    assert contains("unit testing", "test")
    assert not contains("unit testing", "test", word_boundary=True)
    assert contains("unit testing", "unit testing", word_boundary=True)


def test_study_set_round_trip(tmp_path):
    s = select_studies(CORPUS, None, 'term("views")', "v")
    s.save(tmp_path / "s.json")
    assert StudySet.load(tmp_path / "s.json") == s


@given(st.sampled_from(['term("views")', 'year_in(2008, 2011)', 'venue_in("ICSE", "ECSA")']),
       st.sampled_from(['term("testing")', 'year_in(2000, 2009)']))
def test_boolean_algebra(a, b):
    ids = lambda q: set(select_studies(CORPUS, None, q).paper_ids)
    everything = {p.id for p in CORPUS}
    assert ids(f"{a} AND {b}") == ids(a) & ids(b)
    assert ids(f"{a} OR {b}") == ids(a) | ids(b)
    assert ids(f"NOT {a}") == everything - ids(a)

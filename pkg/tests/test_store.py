from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontocrawl.store import (
    DomainMismatchError,
    LexiconError,
    MalformedTripleError,
    OntologyGraph,
    OntologyStore,
    RelationKind,
    StoreFormatError,
    SynonymLexicon,
    Triple,
    load_store,
    save_store,
)

from conftest import make_store

TERMS = ["book", "author", "title", "price", "paperback", "novel", "twain", "verne", "mark twain"]
PREDICATES = [k.value for k in RelationKind] + ["written-by", "HasValue", "has_attribute"]

triples_st = st.lists(
    st.tuples(st.sampled_from(TERMS), st.sampled_from(PREDICATES), st.sampled_from(TERMS)).filter(
        lambda t: t[0] != t[2]
    ),
    max_size=25,
)
edges_st = st.lists(
    st.tuples(st.sampled_from(TERMS), st.sampled_from(list(RelationKind)), st.sampled_from(TERMS)).filter(
        lambda e: e[0] != e[2]
    ),
    max_size=15,
)


def closure_holds(store: OntologyStore) -> bool:
    stored = {t.as_tuple() for t in store.triples()}
    for s, p, o in stored:
        kind = RelationKind.parse(p)
        if kind is not None and kind.partner is not None and (o, kind.partner.value, s) not in stored:
            return False
    return True


# -- insert_triple


def test_insert_is_set_semantics():
    store = OntologyStore("books")
    t = Triple("book", "has-attribute", "author")
    assert store.insert_triple(t) is True
    assert store.insert_triple(t) is False
    assert len(store) == 1


def test_insert_then_read():
    store = make_store([("book", "has-attribute", "author"), ("author", "has-value", "twain")])
    assert store.has_attribute("author")
    assert store.query_values("author") == ["twain"]


@pytest.mark.parametrize(
    "fields",
    [("", "has-attribute", "author"), ("book", "  ", "author"), ("bo\tok", "has-value", "x"), ("a", "b", "c\nd")],
)
def test_malformed_triple_rejected(fields):
    with pytest.raises(MalformedTripleError):
        Triple(*fields)


def test_self_loop_relation_rejected():
    with pytest.raises(MalformedTripleError):
        OntologyStore().insert_triple(Triple("book", "parent", "book"))


def test_predicate_spellings_are_canonical():
    store = make_store([("Book", "HasAttribute", "Authors"), ("author", "has_value", "Mark  Twain")])
    assert store.triples() == [
        Triple("author", "has-value", "mark twain"),
        Triple("book", "has-attribute", "author"),
    ]


# -- has_attribute / query_values


def test_has_attribute(bookshop_store):
    assert bookshop_store.has_attribute("author")
    assert not OntologyStore().has_attribute("author")
    # synonymy is not attribute membership
    assert not bookshop_store.has_attribute("writer")


def test_query_values_sorted_and_order_independent():
    a = make_store([("author", "has-value", "verne"), ("author", "has-value", "twain")])
    b = make_store([("author", "has-value", "twain"), ("author", "has-value", "verne")])
    assert a.query_values("author") == b.query_values("author") == ["twain", "verne"]
    assert a.query_values("publisher") == []


def test_unknown_predicate_resolution():
    store = make_store(
        [("book", "written-by", "author"), ("author", "has-value", "twain"), ("book", "published-in", "1876")]
    )
    assert store.has_attribute("author")
    assert store.query_values("book") == ["1876"]


# -- synonyms and relations


def test_synonyms_from_lexicon(lexicon):
    store = OntologyStore("books", lexicon)
    assert store.synonyms_of("writer") == {"author"}
    assert store.synonyms_of("rate") == {"price", "cost"}
    assert store.synonyms_of("isbn") == set()


def test_synonyms_include_graph_edges():
    store = make_store([("novel", "synonym", "fiction")])
    assert store.synonyms_of("fiction") == {"novel"}
    assert store.synonyms_of("novel") == {"fiction"}


def test_related_attributes():
    store = make_store([("paperback", "parent", "book"), ("hardcover", "sibling", "paperback")])
    assert store.related_attributes("paperback") == {
        ("book", RelationKind.PARENT),
        ("hardcover", RelationKind.SIBLING),
    }
    assert store.related_attributes("book") == {("paperback", RelationKind.CHILD)}
    store.insert_triple(Triple("isolated", "has-value", "x"))
    assert store.related_attributes("x") == set()


# -- merge_graph


def book_graph(domain="books") -> OntologyGraph:
    g = OntologyGraph(domain)
    g.add_edge("book", RelationKind.HAS_ATTRIBUTE, "author")
    g.add_edge("author", RelationKind.HAS_VALUE, "twain")
    g.add_edge("paperback", RelationKind.PARENT, "book")
    return g


def test_merge_into_empty_store():
    g = book_graph()
    stats = OntologyStore("books").merge_graph(g)
    assert stats.triples_added == len(g.edges) == 4
    assert stats.triples_duplicate == 0
    assert stats.nodes_added == 4


def test_merge_is_idempotent():
    store = OntologyStore("books")
    store.merge_graph(book_graph())
    again = store.merge_graph(book_graph())
    assert again.triples_added == 0
    assert again.triples_duplicate == 4


def test_merge_domain_guard():
    store = OntologyStore("books")
    with pytest.raises(DomainMismatchError):
        store.merge_graph(book_graph("airline"))


def test_store_without_domain_adopts_graph_domain():
    store = OntologyStore()
    store.merge_graph(book_graph())
    assert store.domain == "books"


# -- persistence


def test_round_trip(tmp_path):
    store = make_store([("book", "has-attribute", "author"), ("author", "has-value", "twain"), ("a", "parent", "b")])
    path = tmp_path / "s.tsv"
    save_store(store, path)
    loaded = load_store(path)
    assert loaded.triples() == store.triples()
    assert loaded.domain == "books"


def test_load_reports_bad_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("# header\n@domain\tbooks\nbook\thas-attribute\tauthor\nbook\tauthor\n")
    with pytest.raises(StoreFormatError) as err:
        load_store(path)
    assert err.value.lineno == 4


def test_load_empty_file(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("")
    assert len(load_store(path)) == 0


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_store(tmp_path / "nope.tsv")


# -- lexicon


def test_lexicon_rejects_overlapping_groups():
    with pytest.raises(LexiconError):
        SynonymLexicon([["author", "writer"], ["writer", "novelist"]])


def test_lexicon_rejects_singletons():
    with pytest.raises(LexiconError):
        SynonymLexicon.parse("author\n")


def test_lexicon_env_override(tmp_path, monkeypatch):
    path = tmp_path / "lex.txt"
    path.write_text("# custom\nauthor, scribe\n")
    monkeypatch.setenv("ONTOCRAWL_LEXICON", str(path))
    assert SynonymLexicon.default().group_of("scribe") == {"author", "scribe"}


def test_bundled_lexicon_pairs(lexicon):
    for a, b in [("author", "writer"), ("title", "subject"), ("price", "rate")]:
        assert b in lexicon.group_of(a)


# -- properties


@settings(max_examples=100, deadline=None)
@given(triples_st, st.randoms(use_true_random=False))
def test_set_semantics_independent_of_order(triples, rnd):
    shuffled = list(triples)
    rnd.shuffle(shuffled)
    a, b = make_store(triples), make_store(shuffled + triples)
    assert a.triples() == b.triples()
    assert closure_holds(a)


@settings(max_examples=100, deadline=None)
@given(triples_st)
def test_persistence_round_trip_property(tmp_path_factory, triples):
    store = make_store(triples)
    path = tmp_path_factory.mktemp("rt") / "store.tsv"
    store.save(path)
    assert set(OntologyStore.load(path).triples()) == set(store.triples())


@settings(max_examples=100, deadline=None)
@given(edges_st, edges_st)
def test_merge_idempotent_and_commutative(edges_a, edges_b):
    ga, gb = OntologyGraph.from_edges("books", edges_a), OntologyGraph.from_edges("books", edges_b)
    ab, ba = OntologyStore("books"), OntologyStore("books")
    ab.merge_graph(ga)
    ab.merge_graph(gb)
    ba.merge_graph(gb)
    ba.merge_graph(ga)
    assert ab.triples() == ba.triples()
    assert ab.merge_graph(ga).triples_added == 0
    assert closure_holds(ab)
    stats = OntologyStore("books").merge_graph(ga)
    assert stats.triples_added + stats.triples_duplicate == len(ga.edges)

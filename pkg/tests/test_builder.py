import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontocrawl.builder import (
    BuilderError,
    Frontier,
    OntologyBuilder,
    build_from_seeds,
    extract_links,
    extract_triples,
    graph_from_triples,
    parse_triple_blocks,
)
from ontocrawl.fetch import MalformedURLError, PageDocument
from ontocrawl.store import RelationKind, Triple, resolve_edges

from conftest import BOOKS_SEEDS, CountingFetcher, DictFetcher


def test_frontier_is_fifo_and_deduplicates():
    f = Frontier()
    assert f.enqueue("sim://a/1")
    assert f.enqueue("sim://a/2")
    assert not f.enqueue("sim://a/1")
    assert len(f) == 2
    assert [f.dequeue(), f.dequeue()] == ["sim://a/1", "sim://a/2"]
    # dequeued URLs stay seen
    assert not f.enqueue("sim://a/1")


@pytest.mark.parametrize("url", ["catalog", "/about", "", "www.example.com/x"])
def test_frontier_rejects_relative_urls(url):
    with pytest.raises(MalformedURLError):
        Frontier().enqueue(url)


def test_extract_triples_from_annotation_block():
    body = '<p>x</p><script type="text/x-triples">\nbook|has-attribute|author\nauthor|has-value|twain\n</script>'
    triples = extract_triples(PageDocument("sim://s/p", 200, body))
    assert triples == [Triple("book", "has-attribute", "author"), Triple("author", "has-value", "twain")]


def test_extract_triples_skips_malformed_lines(caplog):
    body = '<script type="text/x-triples">a|b\nbook|has-attribute|author\n|x|y</script>'
    parsed = parse_triple_blocks(body)
    assert parsed.triples == [Triple("book", "has-attribute", "author")]
    assert len(parsed.warnings) == 2


def test_extract_triples_ignores_other_scripts():
    body = "<script>var a = 'x|y|z';</script>"
    assert extract_triples(PageDocument("sim://s/p", 200, body)) == []


def test_extract_triples_refuses_error_page():
    with pytest.raises(ValueError):
        extract_triples(PageDocument("sim://s/p", 404, ""))


def test_extract_links_resolves_and_filters():
    body = '<a href="b">1</a><a href="/c">2</a><a href="sim://other/x">3</a><a href="b">dup</a><a href="#top">t</a>'
    page = PageDocument("sim://s/a", 200, body)
    assert extract_links(page) == ["sim://s/b", "sim://s/c"]
    assert extract_links(page, same_site=False) == ["sim://s/b", "sim://s/c", "sim://other/x"]


def test_graph_from_triples_closes_inverses_and_resolves_unknowns():
    g = graph_from_triples(
        [
            Triple("paperback", "parent", "book"),
            Triple("book", "written-by", "author"),
            Triple("author", "has-value", "twain"),
            Triple("book", "year", "1876"),
        ],
        "books",
    )
    assert ("book", RelationKind.CHILD, "paperback") in g.edges
    assert ("book", RelationKind.HAS_ATTRIBUTE, "author") in g.edges
    assert ("book", RelationKind.HAS_VALUE, "1876") in g.edges


def test_build_budget_one_fetches_only_seed(books_web):
    fetcher = CountingFetcher(books_web)
    builder = OntologyBuilder(fetcher, "books", page_budget=1)
    graph = builder.build(BOOKS_SEEDS)
    assert fetcher.calls == BOOKS_SEEDS
    assert ("book", RelationKind.HAS_ATTRIBUTE, "author") in graph.edges


def test_build_all_seeds_failing(books_web):
    with pytest.raises(BuilderError) as err:
        build_from_seeds(["sim://books1/missing", "sim://nowhere/index"], books_web, "books")
    assert set(err.value.failures) == {"sim://books1/missing", "sim://nowhere/index"}


def test_build_tolerates_one_failing_page(books_web):
    fetcher = CountingFetcher(books_web, fail={"sim://books1/catalog"})
    builder = OntologyBuilder(fetcher, "books")
    graph = builder.build(BOOKS_SEEDS)
    assert "sim://books1/catalog" in builder.failures
    assert graph.edges


def test_build_rejects_empty_seeds(books_web):
    with pytest.raises(ValueError):
        build_from_seeds([], books_web, "books")


def corpus_triples(web) -> set[Triple]:
    found = set()
    for site in web.sites.values():
        for body in site.pages.values():
            for block in re.findall(r'<script type="text/x-triples">(.*?)</script>', body, re.S):
                for line in block.strip().splitlines():
                    found.add(Triple(*[p.strip() for p in line.split("|")]))
    return found


def test_build_is_sound_against_corpus(books_web):
    graph = build_from_seeds(BOOKS_SEEDS, books_web, "books", page_budget=50)
    oracle = set(resolve_edges(corpus_triples(books_web)))
    assert set(graph.edges) - {(o, k.partner, s) for s, k, o in oracle if k.partner} <= oracle


@settings(max_examples=30, deadline=None)
@given(budget=st.integers(1, 12), concurrent=st.booleans(), buffer=st.integers(1, 4))
def test_budget_no_revisits_and_mode_equivalence(books_web, budget, concurrent, buffer):
    seq = CountingFetcher(books_web)
    g1 = OntologyBuilder(seq, "books", budget).build(BOOKS_SEEDS)
    other = CountingFetcher(books_web)
    g2 = OntologyBuilder(other, "books", budget, concurrent=concurrent, buffer_size=buffer).build(BOOKS_SEEDS)
    assert len(seq.calls) <= budget
    assert len(set(seq.calls)) == len(seq.calls)
    assert seq.calls == other.calls
    assert g1.edges == g2.edges


def test_build_is_deterministic(books_web):
    runs = [sorted(build_from_seeds(BOOKS_SEEDS, books_web, "books").triples()) for _ in range(3)]
    assert runs[0] == runs[1] == runs[2]


def test_link_cycle_terminates():
    pages = {"sim://c/a": '<a href="b">b</a>', "sim://c/b": '<a href="a">a</a>'}
    fetcher = CountingFetcher(DictFetcher(pages))
    builder = OntologyBuilder(fetcher, "x", 10)
    builder.build(["sim://c/a"])
    assert fetcher.calls == ["sim://c/a", "sim://c/b"]

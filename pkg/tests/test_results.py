import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontocrawl.results import (
    Classification,
    ClassifierConfig,
    ContractError,
    ResponsePage,
    assess_useful,
    classify_response,
    extract_new_triples,
    process_results,
    rank_pages,
    report_lines,
    value_overlap,
)

from conftest import make_store


def block(*triples):
    return '<script type="text/x-triples">\n' + "\n".join("|".join(t) for t in triples) + "\n</script>"


def page(body, status=200, url="sim://s/r"):
    return ResponsePage(url, status, body)


RECORD = "<li>mark twain; tom sawyer</li>" + block(("author", "has-value", "mark twain"), ("title", "has-value", "tom sawyer"))


@pytest.fixture
def store():
    return make_store(
        [
            ("book", "has-attribute", "author"),
            ("book", "has-attribute", "title"),
            ("author", "has-value", "mark twain"),
            ("title", "has-value", "tom sawyer"),
            ("title", "has-value", "emma"),
        ]
    )


def test_classify_http_error():
    assert classify_response(page(RECORD, 500)) is Classification.ERROR


def test_classify_marker_case_insensitive():
    assert classify_response(page("<p>No Results Found</p>" + RECORD)) is Classification.ERROR


def test_classify_needs_records_unless_disabled():
    assert classify_response(page("<p>hello</p>")) is Classification.ERROR
    assert classify_response(page("<p>hello</p>"), ClassifierConfig(require_records=False)) is Classification.CORRECT
    assert classify_response(page(RECORD)) is Classification.CORRECT


def test_value_overlap_whole_words():
    assert value_overlap(page("<p>emmanuel</p>"), ["emma"]) == 0
    assert value_overlap(page("<p>Emma, by</p>"), ["emma"]) == 1


def test_assess_useful(store):
    p = page(RECORD)
    p.classification = Classification.CORRECT
    assert assess_useful(p, store)
    assert not assess_useful(p, store, min_overlap=3)
    with pytest.raises(ContractError):
        assess_useful(page(RECORD), store)


def test_rank_scores_and_ties(store):
    pages = [page(body, url=url) for body, url in [("<p>emma</p>", "sim://s/b"), (RECORD, "sim://s/z"), ("<p>emma</p>", "sim://s/a")]]
    for p in pages:
        p.classification = Classification.CORRECT
    ranked = rank_pages(pages, store)
    assert [(r.url, r.score) for r in ranked] == [("sim://s/z", 2 / 3), ("sim://s/a", 0.5), ("sim://s/b", 0.5)]
    assert rank_pages([], store) == []
    with pytest.raises(ContractError):
        rank_pages([page(RECORD)], store)


def test_extract_new_triples(store):
    p = page(RECORD + block(("author", "has-value", "jules verne")))
    p.classification = Classification.CORRECT
    graph = extract_new_triples(p, "books")
    assert len(graph.edges) == 3
    with pytest.raises(ContractError):
        extract_new_triples(page(RECORD), "books")


def test_process_results_partition_and_idempotence(store):
    pages = [page(RECORD, url="sim://s/1"), page("<p>No matches</p>", url="sim://s/2"), page(RECORD, 404, "sim://s/3"),
             page(block(("author", "has-value", "jules verne")), url="sim://s/4")]
    before = len(store)
    ranking, stats = process_results(pages, store)
    assert [p.classification for p in pages] == [Classification.CORRECT, Classification.ERROR, Classification.ERROR, Classification.CORRECT]
    assert [p.useful for p in pages] == [True, False, False, False]
    assert len(ranking) == 2
    assert stats.triples_added == 1 and len(store) == before + 1
    _, again = process_results(pages, store)
    assert again.triples_added == 0
    lines = report_lines(pages, ranking)
    assert lines[0] == "Correct\t1\t0.6667\tsim://s/1"
    assert lines[1].startswith("Error\t0\t0.0000")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([200, 404, 500]), st.sampled_from([RECORD, "<p>error</p>", "<p>x</p>", block(("a", "has-value", "b"))])), max_size=12))
def test_every_page_classified_once(specs):
    store = make_store([("author", "has-value", "mark twain"), ("title", "has-value", "tom sawyer")])
    pages = [page(body, status, f"sim://s/{i}") for i, (status, body) in enumerate(specs)]
    ranking, _ = process_results(pages, store)
    correct = [p for p in pages if p.classification is Classification.CORRECT]
    errors = [p for p in pages if p.classification is Classification.ERROR]
    assert len(correct) + len(errors) == len(pages)
    assert all(p.classification is Classification.CORRECT for p in pages if p.useful)
    assert len(ranking) == len(correct)

from __future__ import annotations

from pathlib import Path

import pytest

from ontocrawl.fetch import FetchError, PageDocument
from ontocrawl.sim import bundled_corpus, load_corpus
from ontocrawl.store import OntologyStore, SynonymLexicon, Triple

BOOKS_SEEDS = ["sim://books1/index"]
AIRLINE_SEEDS = ["sim://air1/index"]


class CountingFetcher:
    """Records every call; optionally fails for some URLs."""

    def __init__(self, inner, fail: set[str] = frozenset()):
        self.inner = inner
        self.fail = set(fail)
        self.calls: list[str] = []

    def fetch(self, url, data=None):
        self.calls.append(url)
        if url in self.fail:
            raise FetchError(url, "connection refused")
        return self.inner.fetch(url, data)

    def search(self, keyword):
        return self.inner.search(keyword)


class DictFetcher:
    def __init__(self, pages: dict[str, str]):
        self.pages = pages

    def fetch(self, url, data=None):
        if url in self.pages:
            return PageDocument(url, 200, self.pages[url])
        return PageDocument(url, 404, "")


@pytest.fixture(scope="session")
def lexicon() -> SynonymLexicon:
    return SynonymLexicon.bundled()


@pytest.fixture(scope="session")
def books_manifest() -> Path:
    return bundled_corpus("books")


@pytest.fixture(scope="session")
def airline_manifest() -> Path:
    return bundled_corpus("airline")


@pytest.fixture(scope="session")
def books_web(books_manifest):
    return load_corpus(books_manifest)


@pytest.fixture(scope="session")
def airline_web(airline_manifest):
    return load_corpus(airline_manifest)


def make_store(triples, lexicon=None, domain="books") -> OntologyStore:
    store = OntologyStore(domain, lexicon)
    for t in triples:
        store.insert_triple(Triple(*t))
    return store


@pytest.fixture
def bookshop_store(lexicon) -> OntologyStore:
    """Book ontology with attributes author, title, price."""
    return make_store(
        [
            ("book", "has-attribute", "author"),
            ("book", "has-attribute", "title"),
            ("book", "has-attribute", "price"),
            ("author", "has-value", "twain"),
            ("author", "has-value", "verne"),
            ("title", "has-value", "tom sawyer"),
            ("price", "has-value", "10"),
        ],
        lexicon,
    )


def read_expected(manifest: Path) -> dict[str, str]:
    pairs = {}
    for line in (manifest.parent / "expected.txt").read_text().splitlines():
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            pairs[key] = value
    return pairs


def books_config(tmp_path, manifest, **overrides):
    from ontocrawl.coordinator import PipelineConfig

    options = dict(
        domain="books",
        store_path=tmp_path / "books.tsv",
        query="book search",
        seed_urls=list(BOOKS_SEEDS),
        corpus_path=manifest,
        query_budget_per_form=10,
    )
    options.update(overrides)
    return PipelineConfig(**options)

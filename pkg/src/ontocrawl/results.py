"""Response classification, usefulness, ranking and store enrichment."""

from __future__ import annotations

import html
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from ontocrawl.builder import graph_from_triples, parse_triple_blocks
from ontocrawl.fetch import PageDocument
from ontocrawl.store import MergeStats, OntologyGraph, OntologyStore
from ontocrawl.terms import fold_value

log = logging.getLogger(__name__)

DEFAULT_ERROR_MARKERS: tuple[str, ...] = ("no results found", "no matches", "error")
DEFAULT_MIN_OVERLAP = 2

_TAGS = re.compile(r"<[^>]+>")


class ContractError(ValueError):
    pass


class Classification(str, Enum):
    UNCLASSIFIED = "Unclassified"
    ERROR = "Error"
    CORRECT = "Correct"


@dataclass
class ResponsePage:
    url: str
    status: int
    body: str
    form_id: str = ""
    assignments: tuple[tuple[str, str], ...] = ()
    classification: Classification = Classification.UNCLASSIFIED
    useful: bool = False

    @classmethod
    def from_document(cls, doc: PageDocument, form_id: str = "", assignments=()) -> ResponsePage:
        return cls(doc.url, doc.status, doc.body, form_id, tuple(assignments))

    @property
    def provenance(self) -> tuple[str, tuple[tuple[str, str], ...]]:
        return (self.form_id, self.assignments)


@dataclass(frozen=True)
class RankedResult:
    page: ResponsePage = field(compare=False)
    url: str
    score: float


@dataclass
class ClassifierConfig:
    markers: tuple[str, ...] = DEFAULT_ERROR_MARKERS
    # Live pages seldom carry annotation blocks; only the simulator guarantees them.
    require_records: bool = True
    min_overlap: int = DEFAULT_MIN_OVERLAP


def count_records(body: str) -> int:
    return sum(1 for block in parse_triple_blocks(body).blocks if block)


def classify_response(page: ResponsePage, config: ClassifierConfig | None = None) -> Classification:
    config = config or ClassifierConfig()
    if page.status >= 400:
        return Classification.ERROR
    body = page.body.lower()
    if any(marker.lower() in body for marker in config.markers):
        return Classification.ERROR
    if config.require_records and count_records(page.body) == 0:
        return Classification.ERROR
    return Classification.CORRECT


def page_text(body: str) -> str:
    return fold_value(html.unescape(_TAGS.sub(" ", body)))


def value_overlap(page: ResponsePage, values: Iterable[str]) -> int:
    """Number of distinct store values occurring as whole words in the page."""
    text = page_text(page.body)
    hits = 0
    for value in set(values):
        if value and re.search(rf"(?<!\w){re.escape(value)}(?!\w)", text):
            hits += 1
    return hits


def assess_useful(page: ResponsePage, store: OntologyStore, min_overlap: int = DEFAULT_MIN_OVERLAP) -> bool:
    if page.classification is not Classification.CORRECT:
        raise ContractError(f"usefulness is only defined for Correct pages: {page.url}")
    return value_overlap(page, store.all_values()) >= min_overlap


def rank_pages(pages: Sequence[ResponsePage], store: OntologyStore) -> list[RankedResult]:
    values = store.all_values()
    ranked = []
    for page in pages:
        if page.classification is not Classification.CORRECT:
            raise ContractError(f"only Correct pages can be ranked: {page.url}")
        overlap = value_overlap(page, values)
        ranked.append(RankedResult(page, page.url, overlap / (overlap + 1)))
    return sorted(ranked, key=lambda r: (-r.score, r.url))


def extract_new_triples(page: ResponsePage, domain_label: str) -> OntologyGraph:
    if page.classification is not Classification.CORRECT:
        raise ContractError(f"triples are only extracted from Correct pages: {page.url}")
    parsed = parse_triple_blocks(page.body)
    for warning in parsed.warnings:
        log.warning("%s: %s", page.url, warning)
    return graph_from_triples(parsed.triples, domain_label)


def process_results(
    pages: Sequence[ResponsePage],
    store: OntologyStore,
    config: ClassifierConfig | None = None,
    *,
    enrich: bool = True,
) -> tuple[list[RankedResult], MergeStats]:
    """Classify, assess and rank ``pages``, then merge their triples into ``store``.

    Usefulness and ranking are judged against the store as it was before this
    batch is merged, so the outcome does not depend on page order.
    """
    config = config or ClassifierConfig()
    correct = []
    for page in pages:
        page.classification = classify_response(page, config)
        page.useful = False
        if page.classification is Classification.CORRECT:
            page.useful = assess_useful(page, store, config.min_overlap)
            correct.append(page)
    ranking = rank_pages(correct, store)
    stats = MergeStats()
    if enrich:
        domain = store.domain or ""
        for page in correct:
            graph = extract_new_triples(page, domain)
            if graph.edges:
                stats = stats + store.merge_graph(graph)
    return ranking, stats


def report_lines(pages: Sequence[ResponsePage], ranking: Sequence[RankedResult]) -> list[str]:
    """``<classification>\\t<useful 0|1>\\t<score>\\t<url>`` per page, in input order."""
    scores = {id(r.page): r.score for r in ranking}
    return [
        f"{page.classification.value}\t{int(page.useful)}\t{scores.get(id(page), 0.0):.4f}\t{page.url}"
        for page in pages
    ]

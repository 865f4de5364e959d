"""Ontology builder: frontier, downloader and annotation analyzer.

Pages carry their ontology as ``<script type="text/x-triples">`` blocks with
one ``subject|predicate|object`` line per triple. The builder crawls
same-site links breadth-first from the seeds under a page budget and folds
every extracted triple into one :class:`OntologyGraph`.
"""

from __future__ import annotations

import logging
import queue
import re
import threading
from collections import deque
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Callable, Iterable

from ontocrawl.channels import Channel, ChannelAborted, StageSignal
from ontocrawl.fetch import FetchError, Fetcher, PageDocument, host_of, require_absolute, resolve_url
from ontocrawl.store import MalformedTripleError, OntologyGraph, Triple, resolve_edges

log = logging.getLogger(__name__)

TRIPLE_BLOCK = re.compile(
    r"<script\b[^>]*\btype\s*=\s*[\"']?text/x-triples[\"']?[^>]*>(.*?)</script\s*>",
    re.IGNORECASE | re.DOTALL,
)

EventHook = Callable[[str, str, str], None]


class BuilderError(Exception):
    def __init__(self, failures: dict[str, str]):
        self.failures = failures
        detail = "; ".join(f"{url}: {reason}" for url, reason in failures.items())
        super().__init__(f"no seed could be fetched ({detail})")


class Frontier:
    """FIFO queue of URLs that never hands out the same URL twice."""

    def __init__(self) -> None:
        self.pending: deque[str] = deque()
        self.seen: set[str] = set()

    def enqueue(self, url: str) -> bool:
        require_absolute(url)
        if url in self.seen:
            return False
        self.seen.add(url)
        self.pending.append(url)
        return True

    def dequeue(self) -> str:
        return self.pending.popleft()

    def __len__(self) -> int:
        return len(self.pending)


@dataclass
class TripleParse:
    blocks: list[list[Triple]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def triples(self) -> list[Triple]:
        return [t for block in self.blocks for t in block]


def parse_triple_blocks(body: str) -> TripleParse:
    """Parse every annotation block; malformed lines are skipped with a warning."""
    result = TripleParse()
    for match in TRIPLE_BLOCK.finditer(body):
        block = []
        for line in match.group(1).splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [part.strip() for part in line.split("|")]
            if len(parts) != 3:
                result.warnings.append(f"expected 3 '|'-separated fields: {line!r}")
                continue
            try:
                block.append(Triple(*parts))
            except MalformedTripleError as exc:
                result.warnings.append(str(exc))
        result.blocks.append(block)
    return result


def extract_triples(page: PageDocument) -> list[Triple]:
    if not page.ok:
        raise ValueError(f"cannot extract triples from an error page ({page.status}) {page.url}")
    parsed = parse_triple_blocks(page.body)
    for warning in parsed.warnings:
        log.warning("%s: %s", page.url, warning)
    return parsed.triples


class _LinkParser(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            href = dict(attrs).get("href")
            if href:
                self.hrefs.append(href.strip())


def extract_links(page: PageDocument, same_site: bool = True) -> list[str]:
    """Absolute hyperlinks of ``page`` in document order, without duplicates."""
    parser = _LinkParser()
    parser.feed(page.body)
    parser.close()
    host = host_of(page.url)
    links: list[str] = []
    for href in parser.hrefs:
        if href.startswith(("javascript:", "mailto:", "#")):
            continue
        url = resolve_url(page.url, href)
        if same_site and host_of(url) != host:
            continue
        if url not in links:
            links.append(url)
    return links


def graph_from_triples(triples: Iterable[Triple], domain: str) -> OntologyGraph:
    return OntologyGraph.from_edges(domain, resolve_edges(triples))


@dataclass
class _Analysis:
    url: str
    triples: list[Triple]
    links: list[str]
    failure: str | None = None


def _download(fetcher: Fetcher, url: str) -> PageDocument | FetchError:
    try:
        return fetcher.fetch(url)
    except FetchError as exc:
        return exc


def _analyze(url: str, outcome: PageDocument | FetchError) -> _Analysis:
    if isinstance(outcome, FetchError):
        return _Analysis(url, [], [], outcome.reason)
    if not outcome.ok:
        return _Analysis(url, [], [], f"HTTP {outcome.status}")
    return _Analysis(url, extract_triples(outcome), extract_links(outcome))


class OntologyBuilder:
    """Manager, downloader and analyzer chained over bounded buffers.

    ``concurrent=False`` runs the same stage order in the calling thread.
    Both modes fetch the same URLs in the same order.
    """

    def __init__(
        self,
        fetcher: Fetcher,
        domain: str,
        page_budget: int = 50,
        *,
        concurrent: bool = False,
        buffer_size: int = 1,
        on_event: EventHook | None = None,
    ):
        if page_budget < 1:
            raise ValueError("page_budget must be >= 1")
        self.fetcher = fetcher
        self.domain = domain
        self.page_budget = page_budget
        self.concurrent = concurrent
        self.buffer_size = buffer_size
        self.on_event = on_event or (lambda stage, event, item: None)
        self.frontier = Frontier()
        self.pages_fetched = 0
        self.failures: dict[str, str] = {}
        self.warnings = 0

    def build(self, seeds: list[str]) -> OntologyGraph:
        if not seeds:
            raise ValueError("at least one seed URL is required")
        for seed in seeds:
            self.frontier.enqueue(seed)
            self.on_event("builder", StageSignal.BUILDER_O.value, seed)
        analyses = self._run_concurrent() if self.concurrent else self._run_sequential()
        triples: list[Triple] = []
        for analysis in analyses:
            if analysis.failure is not None:
                self.failures[analysis.url] = analysis.failure
            triples.extend(analysis.triples)
        if all(a.failure is not None for a in analyses):
            raise BuilderError({a.url: a.failure for a in analyses})
        graph = graph_from_triples(triples, self.domain)
        self.on_event("builder", StageSignal.BUILDER_S.value, self.domain)
        return graph

    def _accept(self, analysis: _Analysis) -> None:
        for link in analysis.links:
            self.frontier.enqueue(link)

    def _run_sequential(self) -> list[_Analysis]:
        analyses = []
        while self.frontier and self.pages_fetched < self.page_budget:
            url = self.frontier.dequeue()
            self.pages_fetched += 1
            self.on_event("builder", StageSignal.BUILDER_D.value, url)
            outcome = _download(self.fetcher, url)
            self.on_event("builder", StageSignal.BUILDER_A.value, url)
            analysis = _analyze(url, outcome)
            self._accept(analysis)
            analyses.append(analysis)
        return analyses

    def _run_concurrent(self) -> list[_Analysis]:
        to_download: Channel[str] = Channel(StageSignal.BUILDER_D, self.buffer_size)
        to_analyze: Channel[tuple[str, PageDocument | FetchError]] = Channel(
            StageSignal.BUILDER_A, self.buffer_size
        )
        # Links flow back to the manager unbounded so the cycle cannot deadlock.
        feedback: queue.Queue[_Analysis | BaseException] = queue.Queue()

        def downloader() -> None:
            try:
                for url in to_download:
                    self.on_event("builder", StageSignal.BUILDER_D.value, url)
                    to_analyze.put((url, _download(self.fetcher, url)))
            except ChannelAborted:
                pass
            except BaseException as exc:  # surfaced in the manager thread
                feedback.put(exc)
            finally:
                to_analyze.close()

        def analyzer() -> None:
            try:
                for url, outcome in to_analyze:
                    self.on_event("builder", StageSignal.BUILDER_A.value, url)
                    feedback.put(_analyze(url, outcome))
            except ChannelAborted:
                pass
            except BaseException as exc:
                feedback.put(exc)

        threads = [threading.Thread(target=downloader, daemon=True), threading.Thread(target=analyzer, daemon=True)]
        for thread in threads:
            thread.start()
        analyses: list[_Analysis] = []
        in_flight = 0
        try:
            while True:
                while self.frontier and self.pages_fetched < self.page_budget:
                    to_download.put(self.frontier.dequeue())
                    self.pages_fetched += 1
                    in_flight += 1
                if in_flight == 0:
                    break
                item = feedback.get()
                if isinstance(item, BaseException):
                    raise item
                in_flight -= 1
                self._accept(item)
                analyses.append(item)
        except BaseException:
            to_download.abort()
            to_analyze.abort()
            raise
        finally:
            to_download.close()
            for thread in threads:
                thread.join(timeout=5)
        return analyses


def build_from_seeds(
    seeds: list[str],
    fetcher: Fetcher,
    domain_label: str,
    page_budget: int = 50,
    **options,
) -> OntologyGraph:
    return OntologyBuilder(fetcher, domain_label, page_budget, **options).build(seeds)

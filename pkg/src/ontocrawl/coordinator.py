"""End-to-end pipeline: build -> store -> mine -> map -> query -> process -> enrich.

Mining stages hand work to each other through bounded :class:`Channel`
buffers keyed by :class:`StageSignal`. The sequential mode runs the same
stage functions as a lazy generator chain in the calling thread; both modes
see items in the same order and so produce identical reports.
"""

from __future__ import annotations

import itertools
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from ontocrawl.builder import BuilderError, OntologyBuilder
from ontocrawl.channels import Channel, ChannelAborted, StageSignal
from ontocrawl.fetch import FetchError, Fetcher, HttpFetcher, PageDocument, PoliteFetcher, host_of, is_absolute
from ontocrawl.metrics import CrawlReport
from ontocrawl.miner import (
    FormSchema,
    MappingResult,
    SubmitError,
    expand_query,
    generate_queries,
    has_form,
    map_form,
    missing_required,
    scan_forms,
    submit_query,
)
from ontocrawl.results import (
    Classification,
    ClassifierConfig,
    RankedResult,
    ResponsePage,
    process_results,
)
from ontocrawl.sim import load_corpus
from ontocrawl.store import DomainMismatchError, MergeStats, OntologyStore, StoreError, SynonymLexicon

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_BUILDER = 3
EXIT_STORE_IO = 4
EXIT_ABORTED = 5


class PipelineError(Exception):
    exit_code = EXIT_FAILURE


class StoreIOError(PipelineError):
    exit_code = EXIT_STORE_IO


class BuilderFailure(PipelineError):
    exit_code = EXIT_BUILDER


class PipelineAborted(PipelineError):
    exit_code = EXIT_ABORTED


@dataclass
class PipelineConfig:
    domain: str
    store_path: Path
    query: str
    seed_urls: list[str] = field(default_factory=list)
    page_budget: int = 50
    query_budget_per_form: int = 10
    politeness_delay: float = 0.0
    lexicon_path: Path | None = None
    corpus_path: Path | None = None
    live: bool = False
    concurrent: bool = False
    buffer_size: int = 1
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def validate(self) -> PipelineConfig:
        if self.page_budget < 1 or self.query_budget_per_form < 1:
            raise ValueError("budgets must be >= 1")
        if self.buffer_size < 1:
            raise ValueError("buffer_size must be >= 1")
        if (self.corpus_path is not None) == self.live:
            raise ValueError("set exactly one of corpus_path or live")
        for url in self.seed_urls:
            if not is_absolute(url):
                raise ValueError(f"seed is not an absolute URL: {url!r}")
        return self

    def lexicon(self) -> SynonymLexicon:
        return SynonymLexicon.from_file(self.lexicon_path) if self.lexicon_path else SynonymLexicon.default()

    def make_fetcher(self) -> Fetcher:
        return load_corpus(self.corpus_path) if self.corpus_path is not None else HttpFetcher()


@dataclass(frozen=True)
class TraceEvent:
    stage: str
    event: str
    item: str


class PipelineTrace:
    """Append-only, thread-safe event log."""

    def __init__(self) -> None:
        self._events: list[TraceEvent] = []
        self._lock = threading.Lock()

    def record(self, stage: str, event: str, item: str = "") -> None:
        with self._lock:
            self._events.append(TraceEvent(stage, event, item))

    @property
    def events(self) -> list[TraceEvent]:
        with self._lock:
            return list(self._events)

    def items(self, event: str) -> list[str]:
        return [e.item for e in self.events if e.event == event]

    def stage_order_violations(self) -> list[str]:
        """Work items whose events are out of pipeline order (empty when sound)."""
        events = self.events
        position: dict[tuple[str, str], int] = {}
        for n, e in enumerate(events):
            position.setdefault((e.event, e.item), n)
        problems = []
        writes = [n for n, e in enumerate(events) if e.stage == "store" and e.event == "write-built"]
        first_miner = next((n for n, e in enumerate(events) if e.stage in ("miner", "query")), None)
        if writes and first_miner is not None and first_miner < writes[0]:
            problems.append("mining started before the built ontology was stored")
        for qid in self.items("generate"):
            form_id = qid.split("#")[0]
            chain = [
                (StageSignal.MINER_M.value, form_id),
                (StageSignal.MINER_QGEN.value, form_id),
                ("generate", qid),
                ("submit", qid),
                (StageSignal.RESULT_R.value, qid),
                ("classify", qid),
            ]
            seen = [position[key] for key in chain if key in position]
            if seen != sorted(seen):
                problems.append(f"events out of order for {qid}")
        return problems


@dataclass
class CrawlOutcome:
    report: CrawlReport
    ranking: list[RankedResult]
    trace: PipelineTrace
    pages: list[ResponsePage]
    store: OntologyStore
    build_stats: MergeStats | None = None
    enrichment: MergeStats = field(default_factory=MergeStats)
    forms_dropped: int = 0
    forms_skipped: int = 0
    warnings: list[str] = field(default_factory=list)
    partial: bool = False

    def __iter__(self):
        # Allows ``report, ranking, trace = run_pipeline(...)``.
        return iter((self.report, self.ranking, self.trace))


Stage = Callable[[object], Iterable[object]]


class Pipeline:
    def __init__(self, config: PipelineConfig, fetcher: Fetcher | None = None, store: OntologyStore | None = None):
        self.config = config.validate()
        raw = fetcher if fetcher is not None else config.make_fetcher()
        self.fetcher = raw if isinstance(raw, PoliteFetcher) else PoliteFetcher(raw, config.politeness_delay)
        self.store = store
        self.trace = PipelineTrace()
        self.warnings: list[str] = []
        self._abort = threading.Event()
        self._channels: list[Channel] = []
        # Each counter below is written by exactly one stage.
        self._candidate_seen: set[str] = set()
        self._candidate_hosts: set[str] = set()
        self._submit_hosts: set[str] = set()
        self.forms_encountered = 0
        self.forms_dropped = 0
        self.forms_skipped = 0

    # -- control

    def abort(self) -> None:
        self._abort.set()
        for channel in self._channels:
            channel.abort()

    def _check(self) -> None:
        if self._abort.is_set():
            raise PipelineAborted("pipeline aborted")

    def _warn(self, message: str) -> None:
        log.warning(message)
        self.warnings.append(message)

    # -- setup

    def _open_store(self) -> OntologyStore:
        cfg = self.config
        if self.store is not None:
            store = self.store
        elif cfg.store_path.exists():
            try:
                store = OntologyStore.load(cfg.store_path, cfg.lexicon())
            except (OSError, StoreError) as exc:
                raise StoreIOError(f"cannot load store {cfg.store_path}: {exc}") from exc
        elif cfg.seed_urls:
            store = OntologyStore(cfg.domain, cfg.lexicon())
        else:
            raise StoreIOError(f"store file not found: {cfg.store_path}")
        if store.domain is None:
            store.domain = cfg.domain
        elif store.domain != cfg.domain:
            raise StoreIOError(f"store domain {store.domain!r} does not match {cfg.domain!r}")
        return store

    def _save_store(self, event: str) -> None:
        try:
            self.store.save(self.config.store_path)
        except OSError as exc:
            raise StoreIOError(f"cannot write store {self.config.store_path}: {exc}") from exc
        self.trace.record("store", event, str(self.config.store_path))

    def _build(self) -> MergeStats | None:
        cfg = self.config
        if not cfg.seed_urls:
            return None
        builder = OntologyBuilder(
            self.fetcher,
            cfg.domain,
            cfg.page_budget,
            concurrent=cfg.concurrent,
            buffer_size=cfg.buffer_size,
            on_event=self.trace.record,
        )
        try:
            graph = builder.build(cfg.seed_urls)
        except BuilderError as exc:
            raise BuilderFailure(str(exc)) from exc
        for url, reason in builder.failures.items():
            self._warn(f"builder could not fetch {url}: {reason}")
        try:
            stats = self.store.merge_graph(graph)
        except DomainMismatchError as exc:
            raise StoreIOError(str(exc)) from exc
        # Mining waits on this write.
        self._save_store("write-built")
        return stats

    # -- mining stages

    def _fetch_candidates(self, subquery: str) -> Iterator[PageDocument]:
        self._check()
        self.trace.record("miner", StageSignal.MINER_QFETCH.value, subquery)
        if is_absolute(subquery):
            urls = [subquery]
        else:
            search = getattr(self.fetcher, "search", None)
            urls = search(subquery) if search else []
            if not urls:
                self._warn(f"no candidate pages for sub-query {subquery!r}")
        for url in urls:
            if url in self._candidate_seen:
                continue
            self._candidate_seen.add(url)
            self._check()
            try:
                page = self.fetcher.fetch(url)
            except FetchError as exc:
                self._warn(str(exc))
                continue
            self._candidate_hosts.add(host_of(url))
            if page.ok and has_form(page.body):
                self.trace.record("miner", StageSignal.MINER_A.value, url)
                yield page

    def _analyze(self, page: PageDocument) -> Iterator[FormSchema]:
        self._check()
        schemas, dropped = scan_forms(page)
        self.forms_encountered += len(schemas)
        self.forms_dropped += dropped
        for schema in schemas:
            self.trace.record("miner", StageSignal.MINER_M.value, schema.form_id)
            yield schema

    def _map(self, schema: FormSchema) -> Iterator[tuple[FormSchema, MappingResult]]:
        self._check()
        mapping = map_form(schema, self.store)
        self.trace.record("miner", StageSignal.MINER_QGEN.value, schema.form_id)
        yield schema, mapping

    def _query(self, item: tuple[FormSchema, MappingResult]) -> Iterator[tuple[str, ResponsePage]]:
        schema, mapping = item
        queries = generate_queries(mapping, schema, self.config.query_budget_per_form)
        if not queries:
            self.forms_skipped += 1
            why = "required fields unmapped" if missing_required(mapping, schema) else "no field mapped"
            self.trace.record("query", "skip-form", f"{schema.form_id} ({why})")
        for n, q in enumerate(queries):
            self._check()
            qid = f"{schema.form_id}#{n}"
            self.trace.record("query", "generate", qid)
            try:
                page = submit_query(q, schema, self.fetcher)
            except SubmitError as exc:
                self._warn(str(exc))
                self.trace.record("query", "submit-failed", qid)
                continue
            self._submit_hosts.add(host_of(page.url))
            self.trace.record("query", "submit", qid)
            yield qid, page

    def _stages(self) -> list[tuple[StageSignal, Stage]]:
        return [
            (StageSignal.MINER_QFETCH, self._fetch_candidates),
            (StageSignal.MINER_A, self._analyze),
            (StageSignal.MINER_M, self._map),
            (StageSignal.MINER_QGEN, self._query),
        ]

    def _mine_sequential(self, subqueries: list[str]) -> Iterator[tuple[str, ResponsePage]]:
        items: Iterable = subqueries
        for _, stage in self._stages():
            items = itertools.chain.from_iterable(map(stage, items))
        return iter(items)

    def _mine_concurrent(self, subqueries: list[str]) -> Iterator[tuple[str, ResponsePage]]:
        size = self.config.buffer_size
        signals = [signal for signal, _ in self._stages()] + [StageSignal.RESULT_R]
        channels = [Channel(signal, size) for signal in signals]
        self._channels = channels
        errors: list[BaseException] = []

        def feed() -> None:
            try:
                for subquery in subqueries:
                    channels[0].put(subquery)
            except ChannelAborted:
                pass
            finally:
                channels[0].close()

        def work(stage: Stage, inbound: Channel, outbound: Channel) -> None:
            try:
                for item in inbound:
                    for out in stage(item):
                        outbound.put(out)
            except (ChannelAborted, PipelineAborted):
                self.abort()
            except BaseException as exc:
                errors.append(exc)
                self.abort()
            finally:
                outbound.close()

        threads = [threading.Thread(target=feed, daemon=True)]
        for n, (_, stage) in enumerate(self._stages()):
            threads.append(threading.Thread(target=work, args=(stage, channels[n], channels[n + 1]), daemon=True))
        for thread in threads:
            thread.start()
        try:
            for item in channels[-1]:
                yield item
        except ChannelAborted:
            pass
        finally:
            for thread in threads:
                thread.join(timeout=10)
            if errors:
                raise errors[0]
            if self._abort.is_set():
                raise PipelineAborted("pipeline aborted")

    # -- driver

    def run(self) -> CrawlOutcome:
        cfg = self.config
        self.store = self._open_store()
        build_stats = self._build()
        self._check()
        subqueries = expand_query(cfg.query)
        mine = self._mine_concurrent if cfg.concurrent else self._mine_sequential
        collected: list[tuple[str, ResponsePage]] = []
        partial = False
        try:
            for qid, page in mine(subqueries):
                self.trace.record("result", StageSignal.RESULT_R.value, qid)
                collected.append((qid, page))
                self._check()
        except PipelineAborted:
            partial = True
            self._warn("pipeline aborted; report covers pages processed so far")
        pages = [page for _, page in collected]
        ranking, enrichment = process_results(pages, self.store, cfg.classifier, enrich=not partial)
        for qid, page in collected:
            self.trace.record("result", "classify", qid)
        if not partial:
            self._save_store("write-enriched")
        if self.forms_encountered == 0:
            self._warn("no forms discovered")
        report = CrawlReport(
            domain=cfg.domain,
            sites_visited=len(self._candidate_hosts | self._submit_hosts),
            forms_encountered=self.forms_encountered,
            pages_downloaded=len(pages),
            correct_pages=sum(p.classification is Classification.CORRECT for p in pages),
            useful_pages=sum(p.useful for p in pages),
        ).validate()
        return CrawlOutcome(
            report=report,
            ranking=ranking,
            trace=self.trace,
            pages=pages,
            store=self.store,
            build_stats=build_stats,
            enrichment=enrichment,
            forms_dropped=self.forms_dropped,
            forms_skipped=self.forms_skipped,
            warnings=list(self.warnings),
            partial=partial,
        )


def run_pipeline(
    config: PipelineConfig, fetcher: Fetcher | None = None, store: OntologyStore | None = None
) -> CrawlOutcome:
    return Pipeline(config, fetcher, store).run()

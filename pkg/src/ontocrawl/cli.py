"""``ontocrawl`` command line: build-ontology, crawl, report, show-store."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ontocrawl.builder import BuilderError, OntologyBuilder
from ontocrawl.coordinator import (
    EXIT_ABORTED,
    EXIT_BUILDER,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_STORE_IO,
    PipelineConfig,
    PipelineError,
    run_pipeline,
)
from ontocrawl.fetch import HttpFetcher, PoliteFetcher, is_absolute
from ontocrawl.metrics import ReportFormatError, read_reports, summary_lines, tabulate
from ontocrawl.results import report_lines
from ontocrawl.sim import CorpusError, bundled_corpus, load_corpus
from ontocrawl.store import OntologyStore, StoreError, SynonymLexicon

log = logging.getLogger("ontocrawl")

LIVE_DELAY = 1.0


def _corpus_path(value: str) -> Path:
    path = Path(value)
    if path.exists():
        return path
    try:
        return bundled_corpus(value)
    except CorpusError:
        raise argparse.ArgumentTypeError(f"no corpus manifest or bundled corpus named {value!r}") from None


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return number


def _seeds(value: str) -> list[str]:
    seeds = [s.strip() for s in value.split(",") if s.strip()]
    bad = [s for s in seeds if not is_absolute(s)]
    if not seeds or bad:
        raise argparse.ArgumentTypeError(f"seeds must be absolute URLs: {', '.join(bad) or value!r}")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ontocrawl", description="Ontology-driven hidden-web crawler.")
    parser.add_argument("-v", "--verbose", action="store_true", help="timestamped diagnostics on stderr")
    parser.add_argument("--lexicon", type=Path, help="synonym lexicon file (default: $ONTOCRAWL_LEXICON or bundled)")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build-ontology", help="crawl seed pages into the domain store")
    build.add_argument("--seeds", type=_seeds, required=True, help="comma-separated seed URLs")
    build.add_argument("--domain", required=True)
    build.add_argument("--store", type=Path, required=True)
    build.add_argument("--budget", type=_positive, default=50, help="page budget (default 50)")
    build.add_argument("--corpus", type=_corpus_path, help="simulator manifest or bundled corpus name")
    build.add_argument("--concurrent", action="store_true")

    crawl = sub.add_parser("crawl", help="run the hidden-web pipeline")
    crawl.add_argument("--domain", required=True)
    crawl.add_argument("--store", type=Path, required=True)
    crawl.add_argument("--query", required=True)
    mode = crawl.add_mutually_exclusive_group(required=True)
    mode.add_argument("--corpus", type=_corpus_path)
    mode.add_argument("--live", action="store_true")
    crawl.add_argument("--query-budget", type=_positive, default=10, help="queries per form (default 10)")
    crawl.add_argument("--report", type=Path, help="write summary and per-page lines here")
    crawl.add_argument("--seeds", type=_seeds, default=[], help="build from these seeds before mining")
    crawl.add_argument("--budget", type=_positive, default=50, help="builder page budget")
    crawl.add_argument("--concurrent", action="store_true", help="run stages on threads")
    crawl.add_argument("--buffer-size", type=_positive, default=1)

    report = sub.add_parser("report", help="re-render the metrics table from a crawl report")
    report.add_argument("--in", dest="infile", type=Path, required=True)

    show = sub.add_parser("show-store", help="print the attributes and values of a store")
    show.add_argument("--store", type=Path, required=True)
    return parser


def _lexicon(args) -> SynonymLexicon:
    return SynonymLexicon.from_file(args.lexicon) if args.lexicon else SynonymLexicon.default()


def cmd_build(args) -> int:
    if args.corpus:
        fetcher = PoliteFetcher(load_corpus(args.corpus), 0.0)
    else:
        fetcher = PoliteFetcher(HttpFetcher(), LIVE_DELAY)
    lexicon = _lexicon(args)
    try:
        store = OntologyStore.load(args.store, lexicon) if args.store.exists() else OntologyStore(args.domain, lexicon)
    except (OSError, StoreError) as exc:
        log.error("cannot load store: %s", exc)
        return EXIT_STORE_IO
    if store.domain not in (None, args.domain):
        log.error("store domain %r does not match %r", store.domain, args.domain)
        return EXIT_STORE_IO
    builder = OntologyBuilder(fetcher, args.domain, args.budget, concurrent=args.concurrent)
    try:
        graph = builder.build(args.seeds)
    except BuilderError as exc:
        log.error("%s", exc)
        return EXIT_BUILDER
    stats = store.merge_graph(graph)
    try:
        store.save(args.store)
    except OSError as exc:
        log.error("cannot write store: %s", exc)
        return EXIT_STORE_IO
    print(f"pages_fetched={builder.pages_fetched}")
    print(f"triples_added={stats.triples_added}")
    print(f"triples_duplicate={stats.triples_duplicate}")
    print(f"nodes_added={stats.nodes_added}")
    return EXIT_OK


def cmd_crawl(args) -> int:
    config = PipelineConfig(
        domain=args.domain,
        store_path=args.store,
        query=args.query,
        seed_urls=args.seeds,
        page_budget=args.budget,
        query_budget_per_form=args.query_budget,
        politeness_delay=LIVE_DELAY if args.live else 0.0,
        lexicon_path=args.lexicon,
        corpus_path=args.corpus,
        live=args.live,
        concurrent=args.concurrent,
        buffer_size=args.buffer_size,
    )
    if args.live:
        config.classifier.require_records = False
    try:
        outcome = run_pipeline(config)
    except PipelineError as exc:
        log.error("%s", exc)
        return exc.exit_code
    if args.report:
        lines = ["# ontocrawl crawl report"] + summary_lines(outcome.report)
        lines += [f"forms_dropped={outcome.forms_dropped}", f"forms_skipped={outcome.forms_skipped}"]
        lines += [f"partial={int(outcome.partial)}"]
        lines += report_lines(outcome.pages, outcome.ranking)
        try:
            args.report.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as exc:
            log.error("cannot write report: %s", exc)
            return EXIT_FAILURE
    sys.stdout.write(tabulate([outcome.report]))
    return EXIT_ABORTED if outcome.partial else EXIT_OK


def cmd_report(args) -> int:
    try:
        reports = read_reports(args.infile.read_text(encoding="utf-8"), str(args.infile))
    except OSError as exc:
        log.error("cannot read report: %s", exc)
        return EXIT_FAILURE
    except ReportFormatError as exc:
        log.error("%s", exc)
        return EXIT_FAILURE
    sys.stdout.write(tabulate(reports))
    return EXIT_OK


def cmd_show_store(args) -> int:
    try:
        store = OntologyStore.load(args.store, _lexicon(args))
    except (OSError, StoreError) as exc:
        log.error("cannot load store: %s", exc)
        return EXIT_STORE_IO
    print(f"domain={store.domain or ''}")
    print(f"triples={len(store)}")
    for attribute in store.attributes():
        print(f"{attribute}: {', '.join(store.query_values(attribute))}")
    return EXIT_OK


COMMANDS = {
    "build-ontology": cmd_build,
    "crawl": cmd_crawl,
    "report": cmd_report,
    "show-store": cmd_show_store,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s" if args.verbose else "%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return COMMANDS[args.command](args)
    except (CorpusError, StoreError) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

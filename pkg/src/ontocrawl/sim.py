"""Deterministic offline web served from a corpus manifest.

Manifest directives, one per line (``#`` starts a comment)::

    site books1
    page /index books1/index.html
    handler /find books1/find.handler

Handler spec files hold ``fields:`` (the form parameters the handler
filters on), optional ``columns:`` (extra result columns), optional
``emit:`` (``column=attribute`` pairs naming the triples rendered for each
record), ``marker:`` (body of the no-results page), optional ``max:`` and
then one record per line as ``field=value;field=value``.
"""

from __future__ import annotations

import html
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from urllib.parse import parse_qsl, urlsplit

from ontocrawl.fetch import PageDocument
from ontocrawl.terms import fold, fold_value

SCHEME = "sim"
_DIRECTIVE = re.compile(r"^(fields|columns|emit|marker|max)\s*:(.*)$", re.IGNORECASE)
_TAGS = re.compile(r"<[^>]+>")
_SCRIPTS = re.compile(r"<script\b.*?</script\s*>", re.IGNORECASE | re.DOTALL)


class CorpusError(Exception):
    def __init__(self, location: str, reason: str):
        self.location = location
        self.reason = reason
        super().__init__(f"{location}: {reason}")


class SimContractError(ValueError):
    pass


@dataclass(frozen=True)
class HandlerSpec:
    fields: tuple[str, ...]
    marker: str
    records: tuple[dict[str, str], ...] = ()
    columns: tuple[str, ...] = ()
    emit: tuple[tuple[str, str], ...] = ()
    max_results: int | None = None

    def matches(self, params: list[tuple[str, str]]) -> list[dict[str, str]]:
        wanted = [(key, fold_value(value)) for key, value in params if key in self.fields]
        hits = [
            record
            for record in self.records
            if all(key in record and fold_value(record[key]) == value for key, value in wanted)
        ]
        return hits if self.max_results is None else hits[: self.max_results]

    def record_triples(self, record: dict[str, str]) -> list[tuple[str, str, str]]:
        pairs = self.emit or tuple((name, name) for name in self.fields + self.columns)
        return [(attribute, "has-value", record[column]) for column, attribute in pairs if column in record]


def parse_handler_spec(text: str, source: str = "<handler>") -> HandlerSpec:
    fields: list[str] | None = None
    columns: list[str] = []
    emit: list[tuple[str, str]] = []
    marker: str | None = None
    max_results: int | None = None
    records: list[tuple[int, dict[str, str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        directive = _DIRECTIVE.match(line)
        if directive:
            key, value = directive.group(1).lower(), directive.group(2).strip()
            if key == "fields":
                fields = [name.strip() for name in value.split(",") if name.strip()]
            elif key == "columns":
                columns = [name.strip() for name in value.split(",") if name.strip()]
            elif key == "emit":
                for pair in value.split(","):
                    column, sep, attribute = pair.partition("=")
                    if not sep or not column.strip() or not attribute.strip():
                        raise CorpusError(where, f"bad emit pair {pair.strip()!r}")
                    emit.append((column.strip(), attribute.strip()))
            elif key == "marker":
                marker = value
            else:
                try:
                    max_results = int(value)
                except ValueError:
                    raise CorpusError(where, f"max must be an integer, got {value!r}") from None
            continue
        record: dict[str, str] = {}
        for chunk in line.split(";"):
            name, sep, value = chunk.partition("=")
            if not sep or not name.strip():
                raise CorpusError(where, f"bad record field {chunk.strip()!r}")
            record[name.strip()] = value.strip()
        records.append((lineno, record))
    if not fields:
        raise CorpusError(source, "missing 'fields:' line")
    if not marker:
        raise CorpusError(source, "missing 'marker:' line")
    known = set(fields) | set(columns)
    for lineno, record in records:
        unknown = set(record) - known
        if unknown:
            raise CorpusError(f"{source}:{lineno}", f"record keys not declared: {sorted(unknown)}")
    for column, _ in emit:
        if column not in known:
            raise CorpusError(source, f"emit names undeclared column {column!r}")
    return HandlerSpec(
        fields=tuple(fields),
        marker=marker,
        records=tuple(record for _, record in records),
        columns=tuple(columns),
        emit=tuple(emit),
        max_results=max_results,
    )


@dataclass
class SimSite:
    label: str
    pages: dict[str, str] = field(default_factory=dict)
    handlers: dict[str, HandlerSpec] = field(default_factory=dict)


def render_results(spec: HandlerSpec, records: list[dict[str, str]]) -> str:
    """Result page: a readable list plus one annotation block per record."""
    out = ["<html><head><title>Results</title></head><body>", "<h1>Search results</h1>", "<ol>"]
    for record in records:
        text = "; ".join(f"{key}: {value}" for key, value in record.items())
        out.append(f"<li>{html.escape(text)}</li>")
    out.append("</ol>")
    for record in records:
        out.append('<script type="text/x-triples">')
        out.extend("|".join(triple) for triple in spec.record_triples(record))
        out.append("</script>")
    out.append("</body></html>")
    return "\n".join(out) + "\n"


def render_marker(spec: HandlerSpec) -> str:
    return f"<html><head><title>Results</title></head><body><p>{html.escape(spec.marker)}</p></body></html>\n"


class SimWeb:
    """Immutable in-memory web; safe to fetch from several threads."""

    def __init__(self, sites: dict[str, SimSite]):
        self.sites = sites

    def fetch(self, url: str, data: bytes | None = None) -> PageDocument:
        parts = urlsplit(url)
        if parts.scheme != SCHEME:
            raise SimContractError(f"simulator only serves sim:// URLs, got {url!r}")
        site = self.sites.get(parts.netloc)
        path = parts.path or "/"
        if site is None:
            return PageDocument(url, 404, "")
        if path in site.pages:
            return PageDocument(url, 200, site.pages[path])
        spec = site.handlers.get(path)
        if spec is None:
            return PageDocument(url, 404, "")
        params = parse_qsl(parts.query, keep_blank_values=True)
        if data:
            params += parse_qsl(data.decode("utf-8"), keep_blank_values=True)
        records = spec.matches(params)
        body = render_results(spec, records) if records else render_marker(spec)
        return PageDocument(url, 200, body)

    def search(self, keyword: str) -> list[str]:
        """Static pages whose visible text contains ``keyword``, sorted by URL."""
        needle = fold(keyword)
        if not needle:
            return []
        hits = []
        for label, site in self.sites.items():
            for path, body in site.pages.items():
                text = fold(html.unescape(_TAGS.sub(" ", _SCRIPTS.sub(" ", body))))
                if needle in text:
                    hits.append(f"{SCHEME}://{label}{path}")
        return sorted(hits)

    def urls(self) -> list[str]:
        return sorted(
            f"{SCHEME}://{label}{path}"
            for label, site in self.sites.items()
            for path in list(site.pages) + list(site.handlers)
        )


def load_corpus(manifest_path: str | os.PathLike) -> SimWeb:
    manifest = Path(manifest_path)
    try:
        text = manifest.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(str(manifest), f"cannot read manifest: {exc.strerror or exc}") from None
    base = manifest.parent
    sites: dict[str, SimSite] = {}
    current: SimSite | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{manifest}:{lineno}"
        words = line.split()
        directive = words[0]
        if directive == "site":
            if len(words) != 2:
                raise CorpusError(where, "expected 'site <label>'")
            if words[1] in sites:
                raise CorpusError(where, f"duplicate site label {words[1]!r}")
            current = sites[words[1]] = SimSite(words[1])
            continue
        if directive not in ("page", "handler"):
            raise CorpusError(where, f"unknown directive {directive!r}")
        if current is None:
            raise CorpusError(where, f"{directive!r} before any 'site' line")
        if len(words) != 3:
            raise CorpusError(where, f"expected '{directive} <path> <file>'")
        path, filename = words[1], words[2]
        if not path.startswith("/"):
            raise CorpusError(where, f"path must start with '/': {path!r}")
        if path in current.pages or path in current.handlers:
            raise CorpusError(where, f"duplicate path {path!r} in site {current.label!r}")
        target = base / filename
        try:
            content = target.read_text(encoding="utf-8")
        except OSError:
            raise CorpusError(where, f"missing file {filename}") from None
        if directive == "page":
            current.pages[path] = content
        else:
            current.handlers[path] = parse_handler_spec(content, str(target))
    return SimWeb(sites)


def bundled_corpus(name: str) -> Path:
    """Manifest path of a corpus shipped with the package (``books``, ``airline``)."""
    path = Path(str(resources.files("ontocrawl").joinpath("corpora", name, "manifest.txt")))
    if not path.is_file():
        raise CorpusError(name, "no such bundled corpus")
    return path

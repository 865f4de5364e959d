"""Hidden-web miner: form discovery, form ontologies, mapping and query generation."""

from __future__ import annotations

import hashlib
import itertools
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from html.parser import HTMLParser
from urllib.parse import quote, urlencode, urlsplit, urlunsplit

from ontocrawl.fetch import FetchError, Fetcher, PageDocument, is_absolute, resolve_url
from ontocrawl.results import ResponsePage
from ontocrawl.store import OntologyGraph, OntologyStore, RelationKind
from ontocrawl.terms import fold_value, normalize

log = logging.getLogger(__name__)

__all__ = [
    "Control",
    "FieldBinding",
    "FormField",
    "FormParseError",
    "FormSchema",
    "MappingResult",
    "QueryInstance",
    "SubmitError",
    "Tier",
    "discover_forms",
    "expand_query",
    "form_to_graph",
    "generate_queries",
    "map_form",
    "normalize",
    "scan_forms",
    "submit_query",
]


class FormParseError(ValueError):
    pass


class SubmitError(Exception):
    def __init__(self, form_id: str, assignments, reason: str):
        self.form_id = form_id
        self.assignments = tuple(assignments)
        super().__init__(f"submission of form {form_id} {dict(self.assignments)} failed: {reason}")


class Control(str, Enum):
    TEXT = "Text"
    SELECT = "Select"
    RADIO = "Radio"
    CHECKBOX = "Checkbox"
    HIDDEN = "Hidden"
    SUBMIT = "Submit"


FILLABLE = frozenset({Control.TEXT, Control.SELECT, Control.RADIO, Control.CHECKBOX})
OPTIONED = frozenset({Control.SELECT, Control.RADIO, Control.CHECKBOX})


class Tier(str, Enum):
    EXACT = "Exact"
    SYNONYM = "Synonym"
    RELATIONAL = "Relational"

    @property
    def confidence(self) -> float:
        return {Tier.EXACT: 1.0, Tier.SYNONYM: 0.8, Tier.RELATIONAL: 0.5}[self]


@dataclass(frozen=True)
class FormField:
    name: str
    control: Control
    label: str | None = None
    options: tuple[str, ...] = ()
    required: bool = False

    def __post_init__(self) -> None:
        if self.options and self.control not in OPTIONED:
            raise ValueError(f"{self.control.value} field {self.name!r} cannot have options")
        if not self.name and self.control is not Control.SUBMIT:
            raise ValueError(f"{self.control.value} field needs a name")

    @property
    def fillable(self) -> bool:
        return self.control in FILLABLE

    def terms(self) -> list[str]:
        """Candidate match terms, label first."""
        terms = []
        for raw in (self.label, self.name):
            term = normalize(raw) if raw else ""
            if term and term not in terms:
                terms.append(term)
        return terms


@dataclass(frozen=True)
class FormSchema:
    form_id: str
    source_url: str
    action: str
    method: str
    fields: tuple[FormField, ...]

    @property
    def fillable_fields(self) -> list[FormField]:
        return [f for f in self.fields if f.fillable]

    def field(self, name: str) -> FormField:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)


@dataclass(frozen=True)
class FieldBinding:
    field_name: str
    attribute: str
    tier: Tier
    values: tuple[str, ...]

    @property
    def confidence(self) -> float:
        return self.tier.confidence


@dataclass(frozen=True)
class MappingResult:
    form_id: str
    bindings: tuple[FieldBinding, ...] = ()
    unmapped: tuple[str, ...] = ()

    def binding(self, field_name: str) -> FieldBinding | None:
        return next((b for b in self.bindings if b.field_name == field_name), None)


@dataclass(frozen=True)
class QueryInstance:
    form_id: str
    assignments: tuple[tuple[str, str], ...]

    def as_dict(self) -> dict[str, str]:
        return dict(self.assignments)


def form_id_for(source_url: str, ordinal: int) -> str:
    return hashlib.sha1(f"{source_url}#{ordinal}".encode()).hexdigest()[:12]


# -- query expansion


def expand_query(user_query: str) -> list[str]:
    """The query itself, then each whitespace token of three or more characters."""
    query = " ".join(user_query.split())
    if not query:
        raise ValueError("empty query")
    if " " not in query and is_absolute(query):
        return [query]
    subqueries = [query]
    for token in query.split(" "):
        if len(token) >= 3 and token not in subqueries:
            subqueries.append(token)
    return subqueries


# -- form discovery


_TEXT_TYPES = {"", "text", "search", "email", "number", "tel", "url", "date", "datetime-local", "month", "week", "time", "password"}
_SUBMIT_TYPES = {"submit", "image"}


@dataclass
class _RawControl:
    kind: str
    name: str
    id: str | None
    value: str | None
    required: bool
    preceding: str | None
    options: list[tuple[str | None, str]] = field(default_factory=list)


@dataclass
class _RawForm:
    action: str
    method: str
    controls: list[_RawControl] = field(default_factory=list)


def _clean_label(text: str) -> str | None:
    text = " ".join(text.split()).strip(" :*")
    return text or None


class _FormParser(HTMLParser):
    """Tag-soup tolerant collector of forms, controls and labels."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.forms: list[_RawForm] = []
        self.labels: dict[str, str] = {}
        self._form: _RawForm | None = None
        self._text: list[str] = []
        self._label_for: str | None = None
        self._label_text: list[str] = []
        self._select: _RawControl | None = None
        self._option: list | None = None
        self._skip_depth = 0

    def _preceding(self) -> str | None:
        text = _clean_label("".join(self._text))
        self._text = []
        return text

    def _finish_option(self) -> None:
        if self._select is not None and self._option is not None:
            value, parts = self._option
            self._select.options.append((value, " ".join("".join(parts).split())))
        self._option = None

    def _finish_select(self) -> None:
        self._finish_option()
        self._select = None

    def handle_starttag(self, tag, attrs):
        attr = {k: (v if v is not None else "") for k, v in attrs}
        if tag in ("script", "style"):
            self._skip_depth += 1
        elif tag == "form":
            self._finish_select()
            self._form = _RawForm(attr.get("action", "").strip(), attr.get("method", "get").strip().upper())
            self.forms.append(self._form)
            self._text = []
        elif tag == "label":
            self._label_for = attr.get("for")
            self._label_text = []
        elif self._form is None:
            return
        elif tag == "input":
            self._finish_select()
            kind = attr.get("type", "text").strip().lower()
            self._add(kind, attr)
        elif tag == "textarea":
            self._finish_select()
            self._add("textarea", attr)
            self._skip_depth += 1
        elif tag == "button":
            self._finish_select()
            if attr.get("type", "submit").strip().lower() == "submit":
                self._add("submit", attr)
        elif tag == "select":
            self._finish_select()
            self._select = self._add("select", attr)
        elif tag == "option" and self._select is not None:
            self._finish_option()
            self._option = [attr.get("value"), []]

    def _add(self, kind: str, attr: dict[str, str]) -> _RawControl:
        control = _RawControl(
            kind=kind,
            name=attr.get("name", "").strip(),
            id=attr.get("id"),
            value=attr.get("value"),
            required="required" in attr,
            preceding=self._preceding(),
        )
        self._form.controls.append(control)
        return control

    def handle_endtag(self, tag):
        if tag in ("script", "style", "textarea"):
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag == "option":
            self._finish_option()
        elif tag == "select":
            self._finish_select()
        elif tag == "label":
            if self._label_for:
                text = _clean_label("".join(self._label_text))
                if text:
                    self.labels[self._label_for] = text
            self._label_for = None
        elif tag == "form":
            self._finish_select()
            self._form = None

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._option is not None:
            self._option[1].append(data)
            return
        if self._label_for is not None:
            self._label_text.append(data)
        if self._form is not None and self._select is None:
            self._text.append(data)


def _schema_from_raw(raw: _RawForm, labels: dict[str, str], source_url: str, ordinal: int) -> FormSchema:
    fields: list[FormField] = []
    radios: dict[str, int] = {}
    taken: dict[str, int] = {}

    def unique(name: str) -> str:
        if not name:
            return name
        taken[name] = taken.get(name, 0) + 1
        return name if taken[name] == 1 else f"{name}_{taken[name]}"

    def label_of(c: _RawControl) -> str | None:
        return labels.get(c.id) if c.id and c.id in labels else c.preceding

    for c in raw.controls:
        if c.kind in _SUBMIT_TYPES:
            fields.append(FormField(unique(c.name), Control.SUBMIT))
            continue
        if not c.name:
            continue
        if c.kind == "radio":
            value = c.value if c.value is not None else "on"
            if c.name in radios:
                idx = radios[c.name]
                old = fields[idx]
                if value not in old.options:
                    fields[idx] = FormField(old.name, old.control, old.label, old.options + (value,), old.required or c.required)
                continue
            radios[c.name] = len(fields)
            fields.append(FormField(unique(c.name), Control.RADIO, label_of(c), (value,), c.required))
        elif c.kind == "checkbox":
            value = c.value if c.value else "on"
            fields.append(FormField(unique(c.name), Control.CHECKBOX, label_of(c), (value,), c.required))
        elif c.kind == "hidden":
            fields.append(FormField(unique(c.name), Control.HIDDEN))
        elif c.kind == "select":
            options: list[str] = []
            for value, text in c.options:
                option = value if value is not None else text
                if option and option not in options:
                    options.append(option)
            fields.append(FormField(unique(c.name), Control.SELECT, label_of(c), tuple(options), c.required))
        elif c.kind in _TEXT_TYPES or c.kind == "textarea":
            fields.append(FormField(unique(c.name), Control.TEXT, label_of(c), (), c.required))
    method = raw.method if raw.method in ("GET", "POST") else "GET"
    action = resolve_url(source_url, raw.action) if raw.action else source_url.split("#")[0]
    return FormSchema(form_id_for(source_url, ordinal), source_url, action, method, tuple(fields))


def scan_forms(page: PageDocument) -> tuple[list[FormSchema], int]:
    """All usable forms of ``page`` plus the number dropped for having no fillable field."""
    if not page.ok:
        raise ValueError(f"cannot scan an error page ({page.status}) {page.url}")
    parser = _FormParser()
    try:
        parser.feed(page.body)
        parser.close()
    except Exception as exc:
        raise FormParseError(f"unparseable HTML at {page.url}: {exc}") from exc
    schemas, dropped = [], 0
    for ordinal, raw in enumerate(parser.forms):
        schema = _schema_from_raw(raw, parser.labels, page.url, ordinal)
        if schema.fillable_fields:
            schemas.append(schema)
        else:
            dropped += 1
    return schemas, dropped


def discover_forms(page: PageDocument) -> list[FormSchema]:
    return scan_forms(page)[0]


def has_form(body: str) -> bool:
    return re.search(r"<form\b", body, re.IGNORECASE) is not None


# -- form ontology and mapping


def form_to_graph(schema: FormSchema, domain: str = "form") -> OntologyGraph:
    graph = OntologyGraph(domain)
    root = f"form {schema.form_id}"
    graph.add_node(root)
    for f in schema.fillable_fields:
        attribute = f.terms()[0]
        if attribute != root:
            graph.add_edge(root, RelationKind.HAS_ATTRIBUTE, attribute)
        for option in f.options:
            value = fold_value(option)
            if value and value != attribute:
                graph.add_edge(attribute, RelationKind.HAS_VALUE, value)
    return graph


def _candidates(tier: Tier, term: str, store: OntologyStore) -> list[str]:
    if tier is Tier.EXACT:
        return [term] if store.has_attribute(term) else []
    if tier is Tier.SYNONYM:
        pool = store.synonyms_of(term)
    else:
        pool = {other for other, _ in store.related_attributes(term)}
    return sorted(a for a in pool if store.has_attribute(a))


def _values_for(f: FormField, attribute: str, store: OntologyStore) -> tuple[str, ...]:
    values = store.query_values(attribute)
    if f.control is Control.TEXT:
        return tuple(values)
    if f.control is Control.CHECKBOX:
        return f.options
    known = {fold_value(v) for v in values}
    return tuple(sorted(o for o in f.options if fold_value(o) in known))


def map_form(schema: FormSchema, store: OntologyStore) -> MappingResult:
    """Bind fillable fields to store attributes: Exact, then Synonym, then Relational.

    Within a tier the label term is tried before the name, and the smallest
    attribute wins. Checkboxes only bind exactly.
    """
    bindings: list[FieldBinding] = []
    unmapped: list[str] = []
    for f in schema.fillable_fields:
        tiers = [Tier.EXACT] if f.control is Control.CHECKBOX else list(Tier)
        found: tuple[Tier, str] | None = None
        for tier in tiers:
            for term in f.terms():
                candidates = _candidates(tier, term, store)
                if candidates:
                    found = (tier, candidates[0])
                    break
            if found:
                break
        values = _values_for(f, found[1], store) if found else ()
        if found and values:
            bindings.append(FieldBinding(f.name, found[1], found[0], values))
        else:
            unmapped.append(f.name)
    return MappingResult(schema.form_id, tuple(bindings), tuple(unmapped))


# -- query generation and submission


def missing_required(mapping: MappingResult, schema: FormSchema) -> list[str]:
    bound = {b.field_name for b in mapping.bindings}
    return [f.name for f in schema.fillable_fields if f.required and f.name not in bound]


def generate_queries(mapping: MappingResult, schema: FormSchema, budget: int) -> list[QueryInstance]:
    """Every combination of bound values in lexicographic order, cut at ``budget``.

    Returns ``[]`` (form skipped) when a required field could not be bound.
    """
    if budget < 1:
        raise ValueError("query budget must be >= 1")
    if not mapping.bindings:
        return []
    if missing_required(mapping, schema):
        log.info("form %s skipped: required fields unmapped", schema.form_id)
        return []
    names = [b.field_name for b in mapping.bindings]
    value_lists = [sorted(set(b.values)) for b in mapping.bindings]
    combos = itertools.islice(itertools.product(*value_lists), budget)
    return [QueryInstance(schema.form_id, tuple(zip(names, combo))) for combo in combos]


def encode_query(q: QueryInstance) -> str:
    return urlencode(q.assignments, quote_via=quote, safe="")


def submission_url(q: QueryInstance, schema: FormSchema) -> str:
    if schema.method == "POST":
        return schema.action
    parts = urlsplit(schema.action)
    query = "&".join(part for part in (parts.query, encode_query(q)) if part)
    return urlunsplit((parts.scheme, parts.netloc, parts.path, query, ""))


def submit_query(q: QueryInstance, schema: FormSchema, fetcher: Fetcher) -> ResponsePage:
    url = submission_url(q, schema)
    data = encode_query(q).encode() if schema.method == "POST" else None
    try:
        doc = fetcher.fetch(url, data)
    except FetchError as exc:
        raise SubmitError(q.form_id, q.assignments, exc.reason) from exc
    return ResponsePage.from_document(doc, q.form_id, q.assignments)

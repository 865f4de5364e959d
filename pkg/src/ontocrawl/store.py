"""Domain-specific ontology store: canonical triples plus a relation-typed view.

The store keeps a set of canonical triples. Predicates naming one of the
six relation kinds are stored under their canonical name together with their
inverse/symmetric partner; any other predicate is kept verbatim and resolved
to ``has-attribute`` or ``has-value`` when the graph view is (re)built.
"""

from __future__ import annotations

import os
import re
import tempfile
import threading
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable

from ontocrawl.terms import fold, fold_value, normalize

LEXICON_ENV = "ONTOCRAWL_LEXICON"


class StoreError(Exception):
    pass


class MalformedTripleError(StoreError, ValueError):
    pass


class DomainMismatchError(StoreError):
    pass


class StoreFormatError(StoreError):
    def __init__(self, path: str | os.PathLike, lineno: int, reason: str):
        self.path = str(path)
        self.lineno = lineno
        self.reason = reason
        super().__init__(f"{self.path}:{lineno}: {reason}")


class LexiconError(StoreError):
    pass


class RelationKind(str, Enum):
    SYNONYM = "synonym"
    PARENT = "parent"
    CHILD = "child"
    SIBLING = "sibling"
    HAS_ATTRIBUTE = "has-attribute"
    HAS_VALUE = "has-value"

    @classmethod
    def parse(cls, name: str) -> RelationKind | None:
        """Map a predicate spelling (``has_value``, ``HasValue``...) to a kind."""
        return _KIND_ALIASES.get(re.sub(r"[\s_\-]", "", name.lower()))

    @property
    def partner(self) -> RelationKind | None:
        return _PARTNERS.get(self)


_KIND_ALIASES = {kind.value.replace("-", ""): kind for kind in RelationKind}
_PARTNERS = {
    RelationKind.PARENT: RelationKind.CHILD,
    RelationKind.CHILD: RelationKind.PARENT,
    RelationKind.SYNONYM: RelationKind.SYNONYM,
    RelationKind.SIBLING: RelationKind.SIBLING,
}
STRUCTURAL_KINDS = frozenset({RelationKind.PARENT, RelationKind.CHILD, RelationKind.SIBLING})

Edge = tuple[str, RelationKind, str]


@dataclass(frozen=True, order=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self) -> None:
        for name in ("subject", "predicate", "object"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise MalformedTripleError(f"empty {name} in triple {self.as_tuple()!r}")
            if any(ch in value for ch in "\t\r\n"):
                raise MalformedTripleError(
                    f"{name} contains a tab or newline in triple {self.as_tuple()!r}"
                )

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class MergeStats:
    triples_added: int = 0
    triples_duplicate: int = 0
    nodes_added: int = 0

    def __add__(self, other: MergeStats) -> MergeStats:
        return MergeStats(
            self.triples_added + other.triples_added,
            self.triples_duplicate + other.triples_duplicate,
            self.nodes_added + other.nodes_added,
        )


def canonical_triple(t: Triple) -> Triple:
    """Fold a triple into store vocabulary.

    Subjects and relation endpoints are normalized terms; values (objects of
    ``has-value`` and of unknown predicates) only lose case and extra spaces,
    so "charles dickens" keeps its trailing ``s`` and dates keep their dashes.
    """
    kind = RelationKind.parse(t.predicate)
    subject = normalize(t.subject)
    if kind is None:
        return Triple(subject, fold(t.predicate).replace(" ", "-"), fold_value(t.object))
    obj = fold_value(t.object) if kind is RelationKind.HAS_VALUE else normalize(t.object)
    return Triple(subject, kind.value, obj)


def resolve_edges(triples: Iterable[Triple]) -> set[Edge]:
    """Turn canonical triples into closed, typed edges.

    Unknown predicates resolve in a second pass: ``has-attribute`` when the
    object is itself the subject of some ``has-value`` triple, else
    ``has-value``. Self-loops are dropped.
    """
    canon = [canonical_triple(t) for t in triples]
    value_subjects = {t.subject for t in canon if t.predicate == RelationKind.HAS_VALUE.value}
    edges: set[Edge] = set()
    for t in canon:
        kind = RelationKind.parse(t.predicate)
        obj = t.object
        if kind is None:
            if normalize(obj) in value_subjects:
                kind, obj = RelationKind.HAS_ATTRIBUTE, normalize(obj)
            else:
                kind = RelationKind.HAS_VALUE
        if t.subject == obj:
            continue
        edges.add((t.subject, kind, obj))
        if kind.partner is not None:
            edges.add((obj, kind.partner, t.subject))
    return edges


@dataclass
class OntologyGraph:
    """Typed nodes and closed relation edges for one domain."""

    domain: str
    nodes: set[str] = field(default_factory=set)
    edges: set[Edge] = field(default_factory=set)

    def add_edge(self, src: str, kind: RelationKind, dst: str) -> None:
        if src == dst:
            raise ValueError(f"self-loop on {src!r}")
        self.nodes.update((src, dst))
        self.edges.add((src, kind, dst))
        if kind.partner is not None:
            self.edges.add((dst, kind.partner, src))

    def add_node(self, node: str) -> None:
        self.nodes.add(node)

    def triples(self) -> list[Triple]:
        return sorted(Triple(a, kind.value, b) for a, kind, b in self.edges)

    @classmethod
    def from_edges(cls, domain: str, edges: Iterable[Edge]) -> OntologyGraph:
        graph = cls(domain)
        for src, kind, dst in edges:
            graph.add_edge(src, kind, dst)
        return graph

    def __len__(self) -> int:
        return len(self.edges)


class SynonymLexicon:
    """Disjoint groups of interchangeable terms."""

    def __init__(self, groups: Iterable[Iterable[str]] = ()):
        self._by_term: dict[str, frozenset[str]] = {}
        self.groups: list[frozenset[str]] = []
        for raw in groups:
            group = frozenset(normalize(term) for term in raw if term.strip())
            if len(group) < 2:
                raise LexiconError(f"synonym group needs at least two terms: {sorted(group)}")
            clash = group & self._by_term.keys()
            if clash:
                raise LexiconError(f"terms appear in more than one group: {sorted(clash)}")
            self.groups.append(group)
            for term in group:
                self._by_term[term] = group

    @classmethod
    def parse(cls, text: str, source: str = "<lexicon>") -> SynonymLexicon:
        groups = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            terms = [term for term in line.split(",") if term.strip()]
            if len(terms) < 2:
                raise LexiconError(f"{source}:{lineno}: synonym group needs at least two terms")
            groups.append(terms)
        return cls(groups)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> SynonymLexicon:
        return cls.parse(Path(path).read_text(encoding="utf-8"), str(path))

    @classmethod
    def bundled(cls) -> SynonymLexicon:
        text = resources.files("ontocrawl").joinpath("data/lexicon.txt").read_text(encoding="utf-8")
        return cls.parse(text, "bundled lexicon")

    @classmethod
    def default(cls) -> SynonymLexicon:
        """The lexicon named by ``$ONTOCRAWL_LEXICON``, else the bundled one."""
        override = os.environ.get(LEXICON_ENV)
        return cls.from_file(override) if override else cls.bundled()

    def group_of(self, term: str) -> frozenset[str]:
        return self._by_term.get(term, frozenset())

    def __contains__(self, term: str) -> bool:
        return term in self._by_term


class _Index:
    def __init__(self, edges: set[Edge]):
        self.nodes: set[str] = set()
        self.attributes: set[str] = set()
        self.values: dict[str, set[str]] = {}
        self.adjacency: dict[str, set[tuple[RelationKind, str]]] = {}
        for src, kind, dst in edges:
            self.nodes.update((src, dst))
            self.adjacency.setdefault(src, set()).add((kind, dst))
            if kind is RelationKind.HAS_ATTRIBUTE:
                self.attributes.add(dst)
            elif kind is RelationKind.HAS_VALUE:
                self.values.setdefault(src, set()).add(dst)


class OntologyStore:
    """Per-domain triple store with synonym and relational lookup.

    Writes are serialized by an internal lock; reads work off an index that is
    rebuilt lazily after writes.
    """

    def __init__(self, domain: str | None = None, lexicon: SynonymLexicon | None = None):
        self.domain = domain
        self.lexicon = lexicon if lexicon is not None else SynonymLexicon()
        self._triples: set[Triple] = set()
        self._lock = threading.RLock()
        self._index: _Index | None = None

    # -- writes

    def insert_triple(self, t: Triple) -> bool:
        """Add ``t`` (and its closure partner); True iff ``t`` was new."""
        t = canonical_triple(t)
        kind = RelationKind.parse(t.predicate)
        if kind is not None and kind is not RelationKind.HAS_VALUE and t.subject == t.object:
            raise MalformedTripleError(f"self-loop triple {t.as_tuple()!r}")
        with self._lock:
            added = self._add(t)
            if kind is not None and kind.partner is not None:
                self._add(Triple(t.object, kind.partner.value, t.subject))
            return added

    def _add(self, t: Triple) -> bool:
        if t in self._triples:
            return False
        self._triples.add(t)
        self._index = None
        return True

    def merge_graph(self, graph: OntologyGraph) -> MergeStats:
        """Union ``graph`` into the store; re-merging the same graph adds nothing."""
        with self._lock:
            if self.domain is None:
                self.domain = graph.domain
            elif graph.domain != self.domain:
                raise DomainMismatchError(
                    f"graph domain {graph.domain!r} does not match store domain {self.domain!r}"
                )
            closed = OntologyGraph.from_edges(graph.domain, graph.edges)
            known_nodes = set(self.nodes)
            added = duplicate = 0
            for t in closed.triples():
                if self._add(canonical_triple(t)):
                    added += 1
                else:
                    duplicate += 1
            new_nodes = (closed.nodes | graph.nodes) - known_nodes
            return MergeStats(added, duplicate, len(new_nodes))

    # -- reads

    def _view(self) -> _Index:
        with self._lock:
            if self._index is None:
                self._index = _Index(resolve_edges(self._triples))
            return self._index

    def triples(self) -> list[Triple]:
        with self._lock:
            return sorted(self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return canonical_triple(t) in self._triples

    @property
    def nodes(self) -> set[str]:
        return set(self._view().nodes)

    def edges(self) -> set[Edge]:
        return resolve_edges(self.triples())

    def graph(self) -> OntologyGraph:
        return OntologyGraph(self.domain or "", self.nodes, self.edges())

    def has_attribute(self, name: str) -> bool:
        return name in self._view().attributes

    def attributes(self) -> list[str]:
        return sorted(self._view().attributes)

    def query_values(self, attribute: str) -> list[str]:
        return sorted(self._view().values.get(attribute, ()))

    def all_values(self) -> set[str]:
        return set().union(*self._view().values.values())

    def synonyms_of(self, term: str) -> set[str]:
        found = set(self.lexicon.group_of(term))
        for kind, other in self._view().adjacency.get(term, ()):
            if kind is RelationKind.SYNONYM:
                found.add(other)
        found.discard(term)
        return found

    def related_attributes(self, term: str) -> set[tuple[str, RelationKind]]:
        return {
            (other, kind)
            for kind, other in self._view().adjacency.get(term, ())
            if kind in STRUCTURAL_KINDS
        }

    # -- persistence

    def save(self, path: str | os.PathLike) -> None:
        """Write the store atomically (temp file + rename)."""
        path = Path(path)
        lines = ["# ontocrawl store", f"@domain\t{self.domain or ''}"]
        lines += ["\t".join(t.as_tuple()) for t in self.triples()]
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    @classmethod
    def load(cls, path: str | os.PathLike, lexicon: SynonymLexicon | None = None) -> OntologyStore:
        text = Path(path).read_text(encoding="utf-8")
        store = cls(lexicon=lexicon)
        seen_domain = False
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if not seen_domain:
                if fields[0] != "@domain" or len(fields) != 2:
                    raise StoreFormatError(path, lineno, "expected '@domain<TAB><label>' header")
                store.domain = fields[1].strip() or None
                seen_domain = True
                continue
            if len(fields) != 3:
                raise StoreFormatError(path, lineno, f"expected 3 tab-separated fields, got {len(fields)}")
            try:
                store.insert_triple(Triple(*fields))
            except MalformedTripleError as exc:
                raise StoreFormatError(path, lineno, str(exc)) from None
        return store


def save_store(store: OntologyStore, path: str | os.PathLike) -> None:
    store.save(path)


def load_store(path: str | os.PathLike, lexicon: SynonymLexicon | None = None) -> OntologyStore:
    return OntologyStore.load(path, lexicon)

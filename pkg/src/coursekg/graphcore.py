"""Typed property-graph model for course knowledge graphs.

Entity kinds form a fixed coarseness order; ``hasPartOf`` edges run from
coarser to finer kinds along a per-source chain, and ``equivalentTo``
edges link same-kind entities across courses. Graphs are treated as
immutable after construction: every transformation builds a new graph.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .docmodel import SourceKind
from .errors import InvalidGraph
from .textnorm import normalize_name

__all__ = [
    "EntityKind",
    "EdgeType",
    "CHAINS",
    "KnowledgeNode",
    "Edge",
    "KnowledgeGraph",
    "Violation",
    "node_id",
    "validate_graph",
    "query_by_name",
]


class EntityKind(str, Enum):
    """Entity types of the course ontology, ordered by coarseness rank."""

    COURSE = "Course"
    KNOWLEDGE_UNIT = "KnowledgeUnit"
    KNOWLEDGE_CHAPTER = "KnowledgeChapter"
    KNOWLEDGE_BLOCK = "KnowledgeBlock"
    TEACHING_CONTENT = "TeachingContent"
    KNOWLEDGE_POINT = "KnowledgePoint"

    @property
    def rank(self) -> int:
        """Coarseness rank; lower is coarser. Unit and TeachingContent tie."""
        return _RANK[self]


_RANK = {
    EntityKind.COURSE: 0,
    EntityKind.KNOWLEDGE_UNIT: 1,
    EntityKind.TEACHING_CONTENT: 1,
    EntityKind.KNOWLEDGE_CHAPTER: 2,
    EntityKind.KNOWLEDGE_BLOCK: 3,
    EntityKind.KNOWLEDGE_POINT: 4,
}

# Containment chain per source kind, coarsest first.
CHAINS: dict[SourceKind, tuple[EntityKind, ...]] = {
    SourceKind.TEXTBOOK: (
        EntityKind.COURSE,
        EntityKind.KNOWLEDGE_UNIT,
        EntityKind.KNOWLEDGE_CHAPTER,
        EntityKind.KNOWLEDGE_BLOCK,
        EntityKind.KNOWLEDGE_POINT,
    ),
    SourceKind.SLIDE: (
        EntityKind.COURSE,
        EntityKind.KNOWLEDGE_UNIT,
        EntityKind.KNOWLEDGE_CHAPTER,
        EntityKind.KNOWLEDGE_BLOCK,
        EntityKind.KNOWLEDGE_POINT,
    ),
    SourceKind.SYLLABUS: (
        EntityKind.COURSE,
        EntityKind.TEACHING_CONTENT,
        EntityKind.KNOWLEDGE_POINT,
    ),
}

# Attribute keys each kind must carry. KnowledgePoint descriptions are
# optional supplements, so they are listed separately.
REQUIRED_ATTRS: dict[EntityKind, frozenset[str]] = {
    EntityKind.COURSE: frozenset(
        {
            "school_term",
            "name",
            "background",
            "url",
            "coursePrerequisites",
            "educationalAlignments",
        }
    ),
    EntityKind.KNOWLEDGE_UNIT: frozenset({"name", "ranker", "level", "url"}),
    EntityKind.KNOWLEDGE_CHAPTER: frozenset({"name", "ranker", "level", "url"}),
    EntityKind.KNOWLEDGE_BLOCK: frozenset({"name", "ranker", "level", "url"}),
    EntityKind.TEACHING_CONTENT: frozenset({"name", "ranker", "level", "url"}),
    EntityKind.KNOWLEDGE_POINT: frozenset(
        {"name", "ranker", "start", "word_frequency", "url", "level"}
    ),
}
OPTIONAL_ATTRS: dict[EntityKind, frozenset[str]] = {
    EntityKind.KNOWLEDGE_POINT: frozenset(
        {"description_wikiE", "description_wikiC", "description_baidu"}
    ),
}


class EdgeType(str, Enum):
    HAS_PART_OF = "hasPartOf"
    EQUIVALENT_TO = "equivalentTo"


def node_id(course: str, source: SourceKind, kind: EntityKind, name: str, locator: str) -> str:
    """Content-derived node id, stable across rebuilds of the same corpus."""
    raw = "|".join((course, source.value, kind.value, name, locator))
    return hashlib.sha1(raw.encode("utf-8")).hexdigest()[:16]


@dataclass
class KnowledgeNode:
    """One typed entity with its attribute set and provenance."""

    id: str
    kind: EntityKind
    name: str
    course: str
    source: SourceKind
    attrs: dict[str, object] = field(default_factory=dict)
    provenance: tuple[tuple[str, str], ...] = ()
    # Sum of member word frequencies; set on fused nodes only.
    word_frequency_total: int | None = None

    def effective_frequency(self) -> int:
        if self.word_frequency_total is not None:
            return self.word_frequency_total
        value = self.attrs.get("word_frequency", 0)
        return int(value) if isinstance(value, (int, float)) else 0

    @property
    def match_key(self) -> str:
        return normalize_name(self.name)


@dataclass(frozen=True)
class Edge:
    """Directed edge; ``hasPartOf`` runs coarse to fine."""

    src: str
    dst: str
    type: EdgeType
    provenance: tuple[str, ...] = ()

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.type.value)


class KnowledgeGraph:
    """Nodes plus edges with name/kind indexes for one graph scope.

    ``scope`` is ``(courses, sources)`` as frozensets. Duplicate node ids
    must agree; duplicate ``(src, dst, type)`` edges collapse to a single
    edge with merged provenance.
    """

    def __init__(
        self,
        nodes: Iterable[KnowledgeNode],
        edges: Iterable[Edge] = (),
        scope: tuple[frozenset[str], frozenset[SourceKind]] | None = None,
    ):
        self.nodes: dict[str, KnowledgeNode] = {}
        for node in nodes:
            existing = self.nodes.get(node.id)
            if existing is not None and existing is not node and existing != node:
                raise InvalidGraph(f"conflicting nodes share id {node.id}")
            self.nodes[node.id] = node

        self._edges: dict[tuple[str, str, str], Edge] = {}
        for edge in edges:
            prior = self._edges.get(edge.key)
            if prior is None:
                self._edges[edge.key] = edge
            else:
                merged = tuple(sorted(set(prior.provenance) | set(edge.provenance)))
                self._edges[edge.key] = replace(prior, provenance=merged)

        if scope is None:
            scope = (
                frozenset(n.course for n in self.nodes.values()),
                frozenset(n.source for n in self.nodes.values()),
            )
        self.scope = scope

        self.name_index: dict[str, tuple[str, ...]] = {}
        by_key: dict[str, list[str]] = {}
        for nid in sorted(self.nodes):
            by_key.setdefault(self.nodes[nid].match_key, []).append(nid)
        self.name_index = {k: tuple(v) for k, v in by_key.items()}

    # -- accessors ----------------------------------------------------

    @property
    def courses(self) -> frozenset[str]:
        return self.scope[0]

    @property
    def sources(self) -> frozenset[SourceKind]:
        return self.scope[1]

    def edges(self) -> list[Edge]:
        return [self._edges[k] for k in sorted(self._edges)]

    def edge_count(self) -> int:
        return len(self._edges)

    def node_list(self) -> list[KnowledgeNode]:
        return [self.nodes[nid] for nid in sorted(self.nodes)]

    def nodes_of_kind(self, kind: EntityKind) -> list[KnowledgeNode]:
        return [n for n in self.node_list() if n.kind is kind]

    def iter_edges(self, type: EdgeType | None = None) -> Iterator[Edge]:
        for edge in self.edges():
            if type is None or edge.type is type:
                yield edge

    @classmethod
    def union(cls, graphs: Sequence["KnowledgeGraph"]) -> "KnowledgeGraph":
        """Node/edge union of several graphs (ids agree by construction)."""
        nodes: dict[str, KnowledgeNode] = {}
        for g in graphs:
            nodes.update(g.nodes)
        edges: list[Edge] = []
        for g in graphs:
            edges.extend(g.edges())
        courses = frozenset().union(*(g.courses for g in graphs)) if graphs else frozenset()
        sources = frozenset().union(*(g.sources for g in graphs)) if graphs else frozenset()
        return cls(nodes.values(), edges, scope=(courses, sources))


def query_by_name(g: KnowledgeGraph, name: str) -> list[KnowledgeNode]:
    """Nodes whose normalized name equals the normalized query, by id."""
    ids = g.name_index.get(normalize_name(name), ())
    return [g.nodes[i] for i in ids]


# --- validation ----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    subject: tuple[str, ...] = ()


_ALL_TABLE_ATTRS = frozenset().union(
    *REQUIRED_ATTRS.values(), *OPTIONAL_ATTRS.values()
)


def _check_attrs(node: KnowledgeNode, out: list[Violation], fused: bool) -> None:
    required = REQUIRED_ATTRS[node.kind]
    allowed = required | OPTIONAL_ATTRS.get(node.kind, frozenset())
    if fused:
        # Attribute union may legitimately import finer members' attributes
        # (a Block-rank fused node keeps its point's word_frequency bag).
        allowed = _ALL_TABLE_ATTRS
    present = set(node.attrs)
    missing = required - present
    extra = present - allowed
    if missing:
        out.append(
            Violation("attrs-missing", f"{node.kind.value} node lacks {sorted(missing)}", (node.id,))
        )
    if extra:
        out.append(
            Violation("attrs-extra", f"{node.kind.value} node carries {sorted(extra)}", (node.id,))
        )


def validate_graph(g: KnowledgeGraph, *, fused: bool = False) -> list[Violation]:
    """Check all node/edge invariants; violations are data, not failures.

    In strict mode (``fused=False``) every ``hasPartOf`` edge must connect
    kinds adjacent in the source chain. Fused graphs may legitimately hold
    equal-rank containment edges (a member was merged upward into a coarser
    node), so ``fused=True`` relaxes the rule to non-increasing coarseness.
    """
    out: list[Violation] = []

    for node in g.node_list():
        if not node.name.strip():
            out.append(Violation("empty-name", "node has an empty name", (node.id,)))
        _check_attrs(node, out, fused)

    children: dict[str, list[str]] = {}
    for edge in g.edges():
        src = g.nodes.get(edge.src)
        dst = g.nodes.get(edge.dst)
        if src is None or dst is None:
            out.append(
                Violation(
                    "dangling-edge",
                    f"edge {edge.key} references a missing node",
                    (edge.src, edge.dst),
                )
            )
            continue
        if edge.src == edge.dst:
            out.append(Violation("self-loop", f"self-loop on {edge.src}", (edge.src,)))
            continue
        if edge.type is EdgeType.HAS_PART_OF:
            children.setdefault(edge.src, []).append(edge.dst)
            if src.course != dst.course:
                out.append(
                    Violation(
                        "cross-course-haspartof",
                        "hasPartOf must stay within one course",
                        (edge.src, edge.dst),
                    )
                )
            if fused:
                # Coarsest-location fusion plus edge preservation can point a
                # finer parent at a coarser fused node; rank order is only an
                # invariant of freshly built graphs.
                pass
            else:
                chain = CHAINS[src.source]
                adjacent = any(
                    chain[i] is src.kind and chain[i + 1] is dst.kind
                    for i in range(len(chain) - 1)
                )
                # KnowledgePoints hang under the deepest heading that
                # mentions them, which may sit anywhere in the chain.
                point_under_heading = (
                    dst.kind is EntityKind.KNOWLEDGE_POINT
                    and src.kind in chain
                    and src.kind not in (EntityKind.COURSE, EntityKind.KNOWLEDGE_POINT)
                )
                if not adjacent and not point_under_heading:
                    out.append(
                        Violation(
                            "chain-order",
                            f"hasPartOf {src.kind.value} -> {dst.kind.value} not adjacent "
                            f"in the {src.source.value} chain",
                            (edge.src, edge.dst),
                        )
                    )
        else:  # equivalentTo
            if src.kind is not dst.kind:
                out.append(
                    Violation(
                        "equiv-kind",
                        f"equivalentTo between {src.kind.value} and {dst.kind.value}",
                        (edge.src, edge.dst),
                    )
                )
            if src.course == dst.course:
                out.append(
                    Violation(
                        "equiv-same-course",
                        "equivalentTo must link different courses",
                        (edge.src, edge.dst),
                    )
                )
            if edge.src > edge.dst:
                out.append(
                    Violation(
                        "equiv-order",
                        "equivalentTo is stored with src < dst",
                        (edge.src, edge.dst),
                    )
                )

    # Reachability: every non-Course node must hang off some Course node
    # through hasPartOf edges.
    reachable: set[str] = set()
    frontier = [n.id for n in g.node_list() if n.kind is EntityKind.COURSE]
    reachable.update(frontier)
    while frontier:
        nxt: list[str] = []
        for nid in frontier:
            for child in children.get(nid, ()):
                if child not in reachable:
                    reachable.add(child)
                    nxt.append(child)
        frontier = nxt
    for node in g.node_list():
        if node.kind is not EntityKind.COURSE and node.id not in reachable:
            out.append(
                Violation("unreachable", "node not reachable from any Course node", (node.id,))
            )
    return out

"""Same-concept clustering, same-course graph fusion, cross-course linking.

Fusion proceeds in four steps: match entity names (exact key, literal
similarity, optional semantic similarity), locate each cluster's coarsest
member, take the per-attribute union of member attributes (url excepted),
and rewire every pre-existing edge onto the surviving node. Cross-course
fusion never merges nodes; it adds ``equivalentTo`` edges between
same-kind, same-name entities of different courses.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Sequence

from .docmodel import SourceKind
from .errors import CrossCourseInput, InvalidGraph, PolicyDisabled, SameCourseInput
from .graphcore import (
    Edge,
    EdgeType,
    EntityKind,
    KnowledgeGraph,
    KnowledgeNode,
    validate_graph,
)
from .textnorm import levenshtein, normalize_name

__all__ = [
    "MatchPolicy",
    "MatchCluster",
    "normalize_name",
    "literal_similarity",
    "match_clusters",
    "fuse_same_course",
    "link_cross_course",
    "FUSION_REPORT_SCHEMA",
]

SemanticScorer = Callable[[str, str], float]

FUSION_REPORT_SCHEMA = [
    "cluster_id",
    "members",
    "representative",
    "fused_rank",
    "mechanism",
    "score",
]

_SOURCE_ORDER = {SourceKind.TEXTBOOK: 0, SourceKind.SLIDE: 1, SourceKind.SYLLABUS: 2}

_ALL_MATCH_KINDS = frozenset(k for k in EntityKind if k is not EntityKind.COURSE)


@dataclass(frozen=True)
class MatchPolicy:
    """Switches and thresholds for the name-matching mechanisms."""

    exact_after_normalize: bool = True
    literal_threshold: float = 0.90
    semantic_threshold: float = 0.85
    semantic_enabled: bool = False
    literal_enabled: bool = True
    match_kinds: frozenset[EntityKind] = _ALL_MATCH_KINDS
    cross_course_literal: bool = False

    def __post_init__(self) -> None:
        for label, value in (
            ("literal_threshold", self.literal_threshold),
            ("semantic_threshold", self.semantic_threshold),
        ):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{label} must be in [0, 1], got {value}")

    def check_enabled(self) -> None:
        if not (self.exact_after_normalize or self.literal_enabled or self.semantic_enabled):
            raise PolicyDisabled("all matching mechanisms are disabled")


def literal_similarity(a: str, b: str) -> float:
    """Best of normalized Levenshtein similarity and character-bigram Jaccard."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    lev = 1.0 - levenshtein(a, b) / max(len(a), len(b))
    big_a = {a[i : i + 2] for i in range(len(a) - 1)}
    big_b = {b[i : i + 2] for i in range(len(b) - 1)}
    union = big_a | big_b
    jac = len(big_a & big_b) / len(union) if union else 0.0
    return max(lev, jac)


@dataclass
class MatchCluster:
    """A set of nodes judged to denote one concept."""

    members: tuple[str, ...]          # node ids, sorted
    levels: tuple[int, ...]           # member coarseness ranks, sorted
    representative: str
    fused_rank: int                   # min (coarsest) rank across members
    mechanism: str = "exact"          # least-certain mechanism that joined it
    score: float = 1.0                # weakest accepted similarity


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Deterministic: smaller id becomes the root.
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _rep_sort_key(node: KnowledgeNode) -> tuple[int, int, str]:
    return (node.kind.rank, _SOURCE_ORDER[node.source], node.id)


def match_clusters(
    graphs: Sequence[KnowledgeGraph],
    policy: MatchPolicy,
    semantic_scorer: SemanticScorer | None = None,
) -> list[MatchCluster]:
    """Cluster same-concept nodes across ``graphs`` by union-find.

    Two nodes join when their match keys are equal, or (KnowledgePoint
    pairs only) when literal similarity reaches the threshold, or when the
    semantic scorer does. Heading-level kinds therefore only merge on exact
    normalized names. Course nodes never cluster; singleton groups are not
    reported. The representative is the coarsest member, ties broken by
    source order (Textbook < Slide < Syllabus) then smallest id.
    """
    policy.check_enabled()

    pool: dict[str, KnowledgeNode] = {}
    for g in graphs:
        for node in g.node_list():
            if node.kind is EntityKind.COURSE or node.kind not in policy.match_kinds:
                continue
            pool[node.id] = node

    uf = _UnionFind()
    for nid in pool:
        uf.add(nid)
    joins: list[tuple[str, str, float]] = []  # (member id, mechanism, score)

    def join(a: str, b: str, mechanism: str, score: float) -> None:
        uf.union(a, b)
        joins.append((a, mechanism, score))

    ordered = sorted(pool.values(), key=lambda n: n.id)
    if policy.exact_after_normalize:
        by_key: dict[str, list[KnowledgeNode]] = {}
        for node in ordered:
            by_key.setdefault(node.match_key, []).append(node)
        for group in by_key.values():
            for first, second in zip(group, group[1:]):
                join(first.id, second.id, "exact", 1.0)

    points = [n for n in ordered if n.kind is EntityKind.KNOWLEDGE_POINT]
    if policy.literal_enabled:
        for i, a in enumerate(points):
            for b in points[i + 1 :]:
                if a.match_key == b.match_key:
                    continue  # exact mechanism's business
                sim = literal_similarity(a.match_key, b.match_key)
                if sim >= policy.literal_threshold:
                    join(a.id, b.id, "literal", sim)
    if policy.semantic_enabled and semantic_scorer is not None:
        for i, a in enumerate(points):
            for b in points[i + 1 :]:
                if a.match_key == b.match_key:
                    continue
                sim = semantic_scorer(a.name, b.name)
                if sim >= policy.semantic_threshold:
                    join(a.id, b.id, "semantic", sim)

    groups: dict[str, list[str]] = {}
    for nid in pool:
        groups.setdefault(uf.find(nid), []).append(nid)
    joins_by_root: dict[str, list[tuple[str, float]]] = {}
    for member, mechanism, score in joins:
        joins_by_root.setdefault(uf.find(member), []).append((mechanism, score))

    mechanisms_rank = {"exact": 0, "literal": 1, "semantic": 2}
    clusters: list[MatchCluster] = []
    for root, member_ids in groups.items():
        if len(member_ids) < 2:
            continue
        members = tuple(sorted(member_ids))
        nodes = [pool[m] for m in members]
        representative = min(nodes, key=_rep_sort_key).id
        levels = tuple(sorted(n.kind.rank for n in nodes))
        cluster_joins = joins_by_root.get(root, [("exact", 1.0)])
        mechanism = max((m for m, _ in cluster_joins), key=lambda m: mechanisms_rank[m])
        score = min(s for _, s in cluster_joins)
        clusters.append(
            MatchCluster(
                members=members,
                levels=levels,
                representative=representative,
                fused_rank=min(levels),
                mechanism=mechanism,
                score=score,
            )
        )
    clusters.sort(key=lambda c: c.members)
    return clusters


# --- same-course fusion ----------------------------------------------------

def _bag_insert(bag: set[object], value: object) -> None:
    if isinstance(value, (list, tuple)):
        for item in value:
            bag.add(item)
    else:
        bag.add(value)


def _sorted_bag(values: set[object]) -> list[object]:
    return sorted(values, key=lambda v: (type(v).__name__, str(v)))


def _fuse_cluster(cluster: MatchCluster, pool: dict[str, KnowledgeNode]) -> KnowledgeNode:
    members = [pool[m] for m in cluster.members]
    rep = pool[cluster.representative]

    bags: dict[str, set[object]] = {}
    for member in members:
        for key, value in member.attrs.items():
            if key == "url":
                continue
            _bag_insert(bags.setdefault(key, set()), value)
    attrs: dict[str, object] = {key: _sorted_bag(bag) for key, bag in sorted(bags.items())}
    attrs["url"] = rep.attrs.get("url", "")

    total = 0
    for member in members:
        total += member.effective_frequency()

    provenance = tuple(sorted({p for m in members for p in m.provenance}))
    digest = hashlib.sha1(
        ("fused|" + rep.course + "|" + rep.kind.value + "|" + "|".join(cluster.members)).encode()
    ).hexdigest()[:16]
    return KnowledgeNode(
        id=digest,
        kind=rep.kind,
        name=rep.name,
        course=rep.course,
        source=rep.source,
        attrs=attrs,
        provenance=provenance,
        word_frequency_total=total,
    )


def fuse_same_course(
    graphs: Sequence[KnowledgeGraph],
    policy: MatchPolicy | None = None,
    semantic_scorer: SemanticScorer | None = None,
) -> KnowledgeGraph:
    """Merge same-concept nodes of one course into single coarsest nodes.

    Every edge incident to a cluster member is rewired to the fused node;
    duplicates collapse with merged provenance and self-loops vanish.
    Unclustered nodes pass through untouched. Fusing an already-fused
    graph is the identity.
    """
    if not graphs:
        raise CrossCourseInput("fusion needs at least one graph")
    courses = frozenset().union(*(g.courses for g in graphs))
    if len(courses) != 1:
        raise CrossCourseInput(f"same-course fusion got courses {sorted(courses)}")
    policy = policy or MatchPolicy()

    merged = KnowledgeGraph.union(graphs)
    clusters = match_clusters([merged], policy, semantic_scorer)

    rep_of: dict[str, str] = {}
    fused_nodes: list[KnowledgeNode] = []
    for cluster in clusters:
        fused = _fuse_cluster(cluster, merged.nodes)
        fused_nodes.append(fused)
        for member in cluster.members:
            rep_of[member] = fused.id

    nodes: list[KnowledgeNode] = list(fused_nodes)
    for node in merged.node_list():
        if node.id not in rep_of:
            nodes.append(node)

    edges: list[Edge] = []
    for edge in merged.edges():
        src = rep_of.get(edge.src, edge.src)
        dst = rep_of.get(edge.dst, edge.dst)
        if src == dst:
            continue
        edges.append(Edge(src, dst, edge.type, edge.provenance))

    result = KnowledgeGraph(nodes, edges, scope=(courses, merged.sources))
    problems = validate_graph(result, fused=True)
    if problems:
        raise InvalidGraph("fusion produced an invalid graph", problems)
    return result


# --- cross-course linking ---------------------------------------------------

def link_cross_course(
    graphs: Sequence[KnowledgeGraph],
    policy: MatchPolicy | None = None,
) -> KnowledgeGraph:
    """Union input graphs and add ``equivalentTo`` edges across courses.

    Nodes are never merged. A pair links when both are of a kind in
    ``policy.match_kinds``, share the same kind, live in different courses,
    and their match keys are equal (or, with ``cross_course_literal``, when
    literal similarity reaches the threshold). Each edge is stored once
    with ``src < dst`` by id.
    """
    policy = policy or MatchPolicy()
    seen_courses: set[str] = set()
    for g in graphs:
        overlap = seen_courses & g.courses
        if overlap:
            raise SameCourseInput(f"two inputs cover course(s) {sorted(overlap)}")
        seen_courses.update(g.courses)

    base = KnowledgeGraph.union(list(graphs))
    candidates = [
        n
        for n in base.node_list()
        if n.kind is not EntityKind.COURSE and n.kind in policy.match_kinds
    ]

    links: list[Edge] = []

    def add_link(a: KnowledgeNode, b: KnowledgeNode, tag: str) -> None:
        src, dst = sorted((a.id, b.id))
        links.append(Edge(src, dst, EdgeType.EQUIVALENT_TO, (tag,)))

    by_key: dict[tuple[str, EntityKind], list[KnowledgeNode]] = {}
    for node in candidates:
        by_key.setdefault((node.match_key, node.kind), []).append(node)
    for group in by_key.values():
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                if a.course != b.course:
                    add_link(a, b, "exact")

    if policy.cross_course_literal and policy.literal_enabled:
        points = [n for n in candidates if n.kind is EntityKind.KNOWLEDGE_POINT]
        for i, a in enumerate(points):
            for b in points[i + 1 :]:
                if a.course == b.course or a.match_key == b.match_key:
                    continue
                if literal_similarity(a.match_key, b.match_key) >= policy.literal_threshold:
                    add_link(a, b, "literal")

    return KnowledgeGraph(
        base.nodes.values(),
        base.edges() + links,
        scope=(base.courses, base.sources),
    )

"""Shared graph builders and independent oracles used across the tests.

The oracles deliberately avoid the library's own code paths: clustering is
re-derived by naive transitive closure over an all-pairs predicate, and
fusion results are re-enumerated with plain dict/set bookkeeping.
"""

from __future__ import annotations

import hashlib

from coursekg import (
    CHAINS,
    Edge,
    EdgeType,
    EntityKind,
    KnowledgeGraph,
    KnowledgeNode,
    SourceKind,
    literal_similarity,
    normalize_name,
)
from coursekg.graphcore import node_id

SOURCE_ORDER = {SourceKind.TEXTBOOK: 0, SourceKind.SLIDE: 1, SourceKind.SYLLABUS: 2}


def course_node(course: str, source: SourceKind, path: str = "doc.txt") -> KnowledgeNode:
    locator = f"{path}:1"
    return KnowledgeNode(
        id=node_id(course, source, EntityKind.COURSE, course, locator),
        kind=EntityKind.COURSE,
        name=course,
        course=course,
        source=source,
        attrs={
            "school_term": "",
            "name": course,
            "background": "",
            "url": path,
            "coursePrerequisites": [],
            "educationalAlignments": [],
        },
        provenance=((source.value, locator),),
    )


def heading_node(
    course: str,
    source: SourceKind,
    kind: EntityKind,
    name: str,
    line: int,
    ranker: int = 1,
    level: int = 1,
    path: str = "doc.txt",
) -> KnowledgeNode:
    locator = f"{path}:{line}"
    return KnowledgeNode(
        id=node_id(course, source, kind, name, locator),
        kind=kind,
        name=name,
        course=course,
        source=source,
        attrs={"name": name, "ranker": ranker, "level": level, "url": locator},
        provenance=((source.value, locator),),
    )


def point_node(
    course: str,
    source: SourceKind,
    name: str,
    line: int,
    ranker: int = 1,
    level: int = 2,
    start: int = 0,
    freq: int = 1,
    path: str = "doc.txt",
) -> KnowledgeNode:
    locator = f"{path}:{line}"
    return KnowledgeNode(
        id=node_id(course, source, EntityKind.KNOWLEDGE_POINT, name, locator),
        kind=EntityKind.KNOWLEDGE_POINT,
        name=name,
        course=course,
        source=source,
        attrs={
            "name": name,
            "ranker": ranker,
            "start": start,
            "word_frequency": freq,
            "url": locator,
            "level": level,
        },
        provenance=((source.value, locator),),
    )


def chain_graph(course: str, source: SourceKind, terms_by_heading: dict[str, list[str]]):
    """Small valid graph: Course -> one heading per key -> its point terms."""
    chain = CHAINS[source]
    root = course_node(course, source)
    nodes = [root]
    edges = []
    line = 2
    for ranker, (title, terms) in enumerate(terms_by_heading.items(), start=1):
        head = heading_node(course, source, chain[1], title, line, ranker=ranker, level=1)
        nodes.append(head)
        edges.append(Edge(root.id, head.id, EdgeType.HAS_PART_OF, (source.value,)))
        line += 1
        for t_rank, term in enumerate(terms, start=1):
            pt = point_node(
                course, source, term, line, ranker=t_rank, level=2, start=line * 10, freq=1
            )
            nodes.append(pt)
            edges.append(Edge(head.id, pt.id, EdgeType.HAS_PART_OF, (source.value,)))
            line += 1
    return KnowledgeGraph(nodes, edges, scope=(frozenset({course}), frozenset({source})))


# --- random fixtures for the fusion oracle -------------------------------

VOCAB = [
    "matched filter",
    "matched filters",       # literal-close to the one above
    "channel capacity",
    "chanel capacity",       # literal-close
    "entropy",
    "entrophy",              # NOT literal-close at 0.90 (sim 0.875)
    "hilbert transform",
    "spectrum",
    "convolution",
    "inner product",
    "sampling theorem",
    "impulse response",
]

HEAD_TITLES = [
    "Signals",
    "Systems",
    "Coding",
    "Detection",
    "matched filter",        # heading sharing a point name (cross-level merge)
    "spectrum",
]


def random_two_source_graphs(rng, max_nodes: int = 60):
    """Two random single-course graphs (textbook + slide), jointly <= max_nodes."""
    course = "Course X"
    graphs = []
    budget = max_nodes
    for source in (SourceKind.TEXTBOOK, SourceKind.SLIDE):
        chain = CHAINS[source]
        root = course_node(course, source)
        nodes = [root]
        edges = []
        line = 2
        # depth-1 headings with optional depth-2 children, points anywhere
        parents = [(root, 0)]
        n_heads = rng.integers(1, 4)
        frontier = []
        for i in range(n_heads):
            title = HEAD_TITLES[rng.integers(len(HEAD_TITLES))]
            head = heading_node(
                course, source, chain[1], title, line, ranker=i + 1, level=1
            )
            if any(n.id == head.id for n in nodes):
                line += 1
                continue
            nodes.append(head)
            edges.append(Edge(root.id, head.id, EdgeType.HAS_PART_OF, (source.value,)))
            frontier.append((head, 1))
            line += 1
        for head, depth in list(frontier):
            if depth + 1 < len(chain) - 1 and rng.random() < 0.5:
                for j in range(rng.integers(1, 3)):
                    title = HEAD_TITLES[rng.integers(len(HEAD_TITLES))]
                    sub = heading_node(
                        course, source, chain[depth + 1], title, line,
                        ranker=j + 1, level=depth + 1,
                    )
                    if any(n.id == sub.id for n in nodes):
                        line += 1
                        continue
                    nodes.append(sub)
                    edges.append(Edge(head.id, sub.id, EdgeType.HAS_PART_OF, (source.value,)))
                    frontier.append((sub, depth + 1))
                    line += 1
        for head, depth in frontier:
            seen_terms = set()
            for _ in range(rng.integers(0, 4)):
                term = VOCAB[rng.integers(len(VOCAB))]
                if term in seen_terms or len(nodes) >= budget // 2:
                    continue
                seen_terms.add(term)
                pt = point_node(
                    course, source, term, line,
                    ranker=len(seen_terms), level=depth + 1,
                    start=int(rng.integers(0, 5000)), freq=int(rng.integers(1, 6)),
                )
                nodes.append(pt)
                edges.append(Edge(head.id, pt.id, EdgeType.HAS_PART_OF, (source.value,)))
                line += 1
        graphs.append(
            KnowledgeGraph(nodes, edges, scope=(frozenset({course}), frozenset({source})))
        )
    return graphs


# --- independent fusion oracle ------------------------------------------

def oracle_clusters(nodes: list[KnowledgeNode], threshold: float) -> list[set[str]]:
    """All-pairs predicate + naive transitive closure (no union-find)."""
    eligible = [n for n in nodes if n.kind is not EntityKind.COURSE]

    def linked(a: KnowledgeNode, b: KnowledgeNode) -> bool:
        if normalize_name(a.name) == normalize_name(b.name):
            return True
        if a.kind is EntityKind.KNOWLEDGE_POINT and b.kind is EntityKind.KNOWLEDGE_POINT:
            return literal_similarity(normalize_name(a.name), normalize_name(b.name)) >= threshold
        return False

    groups: list[set[str]] = [{n.id} for n in eligible]
    by_id = {n.id: n for n in eligible}
    changed = True
    while changed:
        changed = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if not groups[i] or not groups[j]:
                    continue
                if any(linked(by_id[a], by_id[b]) for a in groups[i] for b in groups[j]):
                    groups[i] |= groups[j]
                    groups[j] = set()
                    changed = True
    return [g for g in groups if len(g) >= 2]


def oracle_fuse(graphs, threshold: float):
    """Re-enumerate the expected fusion result with plain bookkeeping.

    Returns (nodes_by_id, edge_dict, fused_rank_by_cluster_rep) where
    nodes_by_id maps id -> (kind, name, attrs, provenance, wft) tuples.
    """
    all_nodes: dict[str, KnowledgeNode] = {}
    all_edges: dict[tuple[str, str, str], set[str]] = {}
    for g in graphs:
        for n in g.node_list():
            all_nodes[n.id] = n
        for e in g.edges():
            all_edges.setdefault(e.key, set()).update(e.provenance)

    clusters = oracle_clusters(list(all_nodes.values()), threshold)
    rep_of: dict[str, str] = {}
    fused: dict[str, tuple] = {}
    ranks: dict[str, int] = {}
    for group in clusters:
        members = sorted(group)
        member_nodes = [all_nodes[m] for m in members]
        rep = min(
            member_nodes, key=lambda n: (n.kind.rank, SOURCE_ORDER[n.source], n.id)
        )
        fused_id = hashlib.sha1(
            ("fused|" + rep.course + "|" + rep.kind.value + "|" + "|".join(members)).encode()
        ).hexdigest()[:16]
        for m in members:
            rep_of[m] = fused_id
        bags: dict[str, set] = {}
        total = 0
        prov: set[tuple[str, str]] = set()
        for n in member_nodes:
            total += n.effective_frequency()
            prov.update(n.provenance)
            for key, value in n.attrs.items():
                if key == "url":
                    continue
                if isinstance(value, (list, tuple)):
                    bags.setdefault(key, set()).update(value)
                else:
                    bags.setdefault(key, set()).add(value)
        attrs = {
            key: sorted(bag, key=lambda v: (type(v).__name__, str(v)))
            for key, bag in sorted(bags.items())
        }
        attrs["url"] = rep.attrs.get("url", "")
        fused[fused_id] = (
            rep.kind,
            rep.name,
            attrs,
            tuple(sorted(prov)),
            total,
        )
        ranks[fused_id] = min(n.kind.rank for n in member_nodes)

    nodes_by_id: dict[str, tuple] = dict(fused)
    for nid, n in all_nodes.items():
        if nid not in rep_of:
            nodes_by_id[nid] = (n.kind, n.name, n.attrs, n.provenance, n.word_frequency_total)

    edges: dict[tuple[str, str, str], set[str]] = {}
    for (src, dst, etype), prov in all_edges.items():
        new_src = rep_of.get(src, src)
        new_dst = rep_of.get(dst, dst)
        if new_src == new_dst:
            continue
        edges.setdefault((new_src, new_dst, etype), set()).update(prov)

    return nodes_by_id, edges, ranks


def graph_snapshot(g: KnowledgeGraph):
    nodes = {
        n.id: (n.kind, n.name, n.attrs, n.provenance, n.word_frequency_total)
        for n in g.node_list()
    }
    edges = {e.key: set(e.provenance) for e in g.edges()}
    return nodes, edges

"""
Fuse duplicate concepts and link equivalent ones across courses
===============================================================

Same-course fusion merges every set of same-named nodes into one node at
the coarsest member's level, unions their attributes, and rewires all
edges. Cross-course linking never merges; it adds equivalentTo edges.
"""

from coursekg import (
    EdgeType,
    EntityKind,
    Gazetteer,
    GazetteerEntry,
    HeadingRules,
    MatchPolicy,
    SourceKind,
    build_course_graph,
    extract_knowledge_points,
    fuse_same_course,
    link_cross_course,
    match_clusters,
    parse_course_document,
)

GAZETTEER = Gazetteer(
    {
        "anti-noise performance": GazetteerEntry("anti-noise performance"),
        "hilbert transform": GazetteerEntry("hilbert transform"),
        "spectrum": GazetteerEntry("spectrum"),
    }
)


def graph_from(text: str, source: SourceKind):
    tree = parse_course_document(text, HeadingRules.default(source), path="demo.txt")
    return build_course_graph(tree, extract_knowledge_points(tree, GAZETTEER), GAZETTEER)


##############################################################################
# The same concept shows up twice in one course: as a whole block of the
# textbook and as a knowledge point inside the slide deck.

textbook = graph_from(
    """---
name: Communication Principles
---
# Noise
## Channel Effects
### anti-noise performance
the spectrum of the noise shapes the design
""",
    SourceKind.TEXTBOOK,
)
slides = graph_from(
    """---
name: Communication Principles
---
# Week 9
anti-noise performance of each receiver, with the hilbert transform
""",
    SourceKind.SLIDE,
)

clusters = match_clusters([textbook, slides], MatchPolicy())
print("clusters to fuse:")
for cluster in clusters:
    print(f"  members={len(cluster.members)} coarsest-rank={cluster.fused_rank} via {cluster.mechanism}")

fused = fuse_same_course([textbook, slides])
concept = next(
    n for n in fused.node_list() if n.match_key == "anti-noise performance"
)
print(f"\nfused node kind: {concept.kind.value} (block beats point)")
print(f"attribute bags:  level={concept.attrs['level']}, url={concept.attrs['url']!r}")
print(f"total frequency: {concept.word_frequency_total}")
parents = [fused.nodes[e.src].name for e in fused.edges() if e.dst == concept.id]
print(f"parents now pointing at it: {sorted(parents)}")

##############################################################################
# A second course shares one concept; linking adds a single equivalentTo
# edge per matched pair and leaves both graphs' own edges untouched.

other = fuse_same_course(
    [
        graph_from(
            """---
name: Signals and Systems
---
# Transforms
the hilbert transform rounds out the toolbox
""",
            SourceKind.TEXTBOOK,
        )
    ]
)

linked = link_cross_course([fused, other])
equiv = list(linked.iter_edges(EdgeType.EQUIVALENT_TO))
print(f"\nequivalence edges: {len(equiv)}")
for edge in equiv:
    a, b = linked.nodes[edge.src], linked.nodes[edge.dst]
    print(f"  {a.course} <-> {b.course}: {a.name!r}")

points = [n.name for n in linked.nodes_of_kind(EntityKind.KNOWLEDGE_POINT)]
print(f"knowledge points in the linked graph: {sorted(points)}")

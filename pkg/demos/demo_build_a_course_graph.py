"""
Build one course graph from an outline document
================================================

Parse a small textbook outline, locate gazetteer terms in its body text,
and assemble the typed knowledge graph for the course.
"""

from coursekg import (
    Gazetteer,
    GazetteerEntry,
    HeadingRules,
    SourceKind,
    build_course_graph,
    extract_knowledge_points,
    parse_course_document,
    query_by_name,
    validate_graph,
)

##############################################################################
# A course document is plain UTF-8: front matter between ``---`` lines, then
# headings (markdown hashes or dotted numbers) with free body text.

DOCUMENT = """\
---
name: Communication Principles
school_term: 2023-2024-1
background: demo course
url: demo.txt
coursePrerequisites: Signals and Systems
educationalAlignments: Bachelor
---
# Baseband Transmission
The Nyquist criterion bounds the symbol rate; raised cosine roll-off
filters meet it with realizable hardware.
## Optimum Receivers
The matched filter maximizes signal-to-noise ratio at the sampling
instant. Optimum reception is a minimum-distance decision.
# Carrier Transmission
Each symbol is a point of the constellation; its spectrum sits around
the carrier.
"""

tree = parse_course_document(
    DOCUMENT, HeadingRules.default(SourceKind.TEXTBOOK), path="demo.txt"
)
print("headings:")
for heading in tree.walk():
    print(f"  {'  ' * (heading.depth - 1)}{heading.hid} {heading.title}")

##############################################################################
# The gazetteer supplies canonical concept names (plus aliases and optional
# encyclopedia descriptions). Matching is case-, width-, and
# whitespace-insensitive, longest match first.

gazetteer = Gazetteer(
    {
        "matched filter": GazetteerEntry("matched filter", ("matching filter",)),
        "Nyquist criterion": GazetteerEntry("Nyquist criterion"),
        "raised cosine roll-off": GazetteerEntry("raised cosine roll-off"),
        "optimum reception": GazetteerEntry("optimum reception"),
        "constellation": GazetteerEntry("constellation"),
        "spectrum": GazetteerEntry("spectrum"),
    }
)
occurrences = extract_knowledge_points(tree, gazetteer)
print("\noccurrences:")
for occ in occurrences:
    print(f"  {occ.term!r} under heading {occ.heading} at offset {occ.offset}")

##############################################################################
# Graph assembly: one Course node, one node per heading (kind follows the
# textbook chain), one KnowledgePoint per (term, deepest heading).

graph = build_course_graph(tree, occurrences, gazetteer)
print(f"\nnodes: {len(graph.nodes)}, edges: {graph.edge_count()}")
for node in graph.node_list():
    print(f"  [{node.kind.value}] {node.name}")

assert validate_graph(graph) == []
print("\nvalidation: clean")

##############################################################################
# Lookup is index-backed and uses the same normalization as matching.

print("query 'Matched  FILTER':", [n.name for n in query_by_name(graph, "Matched  FILTER")])

"""
Export a graph as Cypher, JSON, GraphML, and DOT
================================================

All emitters are deterministic and refuse graphs that fail validation.
The Cypher script is idempotent (MERGE-based) and imports straight into a
graph database shell.
"""

from coursekg import (
    Gazetteer,
    GazetteerEntry,
    HeadingRules,
    SourceKind,
    build_course_graph,
    emit_cypher,
    emit_graph_json,
    emit_graphml,
    emit_weight_graph_dot,
    extract_knowledge_points,
    load_graph_json,
    parse_course_document,
)

gazetteer = Gazetteer(
    {
        "entropy": GazetteerEntry(
            "entropy", ("information entropy",), "Average information content."
        ),
        "channel capacity": GazetteerEntry("channel capacity"),
    }
)
tree = parse_course_document(
    """---
name: Information Theory
---
# Measures
entropy quantifies surprise; channel capacity caps the reliable rate
""",
    HeadingRules.default(SourceKind.TEXTBOOK),
    path="demo.txt",
)
graph = build_course_graph(tree, extract_knowledge_points(tree, gazetteer), gazetteer)

##############################################################################
# Cypher: one MERGE per node keyed by id, one per edge, nodes first.

print("--- cypher ---")
print(emit_cypher(graph))

##############################################################################
# JSON interchange: canonical byte-stable form, exact round-trip.

dump = emit_graph_json(graph)
assert emit_graph_json(load_graph_json(dump)) == dump
print("--- json (round-trips byte-identically) ---")
print(dump)

##############################################################################
# GraphML for generic graph tooling.

print("--- graphml (first lines) ---")
print("\n".join(emit_graphml(graph).splitlines()[:8]))

##############################################################################
# DOT weight graph: thickness encodes the correlation weight.

print("\n--- dot ---")
print(
    emit_weight_graph_dot(
        [("Information Theory", "Communication Principles", 0.6)],
        ["Information Theory", "Communication Principles", "Signals and Systems"],
    )
)

"""Serialization of graphs and analytics: Cypher, JSON, GraphML, DOT, CSV.

Every emitter is deterministic: identical inputs yield byte-identical
output. Graph emitters refuse graphs that fail validation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from xml.sax.saxutils import escape as xml_escape
from xml.sax.saxutils import quoteattr as xml_quoteattr

from .docmodel import SourceKind
from .errors import InvalidGraph, SchemaMismatch
from .graphcore import (
    Edge,
    EdgeType,
    EntityKind,
    KnowledgeGraph,
    KnowledgeNode,
    validate_graph,
)

__all__ = [
    "ExportFormat",
    "ExportProfile",
    "emit_cypher",
    "emit_graph_json",
    "load_graph_json",
    "emit_graphml",
    "emit_weight_graph_dot",
    "emit_report_csv",
    "export_graph",
]


class ExportFormat(str, Enum):
    CYPHER_SCRIPT = "CypherScript"
    GRAPH_JSON = "GraphJson"
    GRAPHML = "GraphML"
    DOT = "Dot"
    CSV = "Csv"


_KNOWN_OPTIONS = {
    ExportFormat.CYPHER_SCRIPT: {"include_provenance"},
    ExportFormat.GRAPH_JSON: set(),
    ExportFormat.GRAPHML: set(),
    ExportFormat.DOT: set(),
    ExportFormat.CSV: {"schema"},
}


@dataclass
class ExportProfile:
    format: ExportFormat
    path: str
    options: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        unknown = set(self.options) - _KNOWN_OPTIONS[self.format]
        if unknown:
            raise ValueError(f"{self.format.value} does not accept options {sorted(unknown)}")


def _require_valid(g: KnowledgeGraph) -> None:
    problems = validate_graph(g, fused=True)
    if problems:
        raise InvalidGraph(f"graph fails validation ({len(problems)} violations)", problems)


# --- Cypher -------------------------------------------------------------

def _cypher_str(s: str) -> str:
    out = s.replace("\\", "\\\\").replace("'", "\\'")
    out = out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
    return f"'{out}'"


def _cypher_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_cypher_value(v) for v in value) + "]"
    return _cypher_str(str(value))


def _node_properties(node: KnowledgeNode, include_provenance: bool) -> dict[str, object]:
    props: dict[str, object] = {"id": node.id}
    props.update(sorted(node.attrs.items()))
    props["course"] = node.course
    props["source"] = node.source.value
    if node.word_frequency_total is not None:
        props["word_frequency_total"] = node.word_frequency_total
    if include_provenance:
        props["provenance"] = [f"{src}|{loc}" for src, loc in node.provenance]
    return props


def emit_cypher(g: KnowledgeGraph, include_provenance: bool = False) -> str:
    """Idempotent openCypher import script: one MERGE per node, one per edge.

    Nodes merge on their id under their entity-kind label and then SET all
    present attributes (fused multi-valued bags become lists); edges merge
    the relationship between the two matched endpoints. Statements are
    ordered nodes-then-edges with ids sorted.
    """
    _require_valid(g)
    statements: list[str] = []
    for node in g.node_list():
        props = _node_properties(node, include_provenance)
        props.pop("id")
        assignments = ", ".join(f"n.{key} = {_cypher_value(v)}" for key, v in props.items())
        statement = f"MERGE (n:{node.kind.value} {{id: {_cypher_str(node.id)}}})"
        if assignments:
            statement += f"\n  SET {assignments}"
        statements.append(statement + ";")
    for edge in g.edges():
        statements.append(
            f"MATCH (a {{id: {_cypher_str(edge.src)}}})"
            f" MATCH (b {{id: {_cypher_str(edge.dst)}}})"
            f" MERGE (a)-[:{edge.type.value}]->(b);"
        )
    return "\n".join(statements) + ("\n" if statements else "")


# --- JSON interchange --------------------------------------------------------

def _node_to_dict(node: KnowledgeNode) -> dict[str, object]:
    return {
        "id": node.id,
        "kind": node.kind.value,
        "name": node.name,
        "course": node.course,
        "source": node.source.value,
        "attrs": node.attrs,
        "provenance": [list(p) for p in node.provenance],
        "word_frequency_total": node.word_frequency_total,
    }


def emit_graph_json(g: KnowledgeGraph) -> str:
    """Canonical JSON for a graph: sorted keys, sorted nodes and edges."""
    _require_valid(g)
    doc = {
        "nodes": [_node_to_dict(n) for n in g.node_list()],
        "edges": [
            {
                "from": e.src,
                "to": e.dst,
                "type": e.type.value,
                "provenance": list(e.provenance),
            }
            for e in g.edges()
        ],
        "scope": {
            "courses": sorted(g.courses),
            "sources": sorted(s.value for s in g.sources),
        },
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"


def load_graph_json(text: str) -> KnowledgeGraph:
    """Inverse of :func:`emit_graph_json`; dump/load/dump is byte-identical."""
    doc = json.loads(text)
    nodes = [
        KnowledgeNode(
            id=n["id"],
            kind=EntityKind(n["kind"]),
            name=n["name"],
            course=n["course"],
            source=SourceKind(n["source"]),
            attrs=n["attrs"],
            provenance=tuple((p[0], p[1]) for p in n["provenance"]),
            word_frequency_total=n["word_frequency_total"],
        )
        for n in doc["nodes"]
    ]
    edges = [
        Edge(e["from"], e["to"], EdgeType(e["type"]), tuple(e["provenance"]))
        for e in doc["edges"]
    ]
    scope = (
        frozenset(doc["scope"]["courses"]),
        frozenset(SourceKind(s) for s in doc["scope"]["sources"]),
    )
    return KnowledgeGraph(nodes, edges, scope=scope)


# --- GraphML ---------------------------------------------------------------

def _graphml_value(value: object) -> str:
    if isinstance(value, (list, tuple)):
        return "; ".join(str(v) for v in value)
    return str(value)


def emit_graphml(g: KnowledgeGraph) -> str:
    """GraphML interchange document with stringified attributes."""
    _require_valid(g)
    attr_keys = sorted({k for n in g.node_list() for k in n.attrs} | {"kind", "course", "source"})
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
    ]
    for key in attr_keys:
        lines.append(f'  <key id="{key}" for="node" attr.name="{key}" attr.type="string"/>')
    lines.append('  <key id="type" for="edge" attr.name="type" attr.type="string"/>')
    lines.append('  <graph id="G" edgedefault="directed">')
    for node in g.node_list():
        lines.append(f"    <node id={xml_quoteattr(node.id)}>")
        values = {"kind": node.kind.value, "course": node.course, "source": node.source.value}
        values.update({k: _graphml_value(v) for k, v in node.attrs.items()})
        for key in sorted(values):
            lines.append(f'      <data key="{key}">{xml_escape(values[key])}</data>')
        lines.append("    </node>")
    for edge in g.edges():
        lines.append(
            f"    <edge source={xml_quoteattr(edge.src)} target={xml_quoteattr(edge.dst)}>"
        )
        lines.append(f'      <data key="type">{xml_escape(edge.type.value)}</data>')
        lines.append("    </edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    return "\n".join(lines) + "\n"


# --- DOT weight graph ---------------------------------------------------

def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_weight_graph_dot(
    edges: list[tuple[str, str, float]], courses: list[str] | None = None
) -> str:
    """Undirected DOT graph of pruned weight edges.

    Edge thickness encodes the weight (penwidth = 1 + 6 * weight, two
    decimals). All courses are declared as nodes, so an empty edge list
    still yields the isolated vertices.
    """
    declared = list(courses) if courses is not None else []
    for a, b, _w in edges:
        for name in (a, b):
            if name not in declared:
                declared.append(name)
    lines = ["graph course_weights {", "  node [shape=box];"]
    for name in declared:
        lines.append(f"  {_dot_quote(name)};")
    for a, b, w in edges:
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"weight out of range: {w}")
        lines.append(f"  {_dot_quote(a)} -- {_dot_quote(b)} [penwidth={1 + 6 * w:.2f}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- CSV reports ------------------------------------------------------------

def _format_cell(value: object) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return f"{value:.5f}"
    return str(value)


def emit_report_csv(rows: list[list[object]], schema: list[str]) -> str:
    """CSV with a header row; floats rendered at five decimal places."""
    for row in rows:
        if len(row) != len(schema):
            raise SchemaMismatch(
                f"row of width {len(row)} does not fit schema {schema}"
            )
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(schema)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    return buffer.getvalue()


# --- profile dispatch ---------------------------------------------------

def export_graph(g: KnowledgeGraph, profile: ExportProfile) -> str:
    """Render ``g`` according to an export profile (CSV excluded)."""
    if profile.format is ExportFormat.CYPHER_SCRIPT:
        return emit_cypher(g, bool(profile.options.get("include_provenance", False)))
    if profile.format is ExportFormat.GRAPH_JSON:
        return emit_graph_json(g)
    if profile.format is ExportFormat.GRAPHML:
        return emit_graphml(g)
    raise ValueError(f"export_graph cannot render {profile.format.value}")

"""coursekg: multi-source course knowledge graphs, fusion, and analytics.

The package turns outline-format course documents (textbooks, slide decks,
syllabi) into typed knowledge graphs, merges same-concept entities within
a course, links equivalent concepts across courses, and computes
course-correlation analytics on top of the linked graphs.
"""

from .analytics import (
    CorrelationMatrix,
    CourseGraphStats,
    WeightMatrix,
    core_concepts_intersection,
    correlation_matrix,
    count_equiv_edges,
    frequency_ranking,
    most_relevant,
    normalize_weights,
    overall_correlation,
    prune_weight_edges,
    source_correlation,
    spectral_cluster,
)
from .cleaning import Anomaly, build_lexicon, correct_term, default_scorer, detect_anomalies
from .docmodel import (
    CourseMeta,
    DocumentTree,
    Heading,
    HeadingRules,
    SourceKind,
    parse_course_document,
    parse_front_matter,
    to_outline_text,
)
from .errors import CourseKGError
from .exportio import (
    ExportFormat,
    ExportProfile,
    emit_cypher,
    emit_graph_json,
    emit_graphml,
    emit_report_csv,
    emit_weight_graph_dot,
    load_graph_json,
)
from .extraction import (
    Gazetteer,
    GazetteerEntry,
    TermOccurrence,
    build_course_graph,
    compute_term_stats,
    extract_knowledge_points,
    load_gazetteer,
)
from .fusion import (
    MatchCluster,
    MatchPolicy,
    fuse_same_course,
    link_cross_course,
    literal_similarity,
    match_clusters,
)
from .graphcore import (
    CHAINS,
    Edge,
    EdgeType,
    EntityKind,
    KnowledgeGraph,
    KnowledgeNode,
    query_by_name,
    validate_graph,
)
from .pipeline import PipelineConfig, run_pipeline
from .textnorm import normalize_name, normalize_text

__version__ = "0.1.0"

__all__ = [
    "Anomaly",
    "CHAINS",
    "CorrelationMatrix",
    "CourseGraphStats",
    "CourseKGError",
    "CourseMeta",
    "DocumentTree",
    "Edge",
    "EdgeType",
    "EntityKind",
    "ExportFormat",
    "ExportProfile",
    "Gazetteer",
    "GazetteerEntry",
    "Heading",
    "HeadingRules",
    "KnowledgeGraph",
    "KnowledgeNode",
    "MatchCluster",
    "MatchPolicy",
    "PipelineConfig",
    "SourceKind",
    "TermOccurrence",
    "WeightMatrix",
    "build_course_graph",
    "build_lexicon",
    "compute_term_stats",
    "core_concepts_intersection",
    "correct_term",
    "correlation_matrix",
    "count_equiv_edges",
    "default_scorer",
    "detect_anomalies",
    "emit_cypher",
    "emit_graph_json",
    "emit_graphml",
    "emit_report_csv",
    "emit_weight_graph_dot",
    "extract_knowledge_points",
    "frequency_ranking",
    "fuse_same_course",
    "link_cross_course",
    "literal_similarity",
    "load_gazetteer",
    "load_graph_json",
    "match_clusters",
    "most_relevant",
    "normalize_name",
    "normalize_text",
    "normalize_weights",
    "overall_correlation",
    "parse_course_document",
    "parse_front_matter",
    "prune_weight_edges",
    "query_by_name",
    "run_pipeline",
    "source_correlation",
    "spectral_cluster",
    "to_outline_text",
    "validate_graph",
]

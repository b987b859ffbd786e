"""Staged batch pipeline: ingest, build, clean, fuse, link, analyze, export.

One INI-style config file drives everything. Each stage reads its
predecessors' artifacts from ``<out>/<stage>/``, writes deterministic
artifacts of its own, and records a machine-readable run report in a
``reports/`` directory beside ``out``. Stages whose inputs are unchanged
are skipped on re-runs unless forced.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import cleaning, exportio
from .adapters import AdapterUnavailable, EmbeddingSimilarity, ExternalCorrector, ExternalNer
from .analytics import (
    CORRELATION_REPORT_SCHEMA,
    MOST_RELEVANT_SCHEMA,
    collect_course_stats,
    core_concepts_intersection,
    correlation_matrix,
    frequency_ranking,
    most_relevant,
    normalize_weights,
    prune_weight_edges,
    spectral_cluster,
)
from .docmodel import (
    CourseMeta,
    DocumentTree,
    Heading,
    HeadingRules,
    SourceKind,
    parse_course_document,
)
from .errors import ConfigError, CourseKGError, StageError
from .extraction import (
    Gazetteer,
    TermOccurrence,
    build_course_graph,
    extract_knowledge_points,
    load_gazetteer,
)
from .fusion import FUSION_REPORT_SCHEMA, MatchPolicy, fuse_same_course, link_cross_course, match_clusters
from .graphcore import EdgeType, EntityKind, KnowledgeGraph
from .textnorm import normalize_name

__all__ = ["PipelineConfig", "CourseDocs", "STAGES", "run_pipeline"]

log = logging.getLogger(__name__)

STAGES = ("ingest", "build", "clean", "fuse", "link", "analyze", "export")

_SOURCE_KEYS = {
    "textbook": SourceKind.TEXTBOOK,
    "slides": SourceKind.SLIDE,
    "syllabus": SourceKind.SYLLABUS,
}
_EXPORT_FORMATS = {"cypher", "json", "graphml", "dot"}


def _slug(name: str) -> str:
    out = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return out or "course"


@dataclass
class CourseDocs:
    """Per-course document paths, relative to the corpus root."""

    name: str
    textbook: str | None = None
    slides: str | None = None
    syllabus: str | None = None

    def sources(self) -> dict[SourceKind, str]:
        present = {}
        for key, kind in _SOURCE_KEYS.items():
            path = getattr(self, key)
            if path:
                present[kind] = path
        return present


@dataclass
class PipelineConfig:
    corpus_root: Path
    courses: list[CourseDocs]
    gazetteer_path: str
    heading_rules: dict[SourceKind, HeadingRules]
    extraction_patterns: list[str] = field(default_factory=list)
    policy: MatchPolicy = field(default_factory=MatchPolicy)
    apply_corrections: bool = False
    min_correction_score: float = 0.8
    k: int = 3
    prune_threshold: float = 0.25
    seed: int = 42
    top_n: int = 20
    export_formats: list[str] = field(default_factory=lambda: ["cypher", "dot"])
    adapters: dict[str, str] = field(default_factory=dict)
    out_dir: Path | None = None

    @property
    def out(self) -> Path:
        return self.out_dir if self.out_dir is not None else self.corpus_root / "out"

    @classmethod
    def load(
        cls,
        path: str | Path,
        *,
        stage_out: str | None = None,
        seed: int | None = None,
        apply_corrections: bool | None = None,
    ) -> "PipelineConfig":
        """Parse and validate a pipeline config file.

        Raises :class:`ConfigError` for missing files, malformed values,
        out-of-range thresholds, or an empty course list.
        """
        path = Path(path).resolve()
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.RawConfigParser()
        parser.optionxform = str  # keep key case (regex patterns, names)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc

        root = Path(parser.get("corpus", "root", fallback=str(path.parent)))
        if not root.is_absolute():
            root = (path.parent / root).resolve()
        if not root.is_dir():
            raise ConfigError(f"corpus root is not a directory: {root}")

        courses: list[CourseDocs] = []
        for section in parser.sections():
            if not section.startswith("course:"):
                continue
            name = section.split(":", 1)[1].strip()
            if not name:
                raise ConfigError(f"course section {section!r} has an empty name")
            docs = CourseDocs(name=name)
            for key in _SOURCE_KEYS:
                value = parser.get(section, key, fallback=None)
                if value:
                    if not (root / value).is_file():
                        raise ConfigError(f"{name}: {key} document not found: {value}")
                    setattr(docs, key, value)
            if not docs.sources():
                raise ConfigError(f"course {name!r} lists no documents")
            courses.append(docs)
        if not courses:
            raise ConfigError("config defines no [course:...] sections")
        slugs = [_slug(c.name) for c in courses]
        if len(set(slugs)) != len(slugs):
            raise ConfigError("course names collide after slugification")

        gazetteer_path = parser.get("gazetteer", "path", fallback=None)
        if not gazetteer_path:
            raise ConfigError("config lacks [gazetteer] path")
        if not (root / gazetteer_path).is_file():
            raise ConfigError(f"gazetteer file not found: {gazetteer_path}")

        heading_rules: dict[SourceKind, HeadingRules] = {}
        for kind in SourceKind:
            section = f"headings:{kind.value.lower()}"
            if parser.has_section(section):
                pairs = []
                for _key, value in parser.items(section):
                    depth_str, _, pattern = value.strip().partition(" ")
                    try:
                        depth = int(depth_str)
                    except ValueError:
                        raise ConfigError(
                            f"[{section}] values are '<depth> <pattern>', got {value!r}"
                        ) from None
                    pairs.append((pattern, depth))
                heading_rules[kind] = HeadingRules.from_pairs(kind, pairs)
            else:
                heading_rules[kind] = HeadingRules.default(kind)

        extraction_patterns = []
        if parser.has_section("extraction"):
            extraction_patterns = [v for _k, v in parser.items("extraction") if v.strip()]
            for pattern in extraction_patterns:
                try:
                    re.compile(pattern)
                except re.error as exc:
                    raise ConfigError(f"bad extraction pattern {pattern!r}: {exc}") from exc

        def get_float(section: str, key: str, default: float) -> float:
            try:
                return parser.getfloat(section, key, fallback=default)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} must be a number: {exc}") from exc

        def get_bool(section: str, key: str, default: bool) -> bool:
            try:
                return parser.getboolean(section, key, fallback=default)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} must be a boolean: {exc}") from exc

        match_kinds = frozenset(k for k in EntityKind if k is not EntityKind.COURSE)
        raw_kinds = parser.get("match", "match_kinds", fallback="")
        if raw_kinds.strip():
            try:
                match_kinds = frozenset(
                    EntityKind(v.strip()) for v in raw_kinds.split(",") if v.strip()
                )
            except ValueError as exc:
                raise ConfigError(f"unknown entity kind in match_kinds: {exc}") from exc
            if EntityKind.COURSE in match_kinds:
                raise ConfigError("Course nodes never participate in matching")
        try:
            policy = MatchPolicy(
                exact_after_normalize=get_bool("match", "exact", True),
                literal_enabled=get_bool("match", "literal_enabled", True),
                literal_threshold=get_float("match", "literal_threshold", 0.90),
                semantic_threshold=get_float("match", "semantic_threshold", 0.85),
                semantic_enabled=get_bool("match", "semantic_enabled", False),
                match_kinds=match_kinds,
                cross_course_literal=get_bool("match", "cross_course_literal", False),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        k = parser.getint("analytics", "k", fallback=3)
        prune = get_float("analytics", "prune_threshold", 0.25)
        if not 0.0 <= prune <= 1.0:
            raise ConfigError(f"prune_threshold must be in [0, 1], got {prune}")
        if k < 2:
            raise ConfigError(f"cluster count k must be at least 2, got {k}")

        formats = [
            f.strip().lower()
            for f in parser.get("export", "formats", fallback="cypher, dot").split(",")
            if f.strip()
        ]
        unknown = set(formats) - _EXPORT_FORMATS
        if unknown:
            raise ConfigError(f"unknown export formats {sorted(unknown)}")

        adapters = {}
        if parser.has_section("adapters"):
            for key in ("ner", "embedding", "corrector"):
                value = parser.get("adapters", key, fallback=None)
                if value:
                    adapters[key] = value

        min_score = get_float("cleaning", "min_correction_score", 0.8)
        if not 0.0 <= min_score <= 1.0:
            raise ConfigError(f"min_correction_score must be in [0, 1], got {min_score}")

        cfg = cls(
            corpus_root=root,
            courses=courses,
            gazetteer_path=gazetteer_path,
            heading_rules=heading_rules,
            extraction_patterns=extraction_patterns,
            policy=policy,
            apply_corrections=get_bool("cleaning", "apply_corrections", False),
            min_correction_score=min_score,
            k=k,
            prune_threshold=prune,
            seed=parser.getint("corpus", "seed", fallback=42),
            top_n=parser.getint("corpus", "top_n", fallback=20),
            export_formats=formats,
            adapters=adapters,
        )
        if stage_out is not None:
            cfg.out_dir = Path(stage_out)
        if seed is not None:
            cfg.seed = seed
        if apply_corrections is not None:
            cfg.apply_corrections = apply_corrections
        return cfg

    def digest(self) -> str:
        """Hash of all effective settings; any change invalidates stage skips."""
        policy = self.policy
        doc = {
            "courses": [[c.name, c.textbook, c.slides, c.syllabus] for c in self.courses],
            "gazetteer": self.gazetteer_path,
            "headings": {
                kind.value: [(p.pattern, d) for p, d in rules.rules]
                for kind, rules in self.heading_rules.items()
            },
            "extraction": self.extraction_patterns,
            "policy": [
                policy.exact_after_normalize,
                policy.literal_enabled,
                policy.literal_threshold,
                policy.semantic_threshold,
                policy.semantic_enabled,
                sorted(k.value for k in policy.match_kinds),
                policy.cross_course_literal,
            ],
            "cleaning": [self.apply_corrections, self.min_correction_score],
            "analytics": [self.k, self.prune_threshold, self.seed, self.top_n],
            "export": self.export_formats,
            "adapters": self.adapters,
        }
        raw = json.dumps(doc, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()


# --- tree artifacts ---------------------------------------------------------

def _heading_to_doc(h: Heading) -> dict:
    return {
        "hid": h.hid,
        "title": h.title,
        "depth": h.depth,
        "ordinal": h.ordinal,
        "line": h.line,
        "path": h.path,
        "body": h.body,
        "body_start": h.body_start,
        "children": [_heading_to_doc(c) for c in h.children],
    }


def _heading_from_doc(doc: dict) -> Heading:
    return Heading(
        hid=doc["hid"],
        title=doc["title"],
        depth=doc["depth"],
        ordinal=doc["ordinal"],
        line=doc["line"],
        path=doc["path"],
        body=doc["body"],
        body_start=doc["body_start"],
        children=[_heading_from_doc(c) for c in doc["children"]],
    )


def tree_to_json(tree: DocumentTree) -> str:
    doc = {
        "meta": tree.meta.as_attrs(),
        "source": tree.source.value,
        "path": tree.path,
        "headings": [_heading_to_doc(r) for r in tree.roots],
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"


def tree_from_json(text: str) -> DocumentTree:
    doc = json.loads(text)
    meta = doc["meta"]
    return DocumentTree(
        meta=CourseMeta(
            name=meta["name"],
            school_term=meta["school_term"],
            background=meta["background"],
            url=meta["url"],
            course_prerequisites=tuple(meta["coursePrerequisites"]),
            educational_alignments=tuple(meta["educationalAlignments"]),
        ),
        source=SourceKind(doc["source"]),
        roots=[_heading_from_doc(h) for h in doc["headings"]],
        path=doc["path"],
    )


# --- runner ----------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


class _Runner:
    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.out = config.out
        # Reports carry wall-clock durations, so they live beside (never
        # inside) the artifact tree that determinism checks hash.
        self.reports_dir = self.out.parent / "reports"
        self._gazetteer: Gazetteer | None = None

    # -- helpers ------------------------------------------------------

    def gazetteer(self) -> Gazetteer:
        if self._gazetteer is None:
            self._gazetteer = load_gazetteer(self.cfg.corpus_root / self.cfg.gazetteer_path)
        return self._gazetteer

    def stage_dir(self, stage: str) -> Path:
        return self.out / stage

    def _artifact_pairs(self) -> list[tuple[CourseDocs, SourceKind, str]]:
        pairs = []
        for course in self.cfg.courses:
            for kind in course.sources():
                pairs.append((course, kind, f"{_slug(course.name)}__{kind.value.lower()}"))
        return pairs

    def load_graphs(self, stage: str, suffix: str) -> dict[tuple[str, SourceKind], KnowledgeGraph]:
        graphs = {}
        for course, kind, stem in self._artifact_pairs():
            path = self.stage_dir(stage) / f"{stem}.{suffix}"
            if not path.is_file():
                raise StageError(stage, f"missing artifact {path}; run earlier stages first")
            graphs[(course.name, kind)] = exportio.load_graph_json(path.read_text("utf-8"))
        return graphs

    # -- stages ------------------------------------------------------------

    def stage_ingest(self) -> dict:
        counts = {"documents": 0, "headings": 0}
        outputs = []
        for course, kind, stem in self._artifact_pairs():
            rel = course.sources()[kind]
            text = (self.cfg.corpus_root / rel).read_text(encoding="utf-8")
            tree = parse_course_document(
                text,
                self.cfg.heading_rules[kind],
                path=rel,
                fallback_name=course.name,
            )
            if tree.meta.name != course.name:
                raise StageError(
                    "ingest",
                    f"{rel}: front matter names {tree.meta.name!r}, config says {course.name!r}",
                )
            target = self.stage_dir("ingest") / f"{stem}.tree.json"
            _write(target, tree_to_json(tree))
            outputs.append(target)
            counts["documents"] += 1
            counts["headings"] += sum(1 for _ in tree.walk())
        return {"counts": counts, "outputs": outputs}

    def stage_build(self) -> dict:
        gaz = self.gazetteer()
        ner = None
        if "ner" in self.cfg.adapters:
            try:
                ner = ExternalNer(self.cfg.adapters["ner"])
                ner.request({"text": ""})  # probe
            except AdapterUnavailable as exc:
                log.warning("NER adapter disabled: %s", exc)
                ner = None
        counts = {"graphs": 0, "nodes": 0, "edges": 0, "occurrences": 0}
        outputs = []
        try:
            for course, kind, stem in self._artifact_pairs():
                source = self.stage_dir("ingest") / f"{stem}.tree.json"
                if not source.is_file():
                    raise StageError("build", f"missing ingest artifact {source}")
                tree = tree_from_json(source.read_text("utf-8"))
                occurrences = extract_knowledge_points(tree, gaz, self.cfg.extraction_patterns)
                if ner is not None:
                    occurrences = self._inject_ner(ner, tree, occurrences)
                graph = build_course_graph(tree, occurrences, gaz)
                target = self.stage_dir("build") / f"{stem}.graph.json"
                _write(target, exportio.emit_graph_json(graph))
                outputs.append(target)
                counts["graphs"] += 1
                counts["nodes"] += len(graph.nodes)
                counts["edges"] += graph.edge_count()
                counts["occurrences"] += len(occurrences)
        finally:
            if ner is not None:
                ner.close()
        return {"counts": counts, "outputs": outputs}

    def _inject_ner(
        self, ner: ExternalNer, tree: DocumentTree, occurrences: list[TermOccurrence]
    ) -> list[TermOccurrence]:
        seen = {(o.term, o.heading, o.offset) for o in occurrences}
        merged = list(occurrences)
        try:
            for heading in tree.walk():
                if not heading.body:
                    continue
                for term, rel_offset in ner.occurrences(heading.body):
                    occ = TermOccurrence(
                        term=normalize_name(term),
                        heading=heading.hid,
                        offset=heading.body_start + rel_offset,
                    )
                    if occ.term and (occ.term, occ.heading, occ.offset) not in seen:
                        seen.add((occ.term, occ.heading, occ.offset))
                        merged.append(occ)
        except AdapterUnavailable as exc:
            log.warning("NER adapter failed mid-run, continuing without it: %s", exc)
        merged.sort(key=lambda o: (o.offset, o.term))
        return merged

    def stage_clean(self) -> dict:
        graphs = self.load_graphs("build", "graph.json")
        corpus_counts: dict[str, int] = {}
        for graph in graphs.values():
            for node in graph.nodes_of_kind(EntityKind.KNOWLEDGE_POINT):
                corpus_counts[node.name] = corpus_counts.get(node.name, 0) + node.effective_frequency()
        gaz = self.gazetteer()
        terms = list(gaz.entries) + [a for e in gaz.entries.values() for a in e.aliases]
        lexicon = cleaning.build_lexicon(terms, corpus_counts)

        scorer = None
        corrector = None
        if "corrector" in self.cfg.adapters:
            try:
                corrector = ExternalCorrector(self.cfg.adapters["corrector"])
                corrector.correct("probe", ["probe"])
                scorer = lambda name, candidate: corrector.correct(name, [candidate])[1]  # noqa: E731
            except AdapterUnavailable as exc:
                log.warning("corrector adapter disabled: %s", exc)
                corrector = None
                scorer = None

        rows = []
        counts = {"anomalies": 0, "corrected": 0}
        outputs = []
        try:
            for (course_name, kind), graph in sorted(
                graphs.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
            ):
                anomalies = cleaning.detect_anomalies(graph, lexicon, scorer)
                counts["anomalies"] += len(anomalies)
                rows.extend(a.as_row() for a in anomalies)
                if self.cfg.apply_corrections:
                    cleaned = cleaning.apply_suggestions(
                        graph, anomalies, self.cfg.min_correction_score
                    )
                    counts["corrected"] += sum(
                        1 for nid in graph.nodes if nid not in cleaned.nodes
                    )
                    graph = cleaned
                stem = f"{_slug(course_name)}__{kind.value.lower()}"
                target = self.stage_dir("clean") / f"{stem}.graph.json"
                _write(target, exportio.emit_graph_json(graph))
                outputs.append(target)
        finally:
            if corrector is not None:
                corrector.close()
        report = self.stage_dir("clean") / "anomalies.csv"
        _write(report, exportio.emit_report_csv(rows, cleaning.ANOMALY_REPORT_SCHEMA))
        outputs.append(report)
        return {"counts": counts, "outputs": outputs}

    def _semantic_scorer(self):
        if not self.cfg.policy.semantic_enabled:
            return None
        command = self.cfg.adapters.get("embedding")
        if not command:
            log.warning("semantic matching enabled but no embedding adapter configured")
            return None
        try:
            return EmbeddingSimilarity(command)
        except AdapterUnavailable as exc:
            log.warning("embedding adapter disabled: %s", exc)
            return None

    def stage_fuse(self) -> dict:
        graphs = self.load_graphs("clean", "graph.json")
        scorer = self._semantic_scorer()
        counts = {"clusters": 0, "fused_graphs": 0}
        outputs = []
        rows = []
        try:
            by_course: dict[str, dict[SourceKind, KnowledgeGraph]] = {}
            for (course_name, kind), graph in graphs.items():
                by_course.setdefault(course_name, {})[kind] = graph
            for course_name in sorted(by_course):
                per_source = by_course[course_name]
                slug = _slug(course_name)
                for kind in sorted(per_source, key=lambda k: k.value):
                    graph = per_source[kind]
                    clusters = match_clusters([graph], self.cfg.policy, scorer)
                    rows.extend(
                        self._cluster_rows(f"{slug}:{kind.value}", clusters)
                    )
                    counts["clusters"] += len(clusters)
                    fused = fuse_same_course([graph], self.cfg.policy, scorer)
                    target = self.stage_dir("fuse") / f"{slug}__{kind.value.lower()}.fused.json"
                    _write(target, exportio.emit_graph_json(fused))
                    outputs.append(target)
                all_graphs = [per_source[k] for k in sorted(per_source, key=lambda k: k.value)]
                clusters = match_clusters(all_graphs, self.cfg.policy, scorer)
                rows.extend(self._cluster_rows(f"{slug}:all", clusters))
                counts["clusters"] += len(clusters)
                fused_all = fuse_same_course(all_graphs, self.cfg.policy, scorer)
                target = self.stage_dir("fuse") / f"{slug}.fused.json"
                _write(target, exportio.emit_graph_json(fused_all))
                outputs.append(target)
                counts["fused_graphs"] += 1
        finally:
            if scorer is not None:
                scorer.close()
        report = self.stage_dir("fuse") / "clusters.csv"
        schema = ["scope"] + FUSION_REPORT_SCHEMA
        _write(report, exportio.emit_report_csv(rows, schema))
        outputs.append(report)
        return {"counts": counts, "outputs": outputs}

    @staticmethod
    def _cluster_rows(scope: str, clusters) -> list[list[object]]:
        rows = []
        for i, cluster in enumerate(clusters):
            rows.append(
                [
                    scope,
                    f"{scope}#{i}",
                    ";".join(cluster.members),
                    cluster.representative,
                    cluster.fused_rank,
                    cluster.mechanism,
                    cluster.score,
                ]
            )
        return rows

    def stage_link(self) -> dict:
        counts = {"equivalence_edges": 0, "linked_graphs": 0}
        outputs = []
        for kind in SourceKind:
            fused = []
            for course in self.cfg.courses:
                path = (
                    self.stage_dir("fuse")
                    / f"{_slug(course.name)}__{kind.value.lower()}.fused.json"
                )
                if path.is_file():
                    fused.append(exportio.load_graph_json(path.read_text("utf-8")))
            if len(fused) < 2:
                continue
            linked = link_cross_course(fused, self.cfg.policy)
            target = self.stage_dir("link") / f"{kind.value.lower()}.linked.json"
            _write(target, exportio.emit_graph_json(linked))
            outputs.append(target)
            counts["linked_graphs"] += 1
            counts["equivalence_edges"] += sum(
                1 for _e in linked.iter_edges(EdgeType.EQUIVALENT_TO)
            )
        return {"counts": counts, "outputs": outputs}

    def stage_analyze(self) -> dict:
        course_names = [c.name for c in self.cfg.courses]
        linked = {}
        for kind in (SourceKind.TEXTBOOK, SourceKind.SLIDE):
            path = self.stage_dir("link") / f"{kind.value.lower()}.linked.json"
            if path.is_file():
                linked[kind] = exportio.load_graph_json(path.read_text("utf-8"))

        outputs = []
        counts = {}
        stats = collect_course_stats(linked, course_names)
        matrix = correlation_matrix(stats)
        corr = self.stage_dir("analyze") / "correlation.csv"
        _write(corr, exportio.emit_report_csv(matrix.report_rows(), CORRELATION_REPORT_SCHEMA))
        outputs.append(corr)

        relevant_rows = []
        if len(course_names) >= 2:
            for course in course_names:
                best, degree = most_relevant(matrix, course)
                relevant_rows.append([course, best, degree])
        top = self.stage_dir("analyze") / "most_relevant.csv"
        _write(top, exportio.emit_report_csv(relevant_rows, MOST_RELEVANT_SCHEMA))
        outputs.append(top)

        weights = normalize_weights(matrix)
        pruned = prune_weight_edges(weights, self.cfg.prune_threshold)
        counts["weight_edges"] = len(pruned)
        wcsv = self.stage_dir("analyze") / "weights.csv"
        _write(
            wcsv,
            exportio.emit_report_csv(
                [[a, b, w] for a, b, w in pruned], ["course_i", "course_j", "weight"]
            ),
        )
        outputs.append(wcsv)

        clusters: dict[str, int] = {}
        if len(course_names) >= 2 and self.cfg.k <= len(course_names):
            clusters = spectral_cluster(matrix, self.cfg.k, self.cfg.seed)
        elif course_names:
            log.warning("skipping spectral clustering: k=%d, n=%d", self.cfg.k, len(course_names))
        ccsv = self.stage_dir("analyze") / "clusters.csv"
        _write(
            ccsv,
            exportio.emit_report_csv(
                [[c, label] for c, label in clusters.items()], ["course", "cluster"]
            ),
        )
        outputs.append(ccsv)

        fused_all = []
        for course in self.cfg.courses:
            path = self.stage_dir("fuse") / f"{_slug(course.name)}.fused.json"
            if not path.is_file():
                raise StageError("analyze", f"missing fuse artifact {path}")
            fused_all.append(exportio.load_graph_json(path.read_text("utf-8")))
        ranking = frequency_ranking(KnowledgeGraph.union(fused_all), self.cfg.top_n)
        fcsv = self.stage_dir("analyze") / "frequency.csv"
        _write(
            fcsv,
            exportio.emit_report_csv(
                [[term, freq] for term, freq in ranking], ["concept", "total_frequency"]
            ),
        )
        outputs.append(fcsv)

        core_rows = []
        core_counts = 0
        for course in self.cfg.courses:
            present = course.sources()
            if set(present) != {SourceKind.TEXTBOOK, SourceKind.SLIDE, SourceKind.SYLLABUS}:
                continue
            slug = _slug(course.name)
            per = {
                kind: exportio.load_graph_json(
                    (self.stage_dir("fuse") / f"{slug}__{kind.value.lower()}.fused.json").read_text(
                        "utf-8"
                    )
                )
                for kind in present
            }
            shared = core_concepts_intersection(
                per[SourceKind.TEXTBOOK], per[SourceKind.SLIDE], per[SourceKind.SYLLABUS]
            )
            core_counts += len(shared)
            core_rows.extend([[course.name, concept] for concept in shared])
        kcsv = self.stage_dir("analyze") / "core_concepts.csv"
        _write(kcsv, exportio.emit_report_csv(core_rows, ["course", "concept"]))
        outputs.append(kcsv)
        counts["core_concepts"] = core_counts

        analysis = {
            "courses": list(matrix.courses),
            "su": [[None if not (v == v) else v for v in row] for row in matrix.su.tolist()],
            "sv": [[None if not (v == v) else v for v in row] for row in matrix.sv.tolist()],
            "s": [[None if not (v == v) else v for v in row] for row in matrix.s.tolist()],
            "pruned": [[a, b, w] for a, b, w in pruned],
            "clusters": clusters,
            "frequency": ranking,
        }
        ajson = self.stage_dir("analyze") / "analysis.json"
        _write(
            ajson,
            json.dumps(analysis, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n",
        )
        outputs.append(ajson)
        return {"counts": counts, "outputs": outputs}

    def stage_export(self) -> dict:
        counts = {"files": 0}
        outputs = []
        fused: dict[str, KnowledgeGraph] = {}
        for course in self.cfg.courses:
            slug = _slug(course.name)
            path = self.stage_dir("fuse") / f"{slug}.fused.json"
            if not path.is_file():
                raise StageError("export", f"missing fuse artifact {path}")
            fused[slug] = exportio.load_graph_json(path.read_text("utf-8"))

        for slug in sorted(fused):
            graph = fused[slug]
            if "cypher" in self.cfg.export_formats:
                target = self.stage_dir("export") / f"{slug}.cypher"
                _write(target, exportio.emit_cypher(graph))
                outputs.append(target)
            if "graphml" in self.cfg.export_formats:
                target = self.stage_dir("export") / f"{slug}.graphml"
                _write(target, exportio.emit_graphml(graph))
                outputs.append(target)
            if "json" in self.cfg.export_formats:
                target = self.stage_dir("export") / f"{slug}.graph.json"
                _write(target, exportio.emit_graph_json(graph))
                outputs.append(target)

        if "dot" in self.cfg.export_formats:
            analysis_path = self.stage_dir("analyze") / "analysis.json"
            if not analysis_path.is_file():
                raise StageError("export", f"missing analyze artifact {analysis_path}")
            analysis = json.loads(analysis_path.read_text("utf-8"))
            dot = exportio.emit_weight_graph_dot(
                [(a, b, w) for a, b, w in analysis["pruned"]], analysis["courses"]
            )
            target = self.stage_dir("export") / "course_weights.dot"
            _write(target, dot)
            outputs.append(target)
        counts["files"] = len(outputs)
        return {"counts": counts, "outputs": outputs}

    # -- orchestration ------------------------------------------------------

    # Artifact directories each stage actually reads.
    _DEPS = {
        "ingest": (),
        "build": ("ingest",),
        "clean": ("build",),
        "fuse": ("clean",),
        "link": ("fuse",),
        "analyze": ("link", "fuse"),
        "export": ("analyze", "fuse"),
    }

    def _stage_inputs(self, stage: str) -> dict[str, str]:
        inputs = {"<config>": self.cfg.digest()}
        root = self.cfg.corpus_root
        inputs[self.cfg.gazetteer_path] = _sha256(root / self.cfg.gazetteer_path)
        if stage == "ingest":
            for course in self.cfg.courses:
                for rel in course.sources().values():
                    inputs[rel] = _sha256(root / rel)
        else:
            for dep in self._DEPS[stage]:
                dep_dir = self.stage_dir(dep)
                if dep_dir.is_dir():
                    for path in sorted(dep_dir.rglob("*")):
                        if path.is_file():
                            inputs[f"{dep}/{path.name}"] = _sha256(path)
        return inputs

    def _report_path(self, stage: str) -> Path:
        return self.reports_dir / f"{stage}.json"

    def _relative(self, path: Path) -> str:
        try:
            return str(path.relative_to(self.cfg.corpus_root))
        except ValueError:
            return str(path)

    def _can_skip(self, stage: str, inputs: dict[str, str]) -> bool:
        report_path = self._report_path(stage)
        if not report_path.is_file():
            return False
        try:
            report = json.loads(report_path.read_text("utf-8"))
        except json.JSONDecodeError:
            return False
        if report.get("inputs") != inputs:
            return False
        outputs = report.get("outputs", [])
        return all((self.cfg.corpus_root / out).is_file() or Path(out).is_file() for out in outputs)

    def run_stage(self, stage: str, force: bool) -> dict:
        inputs = self._stage_inputs(stage)
        if not force and self._can_skip(stage, inputs):
            log.info("stage %s is up to date, skipping", stage)
            return {"stage": stage, "status": "skipped"}
        started = time.perf_counter()
        try:
            result = getattr(self, f"stage_{stage}")()
        except CourseKGError as exc:
            raise StageError(stage, exc) from exc
        except OSError as exc:
            raise StageError(stage, exc) from exc
        duration = time.perf_counter() - started
        report = {
            "stage": stage,
            "inputs": inputs,
            "outputs": sorted(self._relative(Path(p)) for p in result["outputs"]),
            "counts": result["counts"],
            "duration_s": round(duration, 6),
        }
        _write(self._report_path(stage), json.dumps(report, sort_keys=True, indent=2) + "\n")
        return {"stage": stage, "status": "run", "counts": result["counts"]}


def run_pipeline(config: PipelineConfig, stage: str = "all", *, force: bool = False) -> list[dict]:
    """Execute all stages up to ``stage`` (inclusive); ``all`` means export.

    Stages whose inputs are byte-identical to their last run are skipped
    unless ``force``. A lock file under the corpus root keeps concurrent
    runs out. Returns one status dict per stage considered.
    """
    if stage == "all":
        stage = STAGES[-1]
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)} or all")

    lock = config.corpus_root / ".coursekg.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise StageError("lock", f"another pipeline holds {lock}") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        runner = _Runner(config)
        results = []
        for name in STAGES[: STAGES.index(stage) + 1]:
            results.append(runner.run_stage(name, force))
        return results
    finally:
        lock.unlink(missing_ok=True)

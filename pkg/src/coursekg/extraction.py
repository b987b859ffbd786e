"""Term extraction from parsed documents and per-course graph assembly.

Knowledge points are found by gazetteer longest-match (plus optional regex
term rules) over folded body text, then attached beneath the deepest
heading whose body contains them. One node is created per distinct
(term, parent heading) pair; same-course fusion later unifies duplicates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .docmodel import DocumentTree, Heading
from .errors import ChainViolation, GazetteerError
from .graphcore import (
    CHAINS,
    Edge,
    EdgeType,
    EntityKind,
    KnowledgeGraph,
    KnowledgeNode,
    node_id,
)
from .textnorm import fold_for_match, fold_with_offsets, normalize_name

__all__ = [
    "Gazetteer",
    "GazetteerEntry",
    "TermOccurrence",
    "load_gazetteer",
    "extract_knowledge_points",
    "compute_term_stats",
    "build_course_graph",
]


@dataclass(frozen=True)
class GazetteerEntry:
    canonical: str
    aliases: tuple[str, ...] = ()
    description_wikiE: str | None = None
    description_wikiC: str | None = None
    description_baidu: str | None = None

    def descriptions(self) -> dict[str, str]:
        out = {}
        if self.description_wikiE:
            out["description_wikiE"] = self.description_wikiE
        if self.description_wikiC:
            out["description_wikiC"] = self.description_wikiC
        if self.description_baidu:
            out["description_baidu"] = self.description_baidu
        return out


@dataclass
class Gazetteer:
    """Curated term dictionary: canonical names, aliases, descriptions."""

    entries: dict[str, GazetteerEntry] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: dict[str, str] = {}
        for canonical in self.entries:
            key = normalize_name(canonical)
            if key in seen:
                raise GazetteerError(
                    f"terms {seen[key]!r} and {canonical!r} collide after normalization"
                )
            seen[key] = canonical

    def __len__(self) -> int:
        return len(self.entries)

    def surface_forms(self) -> dict[str, str]:
        """Folded surface form -> canonical term, canonicals winning clashes."""
        forms: dict[str, str] = {}
        for canonical, entry in self.entries.items():
            for alias in entry.aliases:
                folded = fold_for_match(alias).strip()
                if folded:
                    forms.setdefault(folded, canonical)
        for canonical in self.entries:
            folded = fold_for_match(canonical).strip()
            if folded:
                forms[folded] = canonical
        return forms


def load_gazetteer(path: str | Path) -> Gazetteer:
    """Load a tab-separated gazetteer file.

    One record per line: canonical term, then optional tab-separated
    fields: semicolon-separated aliases, wikiE/wikiC/baidu descriptions.
    Blank lines and ``#`` comments are skipped.
    """
    entries: dict[str, GazetteerEntry] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.rstrip("\n").split("\t")
        canonical = fields[0].strip()
        if not canonical:
            raise GazetteerError(f"line {lineno}: empty canonical term")
        if canonical in entries:
            raise GazetteerError(f"line {lineno}: duplicate term {canonical!r}")
        aliases = tuple(
            a.strip() for a in (fields[1].split(";") if len(fields) > 1 else []) if a.strip()
        )
        descs = [f.strip() or None for f in fields[2:5]]
        descs += [None] * (3 - len(descs))
        entries[canonical] = GazetteerEntry(canonical, aliases, *descs)
    return Gazetteer(entries)


@dataclass(frozen=True)
class TermOccurrence:
    """One located mention of a canonical term."""

    term: str
    heading: str  # heading id within the document tree
    offset: int   # absolute character offset in the source document


# --- matching ----------------------------------------------------------

def _candidates_in(
    folded: str, offsets: list[int], forms: dict[str, str], patterns: Sequence[re.Pattern[str]]
) -> list[tuple[int, int, str]]:
    """All (orig_offset, folded_length, canonical) candidate matches."""
    found: list[tuple[int, int, str]] = []
    for surface, canonical in forms.items():
        start = folded.find(surface)
        while start != -1:
            found.append((offsets[start], len(surface), canonical))
            start = folded.find(surface, start + 1)
    for pattern in patterns:
        for m in pattern.finditer(folded):
            if m.end() > m.start():
                term = normalize_name(m.group())
                if term:
                    found.append((offsets[m.start()], m.end() - m.start(), term))
    return found


def _resolve(found: list[tuple[int, int, str]]) -> list[tuple[int, str]]:
    """Non-overlapping selection: offset ascending, longest wins at a tie."""
    chosen: list[tuple[int, int, str]] = []
    last_end = -1
    for start, length, term in sorted(found, key=lambda t: (t[0], -t[1], t[2])):
        if start >= last_end:
            chosen.append((start, length, term))
            last_end = start + length
    return [(start, term) for start, length, term in chosen]


def extract_knowledge_points(
    tree: DocumentTree,
    gaz: Gazetteer,
    rules: Sequence[str] = (),
) -> list[TermOccurrence]:
    """Locate all term occurrences in the body text of ``tree``.

    Matching runs over folded text (NFKC + casefold, whitespace collapsed),
    so "Matched Filter" and "matched filter" are the same surface form.
    Overlaps resolve longest-match-first; the result is ordered by offset.
    ``rules`` are extra regular expressions whose matches become terms named
    by their normalized matched text.
    """
    patterns = [re.compile(r) for r in rules]
    if not gaz.entries and not patterns:
        raise GazetteerError("extraction needs a gazetteer or at least one term rule")
    forms = gaz.surface_forms()
    occurrences: list[TermOccurrence] = []
    for heading in tree.walk():
        if not heading.body:
            continue
        folded, offsets = fold_with_offsets(heading.body)
        found = _candidates_in(folded, offsets, forms, patterns)
        for rel_offset, term in _resolve(found):
            occurrences.append(
                TermOccurrence(term=term, heading=heading.hid, offset=heading.body_start + rel_offset)
            )
    occurrences.sort(key=lambda o: o.offset)
    return occurrences


def compute_term_stats(
    occurrences: Iterable[TermOccurrence],
) -> dict[str, dict[str, int]]:
    """Whole-document frequency and first-occurrence offset per term."""
    stats: dict[str, dict[str, int]] = {}
    for occ in occurrences:
        entry = stats.get(occ.term)
        if entry is None:
            stats[occ.term] = {"word_frequency": 1, "start": occ.offset}
        else:
            entry["word_frequency"] += 1
            entry["start"] = min(entry["start"], occ.offset)
    return stats


# --- graph assembly ---------------------------------------------------------

def _occurrence_line(heading: Heading, offset: int) -> int:
    rel = max(0, offset - heading.body_start)
    return heading.line + 1 + heading.body[:rel].count("\n")


def build_course_graph(
    tree: DocumentTree,
    occurrences: Iterable[TermOccurrence],
    gaz: Gazetteer | None = None,
) -> KnowledgeGraph:
    """Assemble the per-(course, source) graph from tree and occurrences.

    Produces one Course node, one node per heading (kind taken from the
    source's chain by depth), and one KnowledgePoint node per distinct
    (term, parent heading) with per-parent frequency and first offset.
    ``gaz`` supplies optional description attributes. Raises
    :class:`ChainViolation` when a heading depth exceeds the chain.
    """
    chain = CHAINS[tree.source]
    course = tree.meta.name
    source = tree.source
    nodes: list[KnowledgeNode] = []
    edges: list[Edge] = []

    course_locator = f"{tree.path}:1"
    course_attrs = tree.meta.as_attrs()
    cid = node_id(course, source, EntityKind.COURSE, course, course_locator)
    nodes.append(
        KnowledgeNode(
            id=cid,
            kind=EntityKind.COURSE,
            name=course,
            course=course,
            source=source,
            attrs=course_attrs,
            provenance=((source.value, course_locator),),
        )
    )

    heading_ids: dict[str, str] = {}
    headings: dict[str, Heading] = {}

    def add_heading(h: Heading, parent_gid: str) -> None:
        if h.depth >= len(chain) - 1:
            raise ChainViolation(
                f"depth {h.depth} has no kind in the {source.value} chain "
                f"(heading {h.title!r}, line {h.line})"
            )
        kind = chain[h.depth]
        locator = f"{h.path}:{h.line}"
        gid = node_id(course, source, kind, h.title, locator)
        heading_ids[h.hid] = gid
        headings[h.hid] = h
        nodes.append(
            KnowledgeNode(
                id=gid,
                kind=kind,
                name=h.title,
                course=course,
                source=source,
                attrs={"name": h.title, "ranker": h.ordinal, "level": h.depth, "url": locator},
                provenance=((source.value, locator),),
            )
        )
        edges.append(Edge(parent_gid, gid, EdgeType.HAS_PART_OF, (source.value,)))
        for child in h.children:
            add_heading(child, gid)

    for root in tree.roots:
        add_heading(root, cid)

    # Group occurrences per (heading, term), keeping first-offset order.
    grouped: dict[str, dict[str, list[int]]] = {}
    for occ in occurrences:
        grouped.setdefault(occ.heading, {}).setdefault(occ.term, []).append(occ.offset)

    point_rank = len(chain) - 1
    for hid in heading_ids:
        terms = grouped.get(hid)
        if not terms:
            continue
        heading = headings[hid]
        parent_gid = heading_ids[hid]
        ordered = sorted(terms.items(), key=lambda kv: (min(kv[1]), kv[0]))
        for ranker, (term, offs) in enumerate(ordered, start=1):
            start = min(offs)
            locator = f"{heading.path}:{_occurrence_line(heading, start)}"
            attrs: dict[str, object] = {
                "name": term,
                "ranker": ranker,
                "start": start,
                "word_frequency": len(offs),
                "url": locator,
                "level": heading.depth + 1,
            }
            if gaz is not None:
                entry = gaz.entries.get(term)
                if entry is not None:
                    attrs.update(entry.descriptions())
            pid = node_id(course, source, chain[point_rank], term, locator)
            nodes.append(
                KnowledgeNode(
                    id=pid,
                    kind=chain[point_rank],
                    name=term,
                    course=course,
                    source=source,
                    attrs=attrs,
                    provenance=((source.value, locator),),
                )
            )
            edges.append(Edge(parent_gid, pid, EdgeType.HAS_PART_OF, (source.value,)))

    return KnowledgeGraph(nodes, edges, scope=(frozenset({course}), frozenset({source})))

"""Entity-name normalization, anomaly detection, and term correction.

Extraction leaves behind recognizable damage: control characters, stray
formula fragments, script-mixed tokens, and misspellings introduced by
format conversion. Detection flags these per node; correction ranks
candidate replacements with a frequency-times-similarity scorer (or an
external corrector adapter) and never mutates a graph unless explicitly
applied.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from . import graphcore
from .graphcore import Edge, KnowledgeGraph, KnowledgeNode
from .textnorm import levenshtein, normalize_name, normalize_text

__all__ = [
    "Anomaly",
    "normalize_text",
    "detect_anomalies",
    "correct_term",
    "default_scorer",
    "build_lexicon",
    "apply_suggestions",
    "ANOMALY_REPORT_SCHEMA",
]

Scorer = Callable[[str, str], float]

ANOMALY_REPORT_SCHEMA = [
    "node_id",
    "category",
    "span_start",
    "span_end",
    "suggestion",
    "score",
]

# Categories, in the order they are checked per node.
CATEGORIES = (
    "EmptyName",
    "ControlCharacter",
    "MixedScriptFragment",
    "DanglingFormulaSymbol",
    "SuspectedMisspelling",
)

_EDIT_LIMIT = 2
_BRACKETS = {"(": ")", "[": "]", "{": "}"}
# Single-letter tokens that are ordinary words rather than formula residue.
_PLAIN_SINGLE = {"a", "i"}


@dataclass(frozen=True)
class Anomaly:
    """One detected defect in a node name."""

    node_id: str
    category: str
    span: tuple[int, int]
    suggestion: str | None = None
    score: float | None = None

    def as_row(self) -> list[object]:
        return [
            self.node_id,
            self.category,
            self.span[0],
            self.span[1],
            self.suggestion or "",
            self.score if self.score is not None else "",
        ]


# --- lexicon ---------------------------------------------------------------

def build_lexicon(
    terms: Iterable[str], counts: Mapping[str, int] | None = None
) -> dict[str, int]:
    """Term frequency table from gazetteer terms plus observed corpus counts.

    Keys are display forms; lookups elsewhere go through normalized keys.
    Every gazetteer term gets a floor frequency of 1.
    """
    lexicon: dict[str, int] = {}
    for term in terms:
        lexicon[term] = max(lexicon.get(term, 0), 1)
    if counts:
        for term, n in counts.items():
            lexicon[term] = lexicon.get(term, 0) + int(n)
    return lexicon


def _key_index(lexicon: Mapping[str, int]) -> dict[str, tuple[str, int]]:
    index: dict[str, tuple[str, int]] = {}
    for term, freq in lexicon.items():
        key = normalize_name(term)
        prior = index.get(key)
        if prior is None or freq > prior[1] or (freq == prior[1] and term < prior[0]):
            index[key] = (term, freq)
    return index


def default_scorer(lexicon: Mapping[str, int]) -> Scorer:
    """Default correction scorer: relative frequency x (1 - edit distance).

    Frequency is scaled by the lexicon maximum so scores stay in [0, 1];
    the scaling is a positive constant, so rankings match the raw
    frequency-times-similarity product.
    """
    index = _key_index(lexicon)
    max_freq = max((f for _, f in index.values()), default=1)

    def score(name: str, candidate: str) -> float:
        key_n = normalize_name(name)
        key_c = normalize_name(candidate)
        longest = max(len(key_n), len(key_c))
        similarity = 1.0 if longest == 0 else 1.0 - levenshtein(key_n, key_c) / longest
        freq = index.get(key_c, (candidate, 0))[1]
        return (freq / max_freq) * similarity

    return score


def correct_term(name: str, candidates: list[str], scorer: Scorer) -> str:
    """Return the argmax-scored candidate; ties break lexicographically."""
    if not candidates:
        raise ValueError("correct_term requires at least one candidate")
    best = min(candidates, key=lambda c: (-scorer(name, c), c))
    return best


# --- detection ----------------------------------------------------------

def _control_span(name: str) -> tuple[int, int] | None:
    for i, ch in enumerate(name):
        if unicodedata.category(ch) == "Cc":
            end = i + 1
            while end < len(name) and unicodedata.category(name[end]) == "Cc":
                end += 1
            return (i, end)
    return None


def _is_han(ch: str) -> bool:
    return "一" <= ch <= "鿿" or "㐀" <= ch <= "䶿"


def _mixed_script_span(name: str) -> tuple[int, int] | None:
    # A single token mixing Han and Latin letters is conversion residue;
    # separate tokens of different scripts are normal bilingual names.
    for m in re.finditer(r"\S+", name):
        token = m.group()
        if any(_is_han(c) for c in token) and any("a" <= c.lower() <= "z" for c in token):
            return m.span()
    return None


def _formula_span(name: str) -> tuple[int, int] | None:
    if name.count("$") % 2 == 1:
        return (name.index("$"), name.index("$") + 1)
    stack: list[tuple[str, int]] = []
    for i, ch in enumerate(name):
        if ch in _BRACKETS:
            stack.append((ch, i))
        elif ch in _BRACKETS.values():
            if not stack or _BRACKETS[stack[-1][0]] != ch:
                return (i, i + 1)
            stack.pop()
    if stack:
        return (stack[-1][1], stack[-1][1] + 1)
    tokens = list(re.finditer(r"\S+", name))
    if len(tokens) > 1:
        for m in tokens:
            token = m.group()
            if len(token) == 1 and token.isalpha() and token.casefold() not in _PLAIN_SINGLE:
                return m.span()
    return None


def _misspelling(
    name: str,
    key_index: Mapping[str, tuple[str, int]],
    scorer: Scorer,
) -> Anomaly | None:
    key = normalize_name(name)
    if not key or key in key_index:
        return None

    # Whole-name comparison: cheapest length prefilter, then exact distance.
    best: tuple[float, str] | None = None
    for cand_key, (term, _freq) in key_index.items():
        if abs(len(cand_key) - len(key)) > _EDIT_LIMIT:
            continue
        if levenshtein(key, cand_key) <= _EDIT_LIMIT:
            s = scorer(name, term)
            if best is None or s > best[0] or (s == best[0] and term < best[1]):
                best = (s, term)
    if best is not None:
        return Anomaly("", "SuspectedMisspelling", (0, len(name)), best[1], best[0])

    # Token-level: an out-of-vocabulary token close to a short lexicon term.
    token_vocab = {tok for k in key_index for tok in k.split()}
    for m in re.finditer(r"\S+", name):
        token_key = normalize_name(m.group())
        if not token_key or token_key in token_vocab:
            continue
        candidates = [
            term
            for cand_key, (term, _f) in key_index.items()
            if abs(len(cand_key) - len(token_key)) <= _EDIT_LIMIT
            and levenshtein(token_key, cand_key) <= _EDIT_LIMIT
        ]
        if candidates:
            term = correct_term(m.group(), candidates, scorer)
            fixed = name[: m.start()] + term + name[m.end() :]
            return Anomaly("", "SuspectedMisspelling", m.span(), fixed, scorer(m.group(), term))
    return None


def detect_anomalies(
    g: KnowledgeGraph,
    lexicon: Mapping[str, int],
    scorer: Scorer | None = None,
) -> list[Anomaly]:
    """Scan every node name for damage; clean graphs yield an empty list.

    Misspelling checks compare names (and out-of-vocabulary tokens) against
    the lexicon at edit distance <= 2; names already in the lexicon are
    never flagged.
    """
    scorer = scorer or default_scorer(lexicon)
    key_index = _key_index(lexicon)
    out: list[Anomaly] = []
    for node in g.node_list():
        name = node.name
        if not name.strip():
            out.append(Anomaly(node.id, "EmptyName", (0, len(name))))
            continue
        span = _control_span(name)
        if span:
            out.append(Anomaly(node.id, "ControlCharacter", span))
        span = _mixed_script_span(name)
        if span:
            out.append(Anomaly(node.id, "MixedScriptFragment", span))
        span = _formula_span(name)
        if span:
            out.append(Anomaly(node.id, "DanglingFormulaSymbol", span))
        miss = _misspelling(name, key_index, scorer)
        if miss:
            out.append(
                Anomaly(node.id, miss.category, miss.span, miss.suggestion, miss.score)
            )
    return out


# --- applying suggestions -------------------------------------------------

def apply_suggestions(
    g: KnowledgeGraph,
    anomalies: Iterable[Anomaly],
    min_score: float = 0.8,
) -> KnowledgeGraph:
    """Rebuild ``g`` with accepted misspelling suggestions applied.

    Only SuspectedMisspelling anomalies scoring at least ``min_score`` are
    applied. Renamed nodes get fresh content-derived ids; edges follow.
    """
    renames: dict[str, str] = {}
    for anomaly in anomalies:
        if (
            anomaly.category == "SuspectedMisspelling"
            and anomaly.suggestion
            and anomaly.score is not None
            and anomaly.score >= min_score
            and anomaly.node_id in g.nodes
        ):
            renames[anomaly.node_id] = anomaly.suggestion

    if not renames:
        return g

    id_map: dict[str, str] = {}
    new_nodes: list[KnowledgeNode] = []
    for node in g.node_list():
        new_name = renames.get(node.id)
        if new_name is None:
            id_map[node.id] = node.id
            new_nodes.append(node)
            continue
        attrs = dict(node.attrs)
        attrs["name"] = new_name
        locator = str(attrs.get("url", ""))
        new_id = graphcore.node_id(node.course, node.source, node.kind, new_name, locator)
        id_map[node.id] = new_id
        new_nodes.append(
            KnowledgeNode(
                id=new_id,
                kind=node.kind,
                name=new_name,
                course=node.course,
                source=node.source,
                attrs=attrs,
                provenance=node.provenance,
                word_frequency_total=node.word_frequency_total,
            )
        )
    new_edges = [
        Edge(id_map[e.src], id_map[e.dst], e.type, e.provenance) for e in g.edges()
    ]
    return KnowledgeGraph(new_nodes, new_edges, scope=g.scope)

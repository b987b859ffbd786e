"""Course-correlation analytics over fused, cross-linked graphs.

Correlation degree between courses i and j is the count of equivalence
edges between them divided by course i's node count, computed per source
(slides give Su, textbooks give Sv) and averaged into S. On top of S sit
row-normalized weight graphs with threshold pruning, spectral clustering
of the symmetrized matrix, concept frequency ranking, and the
per-course three-source concept intersection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .docmodel import SourceKind
from .errors import (
    CourseMismatch,
    EmptyCourse,
    KTooLarge,
    NonConvergence,
    UnknownCourse,
    UnknownPair,
)
from .graphcore import EdgeType, EntityKind, KnowledgeGraph
from .textnorm import normalize_name

__all__ = [
    "CourseGraphStats",
    "CorrelationMatrix",
    "WeightMatrix",
    "count_equiv_edges",
    "collect_course_stats",
    "source_correlation",
    "overall_correlation",
    "correlation_matrix",
    "most_relevant",
    "normalize_weights",
    "prune_weight_edges",
    "normalized_laplacian",
    "smallest_eigenpairs",
    "spectral_cluster",
    "frequency_ranking",
    "core_concepts_intersection",
    "CORRELATION_REPORT_SCHEMA",
    "MOST_RELEVANT_SCHEMA",
]

CORRELATION_REPORT_SCHEMA = ["course_i", "course_j", "Su", "Sv", "S"]
MOST_RELEVANT_SCHEMA = ["course", "most_relevant", "degree"]


@dataclass
class CourseGraphStats:
    """Node totals and per-pair equivalence counts for one course.

    ``None`` totals mean the course has no graph from that source; zero
    means the graph exists but is empty (an error for denominators).
    """

    course: str
    textbook_nodes: int | None = None          # Nv_i
    slide_nodes: int | None = None             # Nu_i
    textbook_sim: dict[str, int] = field(default_factory=dict)  # sim_v_{i,j}
    slide_sim: dict[str, int] = field(default_factory=dict)     # sim_u_{i,j}


def count_equiv_edges(
    g: KnowledgeGraph, ci: str, cj: str, source: SourceKind
) -> int:
    """Count ``equivalentTo`` edges between courses ``ci`` and ``cj``.

    ``g`` is a cross-course linked graph; only edges whose endpoints both
    come from ``source`` are counted.
    """
    if ci == cj:
        raise UnknownPair(f"equivalence counting needs two distinct courses, got {ci!r} twice")
    for c in (ci, cj):
        if c not in g.courses:
            raise UnknownCourse(f"course {c!r} is not in the graph scope")
    total = 0
    for edge in g.iter_edges(EdgeType.EQUIVALENT_TO):
        a = g.nodes[edge.src]
        b = g.nodes[edge.dst]
        if {a.course, b.course} == {ci, cj} and a.source is source and b.source is source:
            total += 1
    return total


def collect_course_stats(
    linked: Mapping[SourceKind, KnowledgeGraph], courses: Sequence[str]
) -> list[CourseGraphStats]:
    """Assemble :class:`CourseGraphStats` from per-source linked graphs."""
    stats = [CourseGraphStats(course=c) for c in courses]
    for source, attr_total, attr_sim in (
        (SourceKind.TEXTBOOK, "textbook_nodes", "textbook_sim"),
        (SourceKind.SLIDE, "slide_nodes", "slide_sim"),
    ):
        g = linked.get(source)
        if g is None:
            continue
        for st in stats:
            if st.course not in g.courses:
                continue
            setattr(st, attr_total, sum(1 for n in g.nodes.values() if n.course == st.course))
            sims = getattr(st, attr_sim)
            for other in courses:
                if other == st.course or other not in g.courses:
                    continue
                sims[other] = count_equiv_edges(g, st.course, other, source)
    return stats


def source_correlation(sim: int, n_i: int) -> float:
    """Single-source correlation degree: equivalence count over node total."""
    if n_i == 0:
        raise EmptyCourse("correlation denominator course has zero nodes")
    if sim < 0 or n_i < 0:
        raise ValueError("counts must be non-negative")
    return sim / n_i


def overall_correlation(su: float, sv: float) -> float:
    """Mean of the slide-based and textbook-based correlation degrees."""
    return (su + sv) / 2.0


@dataclass
class CorrelationMatrix:
    """Per-source and overall correlation degrees over a course list.

    Entries are ``nan`` where a source is unavailable; diagonals are zero
    and excluded from all reports. ``s`` is the mean over available
    sources, ``nan`` when neither source covers a pair.
    """

    courses: tuple[str, ...]
    su: np.ndarray
    sv: np.ndarray
    s: np.ndarray

    @classmethod
    def from_overall(cls, courses: Sequence[str], s: np.ndarray) -> "CorrelationMatrix":
        s = np.asarray(s, dtype=float)
        empty = np.full_like(s, np.nan)
        return cls(tuple(courses), empty.copy(), empty.copy(), s)

    def index(self, course: str) -> int:
        try:
            return self.courses.index(course)
        except ValueError:
            raise UnknownCourse(f"course {course!r} is not in the matrix") from None

    def value(self, ci: str, cj: str) -> float:
        return float(self.s[self.index(ci), self.index(cj)])

    def report_rows(self) -> list[list[object]]:
        """Ordered-pair rows mirroring the correlation table layout."""
        rows: list[list[object]] = []
        for i, ci in enumerate(self.courses):
            for j, cj in enumerate(self.courses):
                if i == j:
                    continue
                su = self.su[i, j]
                sv = self.sv[i, j]
                s = self.s[i, j]
                rows.append(
                    [
                        ci,
                        cj,
                        float(su) if math.isfinite(su) else "",
                        float(sv) if math.isfinite(sv) else "",
                        float(s) if math.isfinite(s) else "",
                    ]
                )
        return rows


def correlation_matrix(stats: Sequence[CourseGraphStats]) -> CorrelationMatrix:
    """Fill Su, Sv, and S for all ordered course pairs.

    A missing source contributes ``nan`` and is excluded from the mean; a
    present-but-empty source raises :class:`EmptyCourse`.
    """
    courses = tuple(st.course for st in stats)
    n = len(courses)
    su = np.full((n, n), np.nan)
    sv = np.full((n, n), np.nan)
    for i, st in enumerate(stats):
        for j, other in enumerate(courses):
            if i == j:
                continue
            if st.slide_nodes is not None:
                su[i, j] = source_correlation(st.slide_sim.get(other, 0), st.slide_nodes)
            if st.textbook_nodes is not None:
                sv[i, j] = source_correlation(st.textbook_sim.get(other, 0), st.textbook_nodes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-nan pairs
        s = np.nanmean(np.stack([su, sv]), axis=0)
    np.fill_diagonal(su, np.nan)
    np.fill_diagonal(sv, np.nan)
    np.fill_diagonal(s, 0.0)
    return CorrelationMatrix(courses, su, sv, s)


def most_relevant(matrix: CorrelationMatrix, ci: str) -> tuple[str, float]:
    """The course with the highest S(i, j); ties break lexicographically.

    Pairs without data count as zero, so an all-zero row returns the
    lexicographically first other course with value 0.
    """
    i = matrix.index(ci)
    if len(matrix.courses) < 2:
        raise UnknownCourse("most_relevant needs at least two courses")
    candidates: list[tuple[float, str]] = []
    for j, cj in enumerate(matrix.courses):
        if j == i:
            continue
        value = matrix.s[i, j]
        candidates.append((float(value) if math.isfinite(value) else 0.0, cj))
    best = min(candidates, key=lambda t: (-t[0], t[1]))
    return best[1], best[0]


@dataclass
class WeightMatrix:
    """Row-normalized correlation weights over the same course list."""

    courses: tuple[str, ...]
    w: np.ndarray
    s: np.ndarray  # the correlation degrees the weights came from


def normalize_weights(matrix: CorrelationMatrix, method: str = "rowsum") -> WeightMatrix:
    """Normalize each course's correlation row into weights.

    ``rowsum`` divides by the off-diagonal row sum (rows then sum to 1);
    ``minmax`` rescales each row's off-diagonal range to [0, 1]. Zero or
    constant rows map to zero rows; ``nan`` entries count as zero.
    """
    s = np.nan_to_num(matrix.s, nan=0.0)
    n = len(matrix.courses)
    mask = ~np.eye(n, dtype=bool)
    w = np.zeros_like(s)
    for i in range(n):
        row = s[i]
        off = row[mask[i]]
        if method == "rowsum":
            total = off.sum()
            if total > 0:
                w[i] = row / total
        elif method == "minmax":
            lo, hi = off.min(), off.max()
            if hi > lo:
                w[i] = (row - lo) / (hi - lo)
        else:
            raise ValueError(f"unknown weight normalization {method!r}")
        w[i, i] = 0.0
    return WeightMatrix(matrix.courses, w, s.copy())


def prune_weight_edges(
    wm: WeightMatrix, tau: float = 0.25
) -> list[tuple[str, str, float]]:
    """Directed weight edges at or above the pruning threshold."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {tau}")
    edges: list[tuple[str, str, float]] = []
    n = len(wm.courses)
    for i in range(n):
        for j in range(n):
            if i != j and wm.w[i, j] >= tau and wm.w[i, j] > 0.0:
                edges.append((wm.courses[i], wm.courses[j], float(wm.w[i, j])))
    return edges


# --- spectral clustering ----------------------------------------------------

def normalized_laplacian(a: np.ndarray) -> np.ndarray:
    """Symmetric normalized Laplacian; isolated rows keep their identity row."""
    a = np.asarray(a, dtype=float)
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    positive = deg > 0
    inv_sqrt[positive] = 1.0 / np.sqrt(deg[positive])
    lap = np.eye(len(a)) - (inv_sqrt[:, None] * a) * inv_sqrt[None, :]
    return lap


def smallest_eigenpairs(
    lap: np.ndarray,
    k: int,
    seed: int,
    tol: float = 1e-9,
    max_iter: int = 5000,
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic k smallest eigenpairs of a symmetric matrix.

    Subspace iteration on a spectrum flip of ``lap`` with a seeded random
    start, refined by Rayleigh-Ritz each sweep; converged when every
    residual ``max|L v - lambda v|`` drops to ``tol``. On hitting the
    iteration cap a :class:`NonConvergence` warning is issued and the
    current (partial-accuracy) pairs are returned.
    """
    lap = np.asarray(lap, dtype=float)
    n = len(lap)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    # Eigenvalues of a normalized Laplacian sit in [0, 2]; the shift makes
    # the smallest of L the dominant of M with all of M's spectrum positive.
    flip = 2.5 * np.eye(n) - lap
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    values = np.zeros(k)
    vectors = q
    for _ in range(max_iter):
        q, _ = np.linalg.qr(flip @ q)
        small = q.T @ lap @ q
        small = (small + small.T) / 2.0
        values, rotate = np.linalg.eigh(small)
        # A normalized Laplacian is positive semidefinite; snap eps-level
        # negative dust from the Rayleigh-Ritz step back onto the bound.
        values[(values < 0) & (values > -1e-12)] = 0.0
        vectors = q @ rotate
        residual = np.abs(lap @ vectors - vectors * values[None, :]).max()
        if residual <= tol:
            return values, vectors
    warnings.warn(
        f"eigensolver stopped at residual {residual:.3e} after {max_iter} iterations",
        NonConvergence,
        stacklevel=2,
    )
    return values, vectors


def _kmeans(x: np.ndarray, k: int, seed: int, max_iter: int = 100) -> np.ndarray:
    """Seeded k-means++ followed by Lloyd iterations; fully deterministic."""
    n = len(x)
    rng = np.random.default_rng(seed)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    dist = ((x - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = dist.sum()
        if total <= 0:
            centers[c] = x[int(np.argmax(dist))]
        else:
            centers[c] = x[rng.choice(n, p=dist / total)]
        dist = np.minimum(dist, ((x - centers[c]) ** 2).sum(axis=1))

    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        for c in range(k):
            members = x[new_labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # Reseat an empty cluster on the point farthest from its center.
                worst = int(np.argmax(d2[np.arange(n), new_labels]))
                centers[c] = x[worst]
                new_labels[worst] = c
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def spectral_cluster(
    matrix: CorrelationMatrix, k: int, seed: int
) -> dict[str, int]:
    """Cluster courses from the correlation matrix.

    Affinity is the symmetrized matrix ``(S + S^T) / 2`` with a zero
    diagonal; the spectral embedding takes the k smallest eigenvectors of
    the normalized Laplacian, unit-normalizes rows, and k-means (seeded)
    partitions them. Labels are renumbered by first occurrence in course
    order.
    """
    n = len(matrix.courses)
    if not 2 <= k <= n:
        raise KTooLarge(f"cluster count must satisfy 2 <= k <= {n}, got {k}")
    s = np.nan_to_num(matrix.s, nan=0.0)
    affinity = (s + s.T) / 2.0
    np.fill_diagonal(affinity, 0.0)
    lap = normalized_laplacian(affinity)
    _, vectors = smallest_eigenpairs(lap, k, seed)
    norms = np.linalg.norm(vectors, axis=1)
    rows = vectors.copy()
    positive = norms > 0
    rows[positive] /= norms[positive, None]
    raw = _kmeans(rows, k, seed)

    relabel: dict[int, int] = {}
    out: dict[str, int] = {}
    for course, label in zip(matrix.courses, raw):
        if int(label) not in relabel:
            relabel[int(label)] = len(relabel)
        out[course] = relabel[int(label)]
    return out


# --- concept statistics ----------------------------------------------------

def frequency_ranking(g: KnowledgeGraph, top_n: int) -> list[tuple[str, int]]:
    """Most frequent knowledge concepts, aggregated by normalized name.

    Fused nodes contribute their summed member frequencies; ties order
    alphabetically.
    """
    totals: dict[str, int] = {}
    for node in g.nodes_of_kind(EntityKind.KNOWLEDGE_POINT):
        key = normalize_name(node.name)
        totals[key] = totals.get(key, 0) + node.effective_frequency()
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[: max(0, top_n)]


def core_concepts_intersection(
    textbook: KnowledgeGraph,
    slide: KnowledgeGraph,
    syllabus: KnowledgeGraph,
) -> list[str]:
    """Normalized concept names present in all three source graphs of a course."""
    scopes = {frozenset(g.courses) for g in (textbook, slide, syllabus)}
    if len(scopes) != 1:
        raise CourseMismatch(f"graphs cover different courses: {sorted(map(sorted, scopes))}")

    def names(g: KnowledgeGraph) -> set[str]:
        return {normalize_name(n.name) for n in g.nodes_of_kind(EntityKind.KNOWLEDGE_POINT)}

    shared = names(textbook) & names(slide) & names(syllabus)
    return sorted(shared)

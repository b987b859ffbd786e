"""Unicode text normalization primitives shared across the package.

All matching, clustering, and indexing keys are derived from the two
functions here so that every module agrees on what "the same name" means.
"""

from __future__ import annotations

import unicodedata

__all__ = [
    "normalize_text",
    "normalize_name",
    "fold_for_match",
    "fold_with_offsets",
    "levenshtein",
]


def normalize_text(s: str) -> str:
    """Return ``s`` compatibility-normalized with collapsed whitespace.

    NFKC folds full-width latin letters and digits to half-width; runs of
    whitespace collapse to a single space; leading and trailing whitespace
    is stripped. Letter case is preserved (callers that need
    case-insensitive keys fold separately).
    """
    folded = unicodedata.normalize("NFKC", s)
    return " ".join(folded.split())


def normalize_name(name: str) -> str:
    """Return the matching key for an entity name.

    Applies :func:`normalize_text`, case-folds, and strips terminal
    punctuation, so "Anti-noise Performance." and "anti-noise performance"
    map to the same key.
    """
    key = normalize_text(name).casefold()
    end = len(key)
    while end > 0 and (
        unicodedata.category(key[end - 1]).startswith("P") or key[end - 1].isspace()
    ):
        end -= 1
    return key[:end]


def fold_for_match(s: str) -> str:
    """Return the case-folded matching form of ``s`` (offsets discarded)."""
    return fold_with_offsets(s)[0]


def fold_with_offsets(s: str) -> tuple[str, list[int]]:
    """Fold ``s`` for matching, keeping a map back to original offsets.

    Folding is per-character NFKC plus casefold with whitespace runs
    collapsed to one space, so gazetteer terms can be located in folded
    body text and reported at their original character offsets. Returns
    ``(folded, offsets)`` where ``offsets[i]`` is the index in ``s`` of the
    character that produced ``folded[i]``.
    """
    out: list[str] = []
    offsets: list[int] = []
    prev_space = False
    for i, ch in enumerate(s):
        folded = unicodedata.normalize("NFKC", ch).casefold()
        for f in folded:
            if f.isspace():
                if not prev_space:
                    out.append(" ")
                    offsets.append(i)
                prev_space = True
            else:
                out.append(f)
                offsets.append(i)
                prev_space = False
    return "".join(out), offsets


def levenshtein(a: str, b: str) -> int:
    """Edit distance between ``a`` and ``b`` over Unicode scalar values."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]

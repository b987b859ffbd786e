"""Parsing of canonical course documents into heading trees.

The canonical document format is line-oriented UTF-8: an optional front
matter block delimited by ``---`` lines holding ``key: value`` pairs,
followed by headings recognized by configurable regular expressions, with
free body text accruing to the nearest preceding heading. The default
heading rules accept markdown hashes (``#``/``##``/``###``) and dotted
numeric prefixes (``1.``, ``1.2``, ``1.2.3``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .errors import ConfigError, DepthJump, MalformedFrontMatter, MissingName, NoHeadings

__all__ = [
    "SourceKind",
    "CourseMeta",
    "Heading",
    "DocumentTree",
    "HeadingRules",
    "parse_front_matter",
    "parse_course_document",
    "to_outline_text",
    "tree_structure",
]


class SourceKind(str, Enum):
    """Kind of teaching resource a document (or graph) came from."""

    TEXTBOOK = "Textbook"
    SLIDE = "Slide"
    SYLLABUS = "Syllabus"

    @property
    def max_heading_depth(self) -> int:
        # Textbook/Slide documents carry unit/chapter/block headings;
        # syllabi carry teaching-content headings only.
        return 3 if self is not SourceKind.SYLLABUS else 1


# Front-matter keys, in canonical emission order. The last two hold
# semicolon-separated lists.
_META_KEYS = (
    "school_term",
    "name",
    "background",
    "url",
    "coursePrerequisites",
    "educationalAlignments",
)
_LIST_KEYS = {"coursePrerequisites", "educationalAlignments"}


@dataclass(frozen=True)
class CourseMeta:
    """Course-level attributes carried by a document's front matter."""

    name: str
    school_term: str = ""
    background: str = ""
    url: str = ""
    course_prerequisites: tuple[str, ...] = ()
    educational_alignments: tuple[str, ...] = ()

    def as_attrs(self) -> dict[str, object]:
        """Course attributes keyed by their canonical attribute names."""
        return {
            "school_term": self.school_term,
            "name": self.name,
            "background": self.background,
            "url": self.url,
            "coursePrerequisites": list(self.course_prerequisites),
            "educationalAlignments": list(self.educational_alignments),
        }


@dataclass
class Heading:
    """One heading of a parsed document, with its body text span."""

    hid: str            # dotted ordinal path, e.g. "2.1.3"
    title: str
    depth: int          # 1-based heading depth
    ordinal: int        # 1-based index within its sibling group
    line: int           # 1-based line number of the heading itself
    path: str           # document path the heading came from
    body: str = ""      # raw body lines joined by "\n" (may be empty)
    body_start: int = 0  # absolute char offset of the body in the document
    children: list["Heading"] = field(default_factory=list)

    @property
    def locator(self) -> tuple[str, int]:
        return (self.path, self.line)


@dataclass
class DocumentTree:
    """Heading hierarchy of one course document."""

    meta: CourseMeta
    source: SourceKind
    roots: list[Heading]
    path: str = "<memory>"

    def walk(self) -> Iterator[Heading]:
        """Yield headings depth-first in document order."""
        stack = list(reversed(self.roots))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def heading(self, hid: str) -> Heading:
        for h in self.walk():
            if h.hid == hid:
                return h
        raise KeyError(hid)


# --- heading rules ---------------------------------------------------------

# Most specific first so "1.2.3 ..." is not claimed by the depth-1 rule.
_DEFAULT_PATTERNS = [
    (r"^###\s+(?P<title>.+?)\s*$", 3),
    (r"^##\s+(?P<title>.+?)\s*$", 2),
    (r"^#\s+(?P<title>.+?)\s*$", 1),
    (r"^\d+\.\d+\.\d+\.?\s+(?P<title>.+?)\s*$", 3),
    (r"^\d+\.\d+\s+(?P<title>.+?)\s*$", 2),
    (r"^\d+\.\s+(?P<title>.+?)\s*$", 1),
]


@dataclass
class HeadingRules:
    """Ordered heading patterns for one source kind.

    Each rule is ``(regex, depth)``; the first matching pattern wins. The
    regex must expose the heading title either as a named group ``title``
    or as group 1.
    """

    source: SourceKind
    rules: list[tuple[re.Pattern[str], int]]

    @classmethod
    def default(cls, source: SourceKind) -> "HeadingRules":
        patterns = [
            (re.compile(p), d)
            for p, d in _DEFAULT_PATTERNS
            if d <= source.max_heading_depth
        ]
        return cls(source=source, rules=patterns)

    @classmethod
    def from_pairs(cls, source: SourceKind, pairs: list[tuple[str, int]]) -> "HeadingRules":
        try:
            rules = [(re.compile(p), int(d)) for p, d in pairs]
        except re.error as exc:
            raise ConfigError(f"bad heading pattern: {exc}") from exc
        hr = cls(source=source, rules=rules)
        hr.check()
        return hr

    def check(self) -> None:
        depths = {d for _, d in self.rules}
        needed = range(1, self.source.max_heading_depth + 1)
        missing = [d for d in needed if d not in depths]
        if missing:
            raise ConfigError(
                f"{self.source.value} heading rules lack patterns for depths {missing}"
            )

    def match(self, line: str) -> tuple[str, int] | None:
        """Return ``(title, depth)`` for the first rule matching ``line``."""
        for pattern, depth in self.rules:
            m = pattern.match(line)
            if m:
                groups = m.groupdict()
                title = groups.get("title") if "title" in groups else None
                if title is None:
                    title = m.group(1) if m.groups() else line.strip()
                return title, depth
        return None


# --- front matter ---------------------------------------------------------

def _split_front_matter(text: str) -> tuple[list[str] | None, int, int]:
    """Split off a leading front-matter block.

    Returns ``(block_lines, next_line_index, next_char_offset)`` where the
    block lines exclude the ``---`` delimiters. ``block_lines`` is None when
    the document does not start with a delimiter.
    """
    lines = text.split("\n")
    if not lines or lines[0].strip() != "---":
        return None, 0, 0
    offset = len(lines[0]) + 1
    block: list[str] = []
    for i, line in enumerate(lines[1:], start=1):
        offset += len(line) + 1
        if line.strip() == "---":
            return block, i + 1, offset
        block.append(line)
    raise MalformedFrontMatter("front matter opened with '---' but never closed")


def _meta_from_block(block: list[str]) -> CourseMeta:
    values: dict[str, str] = {}
    for line in block:
        if not line.strip():
            continue
        if ":" not in line:
            raise MalformedFrontMatter(f"front-matter line without ':': {line!r}")
        key, _, value = line.partition(":")
        values[key.strip()] = value.strip()
    if not values.get("name"):
        raise MissingName("front matter has no 'name' entry")

    def as_list(key: str) -> tuple[str, ...]:
        raw = values.get(key, "")
        return tuple(part.strip() for part in raw.split(";") if part.strip())

    return CourseMeta(
        name=values["name"],
        school_term=values.get("school_term", ""),
        background=values.get("background", ""),
        url=values.get("url", ""),
        course_prerequisites=as_list("coursePrerequisites"),
        educational_alignments=as_list("educationalAlignments"),
    )


def parse_front_matter(text: str) -> CourseMeta:
    """Parse the leading ``---``-delimited key:value block of a document.

    All six course attributes are always populated; keys absent from the
    block default to empty strings/lists. Raises :class:`MalformedFrontMatter`
    when the document does not begin with a balanced block and
    :class:`MissingName` when the block has no ``name``.
    """
    block, _, _ = _split_front_matter(text)
    if block is None:
        raise MalformedFrontMatter("document does not begin with a '---' block")
    return _meta_from_block(block)


# --- document parsing ---------------------------------------------------

def parse_course_document(
    text: str,
    rules: HeadingRules,
    *,
    path: str = "<memory>",
    fallback_name: str | None = None,
) -> DocumentTree:
    """Parse one course document into a :class:`DocumentTree`.

    Front matter is optional here; when absent, ``fallback_name`` supplies
    the course name (raising :class:`MissingName` when neither exists).
    Lines matched by a heading rule become tree nodes at the rule's depth;
    all other lines accrue to the body of the nearest preceding heading
    (text before the first heading is dropped). Raises
    :class:`NoHeadings` when nothing matched and :class:`DepthJump` when a
    heading is more than one level deeper than its parent.
    """
    block, first_line, first_offset = _split_front_matter(text)
    if block is not None:
        meta = _meta_from_block(block)
    elif fallback_name:
        meta = CourseMeta(name=fallback_name)
    else:
        raise MissingName("document has no front matter and no fallback name")

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # final-newline artifact, not a body line
    roots: list[Heading] = []
    stack: list[Heading] = []  # open headings, one per depth
    current: Heading | None = None
    body_lines: list[str] = []
    body_offset = 0

    def flush_body() -> None:
        nonlocal body_lines
        if current is not None:
            current.body = "\n".join(body_lines)
            current.body_start = body_offset
        body_lines = []

    offset = first_offset
    for lineno in range(first_line, len(lines)):
        line = lines[lineno]
        matched = rules.match(line)
        if matched is None:
            if current is not None:
                if not body_lines:
                    body_offset = offset
                body_lines.append(line)
            offset += len(line) + 1
            continue

        title, depth = matched
        flush_body()
        while stack and stack[-1].depth >= depth:
            stack.pop()
        parent_depth = stack[-1].depth if stack else 0
        if depth > parent_depth + 1:
            raise DepthJump(
                f"heading {title!r} at depth {depth} under depth {parent_depth}",
                line=lineno + 1,
            )
        siblings = stack[-1].children if stack else roots
        ordinal = len(siblings) + 1
        hid = f"{stack[-1].hid}.{ordinal}" if stack else str(ordinal)
        node = Heading(
            hid=hid,
            title=title,
            depth=depth,
            ordinal=ordinal,
            line=lineno + 1,
            path=path,
            body_start=offset + len(line) + 1,
        )
        siblings.append(node)
        stack.append(node)
        current = node
        offset += len(line) + 1

    flush_body()
    if not roots:
        raise NoHeadings(f"no heading rule matched any line of {path}")
    return DocumentTree(meta=meta, source=rules.source, roots=roots, path=path)


# --- serialization ----------------------------------------------------------

def to_outline_text(tree: DocumentTree) -> str:
    """Serialize a tree back to canonical outline text.

    Headings are emitted as markdown hashes, so re-parsing the output with
    the default rules reproduces the same structure (titles, depths,
    ordinals, and bodies; line numbers are canonical to this layout).
    """
    meta = tree.meta.as_attrs()
    out: list[str] = ["---"]
    for key in _META_KEYS:
        value = meta[key]
        if isinstance(value, list):
            value = "; ".join(value)
        out.append(f"{key}: {value}")
    out.append("---")
    for heading in tree.walk():
        out.append("#" * heading.depth + " " + heading.title)
        if heading.body:
            out.append(heading.body)
    return "\n".join(out) + "\n"


def tree_structure(tree: DocumentTree) -> tuple:
    """Locator-free fingerprint of a tree (for round-trip comparisons)."""
    headings = tuple(
        (h.hid, h.depth, h.ordinal, h.title, h.body.strip()) for h in tree.walk()
    )
    return (tree.meta, tree.source, headings)

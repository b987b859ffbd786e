"""Exception types raised across the package."""

from __future__ import annotations

__all__ = [
    "CourseKGError",
    "MissingName",
    "MalformedFrontMatter",
    "NoHeadings",
    "DepthJump",
    "GazetteerError",
    "ChainViolation",
    "InvalidGraph",
    "PolicyDisabled",
    "CrossCourseInput",
    "SameCourseInput",
    "UnknownCourse",
    "UnknownPair",
    "EmptyCourse",
    "KTooLarge",
    "CourseMismatch",
    "SchemaMismatch",
    "AdapterUnavailable",
    "ConfigError",
    "StageError",
    "NonConvergence",
]


class CourseKGError(Exception):
    """Base class for all errors raised by this package."""


# --- document parsing ---------------------------------------------------

class MissingName(CourseKGError):
    """A course document (or its caller) provided no course name."""


class MalformedFrontMatter(CourseKGError):
    """Front-matter block is missing or its delimiters are unbalanced."""


class NoHeadings(CourseKGError):
    """No line of the document matched any heading rule."""


class DepthJump(CourseKGError):
    """A heading is more than one level deeper than its parent."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


# --- extraction / graph model -------------------------------------------

class GazetteerError(CourseKGError):
    """Gazetteer file is malformed or contains duplicate terms."""


class ChainViolation(CourseKGError):
    """A heading depth has no entity kind in the source's ontology chain."""


class InvalidGraph(CourseKGError):
    """Operation requires a graph that passes validation."""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


# --- fusion ----------------------------------------------------------------

class PolicyDisabled(CourseKGError):
    """All matching mechanisms of a MatchPolicy are switched off."""


class CrossCourseInput(CourseKGError):
    """Same-course fusion received graphs from more than one course."""


class SameCourseInput(CourseKGError):
    """Cross-course linking received two graphs of the same course."""


# --- analytics ---------------------------------------------------------

class UnknownCourse(CourseKGError):
    """A named course is not present in the graph or matrix."""


class UnknownPair(CourseKGError):
    """Equivalence-edge counting was asked for a course paired with itself."""


class EmptyCourse(CourseKGError):
    """A correlation denominator course has zero nodes."""


class KTooLarge(CourseKGError):
    """Requested cluster count is outside 2..n."""


class CourseMismatch(CourseKGError):
    """Per-source graphs handed to an intersection cover different courses."""


class NonConvergence(UserWarning):
    """Iterative solver hit its iteration cap; partial result returned."""


# --- export / pipeline ---------------------------------------------------

class SchemaMismatch(CourseKGError):
    """Report rows do not conform to the declared column schema."""


class AdapterUnavailable(CourseKGError):
    """An external adapter process could not be started or has died."""


class ConfigError(CourseKGError):
    """Pipeline configuration is missing, malformed, or out of range."""


class StageError(CourseKGError):
    """A pipeline stage failed; carries the originating error."""

    def __init__(self, stage: str, cause: BaseException | str):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause if isinstance(cause, BaseException) else None

"""Exception hierarchy shared across the package.

Errors carry machine-readable context (field paths, practice indices,
HTTP status) so callers can map them to API error codes without string
matching.
"""

from __future__ import annotations


class TutorcraftError(Exception):
    """Base class for all package errors."""

    code = "error"


# ---- domain model ----


class EmptyPersona(TutorcraftError):
    """Both persona fields are empty or whitespace-only."""

    code = "empty_persona"


# ---- course import/export ----


class ParseError(TutorcraftError):
    """Input document is not well-formed (bad UTF-8, bad JSON, bad CSV)."""

    code = "parse_error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(TutorcraftError):
    """Document is well-formed but has the wrong shape."""

    code = "schema_error"

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ValidationError(TutorcraftError):
    """Course violates draft-mode invariants; carries the full report."""

    code = "validation_error"

    def __init__(self, report):
        super().__init__("; ".join(f"{v.path}: {v.message}" for v in report.violations))
        self.report = report


# ---- generation pipeline ----


class DraftCourse(TutorcraftError):
    """Generation requested for a course that fails publish validation."""

    code = "draft_course"

    def __init__(self, report):
        super().__init__("course fails publish validation")
        self.report = report


class OutputError(TutorcraftError):
    """Base for recoverable LLM-output failures (repairable)."""


class MalformedOutput(OutputError):
    """No parsable JSON object in the model response."""

    code = "malformed_output"


class SchemaMismatch(OutputError):
    """Response JSON has missing or extra fields."""

    code = "schema_mismatch"

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class StructureViolation(OutputError):
    """Curriculum response breaks the section bijection (missing,
    duplicated, reordered, or invented section ids)."""

    code = "structure_violation"

    def __init__(self, message: str, section_ids: tuple[str, ...] = ()):
        super().__init__(message)
        self.section_ids = section_ids


class InvalidPractice(OutputError):
    """A generated practice exercise violates the exercise invariants."""

    code = "invalid_practice"

    def __init__(self, message: str, practice_index: int):
        super().__init__(f"practices[{practice_index}]: {message}")
        self.practice_index = practice_index


class CurriculumNotSaved(TutorcraftError):
    """Content generation requires a curriculum in state saved."""

    code = "curriculum_not_saved"


class VersionMismatch(TutorcraftError):
    """Course was edited after the curriculum was generated."""

    code = "version_mismatch"


class UnknownSection(TutorcraftError):
    code = "unknown_section"


class UnknownSubsection(TutorcraftError):
    code = "unknown_subsection"


class RepairExhausted(TutorcraftError):
    """All repair turns produced invalid output."""

    code = "repair_exhausted"

    def __init__(self, message: str, last_error: Exception | None = None):
        super().__init__(message)
        self.last_error = last_error


class IndexOutOfRange(TutorcraftError):
    code = "index_out_of_range"


class TemplateError(TutorcraftError):
    """Prompt template is malformed or uses an unknown placeholder."""

    code = "template_error"


# ---- provider ----


class ProviderError(TutorcraftError):
    """Base for chat-completion backend failures."""

    code = "provider_error"


class AuthError(ProviderError):
    code = "auth_error"


class RateLimited(ProviderError):
    code = "rate_limited"


class UpstreamError(ProviderError):
    code = "upstream_error"


class ProviderTimeout(ProviderError):
    code = "timeout"


class MalformedUpstreamResponse(ProviderError):
    code = "malformed_upstream_response"


# ---- storage ----


class StorageError(TutorcraftError):
    code = "storage_error"


class ConfigError(TutorcraftError):
    code = "config_error"

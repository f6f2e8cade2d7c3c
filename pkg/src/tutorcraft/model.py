"""Canonical domain types: courses, personas, curricula, generated content.

All types are immutable value objects; the operations here are pure
functions, so everything is safe to share between threads.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable

from .errors import EmptyPersona

_UNIT_SEP = "\x1f"
_WS_RUN = re.compile(r"\s+")


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---- course tree ----


@dataclass(frozen=True)
class ChoiceOption:
    text: str
    feedback: str


@dataclass(frozen=True)
class PracticeExercise:
    id: str
    stem: str
    choices: tuple[ChoiceOption, ...]
    correct_index: int


@dataclass(frozen=True)
class Subsection:
    id: str
    title: str
    body: str
    example_exercises: tuple[PracticeExercise, ...] = ()


@dataclass(frozen=True)
class Section:
    id: str
    title: str
    summary: str
    scope: str
    learning_goals: tuple[str, ...]
    subsections: tuple[Subsection, ...]


@dataclass(frozen=True)
class Course:
    id: str
    title: str
    description: str
    sections: tuple[Section, ...]
    # Digest of all teacher-authored fields; recomputed on construction
    # so it can never go stale after an edit-by-replace.
    version_hash: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "version_hash", compute_version_hash(self))

    def section(self, section_id: str) -> Section | None:
        for s in self.sections:
            if s.id == section_id:
                return s
        return None


def exercise_to_dict(ex: PracticeExercise) -> dict[str, Any]:
    return {
        "id": ex.id,
        "stem": ex.stem,
        "choices": [{"text": c.text, "feedback": c.feedback} for c in ex.choices],
        "correct_index": ex.correct_index,
    }


def course_to_dict(course: Course) -> dict[str, Any]:
    """Map a course to plain data holding exactly the teacher-authored fields."""
    return {
        "id": course.id,
        "title": course.title,
        "description": course.description,
        "sections": [
            {
                "id": s.id,
                "title": s.title,
                "summary": s.summary,
                "scope": s.scope,
                "learning_goals": list(s.learning_goals),
                "subsections": [
                    {
                        "id": ss.id,
                        "title": ss.title,
                        "body": ss.body,
                        "example_exercises": [exercise_to_dict(ex) for ex in ss.example_exercises],
                    }
                    for ss in s.subsections
                ],
            }
            for s in course.sections
        ],
    }


def compute_version_hash(course: Course) -> str:
    """Digest over a canonical serialization of all teacher-authored fields.

    Insensitive to serialization whitespace, sensitive to any content or
    ordering change (including section reordering).
    """
    canonical = json.dumps(course_to_dict(course), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return _digest(canonical)


# ---- validation ----


class ValidationMode(str, Enum):
    DRAFT = "draft"
    PUBLISH = "publish"


@dataclass(frozen=True)
class Violation:
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_list(self) -> list[dict[str, str]]:
        return [{"path": v.path, "message": v.message} for v in self.violations]


def _check_exercise(ex: PracticeExercise, path: str, out: list[Violation]) -> None:
    if not ex.stem.strip():
        out.append(Violation(f"{path}.stem", "stem must be nonempty"))
    if not 2 <= len(ex.choices) <= 6:
        out.append(Violation(f"{path}.choices", f"must have 2 to 6 choices, got {len(ex.choices)}"))
    if not 0 <= ex.correct_index < len(ex.choices):
        out.append(Violation(f"{path}.correct_index", f"index {ex.correct_index} out of range for {len(ex.choices)} choices"))
    for k, choice in enumerate(ex.choices):
        if not choice.text.strip():
            out.append(Violation(f"{path}.choices[{k}].text", "choice text must be nonempty"))
        if not choice.feedback.strip():
            out.append(Violation(f"{path}.choices[{k}].feedback", "every choice requires feedback"))


def _check_duplicates(ids: Iterable[str], path_fmt: str, out: list[Violation]) -> None:
    seen: dict[str, int] = {}
    for i, item_id in enumerate(ids):
        if item_id in seen:
            out.append(
                Violation(
                    path_fmt.format(i),
                    f"duplicate id {item_id!r}, first used at {path_fmt.format(seen[item_id])}",
                )
            )
        else:
            seen[item_id] = i


def validate_course(course: Course, mode: ValidationMode = ValidationMode.DRAFT) -> ValidationReport:
    """Check structural invariants; publish mode additionally requires
    nonempty scope, learning goals, and subsection bodies.

    Violations are data, not errors: the report is returned, never raised.
    """
    out: list[Violation] = []
    publish = mode == ValidationMode.PUBLISH

    if not course.title.strip():
        out.append(Violation("title", "title must be nonempty"))
    if not course.sections:
        out.append(Violation("sections", "course requires at least one section"))
    _check_duplicates((s.id for s in course.sections), "sections[{}].id", out)

    for i, sec in enumerate(course.sections):
        spath = f"sections[{i}]"
        if not sec.title.strip():
            out.append(Violation(f"{spath}.title", "title must be nonempty"))
        if not sec.subsections:
            out.append(Violation(f"{spath}.subsections", "section requires at least one subsection"))
        _check_duplicates((ss.id for ss in sec.subsections), spath + ".subsections[{}].id", out)
        for g, goal in enumerate(sec.learning_goals):
            if not goal.strip():
                out.append(Violation(f"{spath}.learning_goals[{g}]", "learning goal must be nonempty"))
        if publish:
            if not sec.scope.strip():
                out.append(Violation(f"{spath}.scope", "scope is required to publish"))
            if not sec.learning_goals:
                out.append(Violation(f"{spath}.learning_goals", "at least one learning goal is required to publish"))
        for j, ss in enumerate(sec.subsections):
            sspath = f"{spath}.subsections[{j}]"
            if not ss.title.strip():
                out.append(Violation(f"{sspath}.title", "title must be nonempty"))
            if publish and not ss.body.strip():
                out.append(Violation(f"{sspath}.body", "body is required to publish"))
            for k, ex in enumerate(ss.example_exercises):
                _check_exercise(ex, f"{sspath}.example_exercises[{k}]", out)

    return ValidationReport(tuple(out))


# ---- persona ----


@dataclass(frozen=True)
class Persona:
    interests: str = ""
    career_goals: str = ""


def _normalize(text: str) -> str:
    return _WS_RUN.sub(" ", text.strip()).casefold()


def derive_persona_key(persona: Persona) -> str:
    """Deterministic cache identity for a persona.

    Normalization: trim, collapse internal whitespace, case-fold. Field
    order is part of the identity.
    """
    interests = _normalize(persona.interests)
    goals = _normalize(persona.career_goals)
    if not interests and not goals:
        raise EmptyPersona("persona requires interests or career goals")
    return _digest(interests + _UNIT_SEP + goals)


# ---- personalization artifacts ----


class CurriculumState(str, Enum):
    GENERATED = "generated"
    SAVED = "saved"


@dataclass(frozen=True)
class CurriculumEntry:
    section_id: str
    personalized_title: str
    personalized_summary: str
    analogy_theme: str


@dataclass(frozen=True)
class PersonalizedCurriculum:
    id: str
    course_id: str
    course_version_hash: str
    persona_key: str
    state: CurriculumState
    entries: tuple[CurriculumEntry, ...]

    def saved(self) -> "PersonalizedCurriculum":
        # generated -> saved is the only legal transition; saving twice is a no-op
        return replace(self, state=CurriculumState.SAVED)


@dataclass(frozen=True)
class GenerationMeta:
    model_id: str
    prompt_hash: str
    created_at: datetime
    provider_latency: float

    @staticmethod
    def now(model_id: str, prompt_hash: str, provider_latency: float) -> "GenerationMeta":
        return GenerationMeta(model_id, prompt_hash, datetime.now(timezone.utc), provider_latency)


@dataclass(frozen=True)
class GeneratedContent:
    id: str
    course_id: str
    course_version_hash: str
    persona_key: str
    curriculum_id: str
    section_id: str
    subsection_id: str
    body: str
    practices: tuple[PracticeExercise, ...]
    meta: GenerationMeta


# ---- plain-data codecs for curricula and content (cache payloads) ----


def meta_to_dict(meta: GenerationMeta) -> dict[str, Any]:
    return {
        "model_id": meta.model_id,
        "prompt_hash": meta.prompt_hash,
        "created_at": meta.created_at.isoformat(),
        "provider_latency": meta.provider_latency,
    }


def meta_from_dict(data: dict[str, Any]) -> GenerationMeta:
    return GenerationMeta(
        model_id=data["model_id"],
        prompt_hash=data["prompt_hash"],
        created_at=datetime.fromisoformat(data["created_at"]),
        provider_latency=data["provider_latency"],
    )


def curriculum_to_dict(cur: PersonalizedCurriculum) -> dict[str, Any]:
    return {
        "id": cur.id,
        "course_id": cur.course_id,
        "course_version_hash": cur.course_version_hash,
        "persona_key": cur.persona_key,
        "state": cur.state.value,
        "entries": [
            {
                "section_id": e.section_id,
                "personalized_title": e.personalized_title,
                "personalized_summary": e.personalized_summary,
                "analogy_theme": e.analogy_theme,
            }
            for e in cur.entries
        ],
    }


def curriculum_from_dict(data: dict[str, Any]) -> PersonalizedCurriculum:
    return PersonalizedCurriculum(
        id=data["id"],
        course_id=data["course_id"],
        course_version_hash=data["course_version_hash"],
        persona_key=data["persona_key"],
        state=CurriculumState(data["state"]),
        entries=tuple(
            CurriculumEntry(
                section_id=e["section_id"],
                personalized_title=e["personalized_title"],
                personalized_summary=e["personalized_summary"],
                analogy_theme=e["analogy_theme"],
            )
            for e in data["entries"]
        ),
    )


def exercise_from_dict(data: dict[str, Any]) -> PracticeExercise:
    return PracticeExercise(
        id=data["id"],
        stem=data["stem"],
        choices=tuple(ChoiceOption(text=c["text"], feedback=c["feedback"]) for c in data["choices"]),
        correct_index=data["correct_index"],
    )


def content_to_dict(content: GeneratedContent) -> dict[str, Any]:
    return {
        "id": content.id,
        "course_id": content.course_id,
        "course_version_hash": content.course_version_hash,
        "persona_key": content.persona_key,
        "curriculum_id": content.curriculum_id,
        "section_id": content.section_id,
        "subsection_id": content.subsection_id,
        "body": content.body,
        "practices": [exercise_to_dict(p) for p in content.practices],
        "meta": meta_to_dict(content.meta),
    }


def content_from_dict(data: dict[str, Any]) -> GeneratedContent:
    return GeneratedContent(
        id=data["id"],
        course_id=data["course_id"],
        course_version_hash=data["course_version_hash"],
        persona_key=data["persona_key"],
        curriculum_id=data["curriculum_id"],
        section_id=data["section_id"],
        subsection_id=data["subsection_id"],
        body=data["body"],
        practices=tuple(exercise_from_dict(p) for p in data["practices"]),
        meta=meta_from_dict(data["meta"]),
    )

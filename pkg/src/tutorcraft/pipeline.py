"""Two-stage generation pipeline: curriculum first, then content.

Stage 1 plans a personalized curriculum anchored to the teacher's section
structure. Stage 2 rewrites one subsection at a time, constrained by the
saved curriculum entry and the section's scope and learning goals, and
produces practice exercises alongside the content. Model output is parsed
leniently (a JSON object surrounded by prose or code fences is fine) but
validated strictly; nothing the model says bypasses the domain invariants.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from .errors import (
    CurriculumNotSaved,
    DraftCourse,
    IndexOutOfRange,
    InvalidPractice,
    MalformedOutput,
    OutputError,
    RepairExhausted,
    SchemaMismatch,
    StructureViolation,
    UnknownSection,
    UnknownSubsection,
    VersionMismatch,
)
from .model import (
    ChoiceOption,
    Course,
    CurriculumEntry,
    CurriculumState,
    GenerationMeta,
    Persona,
    PersonalizedCurriculum,
    PracticeExercise,
    Section,
    ValidationMode,
    derive_persona_key,
    exercise_to_dict,
    validate_course,
)
from .prompts import PromptTemplates

logger = logging.getLogger(__name__)

# Output schemas embedded in the prompts; stub providers and tests target
# these exact shapes.
CURRICULUM_OUTPUT_SCHEMA = """\
{
  "entries": [
    {
      "section_id": "string, one of the given section ids, in the given order",
      "personalized_title": "string",
      "personalized_summary": "string",
      "analogy_theme": "string, the running example for this section"
    }
  ]
}"""

CONTENT_OUTPUT_SCHEMA = """\
{
  "body": "string, the rewritten subsection as markdown",
  "practices": [
    {
      "stem": "string, the question as markdown",
      "choices": [
        {"text": "string", "feedback": "string, shown when this choice is picked"}
      ],
      "correct_index": 0
    }
  ]
}"""


@dataclass(frozen=True)
class GenerationParams:
    model_id: str = "gpt-4"
    temperature: float = 0.7
    max_output_tokens: int = 4096
    response_format: str = "json_object"

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "response_format": self.response_format,
        }


@dataclass(frozen=True)
class Message:
    role: str  # "system" | "user" | "assistant"
    content: str


@dataclass(frozen=True)
class PromptBundle:
    messages: tuple[Message, ...]
    params: GenerationParams
    template_digest: str = ""
    prompt_hash: str = field(default="", compare=False)

    def __post_init__(self):
        payload = json.dumps(
            {
                "messages": [[m.role, m.content] for m in self.messages],
                "params": self.params.to_dict(),
                "templates": self.template_digest,
            },
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        object.__setattr__(self, "prompt_hash", hashlib.sha256(payload.encode("utf-8")).hexdigest())


@dataclass(frozen=True)
class RepairPolicy:
    max_repairs: int = 2


@dataclass(frozen=True)
class GradeResult:
    correct: bool
    feedback: str


def _persona_lines(persona: Persona) -> tuple[str, str]:
    interests = persona.interests.strip()
    goals = persona.career_goals.strip()
    return (
        f"Interests: {interests}\n" if interests else "",
        f"Career goals: {goals}\n" if goals else "",
    )


def _section_block(section: Section) -> str:
    goals = "\n".join(f"- {g}" for g in section.learning_goals)
    return (
        f"Section id: {section.id}\n"
        f"Title: {section.title}\n"
        f"Summary: {section.summary}\n"
        f"Scope: {section.scope}\n"
        f"Learning goals:\n{goals}"
    )


def _context_json(data: dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False)


def build_curriculum_prompt(
    course: Course,
    persona: Persona,
    templates: PromptTemplates,
    params: GenerationParams = GenerationParams(),
) -> PromptBundle:
    """Stage-1 prompt. Carries section structure, scope, and goals verbatim;
    subsection bodies are deliberately excluded."""
    report = validate_course(course, ValidationMode.PUBLISH)
    if not report.ok:
        raise DraftCourse(report)
    derive_persona_key(persona)  # raises EmptyPersona

    interests_line, goals_line = _persona_lines(persona)
    context = _context_json(
        {
            "stage": "curriculum",
            "course_id": course.id,
            "persona": {"interests": persona.interests, "career_goals": persona.career_goals},
            "sections": [
                {
                    "id": s.id,
                    "title": s.title,
                    "summary": s.summary,
                    "scope": s.scope,
                    "learning_goals": list(s.learning_goals),
                }
                for s in course.sections
            ],
        }
    )
    system = templates.render("curriculum_system", {"output_schema": CURRICULUM_OUTPUT_SCHEMA})
    user = templates.render(
        "curriculum_user",
        {
            "course_title": course.title,
            "course_description": course.description,
            "persona_interests": interests_line,
            "persona_goals": goals_line,
            "sections_block": "\n\n".join(_section_block(s) for s in course.sections),
            "context_json": context,
        },
    )
    return PromptBundle(
        messages=(Message("system", system), Message("user", user)),
        params=params,
        template_digest=templates.digest,
    )


def build_content_prompt(
    course: Course,
    curriculum: PersonalizedCurriculum,
    section_id: str,
    subsection_id: str,
    persona: Persona,
    templates: PromptTemplates,
    params: GenerationParams = GenerationParams(),
) -> PromptBundle:
    """Stage-2 prompt for one subsection, grounded in the saved curriculum entry."""
    if curriculum.state != CurriculumState.SAVED:
        raise CurriculumNotSaved(f"curriculum {curriculum.id} is in state {curriculum.state.value}")
    if curriculum.course_version_hash != course.version_hash:
        raise VersionMismatch(
            f"curriculum was generated against course version {curriculum.course_version_hash[:12]}, "
            f"course is now {course.version_hash[:12]}"
        )
    section = course.section(section_id)
    if section is None:
        raise UnknownSection(f"no section {section_id!r} in course {course.id}")
    subsection = next((ss for ss in section.subsections if ss.id == subsection_id), None)
    if subsection is None:
        raise UnknownSubsection(f"no subsection {subsection_id!r} in section {section_id}")
    entry = next(e for e in curriculum.entries if e.section_id == section_id)

    if subsection.example_exercises:
        examples = json.dumps(
            [exercise_to_dict(ex) for ex in subsection.example_exercises],
            indent=2,
            ensure_ascii=False,
        )
        examples_block = f"Example exercises from the teacher (match their style):\n{examples}\n\n"
    else:
        examples_block = ""

    context = _context_json(
        {
            "stage": "content",
            "course_id": course.id,
            "curriculum_id": curriculum.id,
            "section_id": section_id,
            "subsection_id": subsection_id,
            "subsection_title": subsection.title,
            "analogy_theme": entry.analogy_theme,
        }
    )
    system = templates.render(
        "content_system",
        {"output_schema": CONTENT_OUTPUT_SCHEMA, "analogy_theme": entry.analogy_theme},
    )
    user = templates.render(
        "content_user",
        {
            "personalized_title": entry.personalized_title,
            "personalized_summary": entry.personalized_summary,
            "analogy_theme": entry.analogy_theme,
            "scope": section.scope,
            "learning_goals": "\n".join(f"- {g}" for g in section.learning_goals),
            "subsection_title": subsection.title,
            "canonical_body": subsection.body,
            "examples_block": examples_block,
            "context_json": context,
        },
    )
    return PromptBundle(
        messages=(Message("system", system), Message("user", user)),
        params=params,
        template_digest=templates.digest,
    )


# ---- response parsing ----


def extract_json_object(raw: str) -> dict[str, Any]:
    """Pull the first well-formed JSON object out of a response, tolerating
    surrounding prose and code fences."""
    decoder = json.JSONDecoder()
    pos = raw.find("{")
    while pos != -1:
        try:
            value, _ = decoder.raw_decode(raw, pos)
        except json.JSONDecodeError:
            pos = raw.find("{", pos + 1)
            continue
        if isinstance(value, dict):
            return value
        pos = raw.find("{", pos + 1)
    raise MalformedOutput("no JSON object found in model response")


def _require_keys(obj: dict[str, Any], keys: dict[str, type], path: str) -> None:
    missing = set(keys) - set(obj)
    if missing:
        raise SchemaMismatch(f"missing field {sorted(missing)[0]!r}", path)
    extra = set(obj) - set(keys)
    if extra:
        raise SchemaMismatch(f"unexpected field {sorted(extra)[0]!r}", path)
    for name, typ in keys.items():
        if not isinstance(obj[name], typ):
            raise SchemaMismatch(
                f"field {name!r} should be {typ.__name__}, got {type(obj[name]).__name__}", path
            )


def parse_curriculum_response(
    raw: str,
    course: Course,
    persona_key: str,
    curriculum_id: str | None = None,
) -> PersonalizedCurriculum:
    """Validate a stage-1 response and enforce the section bijection."""
    obj = extract_json_object(raw)
    _require_keys(obj, {"entries": list}, "")
    entries: list[CurriculumEntry] = []
    for i, e in enumerate(obj["entries"]):
        path = f"entries[{i}]"
        if not isinstance(e, dict):
            raise SchemaMismatch("entry must be an object", path)
        _require_keys(
            e,
            {
                "section_id": str,
                "personalized_title": str,
                "personalized_summary": str,
                "analogy_theme": str,
            },
            path,
        )
        entries.append(
            CurriculumEntry(
                section_id=e["section_id"],
                personalized_title=e["personalized_title"],
                personalized_summary=e["personalized_summary"],
                analogy_theme=e["analogy_theme"],
            )
        )

    expected = [s.id for s in course.sections]
    got = [e.section_id for e in entries]
    invented = [sid for sid in got if sid not in expected]
    if invented:
        raise StructureViolation(f"unknown section id {invented[0]!r}", tuple(invented))
    if len(set(got)) != len(got):
        dupes = sorted({sid for sid in got if got.count(sid) > 1})
        raise StructureViolation(f"duplicated section id {dupes[0]!r}", tuple(dupes))
    missing = [sid for sid in expected if sid not in got]
    if missing:
        raise StructureViolation(f"missing section id {missing[0]!r}", tuple(missing))
    if got != expected:
        raise StructureViolation(f"sections reordered: expected {expected}, got {got}", tuple(got))

    if curriculum_id is None:
        curriculum_id = hashlib.sha256(
            f"{course.id}\x1f{course.version_hash}\x1f{persona_key}".encode("utf-8")
        ).hexdigest()[:32]
    return PersonalizedCurriculum(
        id=curriculum_id,
        course_id=course.id,
        course_version_hash=course.version_hash,
        persona_key=persona_key,
        state=CurriculumState.GENERATED,
        entries=tuple(entries),
    )


def parse_content_response(raw: str) -> tuple[str, tuple[PracticeExercise, ...]]:
    """Validate a stage-2 response; every practice must satisfy the exercise
    invariants before it leaves this function."""
    obj = extract_json_object(raw)
    _require_keys(obj, {"body": str, "practices": list}, "")
    if not obj["body"].strip():
        raise SchemaMismatch("body must be nonempty", "body")

    practices: list[PracticeExercise] = []
    for i, p in enumerate(obj["practices"]):
        if not isinstance(p, dict):
            raise InvalidPractice("practice must be an object", i)
        try:
            _require_keys(p, {"stem": str, "choices": list, "correct_index": int}, "")
            for c in p["choices"]:
                if not isinstance(c, dict):
                    raise SchemaMismatch("choice must be an object", "choices")
                _require_keys(c, {"text": str, "feedback": str}, "choices")
        except SchemaMismatch as exc:
            raise InvalidPractice(str(exc), i) from exc
        choices = tuple(ChoiceOption(text=c["text"], feedback=c["feedback"]) for c in p["choices"])
        if not p["stem"].strip():
            raise InvalidPractice("stem must be nonempty", i)
        if not 2 <= len(choices) <= 6:
            raise InvalidPractice(f"must have 2 to 6 choices, got {len(choices)}", i)
        if not 0 <= p["correct_index"] < len(choices):
            raise InvalidPractice(
                f"correct_index {p['correct_index']} out of range for {len(choices)} choices", i
            )
        for k, choice in enumerate(choices):
            if not choice.text.strip():
                raise InvalidPractice(f"choices[{k}].text must be nonempty", i)
            if not choice.feedback.strip():
                raise InvalidPractice(f"choices[{k}].feedback must be nonempty", i)
        practices.append(
            PracticeExercise(id=f"p{i + 1}", stem=p["stem"], choices=choices, correct_index=p["correct_index"])
        )
    return obj["body"], tuple(practices)


# ---- orchestration ----


@dataclass(frozen=True)
class GenerationOutcome:
    raw: str
    meta: GenerationMeta
    value: Any = None
    provider_calls: int = 1


def run_generation(
    bundle: PromptBundle,
    provider,
    validate: Callable[[str], Any] | None = None,
    policy: RepairPolicy = RepairPolicy(),
) -> GenerationOutcome:
    """Call the provider; when `validate` rejects the output with a
    repairable error, re-ask with a corrective turn, at most
    `policy.max_repairs` times."""
    current = bundle
    last_error: OutputError | None = None
    started = time.monotonic()
    for attempt in range(policy.max_repairs + 1):
        result = provider.complete_chat(current)
        meta = GenerationMeta.now(
            model_id=result.model_id,
            prompt_hash=bundle.prompt_hash,
            provider_latency=time.monotonic() - started,
        )
        if validate is None:
            return GenerationOutcome(raw=result.text, meta=meta, provider_calls=attempt + 1)
        try:
            value = validate(result.text)
        except OutputError as exc:
            last_error = exc
            logger.info("invalid model output (attempt %d): %s", attempt + 1, exc)
            repair = (
                f"Your previous answer was invalid because: {exc}. "
                "Emit only the JSON object matching the schema, with no other text."
            )
            current = replace(
                bundle,
                messages=current.messages + (Message("assistant", result.text), Message("user", repair)),
            )
            continue
        return GenerationOutcome(raw=result.text, meta=meta, value=value, provider_calls=attempt + 1)
    raise RepairExhausted(
        f"output still invalid after {policy.max_repairs} repair turns: {last_error}",
        last_error=last_error,
    )


def grade_answer(practice: PracticeExercise, chosen_index: int) -> GradeResult:
    """Grade one choice; the feedback is exactly the chosen option's stored text."""
    if not 0 <= chosen_index < len(practice.choices):
        raise IndexOutOfRange(
            f"chosen_index {chosen_index} out of range for {len(practice.choices)} choices"
        )
    return GradeResult(
        correct=chosen_index == practice.correct_index,
        feedback=practice.choices[chosen_index].feedback,
    )

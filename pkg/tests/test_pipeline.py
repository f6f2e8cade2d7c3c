from __future__ import annotations

import dataclasses
import json

import pytest
from hypothesis import given, settings

from tutorcraft.errors import (
    CurriculumNotSaved,
    DraftCourse,
    IndexOutOfRange,
    InvalidPractice,
    MalformedOutput,
    RepairExhausted,
    SchemaMismatch,
    StructureViolation,
    UnknownSection,
    UnknownSubsection,
    VersionMismatch,
)
from tutorcraft.model import (
    ChoiceOption,
    Course,
    CurriculumState,
    Persona,
    PracticeExercise,
    derive_persona_key,
)
from tutorcraft.pipeline import (
    GenerationParams,
    RepairPolicy,
    build_content_prompt,
    build_curriculum_prompt,
    extract_json_object,
    grade_answer,
    parse_content_response,
    parse_curriculum_response,
    run_generation,
)
from tutorcraft.prompts import load_templates
from tutorcraft.provider import ScriptedBehavior, StubProvider, StubStep

from .conftest import courses, make_course, personas, practice_exercises

TEMPLATES = load_templates()
PERSONA = Persona(interests="Jujutsu Kaisen")


def valid_curriculum_json(course: Course) -> str:
    return json.dumps(
        {
            "entries": [
                {
                    "section_id": s.id,
                    "personalized_title": f"{s.title} remixed",
                    "personalized_summary": "summary",
                    "analogy_theme": "character screen time",
                }
                for s in course.sections
            ]
        }
    )


def saved_curriculum(course: Course, persona=PERSONA):
    raw = valid_curriculum_json(course)
    cur = parse_curriculum_response(raw, course, derive_persona_key(persona))
    return dataclasses.replace(cur, state=CurriculumState.SAVED)


class TestCurriculumPrompt:
    def test_bundle_contains_scope_and_persona_verbatim(self, sample_course):
        bundle = build_curriculum_prompt(sample_course, PERSONA, TEMPLATES)
        user = bundle.messages[-1].content
        assert "Jujutsu Kaisen" in user
        for section in sample_course.sections:
            assert section.scope in user
            for goal in section.learning_goals:
                assert goal in user

    def test_deterministic_prompt_hash(self, sample_course):
        a = build_curriculum_prompt(sample_course, PERSONA, TEMPLATES)
        b = build_curriculum_prompt(sample_course, PERSONA, TEMPLATES)
        assert a.prompt_hash == b.prompt_hash
        assert a == b

    def test_career_goals_only_persona_omits_interests_block(self, sample_course):
        bundle = build_curriculum_prompt(sample_course, Persona(career_goals="data scientist"), TEMPLATES)
        user = bundle.messages[-1].content
        assert "Career goals: data scientist" in user
        assert "Interests:" not in user

    def test_draft_course_refused(self, sample_course):
        section = dataclasses.replace(sample_course.sections[0], scope="")
        draft = dataclasses.replace(sample_course, sections=(section,) + sample_course.sections[1:])
        with pytest.raises(DraftCourse):
            build_curriculum_prompt(draft, PERSONA, TEMPLATES)

    def test_subsection_bodies_excluded(self, sample_course):
        bundle = build_curriculum_prompt(sample_course, PERSONA, TEMPLATES)
        joined = "\n".join(m.content for m in bundle.messages)
        for section in sample_course.sections:
            for ss in section.subsections:
                assert ss.body not in joined

    def test_params_change_prompt_hash(self, sample_course):
        a = build_curriculum_prompt(sample_course, PERSONA, TEMPLATES)
        b = build_curriculum_prompt(
            sample_course, PERSONA, TEMPLATES, GenerationParams(temperature=0.2)
        )
        assert a.prompt_hash != b.prompt_hash

    @settings(max_examples=30, deadline=None)
    @given(courses(), personas)
    def test_scope_grounding_over_random_courses(self, course, persona):
        bundle = build_curriculum_prompt(course, persona, TEMPLATES)
        user = bundle.messages[-1].content
        for section in course.sections:
            assert section.scope in user
            for goal in section.learning_goals:
                assert goal in user


class TestParseCurriculumResponse:
    def test_happy_path(self, sample_course):
        cur = parse_curriculum_response(
            valid_curriculum_json(sample_course), sample_course, "pk"
        )
        assert [e.section_id for e in cur.entries] == [s.id for s in sample_course.sections]
        assert cur.state == CurriculumState.GENERATED

    def test_invented_section_rejected(self, sample_course):
        data = json.loads(valid_curriculum_json(sample_course))
        data["entries"].append(
            {
                "section_id": "advanced-gojo-statistics",
                "personalized_title": "x",
                "personalized_summary": "x",
                "analogy_theme": "x",
            }
        )
        with pytest.raises(StructureViolation) as exc:
            parse_curriculum_response(json.dumps(data), sample_course, "pk")
        assert "advanced-gojo-statistics" in str(exc.value)

    def test_dropped_section_rejected(self, sample_course):
        data = json.loads(valid_curriculum_json(sample_course))
        del data["entries"][0]
        with pytest.raises(StructureViolation):
            parse_curriculum_response(json.dumps(data), sample_course, "pk")

    def test_reordered_sections_rejected(self, sample_course):
        data = json.loads(valid_curriculum_json(sample_course))
        data["entries"].reverse()
        with pytest.raises(StructureViolation):
            parse_curriculum_response(json.dumps(data), sample_course, "pk")

    def test_missing_field_is_schema_mismatch(self, sample_course):
        data = json.loads(valid_curriculum_json(sample_course))
        del data["entries"][0]["analogy_theme"]
        with pytest.raises(SchemaMismatch):
            parse_curriculum_response(json.dumps(data), sample_course, "pk")

    @pytest.mark.parametrize(
        "wrapper",
        [
            "{payload}",
            "Sure! Here is the curriculum you asked for:\n{payload}",
            "```json\n{payload}\n```",
            "```\n{payload}\n```",
            "Here you go.\n```json\n{payload}\n```\nLet me know if you need changes.",
            "Preface with a stray brace {{ oops.\n{payload}",
        ],
    )
    def test_extraction_tolerates_wrappers(self, sample_course, wrapper):
        raw = wrapper.replace("{payload}", valid_curriculum_json(sample_course))
        cur = parse_curriculum_response(raw, sample_course, "pk")
        assert len(cur.entries) == len(sample_course.sections)

    def test_no_object_is_malformed(self, sample_course):
        with pytest.raises(MalformedOutput):
            parse_curriculum_response("no json here, sorry", sample_course, "pk")
        with pytest.raises(MalformedOutput):
            parse_curriculum_response("broken { not json", sample_course, "pk")


class TestContentPrompt:
    def test_contains_analogy_theme_and_canonical_body(self, sample_course):
        cur = saved_curriculum(sample_course)
        bundle = build_content_prompt(sample_course, cur, "s1", "s1-sub1", PERSONA, TEMPLATES)
        joined = "\n".join(m.content for m in bundle.messages)
        assert "character screen time" in joined
        assert sample_course.sections[0].subsections[0].body in joined
        assert sample_course.sections[0].scope in joined

    def test_example_exercises_included_as_guides(self, sample_course):
        cur = saved_curriculum(sample_course)
        bundle = build_content_prompt(sample_course, cur, "s1", "s1-sub1", PERSONA, TEMPLATES)
        assert "Which variable do we manipulate?" in bundle.messages[-1].content

    def test_unsaved_curriculum_refused(self, sample_course):
        cur = parse_curriculum_response(
            valid_curriculum_json(sample_course), sample_course, "pk"
        )
        with pytest.raises(CurriculumNotSaved):
            build_content_prompt(sample_course, cur, "s1", "s1-sub1", PERSONA, TEMPLATES)

    def test_version_mismatch_after_edit(self, sample_course):
        cur = saved_curriculum(sample_course)
        edited = dataclasses.replace(sample_course, title="Linear Regression, 2nd edition")
        with pytest.raises(VersionMismatch):
            build_content_prompt(edited, cur, "s1", "s1-sub1", PERSONA, TEMPLATES)

    def test_unknown_ids(self, sample_course):
        cur = saved_curriculum(sample_course)
        with pytest.raises(UnknownSection):
            build_content_prompt(sample_course, cur, "nope", "s1-sub1", PERSONA, TEMPLATES)
        with pytest.raises(UnknownSubsection):
            build_content_prompt(sample_course, cur, "s1", "nope", PERSONA, TEMPLATES)


def valid_content_json() -> str:
    return json.dumps(
        {
            "body": "## Rewritten\nSome markdown.",
            "practices": [
                {
                    "stem": "Identify the dependent and independent variables.",
                    "choices": [
                        {"text": "Independent: screen time, Dependent: sales", "feedback": "Correct. Screen time is manipulated; sales respond."},
                        {"text": "Independent: popularity, Dependent: sales", "feedback": "Try again. Apply the definitions to this scenario."},
                        {"text": "Independent: ratings, Dependent: screen time", "feedback": "Try again. Ratings are an outcome here."},
                        {"text": "Independent: sales, Dependent: screen time", "feedback": "Try again. That reverses the relationship."},
                    ],
                    "correct_index": 0,
                }
            ],
        }
    )


class TestParseContentResponse:
    def test_happy_path(self):
        body, practices = parse_content_response(valid_content_json())
        assert body.startswith("## Rewritten")
        [practice] = practices
        assert practice.id == "p1"
        assert len(practice.choices) == 4
        assert practice.correct_index == 0

    def test_single_choice_practice_rejected(self):
        data = json.loads(valid_content_json())
        data["practices"][0]["choices"] = data["practices"][0]["choices"][:1]
        data["practices"][0]["correct_index"] = 0
        with pytest.raises(InvalidPractice) as exc:
            parse_content_response(json.dumps(data))
        assert exc.value.practice_index == 0

    def test_empty_body_rejected(self):
        data = json.loads(valid_content_json())
        data["body"] = "   "
        with pytest.raises(SchemaMismatch) as exc:
            parse_content_response(json.dumps(data))
        assert exc.value.path == "body"

    def test_missing_feedback_rejected(self):
        data = json.loads(valid_content_json())
        data["practices"][0]["choices"][2]["feedback"] = ""
        with pytest.raises(InvalidPractice):
            parse_content_response(json.dumps(data))

    def test_out_of_range_index_rejected(self):
        data = json.loads(valid_content_json())
        data["practices"][0]["correct_index"] = 4
        with pytest.raises(InvalidPractice):
            parse_content_response(json.dumps(data))


class TestRunGeneration:
    def _bundle(self, course):
        return build_curriculum_prompt(course, PERSONA, TEMPLATES)

    def test_valid_first_try_makes_one_call(self, sample_course):
        provider = StubProvider(ScriptedBehavior(steps=(StubStep(text=valid_curriculum_json(sample_course)),)))
        outcome = run_generation(
            self._bundle(sample_course),
            provider,
            validate=lambda raw: parse_curriculum_response(raw, sample_course, "pk"),
        )
        assert provider.call_count == 1
        assert outcome.provider_calls == 1
        assert outcome.value is not None

    def test_one_failure_then_success_makes_two_calls(self, sample_course):
        provider = StubProvider(
            ScriptedBehavior(
                steps=(StubStep(failure="malformed"), StubStep(text=valid_curriculum_json(sample_course)))
            )
        )
        outcome = run_generation(
            self._bundle(sample_course),
            provider,
            validate=lambda raw: parse_curriculum_response(raw, sample_course, "pk"),
        )
        assert provider.call_count == 2
        assert outcome.value is not None

    def test_repair_turn_carries_original_messages_and_correction(self, sample_course):
        provider = StubProvider(
            ScriptedBehavior(
                steps=(StubStep(failure="malformed"), StubStep(text=valid_curriculum_json(sample_course)))
            )
        )
        bundle = self._bundle(sample_course)
        run_generation(
            bundle,
            provider,
            validate=lambda raw: parse_curriculum_response(raw, sample_course, "pk"),
        )
        repair_bundle = provider.bundles[1]
        assert repair_bundle.messages[: len(bundle.messages)] == bundle.messages
        assert repair_bundle.messages[-2].role == "assistant"
        assert "invalid" in repair_bundle.messages[-1].content

    def test_always_invalid_exhausts_repairs_after_three_calls(self, sample_course):
        provider = StubProvider(
            ScriptedBehavior(steps=tuple(StubStep(failure="malformed") for _ in range(5)))
        )
        with pytest.raises(RepairExhausted):
            run_generation(
                self._bundle(sample_course),
                provider,
                validate=lambda raw: parse_curriculum_response(raw, sample_course, "pk"),
                policy=RepairPolicy(max_repairs=2),
            )
        assert provider.call_count == 3


class TestGradeAnswer:
    def _figure_exercise(self) -> PracticeExercise:
        return PracticeExercise(
            id="p1",
            stem="Identify the dependent and independent variables.",
            choices=(
                ChoiceOption(
                    text="Independent variable: screen time, Dependent variable: merchandise sales",
                    feedback="Correct. The manipulated quantity drives the measured outcome.",
                ),
                ChoiceOption(
                    text="Independent variable: popularity, Dependent variable: merchandise sales",
                    feedback="Try again. Apply the definitions to this scenario.",
                ),
            ),
            correct_index=0,
        )

    def test_correct_choice(self):
        result = grade_answer(self._figure_exercise(), 0)
        assert result.correct is True
        assert result.feedback.startswith("Correct.")

    def test_wrong_choice_gets_corrective_feedback(self):
        result = grade_answer(self._figure_exercise(), 1)
        assert result.correct is False
        assert result.feedback.startswith("Try again.")

    def test_out_of_range_index(self):
        with pytest.raises(IndexOutOfRange):
            grade_answer(self._figure_exercise(), 2)
        with pytest.raises(IndexOutOfRange):
            grade_answer(self._figure_exercise(), -1)

    @settings(max_examples=100, deadline=None)
    @given(practice_exercises())
    def test_exhaustive_grading_oracle(self, practice):
        # brute force over every choice: correct only at the stored index,
        # feedback always the stored per-choice string
        for idx, choice in enumerate(practice.choices):
            result = grade_answer(practice, idx)
            assert result.correct == (idx == practice.correct_index)
            assert result.feedback == choice.feedback


class TestExtractJsonObject:
    def test_first_object_wins(self):
        assert extract_json_object('{"a": 1} {"b": 2}') == {"a": 1}

    def test_nested_braces_in_strings(self):
        obj = {"text": 'a "quoted" {brace} string'}
        assert extract_json_object("prefix " + json.dumps(obj) + " suffix") == obj

    def test_skips_non_object_json(self):
        assert extract_json_object('[1, 2] then {"ok": true}') == {"ok": True}

from __future__ import annotations

import string

import pytest
from hypothesis import strategies as st

from tutorcraft.model import (
    ChoiceOption,
    Course,
    Persona,
    PracticeExercise,
    Section,
    Subsection,
)

# Realistic field text: any printable unicode incl. quotes, commas,
# semicolons, and newlines, but with at least one non-space character.
field_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
    min_size=1,
    max_size=60,
).filter(lambda s: s.strip() != "")

_id_alphabet = string.ascii_lowercase + string.digits
id_text = st.text(alphabet=_id_alphabet, min_size=1, max_size=12)


@st.composite
def practice_exercises(draw, index: int = 0) -> PracticeExercise:
    n_choices = draw(st.integers(min_value=2, max_value=6))
    choices = tuple(
        ChoiceOption(text=draw(field_text), feedback=draw(field_text)) for _ in range(n_choices)
    )
    return PracticeExercise(
        id=f"ex{index}-{draw(id_text)}",
        stem=draw(field_text),
        choices=choices,
        correct_index=draw(st.integers(min_value=0, max_value=n_choices - 1)),
    )


@st.composite
def courses(draw, with_exercises: bool = True) -> Course:
    """Publish-valid courses with unique ids at every level."""
    n_sections = draw(st.integers(min_value=1, max_value=4))
    section_ids = draw(
        st.lists(id_text, min_size=n_sections, max_size=n_sections, unique=True)
    )
    sections = []
    for i, sid in enumerate(section_ids):
        n_subs = draw(st.integers(min_value=1, max_value=3))
        sub_ids = draw(st.lists(id_text, min_size=n_subs, max_size=n_subs, unique=True))
        subsections = []
        for j, ssid in enumerate(sub_ids):
            exercises = ()
            if with_exercises and draw(st.booleans()):
                exercises = tuple(
                    draw(practice_exercises(index=j)) for _ in range(draw(st.integers(1, 2)))
                )
            subsections.append(
                Subsection(
                    id=f"sub-{i}-{ssid}",
                    title=draw(field_text),
                    body=draw(field_text),
                    example_exercises=exercises,
                )
            )
        sections.append(
            Section(
                id=f"sec-{sid}",
                title=draw(field_text),
                summary=draw(field_text),
                scope=draw(field_text),
                learning_goals=tuple(
                    draw(field_text) for _ in range(draw(st.integers(1, 3)))
                ),
                subsections=tuple(subsections),
            )
        )
    return Course(
        id=f"course-{draw(id_text)}",
        title=draw(field_text),
        description=draw(field_text),
        sections=tuple(sections),
    )


personas = st.builds(
    Persona,
    interests=field_text,
    career_goals=field_text,
)


def make_course(
    course_id: str = "c-linreg",
    n_sections: int = 2,
    n_subsections: int = 2,
    with_exercise: bool = True,
) -> Course:
    """Deterministic sample course for non-property tests."""
    sections = []
    for i in range(1, n_sections + 1):
        subsections = []
        for j in range(1, n_subsections + 1):
            exercises = ()
            if with_exercise and i == 1 and j == 1:
                exercises = (
                    PracticeExercise(
                        id="ex1",
                        stem="Which variable do we manipulate?",
                        choices=(
                            ChoiceOption(text="The independent variable", feedback="Correct. That is the one we control."),
                            ChoiceOption(text="The dependent variable", feedback="Try again. That is the measured outcome."),
                        ),
                        correct_index=0,
                    ),
                )
            subsections.append(
                Subsection(
                    id=f"s{i}-sub{j}",
                    title=f"Subsection {i}.{j}",
                    body=f"Canonical teaching text for subsection {i}.{j}.",
                    example_exercises=exercises,
                )
            )
        sections.append(
            Section(
                id=f"s{i}",
                title=f"Section {i}",
                summary=f"Summary of section {i}.",
                scope=f"Covers only the basics of topic {i}; excludes advanced material.",
                learning_goals=(f"Understand concept {i}a", f"Apply concept {i}b"),
                subsections=tuple(subsections),
            )
        )
    return Course(
        id=course_id,
        title="Linear Regression",
        description="An introductory statistics course.",
        sections=tuple(sections),
    )


@pytest.fixture
def sample_course() -> Course:
    return make_course()


# Seedable generator mirroring the hypothesis strategy, for tests that need
# an exact corpus size (acceptance criteria) rather than shrinking.
_RND_ALPHABET = string.ascii_letters + string.digits + " ;,:'\"\\{}[]\n" + "éüñßλ漢字"


def random_text(rng, max_len: int = 40) -> str:
    length = rng.randint(1, max_len)
    body = "".join(rng.choice(_RND_ALPHABET) for _ in range(length))
    return rng.choice(string.ascii_letters) + body


def random_exercise(rng, index: int) -> PracticeExercise:
    n = rng.randint(2, 6)
    return PracticeExercise(
        id=f"ex{index}",
        stem=random_text(rng),
        choices=tuple(ChoiceOption(text=random_text(rng), feedback=random_text(rng)) for _ in range(n)),
        correct_index=rng.randrange(n),
    )


def random_course(rng, course_id: str | None = None) -> Course:
    sections = []
    for i in range(rng.randint(1, 4)):
        subsections = []
        for j in range(rng.randint(1, 3)):
            exercises = tuple(random_exercise(rng, k) for k in range(rng.randint(0, 2)))
            subsections.append(
                Subsection(
                    id=f"s{i}-sub{j}",
                    title=random_text(rng),
                    body=random_text(rng, max_len=120),
                    example_exercises=exercises,
                )
            )
        sections.append(
            Section(
                id=f"s{i}",
                title=random_text(rng),
                summary=random_text(rng),
                scope=random_text(rng, max_len=80),
                learning_goals=tuple(random_text(rng) for _ in range(rng.randint(1, 3))),
                subsections=tuple(subsections),
            )
        )
    return Course(
        id=course_id or f"course-{rng.randrange(10**9)}",
        title=random_text(rng),
        description=random_text(rng),
        sections=tuple(sections),
    )

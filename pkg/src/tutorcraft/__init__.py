"""tutorcraft: a self-hostable personalized-learning content service.

Teachers upload structured course material; students generate
persona-tailored curricula, teaching content, and practice exercises
through a two-stage generation pipeline with caching and strict
structured-output validation.
"""

from .model import (
    ChoiceOption,
    Course,
    CurriculumEntry,
    GeneratedContent,
    GenerationMeta,
    Persona,
    PersonalizedCurriculum,
    PracticeExercise,
    Section,
    Subsection,
    ValidationMode,
    compute_version_hash,
    derive_persona_key,
    validate_course,
)

__version__ = "0.1.0"

__all__ = [
    "ChoiceOption",
    "Course",
    "CurriculumEntry",
    "GeneratedContent",
    "GenerationMeta",
    "Persona",
    "PersonalizedCurriculum",
    "PracticeExercise",
    "Section",
    "Subsection",
    "ValidationMode",
    "compute_version_hash",
    "derive_persona_key",
    "validate_course",
    "__version__",
]

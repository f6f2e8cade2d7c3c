"""Course import/export in the two teacher-facing formats, JSON and CSV.

JSON is the full-fidelity format (format_version 1, strict schema,
canonical byte-stable export). CSV is flat, one row per subsection, and
deliberately lossy: practice exercises do not flatten honestly, so they
are dropped on CSV export and empty on CSV import. That lossiness is the
only difference; everything else round-trips field by field.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any

from .errors import ParseError, SchemaError, ValidationError
from .model import (
    ChoiceOption,
    Course,
    PracticeExercise,
    Section,
    Subsection,
    ValidationMode,
    course_to_dict,
    validate_course,
)

FORMAT_VERSION = 1

CSV_COLUMNS = [
    "course_id",
    "course_title",
    "course_description",
    "section_index",
    "section_id",
    "section_title",
    "section_summary",
    "section_scope",
    "learning_goals",
    "subsection_index",
    "subsection_id",
    "subsection_title",
    "body",
]


def canonical_json_bytes(data: Any) -> bytes:
    """Canonical serialization: sorted keys, 2-space indent, LF, trailing newline."""
    return (json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# ---- strict schema walking ----


def _expect_obj(value: Any, path: str, fields: dict[str, type | tuple[type, ...]]) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise SchemaError(f"expected object, got {type(value).__name__}", path)
    unknown = set(value) - set(fields)
    if unknown:
        raise SchemaError(f"unknown field {sorted(unknown)[0]!r}", f"{path}.{sorted(unknown)[0]}" if path else sorted(unknown)[0])
    for name, typ in fields.items():
        fpath = f"{path}.{name}" if path else name
        if name not in value:
            raise SchemaError("missing required field", fpath)
        if typ is not None and not isinstance(value[name], typ):
            raise SchemaError(f"expected {getattr(typ, '__name__', typ)}, got {type(value[name]).__name__}", fpath)
    return value


def _expect_str_list(value: Any, path: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError("expected list of strings", path)
    return value


def _parse_exercise(data: Any, path: str) -> PracticeExercise:
    obj = _expect_obj(data, path, {"id": str, "stem": str, "choices": list, "correct_index": int})
    choices = []
    for k, c in enumerate(obj["choices"]):
        cobj = _expect_obj(c, f"{path}.choices[{k}]", {"text": str, "feedback": str})
        choices.append(ChoiceOption(text=cobj["text"], feedback=cobj["feedback"]))
    if not 0 <= obj["correct_index"] < len(choices):
        raise SchemaError(
            f"correct_index {obj['correct_index']} out of range for {len(choices)} choices",
            f"{path}.correct_index",
        )
    return PracticeExercise(id=obj["id"], stem=obj["stem"], choices=tuple(choices), correct_index=obj["correct_index"])


def _parse_course_dict(data: Any, path: str = "course") -> Course:
    obj = _expect_obj(data, path, {"id": str, "title": str, "description": str, "sections": list})
    sections = []
    for i, s in enumerate(obj["sections"]):
        spath = f"{path}.sections[{i}]"
        sobj = _expect_obj(
            s, spath,
            {"id": str, "title": str, "summary": str, "scope": str, "learning_goals": list, "subsections": list},
        )
        goals = _expect_str_list(sobj["learning_goals"], f"{spath}.learning_goals")
        subsections = []
        for j, ss in enumerate(sobj["subsections"]):
            sspath = f"{spath}.subsections[{j}]"
            ssobj = _expect_obj(ss, sspath, {"id": str, "title": str, "body": str, "example_exercises": list})
            exercises = tuple(
                _parse_exercise(ex, f"{sspath}.example_exercises[{k}]")
                for k, ex in enumerate(ssobj["example_exercises"])
            )
            subsections.append(
                Subsection(id=ssobj["id"], title=ssobj["title"], body=ssobj["body"], example_exercises=exercises)
            )
        sections.append(
            Section(
                id=sobj["id"],
                title=sobj["title"],
                summary=sobj["summary"],
                scope=sobj["scope"],
                learning_goals=tuple(goals),
                subsections=tuple(subsections),
            )
        )
    return Course(id=obj["id"], title=obj["title"], description=obj["description"], sections=tuple(sections))


# ---- JSON ----


def import_json(data: bytes) -> Course:
    """Parse a format_version-1 course document; strict about unknown fields."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc

    obj = _expect_obj(doc, "", {"format_version": int, "course": dict})
    if obj["format_version"] != FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {obj['format_version']}", "format_version")
    course = _parse_course_dict(obj["course"])
    report = validate_course(course, ValidationMode.DRAFT)
    if not report.ok:
        raise ValidationError(report)
    return course


def export_json(course: Course) -> bytes:
    """Canonical export: two exports of the same course are byte-identical."""
    return canonical_json_bytes({"format_version": FORMAT_VERSION, "course": course_to_dict(course)})


# ---- CSV ----


def _encode_goals(goals: tuple[str, ...]) -> str:
    return ";".join(g.replace("\\", "\\\\").replace(";", "\\;") for g in goals)


def _decode_goals(text: str) -> tuple[str, ...]:
    if text == "":
        return ()
    goals: list[str] = []
    current: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text) and text[i + 1] in ("\\", ";"):
            current.append(text[i + 1])
            i += 2
        elif c == ";":
            goals.append("".join(current))
            current = []
            i += 1
        else:
            current.append(c)
            i += 1
    goals.append("".join(current))
    return tuple(goals)


def import_csv(data: bytes) -> Course:
    """Parse the flat one-row-per-subsection schema.

    Rows are grouped by section_index; indices must be contiguous from 1
    and section metadata must be identical across rows of one section.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from exc

    try:
        reader = csv.DictReader(io.StringIO(text, newline=""))
        rows = list(reader)
    except csv.Error as exc:
        raise ParseError(f"malformed CSV: {exc}") from exc
    if reader.fieldnames is None:
        raise ParseError("missing header row")
    missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise SchemaError(f"missing column {missing[0]!r}", missing[0])
    extra = [c for c in reader.fieldnames if c not in CSV_COLUMNS]
    if extra:
        raise SchemaError(f"unknown column {extra[0]!r}", extra[0])
    if not rows:
        raise SchemaError("no data rows", "rows")

    def intval(row: dict, col: str, rownum: int) -> int:
        try:
            return int(row[col])
        except (TypeError, ValueError):
            raise SchemaError(f"row {rownum}: {col} must be an integer, got {row[col]!r}", col) from None

    course_id = rows[0]["course_id"]
    title = rows[0]["course_title"]
    description = rows[0]["course_description"]
    for n, row in enumerate(rows, start=2):
        if None in row.values() or None in row:
            raise ParseError(f"row {n}: wrong number of fields")
        if (row["course_id"], row["course_title"], row["course_description"]) != (course_id, title, description):
            raise SchemaError(f"row {n}: conflicting course metadata", "course_title")

    # group rows by section_index, preserving order
    by_section: dict[int, list[tuple[int, dict]]] = {}
    for n, row in enumerate(rows, start=2):
        by_section.setdefault(intval(row, "section_index", n), []).append((n, row))

    indices = sorted(by_section)
    if indices != list(range(1, len(indices) + 1)):
        raise SchemaError(f"non-contiguous section_index: got {indices}", "section_index")

    sections = []
    for idx in indices:
        group = by_section[idx]
        first = group[0][1]
        meta = ("section_id", "section_title", "section_summary", "section_scope", "learning_goals")
        for n, row in group:
            if any(row[c] != first[c] for c in meta):
                raise SchemaError(
                    f"row {n}: conflicting section metadata for section_index {idx}", "section_index"
                )
        sub_indices = [intval(row, "subsection_index", n) for n, row in group]
        if sorted(sub_indices) != list(range(1, len(group) + 1)):
            raise SchemaError(
                f"non-contiguous subsection_index in section {idx}: got {sorted(sub_indices)}",
                "subsection_index",
            )
        ordered = [row for _, row in sorted(zip(sub_indices, group), key=lambda p: p[0])]
        sections.append(
            Section(
                id=first["section_id"],
                title=first["section_title"],
                summary=first["section_summary"],
                scope=first["section_scope"],
                learning_goals=_decode_goals(first["learning_goals"]),
                subsections=tuple(
                    Subsection(id=row[1]["subsection_id"], title=row[1]["subsection_title"], body=row[1]["body"])
                    for row in ordered
                ),
            )
        )

    course = Course(id=course_id, title=title, description=description, sections=tuple(sections))
    report = validate_course(course, ValidationMode.DRAFT)
    if not report.ok:
        raise ValidationError(report)
    return course


def export_csv(course: Course) -> bytes:
    """Flat export; example exercises are dropped (documented CSV lossiness)."""
    buf = io.StringIO(newline="")
    # QUOTE_ALL keeps the quoting rule deterministic and makes embedded
    # newlines and bare carriage returns round-trip safely.
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", quoting=csv.QUOTE_ALL)
    writer.writeheader()
    for i, sec in enumerate(course.sections, start=1):
        for j, ss in enumerate(sec.subsections, start=1):
            writer.writerow(
                {
                    "course_id": course.id,
                    "course_title": course.title,
                    "course_description": course.description,
                    "section_index": i,
                    "section_id": sec.id,
                    "section_title": sec.title,
                    "section_summary": sec.summary,
                    "section_scope": sec.scope,
                    "learning_goals": _encode_goals(sec.learning_goals),
                    "subsection_index": j,
                    "subsection_id": ss.id,
                    "subsection_title": ss.title,
                    "body": ss.body,
                }
            )
    return buf.getvalue().encode("utf-8")


def strip_exercises(course: Course) -> Course:
    """The course with all example exercises removed (CSV fidelity bound)."""
    return Course(
        id=course.id,
        title=course.title,
        description=course.description,
        sections=tuple(
            Section(
                id=s.id,
                title=s.title,
                summary=s.summary,
                scope=s.scope,
                learning_goals=s.learning_goals,
                subsections=tuple(
                    Subsection(id=ss.id, title=ss.title, body=ss.body) for ss in s.subsections
                ),
            )
            for s in course.sections
        ),
    )

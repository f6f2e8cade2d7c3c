"""Prompt template loading and rendering.

Templates are plain UTF-8 text files with `{placeholder}` substitution and
`{{` / `}}` escapes for literal braces. Each template file may only use the
placeholders registered for it; an unknown placeholder is a startup error,
not a render-time surprise. The digest over all template texts participates
in prompt hashes, so editing a template auto-invalidates cached content.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import TemplateError

TEMPLATE_FILES = {
    "curriculum_system": "curriculum_system.txt",
    "curriculum_user": "curriculum_user.txt",
    "content_system": "content_system.txt",
    "content_user": "content_user.txt",
}

ALLOWED_PLACEHOLDERS = {
    "curriculum_system": {"output_schema"},
    "curriculum_user": {
        "course_title",
        "course_description",
        "persona_interests",
        "persona_goals",
        "sections_block",
        "context_json",
    },
    "content_system": {"output_schema", "analogy_theme"},
    "content_user": {
        "personalized_title",
        "personalized_summary",
        "analogy_theme",
        "scope",
        "learning_goals",
        "subsection_title",
        "canonical_body",
        "examples_block",
        "context_json",
    },
}


def extract_placeholders(template: str) -> set[str]:
    """Scan a template for `{name}` placeholders, honoring `{{`/`}}` escapes."""
    names: set[str] = set()
    i = 0
    while i < len(template):
        c = template[i]
        if c == "{":
            if template[i + 1 : i + 2] == "{":
                i += 2
                continue
            end = template.find("}", i)
            if end == -1:
                raise TemplateError(f"unterminated placeholder at offset {i}")
            name = template[i + 1 : end]
            if not name or any(ch in name for ch in "{\n"):
                raise TemplateError(f"malformed placeholder at offset {i}")
            names.add(name)
            i = end + 1
        elif c == "}":
            if template[i + 1 : i + 2] == "}":
                i += 2
                continue
            raise TemplateError(f"unmatched '}}' at offset {i}")
        else:
            i += 1
    return names


def render(template: str, values: dict[str, str]) -> str:
    out: list[str] = []
    i = 0
    while i < len(template):
        c = template[i]
        if c == "{":
            if template[i + 1 : i + 2] == "{":
                out.append("{")
                i += 2
                continue
            end = template.find("}", i)
            name = template[i + 1 : end]
            if name not in values:
                raise TemplateError(f"no value for placeholder {name!r}")
            out.append(values[name])
            i = end + 1
        elif c == "}":
            # validated at load time; only the escaped form reaches here
            out.append("}")
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class PromptTemplates:
    curriculum_system: str
    curriculum_user: str
    content_system: str
    content_user: str
    digest: str

    def render(self, name: str, values: dict[str, str]) -> str:
        return render(getattr(self, name), values)


def _build(texts: dict[str, str]) -> PromptTemplates:
    for name, text in texts.items():
        unknown = extract_placeholders(text) - ALLOWED_PLACEHOLDERS[name]
        if unknown:
            raise TemplateError(f"{TEMPLATE_FILES[name]}: unknown placeholder {sorted(unknown)[0]!r}")
    digest = hashlib.sha256(
        "\x1f".join(texts[name] for name in sorted(TEMPLATE_FILES)).encode("utf-8")
    ).hexdigest()
    return PromptTemplates(digest=digest, **texts)


def load_templates(directory: str | Path | None = None) -> PromptTemplates:
    """Load the four prompt templates from a directory, or the built-in defaults."""
    texts: dict[str, str] = {}
    if directory is None:
        pkg = resources.files(__package__) / "templates"
        for name, filename in TEMPLATE_FILES.items():
            texts[name] = (pkg / filename).read_text(encoding="utf-8")
    else:
        directory = Path(directory)
        for name, filename in TEMPLATE_FILES.items():
            path = directory / filename
            if not path.is_file():
                raise TemplateError(f"missing template file: {path}")
            texts[name] = path.read_text(encoding="utf-8")
    return _build(texts)

"""Command-line entry points: serve, import, export, validate.

Configuration precedence is CLI flags > environment variables > config
file. Environment variables: PROVIDER_API_KEY, PROVIDER_BASE_URL, MODEL_ID.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import course_io
from .cache import FileStore
from .errors import TutorcraftError
from .model import ValidationMode, validate_course
from .pipeline import GenerationParams
from .prompts import load_templates
from .provider import HttpChatProvider, ProviderConfig, ScriptedBehavior, StubProvider
from .service import (
    ServiceSettings,
    create_app,
    load_principals,
    write_default_principals,
)


def _config_file_values(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _resolve(flag, env_name: str, cfg: dict, cfg_key: str, default=None):
    if flag is not None:
        return flag
    env = os.environ.get(env_name) if env_name else None
    if env is not None:
        return env
    return cfg.get(cfg_key, default)


@click.group()
def main() -> None:
    """Personalized-learning content service."""


@main.command()
@click.option("--listen", default=None, help="host:port to bind (default 127.0.0.1:8000)")
@click.option("--store-root", default=None, type=click.Path(), help="data directory (cache, courses, auth seed)")
@click.option("--templates", "templates_dir", default=None, type=click.Path(exists=True), help="prompt template directory")
@click.option("--stub-provider", is_flag=True, help="use the offline stub provider in template mode")
@click.option("--workers", default=None, type=int, help="max concurrent generations (default 100)")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True), help="JSON config file")
def serve(listen, store_root, templates_dir, stub_provider, workers, config_path) -> None:
    """Run the HTTP service."""
    import uvicorn

    cfg = _config_file_values(config_path)
    listen = _resolve(listen, "", cfg, "listen", "127.0.0.1:8000")
    store_root = Path(_resolve(store_root, "", cfg, "store_root", "./tutorcraft-data"))
    templates_dir = _resolve(templates_dir, "", cfg, "templates")
    workers = int(_resolve(workers, "", cfg, "workers", 100))

    if stub_provider or cfg.get("stub_provider"):
        provider = StubProvider(ScriptedBehavior(template_mode=True))
        click.echo("provider: offline stub (template mode)")
    else:
        api_key = _resolve(None, "PROVIDER_API_KEY", cfg, "provider_api_key")
        base_url = _resolve(None, "PROVIDER_BASE_URL", cfg, "provider_base_url")
        model_id = _resolve(None, "MODEL_ID", cfg, "model_id", "gpt-4")
        if not api_key or not base_url:
            raise click.UsageError(
                "PROVIDER_API_KEY and PROVIDER_BASE_URL are required (or pass --stub-provider)"
            )
        provider = HttpChatProvider(ProviderConfig(base_url=base_url, api_key=api_key, model_id=model_id))

    store = FileStore(store_root / "cache")
    auth_seed = store_root / "principals.json"
    if auth_seed.is_file():
        principals = load_principals(auth_seed)
    else:
        principals = write_default_principals(auth_seed)
        click.echo(f"generated auth seed at {auth_seed}:")
        for p in principals:
            click.echo(f"  {p.role}: {p.token}")

    model_id = _resolve(None, "MODEL_ID", cfg, "model_id", "gpt-4")
    app = create_app(
        provider=provider,
        store=store,
        principals=principals,
        templates=load_templates(templates_dir),
        settings=ServiceSettings(workers=workers, params=GenerationParams(model_id=model_id)),
        courses_root=store_root / "courses",
    )
    host, _, port = listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


def _read_course(path: Path):
    data = path.read_bytes()
    if path.suffix.lower() == ".csv":
        return course_io.import_csv(data)
    return course_io.import_json(data)


@main.command(name="import")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@click.option("--store-root", required=True, type=click.Path(path_type=Path))
def import_cmd(file: Path, store_root: Path) -> None:
    """Import a course file (JSON or CSV) into the store as a draft."""
    try:
        course = _read_course(file)
    except TutorcraftError as exc:
        raise click.ClickException(f"{exc.code}: {exc}")
    courses_dir = store_root / "courses"
    courses_dir.mkdir(parents=True, exist_ok=True)
    target = courses_dir / f"{course.id}.json"
    if target.exists():
        raise click.ClickException(f"course {course.id!r} already exists in {courses_dir}")
    document = json.loads(course_io.export_json(course).decode("utf-8"))
    target.write_text(
        json.dumps({"published": False, "document": document}, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    click.echo(f"imported course {course.id} ({course.title}) -> {target}")


@main.command()
@click.argument("course_id")
@click.option("--store-root", required=True, type=click.Path(path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path), help="output file (.json or .csv)")
def export(course_id: str, store_root: Path, out: Path) -> None:
    """Export a stored course to a JSON or CSV file."""
    source = store_root / "courses" / f"{course_id}.json"
    if not source.is_file():
        raise click.ClickException(f"no such course {course_id!r} in {store_root}")
    stored = json.loads(source.read_text(encoding="utf-8"))
    course = course_io.import_json(course_io.canonical_json_bytes(stored["document"]))
    if out.suffix.lower() == ".csv":
        out.write_bytes(course_io.export_csv(course))
    else:
        out.write_bytes(course_io.export_json(course))
    click.echo(f"exported {course_id} -> {out}")


@main.command()
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@click.option("--publish", "publish_mode", is_flag=True, help="validate with publish-time requirements")
def validate(file: Path, publish_mode: bool) -> None:
    """Validate a course file; exit code 0 when clean, 1 otherwise."""
    try:
        course = _read_course(file)
    except TutorcraftError as exc:
        click.echo(f"{exc.code}: {exc}")
        sys.exit(1)
    mode = ValidationMode.PUBLISH if publish_mode else ValidationMode.DRAFT
    report = validate_course(course, mode)
    if report.ok:
        click.echo(f"{file}: valid ({mode.value} mode)")
        sys.exit(0)
    for violation in report.violations:
        click.echo(f"{violation.path}: {violation.message}")
    sys.exit(1)

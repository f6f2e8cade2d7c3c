"""HTTP service tying the pipeline together.

Routes live under /api/v1/. Teachers manage courses (upload, edit,
publish); students personalize published courses, poll generation jobs,
save curricula, request per-subsection content, and submit answers.
Generation runs on a bounded worker pool; handlers never block on it.
Error bodies are `{code, message, details?}` with stable codes.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import course_io
from .cache import CacheKey, Store, StoreRecord
from .errors import (
    DraftCourse,
    EmptyPersona,
    ParseError,
    SchemaError,
    TutorcraftError,
    ValidationError,
)
from .jobs import JobRegistry, JobState
from .model import (
    Course,
    CurriculumState,
    GeneratedContent,
    Persona,
    PersonalizedCurriculum,
    Section,
    ValidationMode,
    content_from_dict,
    content_to_dict,
    curriculum_from_dict,
    curriculum_to_dict,
    derive_persona_key,
    validate_course,
)
from .pipeline import (
    GenerationParams,
    RepairPolicy,
    build_content_prompt,
    build_curriculum_prompt,
    grade_answer,
    parse_content_response,
    parse_curriculum_response,
    run_generation,
)
from .prompts import PromptTemplates, load_templates

logger = logging.getLogger(__name__)

API_PREFIX = "/api/v1"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details


# ---- auth ----


@dataclass(frozen=True)
class Principal:
    token: str  # opaque bearer secret, >= 128 bits of entropy
    role: str  # "teacher" | "student"
    display_name: str = ""


def generate_token() -> str:
    return secrets.token_urlsafe(32)


def load_principals(path: str | Path) -> list[Principal]:
    """Read the auth seed file: a JSON list of {token, role, display_name}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    principals = []
    for entry in data:
        if entry["role"] not in ("teacher", "student"):
            raise ValueError(f"unknown role {entry['role']!r} in auth seed")
        principals.append(
            Principal(token=entry["token"], role=entry["role"], display_name=entry.get("display_name", ""))
        )
    return principals


def write_default_principals(path: Path) -> list[Principal]:
    principals = [
        Principal(token=generate_token(), role="teacher", display_name="teacher"),
        Principal(token=generate_token(), role="student", display_name="student"),
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(
            [{"token": p.token, "role": p.role, "display_name": p.display_name} for p in principals],
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return principals


# ---- repositories ----


@dataclass
class CourseRecord:
    course: Course
    published: bool = False


class CourseRepository:
    """Courses keyed by id; optionally persisted as one JSON document per
    course so `tutorcraft import` survives into `tutorcraft serve`."""

    def __init__(self, root: Path | None = None):
        self._records: dict[str, CourseRecord] = {}
        self._lock = threading.RLock()
        self._root = root
        if root is not None:
            root.mkdir(parents=True, exist_ok=True)
            for path in sorted(root.glob("*.json")):
                try:
                    data = json.loads(path.read_text(encoding="utf-8"))
                    course = course_io.import_json(
                        course_io.canonical_json_bytes(data["document"])
                    )
                    self._records[course.id] = CourseRecord(course=course, published=data["published"])
                except (OSError, json.JSONDecodeError, KeyError, TutorcraftError) as exc:
                    logger.warning("skipping unreadable course file %s: %s", path, exc)

    def _persist(self, record: CourseRecord) -> None:
        if self._root is None:
            return
        document = json.loads(course_io.export_json(record.course).decode("utf-8"))
        path = self._root / f"{record.course.id}.json"
        path.write_text(
            json.dumps({"published": record.published, "document": document}, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    def add(self, course: Course) -> None:
        with self._lock:
            if course.id in self._records:
                raise ApiError(409, "course_exists", f"course {course.id!r} already exists")
            record = CourseRecord(course=course)
            self._records[course.id] = record
            self._persist(record)

    def get(self, course_id: str) -> CourseRecord | None:
        with self._lock:
            return self._records.get(course_id)

    def replace_course(self, course: Course) -> None:
        with self._lock:
            record = self._records[course.id]
            record.course = course
            self._persist(record)

    def set_published(self, course_id: str) -> None:
        with self._lock:
            record = self._records[course_id]
            record.published = True
            self._persist(record)

    def list_records(self) -> list[CourseRecord]:
        with self._lock:
            return list(self._records.values())


@dataclass
class CurriculumRecord:
    curriculum: PersonalizedCurriculum
    persona: Persona
    owners: set[str] = field(default_factory=set)


@dataclass
class ContentRecord:
    content: GeneratedContent
    owners: set[str] = field(default_factory=set)


@dataclass
class AttemptRecord:
    content_id: str
    practice_id: str
    chosen_index: int
    correct: bool
    at: str


# ---- service state ----


@dataclass
class ServiceSettings:
    workers: int = 100
    reveal_answers: bool = False
    params: GenerationParams = field(default_factory=GenerationParams)
    repair_policy: RepairPolicy = field(default_factory=RepairPolicy)


class ServiceState:
    def __init__(
        self,
        provider,
        store: Store,
        templates: PromptTemplates,
        principals: list[Principal],
        settings: ServiceSettings,
        courses_root: Path | None = None,
    ):
        self.provider = provider
        self.store = store
        self.templates = templates
        self.settings = settings
        self.principals = {p.token: p for p in principals}
        self.courses = CourseRepository(courses_root)
        self.curricula: dict[str, CurriculumRecord] = {}
        self.contents: dict[str, ContentRecord] = {}
        self.attempts: list[AttemptRecord] = []
        self.jobs = JobRegistry()
        self.lock = threading.RLock()
        self.inflight: dict[str, str] = {}  # cache-key digest -> job id
        self.executor = ThreadPoolExecutor(max_workers=settings.workers, thread_name_prefix="genworker")

    def close(self) -> None:
        self.executor.shutdown(wait=False)


def _state(request: Request) -> ServiceState:
    return request.app.state.service


def _principal(request: Request) -> Principal:
    header = request.headers.get("authorization", "")
    if not header.startswith("Bearer "):
        raise ApiError(401, "unauthorized", "missing bearer token")
    token = header[len("Bearer ") :].strip()
    principal = _state(request).principals.get(token)
    if principal is None:
        raise ApiError(401, "unauthorized", "unknown token")
    return principal


def _require_role(principal: Principal, role: str) -> None:
    if principal.role != role:
        raise ApiError(403, "forbidden", f"requires {role} role")


# ---- generation plumbing ----


def _curriculum_cache_key(course: Course, persona_key: str, prompt_hash: str) -> CacheKey:
    return CacheKey(
        course_id=course.id,
        course_version_hash=course.version_hash,
        persona_key=persona_key,
        stage="curriculum",
        prompt_hash=prompt_hash,
    )


def _content_cache_key(
    course: Course, persona_key: str, section_id: str, subsection_id: str, prompt_hash: str
) -> CacheKey:
    return CacheKey(
        course_id=course.id,
        course_version_hash=course.version_hash,
        persona_key=persona_key,
        stage="content",
        section_id=section_id,
        subsection_id=subsection_id,
        prompt_hash=prompt_hash,
    )


def _register_curriculum(state: ServiceState, curriculum: PersonalizedCurriculum, persona: Persona, owner: str) -> None:
    with state.lock:
        record = state.curricula.get(curriculum.id)
        if record is None:
            state.curricula[curriculum.id] = CurriculumRecord(curriculum=curriculum, persona=persona, owners={owner})
        else:
            record.owners.add(owner)


def _register_content(state: ServiceState, content: GeneratedContent, owner: str) -> None:
    with state.lock:
        record = state.contents.get(content.id)
        if record is None:
            state.contents[content.id] = ContentRecord(content=content, owners={owner})
        else:
            record.owners.add(owner)


def _cache_or_enqueue(state: ServiceState, key: CacheKey, owner: str, kind: str, subject: dict[str, str], work) -> str:
    """Shared cache-then-job logic: serve a hit as an immediately-succeeded
    job, dedupe identical in-flight requests, otherwise enqueue `work`."""
    digest = key.digest()
    with state.lock:
        inflight_id = state.inflight.get(digest)
        if inflight_id is not None:
            job = state.jobs.get(inflight_id)
            if job is not None and job.state in (JobState.QUEUED, JobState.RUNNING):
                if job.owner_token == owner:
                    return inflight_id
        job = state.jobs.create(kind=kind, subject=subject, owner_token=owner)
        state.inflight[digest] = job.id

    def run():
        state.jobs.transition(job.id, JobState.RUNNING)
        try:
            result_ref = work()
        except TutorcraftError as exc:
            state.jobs.transition(job.id, JobState.FAILED, error=str(exc), error_code=exc.code)
        except Exception as exc:  # noqa: BLE001 - jobs must always reach a terminal state
            logger.exception("generation job %s crashed", job.id)
            state.jobs.transition(job.id, JobState.FAILED, error=str(exc), error_code="internal_error")
        else:
            state.jobs.transition(job.id, JobState.SUCCEEDED, result_ref=result_ref)
        finally:
            with state.lock:
                if state.inflight.get(digest) == job.id:
                    del state.inflight[digest]

    state.executor.submit(run)
    return job.id


# ---- response shaping ----


def _course_summary(record: CourseRecord) -> dict[str, Any]:
    return {
        "id": record.course.id,
        "title": record.course.title,
        "description": record.course.description,
        "version_hash": record.course.version_hash,
        "published": record.published,
    }


def _course_detail(record: CourseRecord, include_bodies: bool) -> dict[str, Any]:
    data = _course_summary(record)
    data["sections"] = [
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
                    **({"body": ss.body, "example_exercises": [_exercise_view(ex, True) for ex in ss.example_exercises]} if include_bodies else {}),
                }
                for ss in s.subsections
            ],
        }
        for s in record.course.sections
    ]
    return data


def _exercise_view(ex, reveal: bool) -> dict[str, Any]:
    data: dict[str, Any] = {
        "id": ex.id,
        "stem": ex.stem,
        "choices": [
            {"text": c.text, **({"feedback": c.feedback} if reveal else {})} for c in ex.choices
        ],
    }
    if reveal:
        data["correct_index"] = ex.correct_index
    return data


def _curriculum_view(record: CurriculumRecord) -> dict[str, Any]:
    return curriculum_to_dict(record.curriculum)


def _content_view(record: ContentRecord, reveal: bool) -> dict[str, Any]:
    content = record.content
    return {
        "id": content.id,
        "course_id": content.course_id,
        "course_version_hash": content.course_version_hash,
        "curriculum_id": content.curriculum_id,
        "section_id": content.section_id,
        "subsection_id": content.subsection_id,
        "body": content.body,
        "practices": [_exercise_view(p, reveal) for p in content.practices],
    }


# ---- app factory ----


def create_app(
    provider,
    store: Store,
    principals: list[Principal],
    templates: PromptTemplates | None = None,
    settings: ServiceSettings | None = None,
    courses_root: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="tutorcraft", version="0.1.0", openapi_url=f"{API_PREFIX}/openapi.json")
    state = ServiceState(
        provider=provider,
        store=store,
        templates=templates or load_templates(),
        principals=principals,
        settings=settings or ServiceSettings(),
        courses_root=courses_root,
    )
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        body: dict[str, Any] = {"code": exc.code, "message": exc.message}
        if exc.details is not None:
            body["details"] = exc.details
        return JSONResponse(status_code=exc.status, content=body)

    # -- teacher routes --

    @app.post(f"{API_PREFIX}/courses", status_code=201)
    async def create_course(request: Request, response: Response):
        principal = _principal(request)
        _require_role(principal, "teacher")
        body = await request.body()
        content_type = request.headers.get("content-type", "").split(";")[0].strip()
        try:
            if content_type == "text/csv":
                course = course_io.import_csv(body)
            else:
                course = course_io.import_json(body)
        except ParseError as exc:
            raise ApiError(422, exc.code, str(exc), details={"line": exc.line, "column": exc.column})
        except SchemaError as exc:
            raise ApiError(422, exc.code, str(exc), details={"path": exc.path})
        except ValidationError as exc:
            raise ApiError(422, exc.code, "course fails draft validation", details=exc.report.to_list())
        state.courses.add(course)
        response.headers["Location"] = f"{API_PREFIX}/courses/{course.id}"
        return {"course_id": course.id, "version_hash": course.version_hash}

    @app.get(f"{API_PREFIX}/courses")
    def list_courses(request: Request):
        principal = _principal(request)
        records = state.courses.list_records()
        if principal.role != "teacher":
            records = [r for r in records if r.published]
        return {"courses": [_course_summary(r) for r in records]}

    @app.get(f"{API_PREFIX}/courses/{{course_id}}")
    def get_course(request: Request, course_id: str):
        principal = _principal(request)
        record = state.courses.get(course_id)
        if record is None or (principal.role != "teacher" and not record.published):
            raise ApiError(404, "not_found", "no such course")
        return _course_detail(record, include_bodies=principal.role == "teacher")

    @app.patch(f"{API_PREFIX}/courses/{{course_id}}/sections/{{section_id}}")
    async def update_section(request: Request, course_id: str, section_id: str):
        principal = _principal(request)
        _require_role(principal, "teacher")
        record = state.courses.get(course_id)
        if record is None:
            raise ApiError(404, "not_found", "no such course")
        patch = await request.json()
        allowed = {"title", "summary", "scope", "learning_goals"}
        unknown = set(patch) - allowed
        if unknown:
            raise ApiError(422, "schema_error", f"unknown patch field {sorted(unknown)[0]!r}")
        with state.lock:
            course = state.courses.get(course_id).course
            section = course.section(section_id)
            if section is None:
                raise ApiError(404, "not_found", "no such section")
            goals = patch.get("learning_goals", list(section.learning_goals))
            if not isinstance(goals, list) or not all(isinstance(g, str) for g in goals):
                raise ApiError(422, "schema_error", "learning_goals must be a list of strings")
            updated_section = Section(
                id=section.id,
                title=patch.get("title", section.title),
                summary=patch.get("summary", section.summary),
                scope=patch.get("scope", section.scope),
                learning_goals=tuple(goals),
                subsections=section.subsections,
            )
            updated = Course(
                id=course.id,
                title=course.title,
                description=course.description,
                sections=tuple(updated_section if s.id == section_id else s for s in course.sections),
            )
            report = validate_course(updated, ValidationMode.DRAFT)
            if not report.ok:
                raise ApiError(422, "validation_error", "patch violates course invariants", details=report.to_list())
            state.courses.replace_course(updated)
        return {"version_hash": updated.version_hash}

    @app.post(f"{API_PREFIX}/courses/{{course_id}}/publish")
    def publish_course(request: Request, course_id: str):
        principal = _principal(request)
        _require_role(principal, "teacher")
        record = state.courses.get(course_id)
        if record is None:
            raise ApiError(404, "not_found", "no such course")
        report = validate_course(record.course, ValidationMode.PUBLISH)
        if not report.ok:
            raise ApiError(422, "validation_error", "course fails publish validation", details=report.to_list())
        state.courses.set_published(course_id)  # idempotent
        return {"published": True, "version_hash": record.course.version_hash}

    # -- student routes --

    @app.post(f"{API_PREFIX}/courses/{{course_id}}/personalize", status_code=202)
    async def personalize(request: Request, course_id: str):
        principal = _principal(request)
        _require_role(principal, "student")
        record = state.courses.get(course_id)
        if record is None or not record.published:
            raise ApiError(404, "not_found", "no such published course")
        body = await request.json()
        persona = Persona(interests=body.get("interests", ""), career_goals=body.get("career_goals", ""))
        try:
            persona_key = derive_persona_key(persona)
        except EmptyPersona as exc:
            raise ApiError(422, exc.code, str(exc))
        course = record.course
        try:
            bundle = build_curriculum_prompt(course, persona, state.templates, state.settings.params)
        except DraftCourse as exc:
            raise ApiError(422, exc.code, "course no longer passes publish validation", details=exc.report.to_list())
        key = _curriculum_cache_key(course, persona_key, bundle.prompt_hash)
        curriculum_id = key.digest()[:32]
        subject = {"course_id": course.id, "persona_key": persona_key}

        cached = state.store.get(key)
        if cached is not None:
            curriculum = curriculum_from_dict(json.loads(cached.payload.decode("utf-8")))
            _register_curriculum(state, curriculum, persona, principal.token)
            job = state.jobs.create(
                kind="curriculum", subject=subject, owner_token=principal.token,
                state=JobState.SUCCEEDED, result_ref=curriculum.id,
            )
            return {"job_id": job.id}

        def work() -> str:
            outcome = run_generation(
                bundle,
                state.provider,
                validate=lambda raw: parse_curriculum_response(raw, course, persona_key, curriculum_id),
                policy=state.settings.repair_policy,
            )
            curriculum = outcome.value
            payload = course_io.canonical_json_bytes(curriculum_to_dict(curriculum))
            state.store.put(StoreRecord(key=key, payload=payload, meta=outcome.meta))
            _register_curriculum(state, curriculum, persona, principal.token)
            return curriculum.id

        job_id = _cache_or_enqueue(state, key, principal.token, "curriculum", subject, work)
        return {"job_id": job_id}

    @app.get(f"{API_PREFIX}/jobs/{{job_id}}")
    def get_job(request: Request, job_id: str):
        principal = _principal(request)
        job = state.jobs.get(job_id)
        if job is None or job.owner_token != principal.token:
            raise ApiError(404, "not_found", "no such job")
        return job.snapshot()

    @app.get(f"{API_PREFIX}/curricula/{{curriculum_id}}")
    def get_curriculum(request: Request, curriculum_id: str):
        principal = _principal(request)
        record = state.curricula.get(curriculum_id)
        if record is None or principal.token not in record.owners:
            raise ApiError(404, "not_found", "no such curriculum")
        return _curriculum_view(record)

    @app.post(f"{API_PREFIX}/curricula/{{curriculum_id}}/save")
    def save_curriculum(request: Request, curriculum_id: str):
        principal = _principal(request)
        _require_role(principal, "student")
        with state.lock:
            record = state.curricula.get(curriculum_id)
            if record is None or principal.token not in record.owners:
                raise ApiError(404, "not_found", "no such curriculum")
            # saving twice is an idempotent success
            record.curriculum = record.curriculum.saved()
        return {"state": record.curriculum.state.value}

    @app.post(
        f"{API_PREFIX}/curricula/{{curriculum_id}}/sections/{{section_id}}"
        f"/subsections/{{subsection_id}}/content",
        status_code=202,
    )
    def request_content(request: Request, curriculum_id: str, section_id: str, subsection_id: str):
        principal = _principal(request)
        _require_role(principal, "student")
        record = state.curricula.get(curriculum_id)
        if record is None or principal.token not in record.owners:
            raise ApiError(404, "not_found", "no such curriculum")
        curriculum = record.curriculum
        if curriculum.state != CurriculumState.SAVED:
            raise ApiError(409, "curriculum_not_saved", "save the curriculum before requesting content")
        course_record = state.courses.get(curriculum.course_id)
        if course_record is None:
            raise ApiError(404, "not_found", "course no longer exists")
        course = course_record.course
        if curriculum.course_version_hash != course.version_hash:
            raise ApiError(409, "version_mismatch", "course was edited after this curriculum was generated")
        section = course.section(section_id)
        if section is None:
            raise ApiError(404, "not_found", "no such section")
        if all(ss.id != subsection_id for ss in section.subsections):
            raise ApiError(404, "not_found", "no such subsection")

        bundle = build_content_prompt(
            course, curriculum, section_id, subsection_id, record.persona, state.templates, state.settings.params
        )
        key = _content_cache_key(course, curriculum.persona_key, section_id, subsection_id, bundle.prompt_hash)
        content_id = key.digest()[:32]
        subject = {
            "course_id": course.id,
            "curriculum_id": curriculum.id,
            "section_id": section_id,
            "subsection_id": subsection_id,
        }

        cached = state.store.get(key)
        if cached is not None:
            content = content_from_dict(json.loads(cached.payload.decode("utf-8")))
            _register_content(state, content, principal.token)
            job = state.jobs.create(
                kind="content", subject=subject, owner_token=principal.token,
                state=JobState.SUCCEEDED, result_ref=content.id,
            )
            return {"job_id": job.id}

        def work() -> str:
            outcome = run_generation(
                bundle,
                state.provider,
                validate=parse_content_response,
                policy=state.settings.repair_policy,
            )
            body_text, practices = outcome.value
            content = GeneratedContent(
                id=content_id,
                course_id=course.id,
                course_version_hash=course.version_hash,
                persona_key=curriculum.persona_key,
                curriculum_id=curriculum.id,
                section_id=section_id,
                subsection_id=subsection_id,
                body=body_text,
                practices=practices,
                meta=outcome.meta,
            )
            payload = course_io.canonical_json_bytes(content_to_dict(content))
            state.store.put(StoreRecord(key=key, payload=payload, meta=outcome.meta))
            _register_content(state, content, principal.token)
            return content.id

        job_id = _cache_or_enqueue(state, key, principal.token, "content", subject, work)
        return {"job_id": job_id}

    @app.get(f"{API_PREFIX}/content/{{content_id}}")
    def get_content(request: Request, content_id: str):
        principal = _principal(request)
        record = state.contents.get(content_id)
        if record is None or principal.token not in record.owners:
            # ownership mismatch is indistinguishable from absence on purpose
            raise ApiError(404, "not_found", "no such content")
        return _content_view(record, reveal=state.settings.reveal_answers)

    @app.post(f"{API_PREFIX}/content/{{content_id}}/practices/{{practice_id}}/answers")
    async def submit_answer(request: Request, content_id: str, practice_id: str):
        principal = _principal(request)
        _require_role(principal, "student")
        record = state.contents.get(content_id)
        if record is None or principal.token not in record.owners:
            raise ApiError(404, "not_found", "no such content")
        practice = next((p for p in record.content.practices if p.id == practice_id), None)
        if practice is None:
            raise ApiError(404, "not_found", "no such practice")
        body = await request.json()
        chosen = body.get("chosen_index")
        if not isinstance(chosen, int) or not 0 <= chosen < len(practice.choices):
            raise ApiError(422, "index_out_of_range", f"chosen_index must be in [0, {len(practice.choices)})")
        result = grade_answer(practice, chosen)
        with state.lock:
            state.attempts.append(
                AttemptRecord(
                    content_id=content_id,
                    practice_id=practice_id,
                    chosen_index=chosen,
                    correct=result.correct,
                    at=datetime.now(timezone.utc).isoformat(),
                )
            )
        return {"correct": result.correct, "feedback": result.feedback}

    return app

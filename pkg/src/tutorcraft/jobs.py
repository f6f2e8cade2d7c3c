"""Asynchronous generation jobs: queued -> running -> succeeded | failed.

Generation calls take minutes, so the API hands out job ids and clients
poll. Terminal states are immutable; the registry enforces the state
machine rather than trusting callers.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any


class JobState(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


_LEGAL_TRANSITIONS = {
    JobState.QUEUED: {JobState.RUNNING},
    JobState.RUNNING: {JobState.SUCCEEDED, JobState.FAILED},
    JobState.SUCCEEDED: set(),
    JobState.FAILED: set(),
}


@dataclass
class GenerationJob:
    id: str
    kind: str  # "curriculum" | "content"
    subject: dict[str, str]
    owner_token: str
    state: JobState = JobState.QUEUED
    result_ref: str | None = None
    error: str | None = None
    error_code: str | None = None
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    updated_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def snapshot(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "id": self.id,
            "kind": self.kind,
            "subject": dict(self.subject),
            "state": self.state.value,
            "created_at": self.created_at.isoformat(),
            "updated_at": self.updated_at.isoformat(),
        }
        if self.state == JobState.SUCCEEDED:
            data["result_ref"] = self.result_ref
        if self.state == JobState.FAILED:
            data["error"] = self.error
            data["error_code"] = self.error_code
        return data


class JobRegistry:
    def __init__(self):
        self._jobs: dict[str, GenerationJob] = {}
        self._lock = threading.RLock()

    def create(
        self,
        kind: str,
        subject: dict[str, str],
        owner_token: str,
        state: JobState = JobState.QUEUED,
        result_ref: str | None = None,
    ) -> GenerationJob:
        job = GenerationJob(
            id=uuid.uuid4().hex,
            kind=kind,
            subject=subject,
            owner_token=owner_token,
            state=state,
            result_ref=result_ref,
        )
        with self._lock:
            self._jobs[job.id] = job
        return job

    def get(self, job_id: str) -> GenerationJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def transition(
        self,
        job_id: str,
        state: JobState,
        result_ref: str | None = None,
        error: str | None = None,
        error_code: str | None = None,
    ) -> GenerationJob:
        with self._lock:
            job = self._jobs[job_id]
            if state not in _LEGAL_TRANSITIONS[job.state]:
                raise ValueError(f"illegal job transition {job.state.value} -> {state.value}")
            job.state = state
            job.result_ref = result_ref if result_ref is not None else job.result_ref
            job.error = error
            job.error_code = error_code
            job.updated_at = datetime.now(timezone.utc)
            return job

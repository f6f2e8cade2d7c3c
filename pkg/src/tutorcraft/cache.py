"""Content cache: keyed by course version, persona, stage, and prompt hash.

Because every input that affects generation participates in the key
(version_hash for course edits, persona_key for the learner, prompt_hash
for templates and params), stale entries are unreachable by construction.
Explicit invalidation exists for storage reclamation and forced
regeneration only.

Backends: an in-memory store for tests and a durable file-backed store
(one record file per key under a sharded directory, plus an index file
mapping digests to course versions for fast invalidation).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ConfigError, StorageError
from .model import GenerationMeta, meta_from_dict, meta_to_dict

logger = logging.getLogger(__name__)

_KEY_FIELDS = (
    "course_id",
    "course_version_hash",
    "persona_key",
    "stage",
    "section_id",
    "subsection_id",
    "prompt_hash",
)


@dataclass(frozen=True, order=True)
class CacheKey:
    course_id: str
    course_version_hash: str
    persona_key: str
    stage: str  # "curriculum" | "content"
    section_id: str = ""  # empty for curriculum stage
    subsection_id: str = ""
    prompt_hash: str = ""

    def digest(self) -> str:
        joined = "\x1f".join(getattr(self, f) for f in _KEY_FIELDS)
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class StoreRecord:
    key: CacheKey
    payload: bytes  # canonical serialization of the cached artifact
    meta: GenerationMeta


@dataclass(frozen=True)
class StoreConfig:
    backend: str = "memory"  # "memory" | "file"
    root: Path | None = None


class Store(ABC):
    """Cache-law contract: get after put returns the exact payload; put is
    last-writer-wins per key; operations are individually atomic."""

    @abstractmethod
    def get(self, key: CacheKey) -> StoreRecord | None: ...

    @abstractmethod
    def put(self, record: StoreRecord) -> None: ...

    @abstractmethod
    def invalidate_course_version(self, course_id: str, version_hash: str) -> int: ...

    @abstractmethod
    def keys(self) -> list[CacheKey]:
        """All stored keys in their total order (deterministic listing)."""


class MemoryStore(Store):
    def __init__(self):
        self._records: dict[CacheKey, StoreRecord] = {}
        self._lock = threading.RLock()

    def get(self, key: CacheKey) -> StoreRecord | None:
        with self._lock:
            return self._records.get(key)

    def put(self, record: StoreRecord) -> None:
        with self._lock:
            self._records[record.key] = record

    def invalidate_course_version(self, course_id: str, version_hash: str) -> int:
        with self._lock:
            doomed = [
                k
                for k in self._records
                if k.course_id == course_id and k.course_version_hash == version_hash
            ]
            for k in doomed:
                del self._records[k]
            return len(doomed)

    def keys(self) -> list[CacheKey]:
        with self._lock:
            return sorted(self._records)


class FileStore(Store):
    """Durable store: `<root>/<2-hex shard>/<key-digest>.rec` JSON records.

    Writes go through a temp file and an atomic rename, so readers never
    observe a torn payload. A corrupt record file is treated as a miss,
    logged, and removed (self-healing).
    """

    INDEX_NAME = "index.json"

    def __init__(self, root: str | Path):
        self._root = Path(root)
        self._lock = threading.RLock()
        try:
            self._root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create store root {self._root}: {exc}") from exc

    def _path(self, digest: str) -> Path:
        return self._root / digest[:2] / f"{digest}.rec"

    def _index_path(self) -> Path:
        return self._root / self.INDEX_NAME

    def _read_index(self) -> dict[str, dict[str, str]]:
        try:
            return json.loads(self._index_path().read_text(encoding="utf-8"))
        except FileNotFoundError:
            return self._rebuild_index()
        except (OSError, json.JSONDecodeError):
            logger.warning("cache index unreadable, rebuilding from record files")
            return self._rebuild_index()

    def _rebuild_index(self) -> dict[str, dict[str, str]]:
        index: dict[str, dict[str, str]] = {}
        for path in self._root.glob("??/*.rec"):
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
                key = data["key"]
                index[path.stem] = {
                    "course_id": key["course_id"],
                    "course_version_hash": key["course_version_hash"],
                }
            except (OSError, json.JSONDecodeError, KeyError):
                continue
        return index

    def _write_index(self, index: dict[str, dict[str, str]]) -> None:
        self._atomic_write(self._index_path(), json.dumps(index, sort_keys=True).encode("utf-8"))

    def _atomic_write(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except OSError as exc:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise StorageError(f"write failed for {path}: {exc}") from exc

    def get(self, key: CacheKey) -> StoreRecord | None:
        path = self._path(key.digest())
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        except OSError as exc:
            raise StorageError(f"read failed for {path}: {exc}") from exc
        try:
            data = json.loads(raw)
            stored_key = CacheKey(**{f: data["key"][f] for f in _KEY_FIELDS})
            record = StoreRecord(
                key=stored_key,
                payload=data["payload"].encode("utf-8"),
                meta=meta_from_dict(data["meta"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            logger.warning("corrupt cache record %s; treating as miss and removing", path)
            with self._lock:
                path.unlink(missing_ok=True)
            return None
        if stored_key != key:  # digest collision or tampering; treat as miss
            return None
        return record

    def put(self, record: StoreRecord) -> None:
        digest = record.key.digest()
        data = {
            "key": asdict(record.key),
            "meta": meta_to_dict(record.meta),
            "payload": record.payload.decode("utf-8"),
        }
        encoded = (json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
        with self._lock:
            self._atomic_write(self._path(digest), encoded)
            index = self._read_index()
            index[digest] = {
                "course_id": record.key.course_id,
                "course_version_hash": record.key.course_version_hash,
            }
            self._write_index(index)

    def invalidate_course_version(self, course_id: str, version_hash: str) -> int:
        with self._lock:
            index = self._read_index()
            doomed = [
                digest
                for digest, entry in index.items()
                if entry["course_id"] == course_id and entry["course_version_hash"] == version_hash
            ]
            count = 0
            for digest in doomed:
                path = self._path(digest)
                if path.exists():
                    try:
                        path.unlink()
                        count += 1
                    except OSError as exc:
                        raise StorageError(f"delete failed for {path}: {exc}") from exc
                del index[digest]
            self._write_index(index)
            return count

    def keys(self) -> list[CacheKey]:
        found: list[CacheKey] = []
        for path in sorted(self._root.glob("??/*.rec")):
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
                found.append(CacheKey(**{f: data["key"][f] for f in _KEY_FIELDS}))
            except (OSError, json.JSONDecodeError, KeyError, TypeError):
                logger.warning("skipping unreadable cache record %s", path)
        return sorted(found)


def open_store(config: StoreConfig) -> Store:
    if config.backend == "memory":
        return MemoryStore()
    if config.backend == "file":
        if config.root is None:
            raise ConfigError("file-backed store requires a root directory")
        return FileStore(config.root)
    raise ConfigError(f"unknown store backend {config.backend!r}")

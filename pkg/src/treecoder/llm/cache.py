"""Content-addressed on-disk response cache.

Each entry is ``<cache_dir>/<key>.json`` holding
``{key, request, text, backend_id, timestamp}``, where ``key`` is
:func:`~treecoder.llm.base.request_key` of the request.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path

from treecoder.llm.base import Backend, BackendError, CompletionRequest, CompletionResponse, request_key


class CacheError(BackendError):
    pass


class CachedBackend(Backend):
    def __init__(self, inner: Backend, cache_dir: str | Path):
        super().__init__()
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CacheError(f"cannot create cache dir {self.cache_dir}: {exc}") from exc
        self.backend_id = inner.backend_id
        self.hits = 0
        self.misses = 0
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[key]

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        key = request_key(request)
        path = self.cache_dir / f"{key}.json"
        with self._lock_for(key):
            if path.exists():
                try:
                    entry = json.loads(path.read_text(encoding="utf-8"))
                except (OSError, ValueError) as exc:
                    raise CacheError(f"unreadable cache entry {path}: {exc}") from exc
                with self._count_lock:
                    self.hits += 1
                return CompletionResponse(text=entry["text"], backend_id=entry["backend_id"], cached=True)
            response = self.inner.complete(request)
            entry = {
                "key": key,
                "request": request.key_payload() | {"max_output_tokens": request.max_output_tokens},
                "text": response.text,
                "backend_id": response.backend_id,
                "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            }
            _atomic_write(path, json.dumps(entry, indent=2, ensure_ascii=False) + "\n")
            with self._count_lock:
                self.misses += 1
            return response


def _atomic_write(path: Path, text: str) -> None:
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CacheError(f"cannot write cache entry {path}: {exc}") from exc


def cache_stats(cache_dir: str | Path) -> dict:
    entries = list(Path(cache_dir).glob("*.json")) if Path(cache_dir).is_dir() else []
    backends: dict[str, int] = defaultdict(int)
    size = 0
    for path in entries:
        size += path.stat().st_size
        try:
            backends[json.loads(path.read_text(encoding="utf-8")).get("backend_id", "?")] += 1
        except ValueError:
            backends["<corrupt>"] += 1
    return {"entries": len(entries), "bytes": size, "by_backend": dict(sorted(backends.items()))}


def cache_clear(cache_dir: str | Path) -> int:
    removed = 0
    if Path(cache_dir).is_dir():
        for path in Path(cache_dir).glob("*.json"):
            path.unlink()
            removed += 1
    return removed

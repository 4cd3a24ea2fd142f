"""Replay backend: answers prompts from a recorded script.

Script file (JSON)::

    {"backend_id": "gpt-4-recorded",
     "entries": [{"prompt_sha256": "...", "text": "...", ...}, ...]}

Extra keys in an entry (doc_id, parent_code, user_text) are informational.
"""

from __future__ import annotations

import json
from pathlib import Path

from treecoder.llm.base import (
    Backend,
    CompletionRequest,
    CompletionResponse,
    ReplayMiss,
    prompt_hash,
)


class ReplayBackend(Backend):
    def __init__(self, responses: dict[str, str], backend_id: str = "replay"):
        super().__init__()
        self.responses = dict(responses)
        self.backend_id = backend_id

    @classmethod
    def from_script(cls, path: str | Path) -> "ReplayBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        responses = {e["prompt_sha256"]: e["text"] for e in data["entries"]}
        return cls(responses, backend_id=data.get("backend_id", "replay"))

    @classmethod
    def from_cache_dir(cls, cache_dir: str | Path, backend_id: str = "replay") -> "ReplayBackend":
        """Replay every entry recorded by :class:`~treecoder.llm.cache.CachedBackend`."""
        responses = {}
        for path in sorted(Path(cache_dir).glob("*.json")):
            entry = json.loads(path.read_text(encoding="utf-8"))
            req = entry["request"]
            responses[prompt_hash(req.get("system_text"), req["user_text"])] = entry["text"]
        return cls(responses, backend_id=backend_id)

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        key = prompt_hash(request.system_text, request.user_text)
        try:
            text = self.responses[key]
        except KeyError:
            hint = f" (doc {request.doc_id})" if request.doc_id else ""
            raise ReplayMiss(f"no scripted response for prompt {key[:12]}{hint}") from None
        return CompletionResponse(text=text, backend_id=self.backend_id)


class RecordingBackend(Backend):
    """Pass-through wrapper that keeps every exchange for writing a replay script."""

    def __init__(self, inner: Backend):
        super().__init__()
        self.inner = inner
        self.backend_id = inner.backend_id
        self.entries: dict[str, dict] = {}

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        response = self.inner.complete(request)
        key = prompt_hash(request.system_text, request.user_text)
        self.entries[key] = {
            "prompt_sha256": key,
            "doc_id": request.doc_id,
            "user_text": request.user_text,
            "text": response.text,
        }
        return response

    def script(self, backend_id: str | None = None) -> dict:
        entries = sorted(self.entries.values(), key=lambda e: (e["doc_id"] or "", e["prompt_sha256"]))
        return {"backend_id": backend_id or self.backend_id, "entries": entries}

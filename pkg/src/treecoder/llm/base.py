from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field


class BackendError(RuntimeError):
    """A completion could not be produced."""


class ReplayMiss(BackendError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    """One chat completion request.

    ``doc_id`` and ``candidate_codes`` are routing hints for in-process
    backends (the oracle). They are never sent on the wire and are not part of
    any cache or replay key.
    """

    user_text: str
    model_id: str = "default"
    system_text: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 1024
    doc_id: str | None = field(default=None, compare=False)
    candidate_codes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_output_tokens < 1:
            raise ValueError(f"max_output_tokens must be positive, got {self.max_output_tokens}")

    def key_payload(self) -> dict:
        return {
            "model_id": self.model_id,
            "temperature": self.temperature,
            "system_text": self.system_text,
            "user_text": self.user_text,
        }


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    backend_id: str
    cached: bool = False
    latency_ms: int = 0


def request_key(request: CompletionRequest) -> str:
    """Content address of a request: model, temperature and both prompt texts."""
    blob = json.dumps(request.key_payload(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def prompt_hash(system_text: str | None, user_text: str) -> str:
    """Model-independent hash of the prompt texts, used by replay scripts."""
    blob = json.dumps([system_text, user_text], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class Backend:
    """Base class for completion backends.

    Subclasses implement :meth:`_complete`; :meth:`complete` counts requests.
    Implementations must be safe to call from several threads at once.
    """

    backend_id = "backend"

    def __init__(self) -> None:
        self._count_lock = threading.Lock()
        self.request_count = 0

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._count_lock:
            self.request_count += 1
        return self._complete(request)

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        raise NotImplementedError

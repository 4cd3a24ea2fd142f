from treecoder.llm.base import (
    Backend,
    BackendError,
    CompletionRequest,
    CompletionResponse,
    ReplayMiss,
    prompt_hash,
    request_key,
)
from treecoder.llm.cache import CacheError, CachedBackend, cache_clear, cache_stats
from treecoder.llm.http import HttpBackend
from treecoder.llm.oracle import OracleBackend, OracleConfig, oracle_complete
from treecoder.llm.replay import RecordingBackend, ReplayBackend


def complete(backend: Backend, request: CompletionRequest) -> CompletionResponse:
    return backend.complete(request)


def cached(backend: Backend, cache_dir) -> CachedBackend:
    return CachedBackend(backend, cache_dir)


__all__ = [
    "Backend",
    "BackendError",
    "CacheError",
    "CachedBackend",
    "CompletionRequest",
    "CompletionResponse",
    "HttpBackend",
    "OracleBackend",
    "OracleConfig",
    "RecordingBackend",
    "ReplayBackend",
    "ReplayMiss",
    "cache_clear",
    "cache_stats",
    "cached",
    "complete",
    "oracle_complete",
    "prompt_hash",
    "request_key",
]

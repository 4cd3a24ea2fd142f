"""Chat-completions HTTP backend with bounded retries and an in-flight cap."""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from typing import Callable

import httpx

from treecoder.llm.base import Backend, BackendError, CompletionRequest, CompletionResponse

log = logging.getLogger(__name__)

RETRY_STATUS = {408, 429, 500, 502, 503, 504}


class HttpBackend(Backend):
    """POSTs ``{model, temperature, max_tokens, messages}`` and reads the first choice.

    ``min_temperature`` clamps requests from below; some hosted models reject
    a temperature of exactly 0 (use 0.001 for Llama-2 style endpoints).
    """

    def __init__(
        self,
        endpoint: str,
        *,
        credential_env_var: str | None = "OPENAI_API_KEY",
        backend_id: str | None = None,
        min_temperature: float = 0.0,
        max_attempts: int = 5,
        backoff_base: float = 1.0,
        backoff_cap: float = 30.0,
        timeout: float = 120.0,
        max_in_flight: int = 4,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        super().__init__()
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.endpoint = endpoint
        self.credential_env_var = credential_env_var
        self.backend_id = backend_id or f"http:{endpoint}"
        self.min_temperature = min_temperature
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.credential_env_var:
            key = os.environ.get(self.credential_env_var)
            if not key:
                raise BackendError(f"credential environment variable {self.credential_env_var} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def payload(self, request: CompletionRequest) -> dict:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        return {
            "model": request.model_id,
            "temperature": max(request.temperature, self.min_temperature),
            "max_tokens": request.max_output_tokens,
            "messages": messages,
        }

    def _delay(self, attempt: int) -> float:
        delay = min(self.backoff_cap, self.backoff_base * 2**attempt)
        return delay * (0.5 + self._rng.random() / 2)

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        payload = self.payload(request)
        headers = self._headers()
        last_error = "no attempt made"
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(self._delay(attempt - 1))
            start = time.monotonic()
            try:
                with self._slots:
                    resp = self._client.post(self.endpoint, json=payload, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                log.warning("attempt %d/%d failed: %s", attempt + 1, self.max_attempts, last_error)
                continue
            if resp.status_code in RETRY_STATUS:
                last_error = f"HTTP {resp.status_code}"
                log.warning("attempt %d/%d got %s", attempt + 1, self.max_attempts, last_error)
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code} from {self.endpoint}: {resp.text[:200]}")
            try:
                text = resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"unexpected response body from {self.endpoint}: {exc}") from exc
            latency = int((time.monotonic() - start) * 1000)
            return CompletionResponse(text=text, backend_id=self.backend_id, latency_ms=latency)
        raise BackendError(f"giving up after {self.max_attempts} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()

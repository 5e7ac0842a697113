"""Uniform chat-completion gateway: a live HTTP backend, a deterministic
scripted backend for tests, and a persistent response cache.

``complete()`` is safe for concurrent callers. Transient failures (timeouts,
rate limits, 5xx) retry with exponential backoff up to a configured attempt
cap; auth failures and well-formed backend refusals never retry. Successful
responses land in the cache, keyed by the model id, decoding parameters,
template version, and prompt digest, so editing a template invalidates
stale entries automatically.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

from .prompting import PromptBundle, prompt_digest


class ProviderError(Exception):
    """Base class for completion backend failures."""


class AuthError(ProviderError):
    """The backend rejected the credential."""


class RateLimited(ProviderError):
    """Rate limiting persisted through every retry attempt."""


class TransportError(ProviderError):
    """Network-level failure after exhausting retries."""


class BackendRefusal(ProviderError):
    """The backend answered with a well-formed error payload."""


class MockScriptMiss(ProviderError):
    """A scripted provider in strict mode saw an unknown prompt digest."""


class _Transient(Exception):
    """Internal marker for retryable failures; never escapes ``complete``."""

    def __init__(self, kind: str, message: str) -> None:
        super().__init__(message)
        self.kind = kind  # "rate" or "transport"


@dataclass(frozen=True)
class CompletionRequest:
    """One completion call: the rendered prompt plus decoding parameters."""

    prompt: PromptBundle
    temperature: float = 0.0
    max_tokens: int = 2048
    model_id: str = ""

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_tokens <= 0:
            raise ValueError(f"max_tokens must be > 0, got {self.max_tokens}")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    usage: dict[str, int] = field(default_factory=dict)
    latency_ms: float = 0.0
    cache_hit: bool = False

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency cannot be negative")


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff schedule: base * multiplier^(attempt-1), capped."""

    max_attempts: int = 4
    base_delay: float = 0.5
    multiplier: float = 2.0
    max_delay: float = 8.0

    def delay(self, attempt: int) -> float:
        return min(self.base_delay * self.multiplier ** (attempt - 1), self.max_delay)


def cache_key(request: CompletionRequest) -> str:
    """Cache key over everything that determines the completion text."""
    payload = "\x1e".join(
        [
            request.model_id,
            repr(request.temperature),
            str(request.max_tokens),
            request.prompt.template_version,
            prompt_digest(request.prompt),
        ]
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """File-per-key response store. Writes are atomic (tempfile + rename)
    and serialized by a lock; reads are lock-free."""

    def __init__(self, directory: str | os.PathLike) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def store(self, key: str, text: str, usage: Mapping[str, int] | None = None) -> None:
        record = {"text": text, "usage": dict(usage or {})}
        data = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with self._write_lock:
            tmp = self._path(key).with_suffix(".tmp")
            tmp.write_text(data, encoding="utf-8")
            os.replace(tmp, self._path(key))

    def load(self, key: str) -> tuple[str, dict[str, int]] | None:
        path = self._path(key)
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        return record["text"], dict(record.get("usage", {}))


class TokenBucket:
    """Requests-per-minute throttle. ``acquire`` blocks until a token is
    available; clock and sleeper are injectable for tests."""

    def __init__(
        self,
        requests_per_minute: float,
        clock: Callable[[], float] = time.monotonic,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        if requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be positive")
        self.rate = requests_per_minute / 60.0
        self.capacity = float(requests_per_minute)
        self._tokens = self.capacity
        self._clock = clock
        self._sleeper = sleeper
        self._updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleeper(wait)


class Provider:
    """Shared ``complete`` machinery; subclasses implement ``_request``.

    Args:
        model_id:      Default backend model identifier stamped on requests.
        cache:         Optional persistent response cache.
        retry:         Backoff schedule for transient failures.
        rate_limiter:  Optional requests-per-minute token bucket.
        max_in_flight: Optional cap on concurrent backend calls.
        sleeper:       Injectable sleep for deterministic tests.
    """

    def __init__(
        self,
        model_id: str,
        cache: ResponseCache | None = None,
        retry: RetryPolicy = RetryPolicy(),
        rate_limiter: TokenBucket | None = None,
        max_in_flight: int | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        self.model_id = model_id
        self.cache = cache
        self.retry = retry
        self.rate_limiter = rate_limiter
        self._sleeper = sleeper
        self._semaphore = threading.BoundedSemaphore(max_in_flight) if max_in_flight else None

    def request(self, bundle: PromptBundle, **kwargs: object) -> CompletionRequest:
        kwargs.setdefault("model_id", self.model_id)
        return CompletionRequest(prompt=bundle, **kwargs)  # type: ignore[arg-type]

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        key = cache_key(req)
        if self.cache is not None:
            hit = self.cache.load(key)
            if hit is not None:
                text, usage = hit
                return CompletionResponse(text=text, usage=usage, latency_ms=0.0, cache_hit=True)

        last_transient: _Transient | None = None
        for attempt in range(1, self.retry.max_attempts + 1):
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            start = time.monotonic()
            try:
                if self._semaphore is not None:
                    with self._semaphore:
                        text, usage = self._request(req)
                else:
                    text, usage = self._request(req)
            except _Transient as exc:
                last_transient = exc
                if attempt < self.retry.max_attempts:
                    self._sleeper(self.retry.delay(attempt))
                continue
            latency_ms = (time.monotonic() - start) * 1000.0
            if self.cache is not None:
                self.cache.store(key, text, usage)
            return CompletionResponse(text=text, usage=usage, latency_ms=latency_ms)

        assert last_transient is not None
        if last_transient.kind == "rate":
            raise RateLimited(str(last_transient))
        raise TransportError(str(last_transient))

    def _request(self, req: CompletionRequest) -> tuple[str, dict[str, int]]:
        raise NotImplementedError


class MockProvider(Provider):
    """Deterministic scripted backend: a pure function of (script, request).

    The script maps prompt digests (see :func:`.prompting.prompt_digest`) to
    response texts. Unknown digests either raise (``policy="strict"``) or
    answer with ``default_text`` (``policy="default"``).
    """

    def __init__(
        self,
        script: Mapping[str, str],
        policy: str = "strict",
        default_text: str = "",
        model_id: str = "mock",
        **kwargs: object,
    ) -> None:
        if policy not in ("strict", "default"):
            raise ValueError(f"unknown script policy {policy!r}")
        super().__init__(model_id=model_id, **kwargs)  # type: ignore[arg-type]
        self.script = dict(script)
        self.policy = policy
        self.default_text = default_text

    def _request(self, req: CompletionRequest) -> tuple[str, dict[str, int]]:
        digest = prompt_digest(req.prompt)
        if digest in self.script:
            text = self.script[digest]
        elif self.policy == "default":
            text = self.default_text
        else:
            raise MockScriptMiss(f"no scripted response for prompt digest {digest}")
        usage = {
            "prompt_chars": len(req.prompt.system) + len(req.prompt.user),
            "completion_chars": len(text),
        }
        return text, usage


def mock_provider(
    script: Mapping[str, str],
    policy: str = "strict",
    default_text: str = "",
    **kwargs: object,
) -> MockProvider:
    """Convenience constructor matching the scripted-backend contract."""
    return MockProvider(script, policy=policy, default_text=default_text, **kwargs)


# ---------------------------------------------------------------------------
# Live HTTP backend
# ---------------------------------------------------------------------------

#: transport(url, headers, payload, timeout) -> (status_code, parsed_json)
Transport = Callable[[str, dict, dict, float], tuple[int, dict]]


def _requests_transport(url: str, headers: dict, payload: dict, timeout: float) -> tuple[int, dict]:
    import requests

    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise _Transient("transport", f"network failure: {exc}") from exc
    try:
        body = resp.json()
    except ValueError:
        body = {"raw": resp.text}
    return resp.status_code, body


@dataclass(frozen=True)
class HttpConfig:
    """Connection settings for a chat-completion backend.

    ``family`` selects the wire mapping: ``"openai"`` posts to
    ``{endpoint}/chat/completions`` with bearer auth and reads
    ``choices[0].message.content``; ``"anthropic"`` posts to
    ``{endpoint}/v1/messages`` with ``x-api-key`` auth and reads
    ``content[0].text``.
    """

    endpoint: str
    model_id: str
    family: str = "openai"
    api_key: str = ""
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if self.family not in ("openai", "anthropic"):
            raise ValueError(f"unsupported backend family {self.family!r}")


class HttpProvider(Provider):
    """HTTPS chat-completion backend with retry, backoff, and caching."""

    def __init__(self, config: HttpConfig, transport: Transport | None = None, **kwargs: object) -> None:
        super().__init__(model_id=config.model_id, **kwargs)  # type: ignore[arg-type]
        self.config = config
        self._transport = transport or _requests_transport

    def _build(self, req: CompletionRequest) -> tuple[str, dict, dict]:
        cfg = self.config
        if cfg.family == "openai":
            url = cfg.endpoint.rstrip("/") + "/chat/completions"
            headers = {"Authorization": f"Bearer {cfg.api_key}", "Content-Type": "application/json"}
            payload = {
                "model": req.model_id or cfg.model_id,
                "messages": [
                    {"role": "system", "content": req.prompt.system},
                    {"role": "user", "content": req.prompt.user},
                ],
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            }
        else:
            url = cfg.endpoint.rstrip("/") + "/v1/messages"
            headers = {
                "x-api-key": cfg.api_key,
                "anthropic-version": "2023-06-01",
                "Content-Type": "application/json",
            }
            payload = {
                "model": req.model_id or cfg.model_id,
                "system": req.prompt.system,
                "messages": [{"role": "user", "content": req.prompt.user}],
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            }
        return url, headers, payload

    def _extract_text(self, body: dict) -> str:
        try:
            if self.config.family == "openai":
                return body["choices"][0]["message"]["content"]
            return body["content"][0]["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendRefusal(f"unrecognized response shape: {exc}") from exc

    @staticmethod
    def _extract_usage(body: dict) -> dict[str, int]:
        usage = body.get("usage")
        if not isinstance(usage, dict):
            return {}
        return {k: v for k, v in usage.items() if isinstance(v, int)}

    def _request(self, req: CompletionRequest) -> tuple[str, dict[str, int]]:
        if not self.config.api_key:
            raise AuthError("no API credential configured")
        url, headers, payload = self._build(req)
        status, body = self._transport(url, headers, payload, self.config.timeout)
        if status in (401, 403):
            raise AuthError(f"backend rejected credential (HTTP {status})")
        if status == 429:
            raise _Transient("rate", "backend rate limit (HTTP 429)")
        if status == 408 or status >= 500:
            raise _Transient("transport", f"backend failure (HTTP {status})")
        if status >= 400:
            raise BackendRefusal(f"backend refused request (HTTP {status}): {body}")
        text = self._extract_text(body)
        return text, self._extract_usage(body)

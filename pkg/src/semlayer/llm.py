"""Chat-completion transport: OpenAI-compatible HTTP client with retry and
backoff, a deterministic file-backed mock provider, and output normalization
(sentinel detection, quote/fence stripping).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import requests

SENTINEL = "Not enough information to make a valid prediction"

RETRYABLE_STATUSES = {429, 500, 502, 503, 504}


class LLMError(Exception):
    pass


class AuthError(LLMError):
    pass


class RateLimited(LLMError):
    pass


class RequestTimeout(LLMError):
    pass


class ProviderError(LLMError):
    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"provider returned {status}: {body[:200]}")


class MockMissingFixture(ProviderError):
    def __init__(self, prompt_digest: str):
        super().__init__(404, f"no mock fixture for prompt {prompt_digest}")
        self.prompt_digest = prompt_digest


@dataclass
class ModelSpec:
    """Connection + sampling parameters for one model."""

    name: str
    endpoint: str
    temperature: float = 0.7
    max_output_tokens: int = 1024
    timeout: float = 30.0
    api_key_env: str = ""
    seed: Optional[int] = None
    max_attempts: int = 4
    backoff_base: float = 0.5
    backoff_cap: float = 8.0
    max_in_flight: int = 4
    extra_headers: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @property
    def is_mock(self) -> bool:
        return self.endpoint.startswith("mock:")

    @property
    def mock_dir(self) -> Path:
        return Path(self.endpoint.removeprefix("mock:").removeprefix("//"))


@dataclass
class Completion:
    text: str  # raw assistant message, untrimmed
    model: str
    latency: float
    token_usage: Optional[dict] = None
    attempts: int = 1


Transport = Callable[[ModelSpec, dict], tuple[int, str]]


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def write_mock_fixture(directory: str | Path, prompt: str, response: str) -> Path:
    """Store a canned response under the prompt's digest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{prompt_hash(prompt)}.txt"
    path.write_text(response, encoding="utf-8")
    return path


def _http_transport(spec: ModelSpec, payload: dict) -> tuple[int, str]:
    headers = {"Content-Type": "application/json"}
    if spec.api_key_env:
        headers["Authorization"] = f"Bearer {os.environ[spec.api_key_env]}"
    headers.update(spec.extra_headers)
    resp = requests.post(
        spec.endpoint, json=payload, headers=headers, timeout=spec.timeout
    )
    return resp.status_code, resp.text


def _sleep_backoff(spec: ModelSpec, attempt: int) -> None:
    delay = min(spec.backoff_cap, spec.backoff_base * (2**attempt))
    if delay > 0:
        time.sleep(delay)


class _InflightLimiter:
    """Per-model bound on simultaneous requests."""

    def __init__(self):
        self._semaphores: dict[tuple[str, str], threading.BoundedSemaphore] = {}
        self._lock = threading.Lock()

    def get(self, spec: ModelSpec) -> threading.BoundedSemaphore:
        key = (spec.endpoint, spec.name)
        with self._lock:
            if key not in self._semaphores:
                self._semaphores[key] = threading.BoundedSemaphore(spec.max_in_flight)
            return self._semaphores[key]


_limiter = _InflightLimiter()


def require_credentials(spec: ModelSpec) -> None:
    """Fail fast when a provider credential is configured but absent."""
    if not spec.is_mock and spec.api_key_env and spec.api_key_env not in os.environ:
        raise AuthError(
            f"credential environment variable {spec.api_key_env} is not set"
        )


def complete(
    spec: ModelSpec, prompt: str, transport: Optional[Transport] = None
) -> Completion:
    """Send one chat completion, retrying transient failures.

    Retries HTTP 429/5xx and timeouts with exponential backoff up to
    spec.max_attempts; other 4xx statuses fail immediately. The mock
    endpoint (`mock:<dir>`) resolves the prompt digest to a fixture file
    and never touches the network.
    """
    if not prompt:
        raise ValueError("prompt must be non-empty")
    if spec.is_mock:
        return _complete_mock(spec, prompt)
    if spec.api_key_env and spec.api_key_env not in os.environ:
        raise AuthError(
            f"credential environment variable {spec.api_key_env} is not set"
        )
    payload = {
        "model": spec.name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": spec.temperature,
        "max_tokens": spec.max_output_tokens,
    }
    if spec.seed is not None:
        payload["seed"] = spec.seed
    send = transport or _http_transport
    semaphore = _limiter.get(spec)
    started = time.monotonic()
    last_error: Optional[LLMError] = None
    for attempt in range(spec.max_attempts):
        if attempt:
            _sleep_backoff(spec, attempt - 1)
        try:
            with semaphore:
                status, body = send(spec, payload)
        except (requests.Timeout, TimeoutError) as exc:
            last_error = RequestTimeout(str(exc))
            continue
        except requests.ConnectionError as exc:
            last_error = ProviderError(0, str(exc))
            continue
        if status in RETRYABLE_STATUSES:
            last_error = (
                RateLimited(body) if status == 429 else ProviderError(status, body)
            )
            continue
        if status in (401, 403):
            raise AuthError(f"provider rejected credentials ({status}): {body[:200]}")
        if status >= 400:
            raise ProviderError(status, body)
        return _parse_completion(spec, body, time.monotonic() - started, attempt + 1)
    assert last_error is not None
    raise last_error


def _complete_mock(spec: ModelSpec, prompt: str) -> Completion:
    digest = prompt_hash(prompt)
    path = spec.mock_dir / f"{digest}.txt"
    if not path.is_file():
        raise MockMissingFixture(digest)
    return Completion(
        text=path.read_text(encoding="utf-8"),
        model=spec.name,
        latency=0.0,
        token_usage=None,
        attempts=1,
    )


def _parse_completion(
    spec: ModelSpec, body: str, latency: float, attempts: int
) -> Completion:
    try:
        data = json.loads(body)
        text = data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise ProviderError(200, f"malformed completion body: {body[:200]}") from exc
    return Completion(
        text=text,
        model=data.get("model", spec.name),
        latency=latency,
        token_usage=data.get("usage"),
        attempts=attempts,
    )


_FENCE_TAGS = ("sql", "json", "text", "markdown")


def strip_wrappers(text: str) -> str:
    """Remove surrounding whitespace plus wrapping quotes or code fences,
    repeating until stable so the operation is idempotent."""
    current = text.strip()
    while True:
        unwrapped = _strip_one_wrapper(current)
        if unwrapped == current:
            return current
        current = unwrapped


def _strip_one_wrapper(text: str) -> str:
    if len(text) >= 6 and text.startswith("```") and text.endswith("```"):
        inner = text[3:-3]
        first_line, _, rest = inner.partition("\n")
        if first_line.strip().lower() in _FENCE_TAGS:
            inner = rest
        return inner.strip()
    for quote in ('"', "'", "`"):
        if len(text) >= 2 and text.startswith(quote) and text.endswith(quote):
            return text[1:-1].strip()
    return text


def is_sentinel(text: str) -> bool:
    return text.strip().lower().startswith(SENTINEL.lower())


def classify_generation(text: str) -> Optional[str]:
    """Normalize a generation; None signals the model's refusal sentinel."""
    cleaned = strip_wrappers(text)
    if is_sentinel(cleaned):
        return None
    return cleaned

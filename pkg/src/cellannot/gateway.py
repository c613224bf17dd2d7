"""Provider-agnostic boundary for chat and embedding calls.

Three provider kinds share one interface: an OpenAI-compatible HTTP
provider, an Anthropic-compatible messages provider, and a deterministic
scripted mock that makes every pipeline in this repository runnable and
bit-reproducible offline. The :class:`Gateway` wrapper adds disk caching,
a global in-flight ceiling, and sentinel block extraction helpers.
"""
from __future__ import annotations

import hashlib
import json
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import requests

from .errors import (
    MockScriptExhausted,
    ProviderError,
    RateLimited,
    Timeout,
    UnterminatedBlock,
)

SENTINEL_BEGIN = "===BEGIN==="
SENTINEL_END = "===END==="

MOCK_EMBEDDING_DIM = 64

DEFAULT_OPENAI_ENDPOINT = "https://api.openai.com/v1"
DEFAULT_ANTHROPIC_ENDPOINT = "https://api.anthropic.com"
ANTHROPIC_VERSION = "2023-06-01"


@dataclass(frozen=True)
class ChatRequest:
    """One chat turn; ``tag`` labels the task for tracing and mock scripts."""

    system_prompt: str
    user_prompt: str
    tag: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise ValueError("chat prompts must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff: float = 0.5  # seconds; doubles per retry


@dataclass
class ProviderConfig:
    """Wiring for one provider; secrets come from the environment."""

    kind: str = "mock"  # mock | openai | anthropic
    model: str = "mock-model"
    endpoint: str = ""
    api_key: str = ""
    script: str | None = None  # mock only
    cache_dir: str | None = None
    max_in_flight: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def validate(self) -> None:
        if self.kind not in ("mock", "openai", "anthropic"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "mock" and not self.script:
            raise ValueError("mock provider requires a script path")


class Provider(Protocol):
    model: str

    def chat(self, request: ChatRequest) -> str: ...

    def embed(self, texts: list[str]) -> list[EmbeddingVector]: ...


# --- scripted mock ----------------------------------------------------------


def mock_embedding(text: str, dim: int = MOCK_EMBEDDING_DIM) -> tuple[float, ...]:
    """Deterministic hash-based embedding.

    The scheme: seed ``random.Random`` with the big-endian integer of
    sha256(utf-8 text), then draw ``dim`` uniform floats in [-1, 1).
    Identical texts map to identical vectors; distinct texts collide with
    negligible probability, so their cosine is strictly below 1.
    """
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest(), "big")
    rng = random.Random(seed)
    return tuple(rng.uniform(-1.0, 1.0) for _ in range(dim))


@dataclass
class ScriptEntry:
    """One scripted reply: first entry whose pattern matches the tag wins.

    ``times`` limits how often the entry can be used; None means unlimited.
    """

    tag_pattern: str
    response: str
    times: int | None = 1

    @property
    def exhausted(self) -> bool:
        return self.times is not None and self.times <= 0


class MockProvider:
    """Deterministic scripted provider; the offline twin of the real ones."""

    def __init__(self, entries: list[ScriptEntry], model: str = "mock-model"):
        self.model = model
        self._entries = entries
        self._lock = threading.Lock()

    @classmethod
    def from_script_file(cls, path: str | Path, model: str = "mock-model") -> "MockProvider":
        """Load a JSON script: a list of {tag, response, times?} objects."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = [
            ScriptEntry(
                tag_pattern=item["tag"],
                response=item["response"],
                times=item.get("times"),
            )
            for item in raw
        ]
        return cls(entries, model=model)

    def chat(self, request: ChatRequest) -> str:
        with self._lock:
            for entry in self._entries:
                if entry.exhausted:
                    continue
                if re.search(entry.tag_pattern, request.tag):
                    if entry.times is not None:
                        entry.times -= 1
                    return entry.response
        raise MockScriptExhausted(f"no scripted response left for tag {request.tag!r}")

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        return [EmbeddingVector(values=mock_embedding(t), model_id=self.model) for t in texts]


# --- HTTP providers ---------------------------------------------------------

# transport(url, headers, payload, timeout) -> (status_code, body_text)
Transport = Callable[[str, dict, dict, float], tuple[int, str]]


def _requests_transport(url: str, headers: dict, payload: dict, timeout: float) -> tuple[int, str]:
    response = requests.post(url, headers=headers, json=payload, timeout=timeout)
    return response.status_code, response.text


class _HttpProvider:
    """Shared retry/transport plumbing for the HTTP-backed providers."""

    def __init__(
        self,
        model: str,
        api_key: str,
        endpoint: str,
        retry: RetryPolicy = RetryPolicy(),
        transport: Transport | None = None,
        timeout: float = 60.0,
    ):
        self.model = model
        self._api_key = api_key
        self._endpoint = endpoint.rstrip("/")
        self._retry = retry
        self._transport = transport or _requests_transport
        self._timeout = timeout

    def _request(self, url: str, headers: dict, payload: dict) -> dict:
        last_status: int | None = None
        last_body = ""
        timed_out = False
        for attempt in range(self._retry.attempts):
            if attempt:
                time.sleep(self._retry.backoff * (2 ** (attempt - 1)))
            try:
                status, body = self._transport(url, headers, payload, self._timeout)
            except requests.Timeout as exc:
                timed_out, last_body = True, str(exc)
                continue
            except requests.RequestException as exc:
                last_status, last_body = None, str(exc)
                continue
            if status in (429,) or status >= 500:
                last_status, last_body = status, body
                continue
            if status >= 400:
                raise ProviderError("provider rejected request", status=status, body=body)
            try:
                return json.loads(body)
            except json.JSONDecodeError as exc:
                raise ProviderError(f"provider returned invalid JSON: {exc}", status=status, body=body)
        if timed_out:
            raise Timeout(f"request timed out after {self._retry.attempts} attempts: {last_body}")
        if last_status == 429:
            raise RateLimited("rate limited after retries", status=last_status, body=last_body)
        raise ProviderError(
            f"request failed after {self._retry.attempts} attempts",
            status=last_status,
            body=last_body,
        )


class OpenAIProvider(_HttpProvider):
    """OpenAI-compatible chat/completions and embeddings wire contract."""

    def __init__(self, model: str, api_key: str, endpoint: str = DEFAULT_OPENAI_ENDPOINT, **kwargs):
        super().__init__(model, api_key, endpoint or DEFAULT_OPENAI_ENDPOINT, **kwargs)

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self._api_key}", "Content-Type": "application/json"}

    def chat(self, request: ChatRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        data = self._request(f"{self._endpoint}/chat/completions", self._headers(), payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected chat response shape: {exc}", body=str(data)[:200])

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        payload = {"model": self.model, "input": texts}
        data = self._request(f"{self._endpoint}/embeddings", self._headers(), payload)
        try:
            items = sorted(data["data"], key=lambda item: item["index"])
            return [
                EmbeddingVector(values=tuple(item["embedding"]), model_id=self.model)
                for item in items
            ]
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"unexpected embeddings response shape: {exc}", body=str(data)[:200])


class AnthropicProvider(_HttpProvider):
    """Anthropic-compatible messages wire contract (chat only)."""

    def __init__(self, model: str, api_key: str, endpoint: str = DEFAULT_ANTHROPIC_ENDPOINT, **kwargs):
        super().__init__(model, api_key, endpoint or DEFAULT_ANTHROPIC_ENDPOINT, **kwargs)

    def chat(self, request: ChatRequest) -> str:
        headers = {
            "x-api-key": self._api_key,
            "anthropic-version": ANTHROPIC_VERSION,
            "Content-Type": "application/json",
        }
        payload = {
            "model": self.model,
            "system": request.system_prompt,
            "messages": [{"role": "user", "content": request.user_prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        data = self._request(f"{self._endpoint}/v1/messages", headers, payload)
        try:
            return "".join(part["text"] for part in data["content"] if part.get("type") == "text")
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"unexpected messages response shape: {exc}", body=str(data)[:200])

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        raise ProviderError("the Anthropic-compatible contract has no embeddings endpoint")


# --- gateway ----------------------------------------------------------------


class Gateway:
    """Shared front door: caching, in-flight ceiling, provider dispatch."""

    def __init__(
        self,
        provider: Provider,
        cache_dir: str | Path | None = None,
        max_in_flight: int = 4,
    ):
        if max_in_flight <= 0:
            raise ValueError("max_in_flight must be positive")
        self.provider = provider
        self._cache_dir = Path(cache_dir) if cache_dir else None
        self._sem = threading.BoundedSemaphore(max_in_flight)

    @property
    def model(self) -> str:
        return self.provider.model

    def _cache_path(self, request: ChatRequest) -> Path | None:
        if self._cache_dir is None:
            return None
        digest = hashlib.sha256(
            "\x00".join(
                [
                    self.model,
                    request.system_prompt,
                    request.user_prompt,
                    f"{request.temperature}",
                    f"{request.max_tokens}",
                ]
            ).encode("utf-8")
        ).hexdigest()
        model_dir = re.sub(r"[^A-Za-z0-9._-]", "_", self.model)
        return self._cache_dir / model_dir / f"{digest}.txt"

    def chat(self, request: ChatRequest) -> str:
        """Send one chat request, consulting the disk cache first."""
        cache_path = self._cache_path(request)
        if cache_path is not None and cache_path.exists():
            return cache_path.read_text(encoding="utf-8")
        with self._sem:
            text = self.provider.chat(request)
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            # Last-writer-wins on identical keys is harmless: values match.
            cache_path.write_text(text, encoding="utf-8")
        return text

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed requires at least one text")
        with self._sem:
            return self.provider.embed(list(texts))


def build_provider(config: ProviderConfig, transport: Transport | None = None) -> Provider:
    config.validate()
    if config.kind == "mock":
        return MockProvider.from_script_file(config.script, model=config.model)
    if config.kind == "openai":
        return OpenAIProvider(
            model=config.model,
            api_key=config.api_key,
            endpoint=config.endpoint,
            retry=config.retry,
            transport=transport,
        )
    return AnthropicProvider(
        model=config.model,
        api_key=config.api_key,
        endpoint=config.endpoint,
        retry=config.retry,
        transport=transport,
    )


def build_gateway(config: ProviderConfig, transport: Transport | None = None) -> Gateway:
    provider = build_provider(config, transport=transport)
    return Gateway(provider, cache_dir=config.cache_dir, max_in_flight=config.max_in_flight)


# --- sentinel blocks ---------------------------------------------------------


@dataclass(frozen=True)
class ExtractedBlock:
    content: str
    found_sentinels: bool


def wrap_block(text: str) -> str:
    """Wrap text in the sentinel lines the prompts ask models to emit."""
    return f"{SENTINEL_BEGIN}\n{text}\n{SENTINEL_END}"


def extract_block(text: str) -> ExtractedBlock:
    """Content strictly between the first BEGIN line and the next END line.

    Without sentinels the whole text is returned with ``found_sentinels``
    False; a BEGIN without a following END raises UnterminatedBlock.
    """
    lines = text.split("\n")
    begin = None
    for i, line in enumerate(lines):
        if line.strip() == SENTINEL_BEGIN:
            begin = i
            break
    if begin is None:
        return ExtractedBlock(content=text, found_sentinels=False)
    for j in range(begin + 1, len(lines)):
        if lines[j].strip() == SENTINEL_END:
            return ExtractedBlock(content="\n".join(lines[begin + 1 : j]), found_sentinels=True)
    raise UnterminatedBlock("found ===BEGIN=== without a matching ===END===")

"""Chat-completion backends and the on-disk response cache."""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol

import httpx

from ..errors import ConfigError, ProviderError
from ..transport import RetryPolicy, bearer_headers, post_json
from .prompt import PromptBundle

OPENROUTER_ENDPOINT = "https://openrouter.ai/api/v1"


@dataclass(frozen=True)
class LLMConfig:
    model_id: str
    temperature: float = 0.0
    max_output_tokens: int = 256
    timeout: float = 60.0
    max_retries: int = 3

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ConfigError("model_id must be non-empty")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ConfigError("max_output_tokens must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")


@dataclass(frozen=True)
class RawCompletion:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_ms: int = 0
    from_cache: bool = False


class ChatBackend(Protocol):
    def complete(self, config: LLMConfig, prompt: PromptBundle) -> RawCompletion: ...


class OpenAICompatibleChat:
    """``POST {endpoint}/chat/completions`` with bearer auth, retry and backoff."""

    def __init__(
        self,
        endpoint: str = OPENROUTER_ENDPOINT,
        api_key_env: str | None = "OPENROUTER_API_KEY",
        *,
        client: httpx.Client | None = None,
        backoff_base: float = 1.0,
        sleep=time.sleep,
        rng=None,
    ):
        self.url = endpoint.rstrip("/") + "/chat/completions"
        self._headers = bearer_headers(api_key_env)
        self._client = client or httpx.Client()
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._rng = rng
        self.calls = 0

    def _retry(self, config: LLMConfig) -> RetryPolicy:
        policy = RetryPolicy(max_retries=config.max_retries, base=self._backoff_base, sleep=self._sleep)
        if self._rng is not None:
            policy.rng = self._rng
        return policy

    def complete(self, config: LLMConfig, prompt: PromptBundle) -> RawCompletion:
        payload = {
            "model": config.model_id,
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        }
        self.calls += 1
        t0 = time.perf_counter()
        body = post_json(
            self._client,
            self.url,
            payload,
            headers=self._headers,
            timeout=config.timeout,
            retry=self._retry(config),
        )
        latency = int((time.perf_counter() - t0) * 1000)
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"no choices[0].message.content in response from {self.url}") from exc
        usage = body.get("usage") or {}
        return RawCompletion(
            text=text or "",
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
            latency_ms=latency,
        )


_CHUNK_HEADER = re.compile(r"^--- CHUNK \d+ \(doc=.*, idx=\d+\) ---$", re.MULTILINE)


def split_user_text(user_text: str) -> tuple[list[str], str]:
    """Recover the rendered ANSWERS strings and the CONTEXT body of a prompt."""
    answers_at = user_text.index("\n\nANSWERS:\n") + len("\n\nANSWERS:\n")
    context_at = user_text.index("\n\nCONTEXT:\n", answers_at)
    answers = json.loads(user_text[answers_at:context_at])
    context = user_text[context_at + len("\n\nCONTEXT:\n") :]
    return answers, _CHUNK_HEADER.sub("", context)


class RuleBasedMockLLM:
    """Offline stand-in: answers every option whose label appears verbatim in CONTEXT."""

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def answer(self, prompt: PromptBundle) -> str:
        rendered, context = split_user_text(prompt.user_text)
        picked = []
        for item in rendered:
            option_id, _, label = item.partition(": ")
            label = label or option_id
            if label in context:
                picked.append(option_id)
        return json.dumps(picked, ensure_ascii=False)

    def complete(self, config: LLMConfig, prompt: PromptBundle) -> RawCompletion:
        with self._lock:
            self.calls += 1
        return RawCompletion(text=self.answer(prompt))


class ScriptedMockLLM(RuleBasedMockLLM):
    """Canned completions matched on model, entry and document.

    ``responses`` is a list of ``{"text", "model_id"?, "entry_id"?, "doc_id"?}``;
    the first rule whose given fields all match wins. Without a match the
    label rule of :class:`RuleBasedMockLLM` answers, or ``default`` if set.
    """

    def __init__(self, responses: list[dict] | None = None, default: str | None = None):
        super().__init__()
        self.responses = list(responses or [])
        self.default = default

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedMockLLM:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read mock fixtures {path}: {exc}") from exc
        if isinstance(data, list):
            return cls(data)
        return cls(data.get("responses", []), data.get("default"))

    def complete(self, config: LLMConfig, prompt: PromptBundle) -> RawCompletion:
        with self._lock:
            self.calls += 1
        doc_id = prompt.chunk_refs[0].doc_id if prompt.chunk_refs else None
        facts = {"model_id": config.model_id, "entry_id": prompt.entry_id, "doc_id": doc_id}
        for rule in self.responses:
            if all(rule[key] == facts[key] for key in facts if key in rule):
                return RawCompletion(text=rule["text"])
        if self.default is not None:
            return RawCompletion(text=self.default)
        return RawCompletion(text=self.answer(prompt))


def cache_key(model_id: str, system_text: str, user_text: str) -> str:
    blob = json.dumps([model_id, system_text, user_text], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """Content-addressed completions under ``{root}/completions/{key[:2]}/{key}.json``.

    Writes go through a temporary file and ``os.replace`` so concurrent
    readers only ever see complete entries; writes to one key are serialised.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0
        self.stores = 0
        self._guard = threading.Lock()
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)

    def path(self, key: str) -> Path:
        return self.root / "completions" / key[:2] / f"{key}.json"

    def lock(self, key: str) -> threading.Lock:
        with self._guard:
            return self._locks[key]

    def get(self, key: str) -> RawCompletion | None:
        path = self.path(key)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            usage = data.get("usage") or {}
            hit = RawCompletion(
                text=data["text"],
                prompt_tokens=usage.get("prompt_tokens"),
                completion_tokens=usage.get("completion_tokens"),
                from_cache=True,
            )
        except (OSError, ValueError, KeyError):
            hit = None
        with self._guard:
            if hit is None:
                self.misses += 1
            else:
                self.hits += 1
        return hit

    def put(self, key: str, model_id: str, completion: RawCompletion) -> None:
        path = self.path(key)
        record = {
            "key": key,
            "model_id": model_id,
            "text": completion.text,
            "usage": {
                "prompt_tokens": completion.prompt_tokens,
                "completion_tokens": completion.completion_tokens,
            },
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(record, fh, ensure_ascii=False)
        os.replace(tmp, path)
        with self._guard:
            self.stores += 1


def query_llm(
    config: LLMConfig,
    prompt: PromptBundle,
    backend: ChatBackend,
    cache: ResponseCache | None = None,
) -> RawCompletion:
    """Cached chat completion: the cache is consulted before the backend."""
    if cache is None:
        return backend.complete(config, prompt)
    key = cache_key(config.model_id, prompt.system_text, prompt.user_text)
    with cache.lock(key):
        hit = cache.get(key)
        if hit is not None:
            return hit
        completion = backend.complete(config, prompt)
        cache.put(key, config.model_id, completion)
    return completion

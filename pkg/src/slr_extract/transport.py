"""JSON-over-HTTP POST with retry and exponential backoff."""

from __future__ import annotations

import logging
import os
import random
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import httpx

from .errors import ConfigError, ProviderError, ProviderTimeoutError, RequestError

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass
class RetryPolicy:
    """Full-jitter exponential backoff: sleep ``uniform(0, base * factor**attempt)``."""

    max_retries: int = 3
    base: float = 1.0
    factor: float = 2.0
    sleep: Callable[[float], None] = time.sleep
    rng: Callable[[], float] = field(default_factory=lambda: random.Random().random)

    def delay(self, attempt: int) -> float:
        return self.rng() * self.base * self.factor**attempt


def bearer_headers(api_key_env: str | None) -> dict[str, str]:
    """Authorization header read from the named environment variable."""
    if not api_key_env:
        return {}
    key = os.environ.get(api_key_env, "").strip()
    if not key:
        raise ConfigError(f"environment variable {api_key_env} is not set")
    return {"Authorization": f"Bearer {key}"}


def post_json(
    client: httpx.Client,
    url: str,
    payload: dict[str, Any],
    *,
    headers: dict[str, str] | None = None,
    timeout: float | None = None,
    retry: RetryPolicy | None = None,
) -> dict[str, Any]:
    """POST ``payload`` and return the decoded JSON body.

    Transport errors, timeouts, 429 and 5xx are retried up to
    ``retry.max_retries`` times. Other 4xx responses raise
    :class:`RequestError` immediately.
    """
    retry = retry or RetryPolicy()
    last: str = ""
    timed_out = False
    for attempt in range(retry.max_retries + 1):
        if attempt:
            pause = retry.delay(attempt - 1)
            log.debug("retry %d/%d for %s after %.2fs: %s", attempt, retry.max_retries, url, pause, last)
            retry.sleep(pause)
        try:
            resp = client.post(url, json=payload, headers=headers, timeout=timeout)
        except httpx.TimeoutException as exc:
            last, timed_out = f"timeout: {exc}", True
            continue
        except httpx.TransportError as exc:
            last, timed_out = f"transport error: {exc}", False
            continue
        if resp.status_code in RETRYABLE_STATUS:
            last, timed_out = f"HTTP {resp.status_code}", False
            continue
        if resp.status_code >= 400:
            raise RequestError(
                f"{url} rejected the request: HTTP {resp.status_code} {resp.text[:200]}",
                status_code=resp.status_code,
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderError(f"{url} returned a non-JSON body") from exc
    msg = f"{url} failed after {retry.max_retries} retries ({last})"
    if timed_out:
        raise ProviderTimeoutError(msg)
    raise ProviderError(msg)

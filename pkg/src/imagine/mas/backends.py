"""Agent backends: scripted fixtures, an HTTP chat-completion client, retries.

Wire format of :class:`HttpChatBackend` (provider-generic)::

    POST <url>
    Authorization: Bearer <value of the configured environment variable>
    {"model": "<model>", "messages": [{"role": "user", "content": "<prompt>"}], ...extra}

    200 {"choices": [{"message": {"content": "...", "reasoning_content": "..."}}],
         "usage": {"prompt_tokens": N, "completion_tokens": M}}

``reasoning_content`` is optional; when present it is wrapped as
``<think>reasoning</think>content``.  ``usage`` is optional; whitespace token
counts are used when it is missing.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import httpx

log = logging.getLogger(__name__)


class TransportError(RuntimeError):
    """Retryable failure talking to a backend (network, timeout, 429, 5xx)."""


class BackendError(RuntimeError):
    """Non-retryable backend failure."""


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int


def count_tokens(text: str) -> int:
    return len(text.split())


class AgentBackend(Protocol):
    role: str

    def invoke(self, prompt: str) -> Completion: ...


class ScriptedBackend:
    """Replays fixed replies in order, or computes them from the prompt."""

    def __init__(self, role: str, replies: Sequence[str | Exception] | Callable[[str], str]) -> None:
        self.role = role
        self._replies = replies if callable(replies) else list(replies)
        self._i = 0
        self._lock = threading.Lock()
        self.prompts: list[str] = []

    def invoke(self, prompt: str) -> Completion:
        with self._lock:
            self.prompts.append(prompt)
            if callable(self._replies):
                reply = self._replies(prompt)
            else:
                if self._i >= len(self._replies):
                    raise BackendError(f"scripted {self.role} backend ran out of replies")
                reply = self._replies[self._i]
                self._i += 1
        if isinstance(reply, Exception):
            raise reply
        return Completion(reply, count_tokens(prompt), count_tokens(reply))


class HttpChatBackend:
    def __init__(
        self,
        role: str,
        url: str,
        model: str,
        api_key_env: str | None = "IMAGINE_API_KEY",
        timeout: float = 120.0,
        extra: dict | None = None,
        client: httpx.Client | None = None,
    ) -> None:
        self.role = role
        self.url = url
        self.model = model
        self.api_key_env = api_key_env
        self.extra = extra or {}
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "") if self.api_key_env else ""
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def invoke(self, prompt: str) -> Completion:
        body = {"model": self.model, "messages": [{"role": "user", "content": prompt}], **self.extra}
        try:
            resp = self._client.post(self.url, json=body, headers=self._headers())
        except httpx.TransportError as exc:
            raise TransportError(f"{self.role}: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"{self.role}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendError(f"{self.role}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            message = data["choices"][0]["message"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"{self.role}: malformed response body") from exc
        text = message.get("content") or ""
        if message.get("reasoning_content"):
            text = f"<think>{message['reasoning_content']}</think>{text}"
        usage = data.get("usage") or {}
        return Completion(
            text,
            int(usage.get("prompt_tokens", count_tokens(prompt))),
            int(usage.get("completion_tokens", count_tokens(text))),
        )


@dataclass(frozen=True)
class RetryPolicy:
    retries: int = 3
    base_delay: float = 1.0

    def call(self, backend: AgentBackend, prompt: str) -> Completion:
        for attempt in range(self.retries + 1):
            try:
                return backend.invoke(prompt)
            except TransportError as exc:
                if attempt == self.retries:
                    raise
                delay = self.base_delay * 2 ** attempt
                log.warning("%s call failed (%s); retrying in %.1fs", backend.role, exc, delay)
                time.sleep(delay)
        raise AssertionError("unreachable")

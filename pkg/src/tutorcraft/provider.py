"""Chat-completion backends: a real HTTP client and a scriptable stub.

The HTTP client speaks the common chat-completions wire format (POST
{base_url}/chat/completions, bearer auth, messages array), so any
compatible backend works by pointing base_url at it. The API key is never
serialized, logged, or included in reprs.
"""

from __future__ import annotations

import json
import logging
import random
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Protocol

import httpx

from .errors import (
    AuthError,
    MalformedUpstreamResponse,
    ProviderError,
    ProviderTimeout,
    RateLimited,
    UpstreamError,
)
from .pipeline import PromptBundle

logger = logging.getLogger(__name__)

_TRANSIENT_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True, repr=False)
class ProviderConfig:
    base_url: str
    api_key: str
    model_id: str = "gpt-4"
    request_timeout: float = 180.0  # must outlive multi-minute generations
    max_retries_transient: int = 3
    backoff_base: float = 1.0

    def __post_init__(self):
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")

    def __repr__(self) -> str:
        return (
            f"ProviderConfig(base_url={self.base_url!r}, api_key='***', "
            f"model_id={self.model_id!r}, request_timeout={self.request_timeout}, "
            f"max_retries_transient={self.max_retries_transient}, backoff_base={self.backoff_base})"
        )

    def to_dict(self) -> dict[str, Any]:
        """Serializable view; the key is excluded by design."""
        return {
            "base_url": self.base_url,
            "model_id": self.model_id,
            "request_timeout": self.request_timeout,
            "max_retries_transient": self.max_retries_transient,
            "backoff_base": self.backoff_base,
        }


@dataclass(frozen=True)
class CompletionResult:
    text: str
    model_id: str
    latency: float
    token_usage: tuple[int, int] | None = None  # (prompt_tokens, completion_tokens)


class ChatProvider(Protocol):
    def complete_chat(self, bundle: PromptBundle) -> CompletionResult: ...


class HttpChatProvider:
    """Blocking HTTP client with bounded retries for transient failures.

    Retries timeouts, 429, and 5xx with exponential backoff and full
    jitter, honoring a server Retry-After hint when present. 4xx auth and
    request errors fail immediately.
    """

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None, sleeper=time.sleep):
        self._config = config
        self._sleep = sleeper
        self._client = httpx.Client(
            timeout=config.request_timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {config.api_key}"},
        )

    def close(self) -> None:
        self._client.close()

    def _backoff(self, attempt: int, response: httpx.Response | None) -> float:
        if response is not None:
            retry_after = response.headers.get("retry-after")
            if retry_after is not None:
                try:
                    return max(0.0, float(retry_after))
                except ValueError:
                    pass
        return self._config.backoff_base * (2**attempt) * random.random()

    def complete_chat(self, bundle: PromptBundle) -> CompletionResult:
        cfg = self._config
        url = cfg.base_url.rstrip("/") + "/chat/completions"
        body = {
            "model": bundle.params.model_id or cfg.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in bundle.messages],
            "temperature": bundle.params.temperature,
            "max_tokens": bundle.params.max_output_tokens,
            "response_format": {"type": bundle.params.response_format},
        }
        started = time.monotonic()
        last: str = "no attempt made"
        for attempt in range(cfg.max_retries_transient + 1):
            try:
                response = self._client.post(url, json=body)
            except httpx.TimeoutException:
                last = "request timed out"
                if attempt < cfg.max_retries_transient:
                    self._sleep(self._backoff(attempt, None))
                    continue
                raise ProviderTimeout(f"timed out after {attempt + 1} attempts")
            if response.status_code in _TRANSIENT_STATUS:
                last = f"HTTP {response.status_code}"
                if attempt < cfg.max_retries_transient:
                    self._sleep(self._backoff(attempt, response))
                    continue
                if response.status_code == 429:
                    raise RateLimited(f"rate limited after {attempt + 1} attempts")
                raise UpstreamError(f"upstream returned {response.status_code} after {attempt + 1} attempts")
            if response.status_code in (401, 403):
                raise AuthError(f"authentication rejected (HTTP {response.status_code})")
            if response.status_code >= 400:
                raise ProviderError(f"request rejected (HTTP {response.status_code})")
            return self._parse_response(response, time.monotonic() - started)
        raise UpstreamError(f"retries exhausted: {last}")

    def _parse_response(self, response: httpx.Response, latency: float) -> CompletionResult:
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
            model_id = payload.get("model", self._config.model_id)
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise MalformedUpstreamResponse(f"unexpected response shape: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedUpstreamResponse("message content is not text")
        usage = payload.get("usage")
        token_usage = None
        if isinstance(usage, dict) and "prompt_tokens" in usage and "completion_tokens" in usage:
            token_usage = (usage["prompt_tokens"], usage["completion_tokens"])
        return CompletionResult(text=text, model_id=model_id, latency=latency, token_usage=token_usage)


# ---- scriptable stub ----


@dataclass(frozen=True)
class StubStep:
    """One scripted provider response: canned text, or an injected failure."""

    text: str | None = None
    delay: float = 0.0
    failure: str | None = None  # "timeout" | "rate_limited" | "malformed"


@dataclass
class ScriptedBehavior:
    steps: tuple[StubStep, ...] = ()
    template_mode: bool = False  # fabricate schema-valid JSON once steps run out
    default_delay: float = 0.0
    model_id: str = "stub-model"


class StubProvider:
    """Deterministic provider stand-in for tests and key-free demos.

    Responses come from the script in order; with template_mode on, calls
    beyond the script (or all calls, with an empty script) synthesize
    schema-valid curriculum/content JSON from the machine-readable context
    block embedded in the prompt. The call counter is atomic.
    """

    def __init__(self, script: ScriptedBehavior | None = None):
        self.script = script or ScriptedBehavior(template_mode=True)
        self._lock = threading.Lock()
        self._calls = 0
        self.bundles: list[PromptBundle] = []

    @property
    def call_count(self) -> int:
        with self._lock:
            return self._calls

    def reset_counter(self) -> None:
        with self._lock:
            self._calls = 0

    def complete_chat(self, bundle: PromptBundle) -> CompletionResult:
        with self._lock:
            index = self._calls
            self._calls += 1
            self.bundles.append(bundle)
        step = self.script.steps[index] if index < len(self.script.steps) else None
        delay = step.delay if step is not None else self.script.default_delay
        if delay:
            time.sleep(delay)
        started = time.monotonic()
        if step is not None:
            if step.failure == "timeout":
                raise ProviderTimeout("injected timeout")
            if step.failure == "rate_limited":
                raise RateLimited("injected rate limit")
            if step.failure == "malformed":
                text = "I'm sorry, here are some thoughts but definitely no JSON object."
            else:
                text = step.text if step.text is not None else ""
        elif self.script.template_mode:
            text = self._fabricate(bundle)
        else:
            raise UpstreamError(f"stub script exhausted after {len(self.script.steps)} steps")
        return CompletionResult(
            text=text,
            model_id=self.script.model_id,
            latency=time.monotonic() - started + delay,
        )

    # The prompt builders embed a machine-readable context object in the
    # user message; fabrication keys off it so full pipelines run offline.
    def _fabricate(self, bundle: PromptBundle) -> str:
        context = self._find_context(bundle)
        if context.get("stage") == "curriculum":
            persona = context.get("persona", {})
            theme = persona.get("interests") or persona.get("career_goals") or "everyday life"
            entries = [
                {
                    "section_id": s["id"],
                    "personalized_title": f"{s['title']} through {theme}",
                    "personalized_summary": f"{s['summary']} (framed around {theme})".strip(),
                    "analogy_theme": theme,
                }
                for s in context.get("sections", [])
            ]
            return json.dumps({"entries": entries}, ensure_ascii=False)
        if context.get("stage") == "content":
            theme = context.get("analogy_theme", "everyday life")
            title = context.get("subsection_title", "this topic")
            body = (
                f"## {title}, through {theme}\n\n"
                f"Imagine {theme} while working through {title}. "
                "The idea stays the same; only the running example changes."
            )
            practice = {
                "stem": f"In the {theme} framing of {title}, which statement holds?",
                "choices": [
                    {"text": f"The {theme} example illustrates the concept", "feedback": "Correct. That is exactly the role of the running example."},
                    {"text": "The example replaces the concept", "feedback": "Try again. The analogy illustrates the concept, it does not replace it."},
                    {"text": "The concept only applies to the example", "feedback": "Try again. The concept is general; the example is one instance."},
                    {"text": "None of the above", "feedback": "Try again. One of the statements above does hold."},
                ],
                "correct_index": 0,
            }
            return json.dumps({"body": body, "practices": [practice]}, ensure_ascii=False)
        raise UpstreamError("stub template mode: no recognizable context block in prompt")

    @staticmethod
    def _find_context(bundle: PromptBundle) -> dict[str, Any]:
        decoder = json.JSONDecoder()
        for message in reversed(bundle.messages):
            if message.role != "user":
                continue
            for match in re.finditer(r"\{", message.content):
                try:
                    value, _ = decoder.raw_decode(message.content, match.start())
                except json.JSONDecodeError:
                    continue
                if isinstance(value, dict) and value.get("stage") in ("curriculum", "content"):
                    return value
        return {}


def stub_provider(script: ScriptedBehavior | None = None) -> StubProvider:
    return StubProvider(script)

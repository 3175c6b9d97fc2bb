"""Judge invocation over an HTTP chat-completion wire protocol.

The gateway is provider-agnostic: any endpoint accepting
``POST <base_url>/chat/completions`` with a ``{model, messages,
temperature}`` JSON body and returning the assistant text in the first
choice works.  On top of the raw transport it provides retries with
exponential backoff, a content-addressed on-disk response cache, bounded
concurrent fan-out with deterministic result order, and a scripted mock
judge for offline runs and tests.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import requests

from .prompts import (
    FORMAT_REMINDER,
    AnswerFormatError,
    AnswerSheet,
    Prompt,
    parse_answers,
)

__all__ = [
    "JudgeConfig",
    "JudgeResponse",
    "GatewayError",
    "ProtocolError",
    "JudgeUnavailableError",
    "JudgeTimeoutError",
    "UnscriptedPromptError",
    "cache_key",
    "ResponseCache",
    "HttpJudge",
    "MockJudge",
    "CachingJudge",
    "complete_validated",
    "fan_out",
]


class GatewayError(Exception):
    """Base class for judge-invocation failures."""


class ProtocolError(GatewayError):
    """The endpoint answered, but not with a usable completion."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class JudgeUnavailableError(GatewayError):
    """All retries exhausted; carries the last underlying cause."""

    def __init__(self, message: str, last_cause: BaseException | None = None):
        super().__init__(message)
        self.last_cause = last_cause


class JudgeTimeoutError(JudgeUnavailableError):
    """Retries exhausted with the final attempt timing out."""


class UnscriptedPromptError(GatewayError):
    """The mock judge was asked a prompt it has no script or default for."""


@dataclass(frozen=True)
class JudgeConfig:
    """Connection and behaviour settings for a judge.

    `max_retries` bounds both transport retries and parse-failure
    re-prompts.  `api_key_env` names the environment variable holding
    the bearer token; an unset variable means anonymous access.
    `runs_per_item` > 1 averages several sampling runs per prompt.
    """

    base_url: str = ""
    model_name: str = "mock"
    temperature: float = 0.0
    max_retries: int = 2
    parallelism: int = 4
    timeout: float = 60.0
    api_key_env: str = "TRANSPROQA_API_KEY"
    backoff_base: float = 0.5
    runs_per_item: int = 1
    preamble_as_system: bool = False

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.runs_per_item < 1:
            raise ValueError("runs_per_item must be >= 1")


@dataclass(frozen=True)
class JudgeResponse:
    raw_text: str
    model_name: str
    cached: bool
    latency: float


def cache_key(prompt: Prompt, config: JudgeConfig) -> str:
    """Deterministic digest over model, temperature, and prompt content."""
    payload = json.dumps(
        [config.model_name, config.temperature, prompt.fingerprint],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """One file per key: a JSON metadata line, then the raw response bytes.

    Writes are atomic (temp file + rename) and serialized by a lock, so
    concurrent scoring threads can share one cache instance.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / key

    def get(self, key: str) -> Optional[str]:
        path = self._path(key)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        _, _, raw = blob.partition(b"\n")
        return raw.decode("utf-8")

    def put(self, key: str, raw_text: str, metadata: Mapping | None = None) -> None:
        header = json.dumps(dict(metadata or {}), ensure_ascii=False, sort_keys=True)
        blob = (header + "\n" + raw_text).encode("utf-8")
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(blob)
                os.replace(tmp, self._path(key))
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise

    def stats(self) -> dict:
        entries = [p for p in self.directory.iterdir() if not p.name.startswith(".")]
        return {
            "directory": str(self.directory),
            "entries": len(entries),
            "bytes": sum(p.stat().st_size for p in entries),
        }

    def clear(self) -> int:
        removed = 0
        with self._lock:
            for p in self.directory.iterdir():
                if not p.name.startswith("."):
                    p.unlink()
                    removed += 1
        return removed


_RETRYABLE_STATUSES = frozenset({408, 429})


def _default_transport(
    url: str, payload: dict, headers: dict, timeout: float
) -> tuple[int, str]:
    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    return resp.status_code, resp.text


class HttpJudge:
    """Talks to a chat-completion endpoint with retry and backoff.

    `transport` is injectable for tests: a callable
    ``(url, payload, headers, timeout) -> (status_code, body_text)``
    that may raise ``requests.ConnectionError`` / ``requests.Timeout``.
    """

    def __init__(
        self,
        config: JudgeConfig,
        transport: Callable[[str, dict, dict, float], tuple[int, str]] | None = None,
    ):
        if not config.base_url:
            raise ValueError("HttpJudge requires a base_url")
        self.config = config
        self._transport = transport or _default_transport
        self._lock = threading.Lock()
        self.requests_made = 0

    @property
    def endpoint(self) -> str:
        return self.config.base_url.rstrip("/") + "/chat/completions"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _messages(self, prompt: Prompt) -> list[dict]:
        if self.config.preamble_as_system:
            return [
                {"role": "system", "content": prompt.preamble},
                {"role": "user", "content": prompt.body},
            ]
        return [{"role": "user", "content": prompt.text}]

    def _extract_text(self, status: int, body: str) -> str:
        try:
            data = json.loads(body)
            return data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise ProtocolError(
                f"malformed completion body (status {status}): {body[:200]!r}",
                status=status,
            )

    def complete(self, prompt: Prompt) -> JudgeResponse:
        cfg = self.config
        payload = {
            "model": cfg.model_name,
            "messages": self._messages(prompt),
            "temperature": cfg.temperature,
        }
        headers = self._headers()
        last_cause: BaseException | None = None
        started = time.perf_counter()
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                time.sleep(cfg.backoff_base * (2 ** (attempt - 1)))
            with self._lock:
                self.requests_made += 1
            try:
                status, body = self._transport(
                    self.endpoint, payload, headers, cfg.timeout
                )
            except requests.Timeout as exc:
                last_cause = exc
                continue
            except requests.RequestException as exc:
                last_cause = exc
                continue
            if status == 200:
                text = self._extract_text(status, body)
                return JudgeResponse(
                    raw_text=text,
                    model_name=cfg.model_name,
                    cached=False,
                    latency=time.perf_counter() - started,
                )
            if status in _RETRYABLE_STATUSES or status >= 500:
                last_cause = ProtocolError(
                    f"retryable HTTP status {status}", status=status
                )
                continue
            raise ProtocolError(f"HTTP status {status}: {body[:200]!r}", status=status)
        if isinstance(last_cause, requests.Timeout):
            raise JudgeTimeoutError(
                f"judge timed out after {cfg.max_retries + 1} attempts",
                last_cause=last_cause,
            )
        raise JudgeUnavailableError(
            f"judge unavailable after {cfg.max_retries + 1} attempts: {last_cause}",
            last_cause=last_cause,
        )


def _rule_response(rule: str, n: int) -> str:
    value = {"all-yes": "YES", "all-no": "NO", "all-maybe": "MAYBE"}[rule]
    return json.dumps({str(i): value for i in range(1, n + 1)})


class MockJudge:
    """Deterministic scripted judge for tests and offline runs.

    Script keys may be prompt fingerprints, ``(source, translation)``
    tuples, or cache keys; they are tried in that order.  `default_rule`
    is one of ``all-yes`` / ``all-no`` / ``all-maybe`` or a callable
    ``(prompt) -> raw_text`` applied to unscripted prompts.
    """

    def __init__(
        self,
        script: Mapping | None = None,
        default_rule: str | Callable[[Prompt], str] | None = None,
        config: JudgeConfig | None = None,
        latency: float = 0.0,
    ):
        self.script = dict(script or {})
        self.default_rule = default_rule
        self.config = config or JudgeConfig()
        self.simulated_latency = latency
        self._lock = threading.Lock()
        self.calls = 0
        self._in_flight = 0
        self.max_in_flight = 0

    def _lookup(self, prompt: Prompt) -> Optional[str]:
        for key in (
            prompt.fingerprint,
            (prompt.source, prompt.translation),
            cache_key(prompt, self.config),
        ):
            if key in self.script:
                return self.script[key]
        return None

    def complete(self, prompt: Prompt) -> JudgeResponse:
        with self._lock:
            self.calls += 1
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)
        try:
            if self.simulated_latency:
                time.sleep(self.simulated_latency)
            text = self._lookup(prompt)
            if text is None:
                if self.default_rule is None:
                    raise UnscriptedPromptError(
                        f"no scripted response for prompt {prompt.fingerprint[:12]} "
                        f"(source {prompt.source[:40]!r}) and no default rule"
                    )
                if callable(self.default_rule):
                    text = self.default_rule(prompt)
                else:
                    text = _rule_response(self.default_rule, prompt.question_count)
            return JudgeResponse(
                raw_text=text,
                model_name=self.config.model_name,
                cached=False,
                latency=0.0,
            )
        finally:
            with self._lock:
                self._in_flight -= 1


class CachingJudge:
    """Wraps any judge with a read-through on-disk response cache."""

    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @property
    def config(self) -> JudgeConfig:
        return self.inner.config

    def complete(self, prompt: Prompt) -> JudgeResponse:
        key = cache_key(prompt, self.config)
        cached = self.cache.get(key)
        if cached is not None:
            with self._lock:
                self.hits += 1
            return JudgeResponse(
                raw_text=cached,
                model_name=self.config.model_name,
                cached=True,
                latency=0.0,
            )
        response = self.inner.complete(prompt)
        self.cache.put(
            key,
            response.raw_text,
            {
                "model": self.config.model_name,
                "temperature": self.config.temperature,
                "fingerprint": prompt.fingerprint,
                "variant": prompt.variant.value,
            },
        )
        with self._lock:
            self.misses += 1
        return response

    def store(self, prompt: Prompt, raw_text: str) -> None:
        """Overwrite the cached text for a prompt (validated re-prompt result)."""
        self.cache.put(
            cache_key(prompt, self.config),
            raw_text,
            {
                "model": self.config.model_name,
                "temperature": self.config.temperature,
                "fingerprint": prompt.fingerprint,
                "variant": prompt.variant.value,
            },
        )


def _reminder_prompt(prompt: Prompt, n: int) -> Prompt:
    extra = "\n\n" + FORMAT_REMINDER.format(n=n)
    payload = json.dumps([prompt.fingerprint, "format-reminder"])
    return Prompt(
        text=prompt.text + extra,
        variant=prompt.variant,
        question_count=prompt.question_count,
        fingerprint=hashlib.sha256(payload.encode("utf-8")).hexdigest(),
        preamble=prompt.preamble,
        body=prompt.body + extra,
        source=prompt.source,
        translation=prompt.translation,
    )


def complete_validated(judge, prompt: Prompt, n: int) -> tuple[JudgeResponse, AnswerSheet]:
    """Complete a prompt and parse the answer sheet, re-asking on bad format.

    Each parse failure re-issues the prompt with a one-line format
    reminder appended, consuming one unit of the judge's retry budget.
    When a re-prompt finally parses, the validated text is stored under
    the original prompt's cache key so warm reruns skip the judge.
    """
    budget = judge.config.max_retries
    current = prompt
    while True:
        response = judge.complete(current)
        try:
            sheet = parse_answers(response.raw_text, n)
        except AnswerFormatError:
            if budget <= 0:
                raise
            budget -= 1
            current = _reminder_prompt(prompt, n)
            continue
        if current is not prompt and hasattr(judge, "store"):
            judge.store(prompt, response.raw_text)
        return response, sheet


def fan_out(
    fn: Callable,
    items: Sequence,
    parallelism: int,
) -> list[tuple[object, BaseException | None]]:
    """Apply `fn` to each item with bounded concurrency.

    Results come back in input order regardless of completion order;
    each slot is ``(result, None)`` or ``(None, exception)`` so callers
    can handle partial failure per item.
    """

    def guarded(item):
        try:
            return fn(item), None
        except Exception as exc:
            return None, exc

    if parallelism == 1 or len(items) <= 1:
        return [guarded(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(guarded, items))

"""Language-model players and judges behind a chat-completions interface.

Two backends: :class:`HttpBackend` talks to a chat-completions HTTP endpoint,
:class:`MockBackend` answers from a fixture file so that whole experiments run
offline and reproducibly. Every call made while an :func:`audit_scope` is
active is appended to that scope's event list.
"""

from __future__ import annotations

import contextlib
import contextvars
import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, Sequence

import httpx
import yaml

from .core import SPEAKER_LABELS, ConversationState, Player, Utterance, Verdict, VerdictGameError, serialize

log = logging.getLogger(__name__)

API_KEY_ENV = "VERDICT_LLM_API_KEY"
DEFAULT_MODEL = "gpt-4o-2024-11-20"
MAX_ATTEMPTS = 3


class LLMError(VerdictGameError):
    pass


class AuthError(LLMError):
    pass


class RateLimitError(LLMError):
    pass


class LLMTimeout(LLMError):
    pass


class TransportError(LLMError):
    pass


class JudgeParseError(LLMError):
    pass


_RETRYABLE = (RateLimitError, LLMTimeout, TransportError)


# --- audit trail -----------------------------------------------------------

_audit: contextvars.ContextVar[list | None] = contextvars.ContextVar("verdict_audit", default=None)


@contextlib.contextmanager
def audit_scope() -> Iterator[list[dict[str, Any]]]:
    events: list[dict[str, Any]] = []
    token = _audit.set(events)
    try:
        yield events
    finally:
        _audit.reset(token)


def record(event: dict[str, Any]) -> None:
    events = _audit.get()
    if events is not None:
        events.append(event)


# --- requests --------------------------------------------------------------


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 1.0
    max_tokens: int = 256
    timeout: float = 30.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def digest(self) -> str:
        payload = {
            "model": self.model_id,
            "messages": [list(m) for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def wire(self) -> dict[str, Any]:
        body = {
            "model": self.model_id,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.seed is not None:
            body["seed"] = self.seed
        return body


# --- backends --------------------------------------------------------------


class MockBackend:
    """Fixture-driven stand-in for a chat model.

    Lookup order: exact request digest, exact last message, first matching
    rule, first matching pool (reply picked by hashing the request digest),
    then ``default``. With ``echo`` the last message is returned instead of
    ``default``.
    """

    deterministic = True

    def __init__(self, fixture: Mapping[str, Any] | None = None, echo: bool = False):
        fixture = fixture or {}
        self.responses = dict(fixture.get("responses", {}))
        self.by_last_message = dict(fixture.get("by_last_message", {}))
        self.rules = list(fixture.get("rules", []))
        self.pools = list(fixture.get("pools", []))
        self.default = fixture.get("default")
        self.echo = echo

    @classmethod
    def from_file(cls, path: str | Path) -> MockBackend:
        return cls(yaml.safe_load(Path(path).read_text()))

    @staticmethod
    def _matches(entry: Mapping[str, Any], system: str, last: str) -> bool:
        if "system_contains" in entry and entry["system_contains"].lower() not in system.lower():
            return False
        tail = last.rstrip().rsplit("\n", 1)[-1].lower()
        if "last_line_contains_any" in entry and not any(w.lower() in tail for w in entry["last_line_contains_any"]):
            return False
        return all(w.lower() in last.lower() for w in entry.get("last_contains_all", []))

    def send(self, req: ChatRequest) -> str:
        digest = req.digest()
        if digest in self.responses:
            return self.responses[digest]
        system = "\n".join(c for r, c in req.messages if r == "system")
        last = req.messages[-1][1]
        if last in self.by_last_message:
            return self.by_last_message[last]
        for rule in self.rules:
            if self._matches(rule, system, last):
                return rule["reply"]
        for pool in self.pools:
            if self._matches(pool, system, last):
                replies = pool["replies"]
                return replies[int(digest, 16) % len(replies)]
        if self.echo:
            return last
        if self.default is None:
            raise TransportError("mock has no reply for this request")
        return self.default


class HttpBackend:
    """Chat-completions endpoint over HTTP with a bearer token."""

    deterministic = False

    def __init__(
        self,
        base_url: str = "https://api.openai.com/v1",
        api_key: str | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise AuthError(f"no credential: set {API_KEY_ENV}")
        self.client = httpx.Client(base_url=base_url.rstrip("/"), transport=transport)

    def send(self, req: ChatRequest) -> str:
        try:
            resp = self.client.post(
                "/chat/completions",
                json=req.wire(),
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=req.timeout,
            )
        except httpx.TimeoutException as exc:
            raise LLMTimeout(str(exc)) from exc
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"HTTP {resp.status_code}")
        if resp.status_code == 429:
            raise RateLimitError("HTTP 429")
        if resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise LLMError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise LLMError(f"malformed response: {exc}") from exc


class TokenBucket:
    def __init__(self, rate: float, capacity: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate, self.capacity = rate, capacity
        self.tokens, self.clock, self.sleep = capacity, clock, sleep
        self.last = clock()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.last) * self.rate)
                self.last = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            self.sleep(wait)


class ChatClient:
    """Retries, backoff, rate limiting and auditing around a backend."""

    def __init__(
        self,
        backend: Any,
        max_attempts: int = MAX_ATTEMPTS,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        max_in_flight: int = 4,
        rate_per_sec: float | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.max_attempts = max_attempts
        self.backoff_base, self.backoff_cap = backoff_base, backoff_cap
        self.sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._bucket = TokenBucket(rate_per_sec, max(1.0, rate_per_sec), sleep=sleep) if rate_per_sec else None

    @property
    def deterministic(self) -> bool:
        return bool(getattr(self.backend, "deterministic", False))

    def chat(self, req: ChatRequest, purpose: str = "chat") -> str:
        attempt = 0
        while True:
            attempt += 1
            try:
                if self._bucket is not None:
                    self._bucket.acquire()
                with self._slots:
                    text = self.backend.send(req)
            except _RETRYABLE as exc:
                if attempt >= self.max_attempts:
                    record({"call": purpose, "digest": req.digest()[:16], "outcome": type(exc).__name__,
                            "attempts": attempt})
                    raise
                self.sleep(min(self.backoff_cap, self.backoff_base * 2 ** (attempt - 1)))
                continue
            except LLMError as exc:
                record({"call": purpose, "digest": req.digest()[:16], "outcome": type(exc).__name__,
                        "attempts": attempt})
                raise
            record({"call": purpose, "digest": req.digest()[:16], "outcome": "ok", "attempts": attempt})
            return text

    def chat_many(self, requests: Sequence[ChatRequest], workers: int = 4) -> list[str]:
        """Concurrent calls; results come back in request order."""
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(contextvars.copy_context().run, self.chat, req) for req in requests]
            return [f.result() for f in futures]


def chat(req: ChatRequest, client: ChatClient) -> str:
    return client.chat(req)


# --- prompts ---------------------------------------------------------------


def load_prompts(path: str | Path | None = None) -> dict[str, Any]:
    """Prompt fixtures; defaults to the bundled court fixtures."""
    if path is None:
        text = resources.files("verdictgame").joinpath("fixtures/court/prompts.yaml").read_text()
    else:
        text = Path(path).read_text()
    return yaml.safe_load(text)


@dataclass(frozen=True)
class JudgePrompt:
    case_context: str
    transcript: str
    instruction: str

    def messages(self, strict: str | None = None) -> tuple[tuple[str, str], ...]:
        user = f"Case details:\n{self.case_context}\n\nTranscript:\n{self.transcript}"
        msgs = [("system", self.instruction), ("user", user)]
        if strict:
            msgs.append(("user", strict))
        return tuple(msgs)


_LABELS = (
    (Verdict.ONE, re.compile(r"(?<!not )\bguilty\b", re.I)),
    (Verdict.ZERO, re.compile(r"\binnocent\b|\bnot guilty\b", re.I)),
    (Verdict.CONT, re.compile(r"\bnon[- ]?conclusive\b|\binconclusive\b", re.I)),
)


def parse_verdict(text: str) -> tuple[Verdict | None, list[Verdict]]:
    """First label in precedence order Guilty, Innocent, Non-conclusive.

    Returns the verdict (``None`` if no label) and every label found, so the
    caller can log ambiguity. "not guilty" counts as Innocent.
    """
    found = [v for v, pat in _LABELS if pat.search(text)]
    return (found[0] if found else None), found


def llm_judge(
    prompt: JudgePrompt, client: ChatClient, model_id: str = DEFAULT_MODEL, strict_instruction: str = "",
    temperature: float = 0.0,
) -> Verdict:
    strict = strict_instruction or "Answer with exactly one word: Guilty, Innocent, or Non-conclusive."
    for attempt, extra in enumerate((None, strict)):
        req = ChatRequest(model_id, prompt.messages(extra), temperature=temperature, max_tokens=20)
        reply = client.chat(req, purpose="judge")
        verdict, found = parse_verdict(reply)
        if len(found) > 1:
            log.warning("ambiguous judge reply %r; labels %s, using %s", reply, found, verdict)
            record({"call": "judge", "ambiguous": [v.value for v in found], "chosen": verdict.value})
        if verdict is not None:
            return verdict
        record({"call": "judge", "outcome": "unparseable", "reply": reply[:200], "attempt": attempt + 1})
    raise JudgeParseError(f"judge reply not parseable: {reply[:200]!r}")


@dataclass
class LLMJudge:
    """Judge classifier backed by a chat model."""

    client: ChatClient
    case_context: str
    instruction: str
    model_id: str = DEFAULT_MODEL
    strict_instruction: str = ""

    @property
    def deterministic(self) -> bool:
        return self.client.deterministic

    def classify(self, state: ConversationState) -> Verdict:
        if not state.stages:
            raise VerdictGameError("classification needs at least one completed stage")
        transcript = serialize(state.prefix(state.t), SPEAKER_LABELS)
        prompt = JudgePrompt(self.case_context, transcript, self.instruction)
        return llm_judge(prompt, self.client, self.model_id, self.strict_instruction)


def tokenize(text: str, cap: int) -> tuple[Utterance, bool]:
    """Whitespace tokens with delimiter characters removed, cut to ``cap``."""
    tokens = tuple(t for t in (w.replace("#", "").replace("@", "") for w in text.split()) if t)
    return tokens[:cap], len(tokens) > cap


def llm_player_move(
    ctx: Any, persona_prompt: str, client: ChatClient, model_id: str = DEFAULT_MODEL,
    case_context: str = "", temperature: float = 1.0,
) -> tuple[Utterance, bool]:
    """One free-text move; returns the utterance and whether it was truncated."""
    transcript = serialize(ctx.state.prefix(ctx.state.t), SPEAKER_LABELS) or "(no conversation yet)"
    if ctx.state.pending is not None:
        transcript += f"\nX: {' '.join(ctx.state.pending)}"
    role = "prosecutor (X)" if ctx.mover is Player.X else "defendant (Y)"
    user = f"Case details:\n{case_context}\n\nGive your next line as the {role}.\n\nTranscript so far:\n{transcript}"
    req = ChatRequest(
        model_id, (("system", persona_prompt), ("user", user)),
        temperature=temperature, max_tokens=4 * ctx.spec.l, seed=ctx.rng.randrange(2**31),
    )
    text = client.chat(req, purpose=f"player-{ctx.mover.value}")
    move, truncated = tokenize(text, ctx.spec.l)
    if not move:
        raise LLMError("empty reply from player model")
    if truncated:
        record({"call": f"player-{ctx.mover.value}", "truncated": True, "cap": ctx.spec.l})
    return move, truncated


@dataclass
class LLMPlayer:
    """Free-text generator suitable for :class:`~verdictgame.agents.MoveContext`."""

    client: ChatClient
    persona: str
    model_id: str = DEFAULT_MODEL
    case_context: str = ""
    temperature: float = 1.0
    truncations: int = field(default=0, init=False)

    def __call__(self, ctx: Any) -> Utterance:
        move, truncated = llm_player_move(ctx, self.persona, self.client, self.model_id, self.case_context,
                                          self.temperature)
        self.truncations += truncated
        return move


def make_client(backend: str = "mock", fixture: str | Path | None = None, base_url: str | None = None,
                **kwargs: Any) -> ChatClient:
    if backend == "mock":
        if fixture is None:
            text = resources.files("verdictgame").joinpath("fixtures/court/mock_replies.yaml").read_text()
            return ChatClient(MockBackend(yaml.safe_load(text)), **kwargs)
        return ChatClient(MockBackend.from_file(fixture), **kwargs)
    if backend == "live":
        return ChatClient(HttpBackend(base_url or "https://api.openai.com/v1"), **kwargs)
    raise ValueError(f"unknown backend {backend!r}")

"""Text-generation and embedding providers.

``TemplateProvider`` is a deterministic offline engine that recognises the
pipeline's own prompt shapes. ``RemoteProvider`` talks to an
OpenAI-style chat-completions endpoint. ``ScriptedProvider`` replays canned
replies and is meant for tests and dry runs.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import httpx
import numpy as np

from gazeinterp import prompts
from gazeinterp.errors import (
    AuthenticationError,
    BackendError,
    EmptyOutputError,
    InputError,
    MalformedPromptError,
    RetryExhaustedError,
    TemplateMissError,
)
from gazeinterp.metrics import term_frequency_vectors, tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_tokens: int = 1024
    temperature: float = 0.0
    route: str = "default"
    system: str | None = None

    def __post_init__(self):
        if not self.prompt:
            raise InputError("generation prompt must be nonempty")
        if self.max_tokens < 1:
            raise InputError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise InputError("temperature must be >= 0")


@dataclass(frozen=True)
class ProviderConfig:
    kind: Literal["remote", "template"] = "template"
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str | None = None
    max_attempts: int = 3
    backoff_initial: float = 0.5
    backoff_max: float = 8.0
    timeout: float = 60.0
    max_concurrency: int | None = None
    max_tokens: int = 1024
    temperature: float = 0.0

    def __post_init__(self):
        if self.kind not in ("remote", "template"):
            raise InputError(f"unknown provider kind {self.kind!r}")
        if self.kind == "remote" and not (self.endpoint and self.model and self.api_key_env):
            raise InputError("remote provider needs endpoint, model and api_key_env")
        if self.max_attempts < 1:
            raise InputError("max_attempts must be >= 1")
        if self.max_concurrency is not None and self.max_concurrency < 1:
            raise InputError("max_concurrency must be >= 1")


class Provider:
    """Interface shared by all providers. Instances are safe to share across threads."""

    def generate(self, request: GenerationRequest) -> str:
        raise NotImplementedError

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts])

    def complete(self, prompt: str, route: str = "default", system: str | None = None) -> str:
        """Convenience wrapper: one request, whitespace-stripped, nonempty."""
        text = self.generate(GenerationRequest(prompt, route=route, system=system)).strip()
        if not text:
            raise EmptyOutputError(f"provider returned empty output for route {route!r}")
        return text


# --------------------------------------------------------------------------
# offline template engine

_NUM = r"-?\d+(?:\.\d+)?"
_EVENT_LINE = re.compile(
    rf"^(?P<cls>Fixation|Saccade|SmoothPursuit) start=(?P<start>{_NUM})s "
    rf"duration=(?P<dur>{_NUM})s \((?P<dlabel>[^)]*)\)"
    rf"(?: amplitude=(?P<amp>{_NUM})deg \((?P<alabel>[^)]*)\))?"
    rf" peak_velocity=(?P<peak>{_NUM})deg/s(?: \((?P<vlabel>[^)]*)\))?"
    rf" centroid=\((?P<yaw>{_NUM})deg, (?P<pitch>{_NUM})deg\)$"
)
_SAMPLE_LINE = re.compile(rf"^Sample t=(?P<t>{_NUM})s yaw=(?P<yaw>{_NUM})deg pitch=(?P<pitch>{_NUM})deg$")
_MOTION_LINE = re.compile(rf"^\[(?P<a>{_NUM})s, (?P<b>{_NUM})s\] (?P<text>.*)$")
_CLASS_WORD = re.compile(r"fixat\w*|saccad\w*|pursu\w*", re.IGNORECASE)
_GAZE_WORD = re.compile(r"fixat|saccad|pursu|gaze|eyes|look|glance", re.IGNORECASE)
_CLASS_KEY = {"Fixation": "fixa", "Saccade": "sacc", "SmoothPursuit": "purs"}
_RUBRIC_LINE = re.compile(r"^- (?P<dim>\w+): 5 = ")
REVISION_MARK = "[revised]"


def _clause(m: re.Match) -> str:
    cls = m["cls"]
    dur = float(m["dur"])
    if cls == "Fixation":
        return f"fixates near yaw {float(m['yaw']):.1f} deg, pitch {float(m['pitch']):.1f} deg for {dur:.2f} s ({m['dlabel'].lower()})"
    if cls == "Saccade":
        size = (m["alabel"] or "").lower()
        speed = (m["vlabel"] or "").lower()
        desc = ", ".join(x for x in (size, speed) if x)
        return f"makes a {desc + ' ' if desc else ''}saccade of {float(m['amp'] or 0):.1f} deg"
    return f"smoothly pursues a moving target across {float(m['amp'] or 0):.1f} deg over {dur:.2f} s"


def _events_block(prompt: str) -> list[str]:
    head = "\nEvents:\n"
    start = prompt.rfind(head)
    end = prompt.rfind("\nNarration:")
    if start < 0 or end < start:
        raise TemplateMissError("gaze prompt has no trailing Events:/Narration: block")
    return [line for line in prompt[start + len(head) : end].split("\n") if line.strip()]


def narrate_event_lines(lines: Sequence[str]) -> str:
    events = [_EVENT_LINE.match(line) for line in lines]
    if events and all(events):
        return "The user " + ", then ".join(_clause(m) for m in events) + "."
    samples = [_SAMPLE_LINE.match(line) for line in lines]
    if samples and all(samples):
        first, last = samples[0], samples[-1]
        span = float(last["t"]) - float(first["t"])
        return (
            f"The user's gaze moves from yaw {float(first['yaw']):.1f} deg, pitch {float(first['pitch']):.1f} deg "
            f"to yaw {float(last['yaw']):.1f} deg, pitch {float(last['pitch']):.1f} deg over {span:.2f} s."
        )
    raise TemplateMissError("unrecognised event serialization")


def _motion_texts(motion_lines: Sequence[str]) -> list[str]:
    out = []
    for line in motion_lines:
        m = _MOTION_LINE.match(line)
        if line.strip():
            out.append((m["text"] if m else line).strip())
    return out


def _as_clause(text: str) -> str:
    text = text.strip().rstrip(".!")
    return text[:1].lower() + text[1:]


def fuse(gaze: str, motions: Sequence[str], has_history: bool) -> str:
    gaze = " ".join(gaze.split())
    if not motions:
        body = gaze
    else:
        acts = [_as_clause(m) for m in motions]
        lead = acts[0] if len(acts) == 1 else ", then ".join(acts)
        body = f"While {lead}, {_as_clause(gaze)}"
        if not body.endswith("."):
            body += "."
    if has_history:
        body = "Continuing on, " + body[:1].lower() + body[1:]
    return body


def _norm(text: str) -> str:
    return " ".join(tokenize(text))


def _score_integrated(narration: str, source: str) -> tuple[dict[str, int], list[str]]:
    try:
        _, gaze, motion_lines = prompts.split_integration_prompt(source)
    except MalformedPromptError as exc:
        raise TemplateMissError(f"evaluation source is not an integration prompt: {exc}") from exc
    motions = _motion_texts(motion_lines)
    text = " " + _norm(narration) + " "
    found = [text.find(" " + _norm(m) + " ") for m in motions]
    present = [pos for pos in found if pos >= 0]
    notes = []
    missing = [m for m, pos in zip(motions, found) if pos < 0]
    completeness = 5 if not motions else (5 * len(present)) // len(motions)
    if missing:
        notes.append("Completeness: mention every listed action; missing " + "; ".join(missing) + ".")
    temporal = 5 if present == sorted(present) else 2
    if temporal < 5:
        notes.append("Temporal: describe the actions in their chronological order.")
    has_gaze = bool(_GAZE_WORD.search(narration))
    match = 5 if has_gaze and (present or not motions) else 1
    if match < 5:
        notes.append("Match: tie the eye movements to the concurrent body actions.")
    return {"Match": match, "Temporal": temporal, "Completeness": completeness}, notes


def _score_gaze(narration: str, source: str) -> tuple[dict[str, int], list[str]]:
    lines = [line for line in source.split("\n") if line.strip()]
    events = [_EVENT_LINE.match(line) for line in lines]
    if not (events and all(events)):
        # raw-signal input: nothing symbolic to check continuity against
        return {"Continuity": 5 if narration.strip() else 0}, []
    expected = [_CLASS_KEY[m["cls"]] for m in events]
    said = [w.group(0)[:4].lower() for w in _CLASS_WORD.finditer(narration)]
    if said == expected:
        return {"Continuity": 5}, []
    wrong = sum(a != b for a, b in zip(said, expected)) + abs(len(said) - len(expected))
    score = max(0, min(4, 5 - wrong))
    return {"Continuity": score}, ["Continuity: narrate every event once, in order, with smooth transitions."]


class TemplateProvider(Provider):
    """Rule-based stand-in for an LLM; a pure function of the prompt."""

    def generate(self, request: GenerationRequest) -> str:
        prompt = request.prompt
        first = prompt.split("\n", 1)[0]
        if first == prompts.GAZE_SENTINEL:
            return narrate_event_lines(_events_block(prompt))
        if first.startswith(prompts.EVAL_SENTINEL):
            return self._evaluate(prompt)
        if first.startswith(prompts.REFINE_SENTINEL):
            return self._refine(prompt)
        if first.startswith(prompts.CTX):
            ctx, gaze, motion = prompts.split_integration_prompt(prompt)
            has_history = any(line.startswith("history[") for line in ctx)
            return fuse(gaze, _motion_texts(motion), has_history)
        raise TemplateMissError(f"template engine does not recognise prompt starting {first[:40]!r}")

    def _evaluate(self, prompt: str) -> str:
        dims = [m["dim"] for line in prompt.split("\n") if (m := _RUBRIC_LINE.match(line))]
        sec = prompts.split_sections(prompt, ("SOURCE", "NARRATION"))
        source, narration = sec.blocks.get("SOURCE"), sec.blocks.get("NARRATION")
        if not dims or source is None or narration is None:
            raise TemplateMissError("evaluation prompt lacks rubric, SOURCE or NARRATION")
        if "[gaze]" in sec.header:
            scores, notes = _score_gaze(narration, source)
        else:
            scores, notes = _score_integrated(narration, source)
        reply = {d: scores.get(d, 5) for d in dims}
        reply["critique"] = " ".join(n for n in notes if n.split(":", 1)[0] in dims)
        return json.dumps(reply)

    def _refine(self, prompt: str) -> str:
        sec = prompts.split_sections(prompt, ("SOURCE", "CRITIQUE", "NARRATION"))
        narration = sec.blocks.get("NARRATION", "").strip()
        source = sec.blocks.get("SOURCE", "")
        if not narration:
            raise TemplateMissError("refine prompt lacks a NARRATION section")
        extra = ""
        if "[gaze]" in sec.header:
            lines = [line for line in source.split("\n") if line.strip()]
            try:
                narration = narrate_event_lines(lines)
            except TemplateMissError:
                pass
        elif "[integrated]" in sec.header and source.startswith(prompts.CTX):
            _, gaze, motion = prompts.split_integration_prompt(source)
            text = " " + _norm(narration) + " "
            missing = [m for m in _motion_texts(motion) if " " + _norm(m) + " " not in text]
            if missing:
                extra = " Meanwhile, " + ", then ".join(_as_clause(m) for m in missing) + "."
        return f"{narration}{extra} {REVISION_MARK}"

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise InputError("cannot embed empty text")
        return term_frequency_vectors([text])[0]

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        """Term-frequency rows over the sorted joint vocabulary of ``texts``."""
        if any(not t for t in texts):
            raise InputError("cannot embed empty text")
        return term_frequency_vectors(list(texts))


# --------------------------------------------------------------------------
# remote HTTP provider

_TRANSIENT_STATUS = {408, 429}


class RemoteProvider(Provider):
    """Chat-completions and embeddings over HTTPS with retry and backoff.

    The credential is read from the configured environment variable on each
    call and only ever placed in the Authorization header.
    """

    def __init__(
        self,
        config: ProviderConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if config.kind != "remote":
            raise InputError("RemoteProvider needs a remote ProviderConfig")
        self.config = config
        self._client = httpx.Client(timeout=config.timeout, transport=transport)
        self._sleep = sleep
        self._gate = threading.BoundedSemaphore(config.max_concurrency) if config.max_concurrency else None
        self.attempts = 0

    def __repr__(self) -> str:
        return f"RemoteProvider(endpoint={self.config.endpoint!r}, model={self.config.model!r})"

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env or "")
        if not key:
            raise AuthenticationError(f"environment variable {self.config.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def _post(self, body: dict, route: str) -> dict:
        headers = self._headers()
        cfg = self.config
        last = "no attempt made"
        for attempt in range(1, cfg.max_attempts + 1):
            self.attempts += 1
            logger.info("remote %s request attempt %d/%d to %s", route, attempt, cfg.max_attempts, cfg.endpoint)
            try:
                if self._gate:
                    with self._gate:
                        resp = self._client.post(cfg.endpoint, json=body, headers=headers)
                else:
                    resp = self._client.post(cfg.endpoint, json=body, headers=headers)
            except httpx.TimeoutException:
                last = "timeout"
            except httpx.TransportError as exc:
                last = f"transport error ({type(exc).__name__})"
            else:
                status = resp.status_code
                if status in (401, 403):
                    raise AuthenticationError(f"endpoint rejected the credential (HTTP {status})")
                if status < 400:
                    try:
                        return resp.json()
                    except ValueError as exc:
                        raise BackendError("endpoint returned a non-JSON body") from exc
                last = f"HTTP {status}"
                if not (status in _TRANSIENT_STATUS or status >= 500):
                    raise BackendError(f"endpoint returned {last}")
            logger.warning("remote %s attempt %d/%d failed: %s", route, attempt, cfg.max_attempts, last)
            if attempt < cfg.max_attempts:
                self._sleep(min(cfg.backoff_max, cfg.backoff_initial * 2 ** (attempt - 1)))
        raise RetryExhaustedError(f"{cfg.max_attempts} attempt(s) failed, last: {last}")

    def generate(self, request: GenerationRequest) -> str:
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.append({"role": "user", "content": request.prompt})
        body = {
            "model": self.config.model,
            "messages": messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        data = self._post(body, request.route)
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError("unexpected chat-completion response shape") from exc

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise InputError("cannot embed empty text")
        data = self._post({"model": self.config.model, "input": text}, "embed")
        try:
            return np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError("unexpected embedding response shape") from exc


# --------------------------------------------------------------------------
# scripted provider


@dataclass
class ScriptedProvider(Provider):
    """Replays queued replies per route, delegating everything else.

    A reply may be a string or an exception instance (raised when reached).
    """

    replies: dict[str, list] = field(default_factory=dict)
    fallback: Provider | None = field(default_factory=TemplateProvider)
    calls: list[GenerationRequest] = field(default_factory=list)

    def __post_init__(self):
        self._queues = {k: deque(v) for k, v in self.replies.items()}
        self._lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> str:
        with self._lock:
            self.calls.append(request)
            queue = self._queues.get(request.route)
            reply = queue.popleft() if queue else None
        if reply is None:
            if self.fallback is None:
                raise BackendError(f"no scripted reply left for route {request.route!r}")
            return self.fallback.generate(request)
        if isinstance(reply, Exception):
            raise reply
        return reply

    def count(self, route: str) -> int:
        return sum(1 for c in self.calls if c.route == route)

    def embed(self, text: str) -> np.ndarray:
        if self.fallback is None:
            raise BackendError("scripted provider has no embedding fallback")
        return self.fallback.embed(text)

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        if self.fallback is None:
            raise BackendError("scripted provider has no embedding fallback")
        return self.fallback.embed_many(texts)


def make_provider(config: ProviderConfig, transport: httpx.BaseTransport | None = None) -> Provider:
    if config.kind == "template":
        return TemplateProvider()
    return RemoteProvider(config, transport=transport)


def generate(request: GenerationRequest, config: ProviderConfig) -> str:
    return make_provider(config).generate(request)


def embed(text: str, config: ProviderConfig) -> np.ndarray:
    return make_provider(config).embed(text)

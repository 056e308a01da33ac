"""Atomic action detection over single utterances.

Backends decide whether one utterance exhibits a named action. The
deterministic lexicon matcher drives tests and simulation; the external
model backend sends one narrow prompt per (action, utterance) pair and
caches every reply so repeat evaluations never re-issue a call.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .formulas import RequirementSet
from .trace import Utterance

DEFAULT_TIMEOUT_MS = 10_000

DEFAULT_PROMPT_TEMPLATE = (
    'You are checking a single utterance from an emergency call transcript.\n'
    'Does the utterance exhibit the action "{action}"?\n'
    'Utterance: "{utterance}"\n'
    "Answer with exactly one word: yes or no."
)

_AFFIRMATIVE = {"yes", "true", "affirmative"}
_NEGATIVE = {"no", "false", "negative"}


class BackendError(RuntimeError):
    """Predicate backend failed to produce a boolean answer."""

    def __init__(self, message: str, utterance_index: int | None = None):
        super().__init__(message)
        self.utterance_index = utterance_index


class LinkError(ValueError):
    """Requirement set references action labels the backend cannot resolve."""

    def __init__(self, missing: Sequence[str]):
        self.missing = tuple(sorted(missing))
        super().__init__(
            "unresolvable action label(s): " + ", ".join(repr(m) for m in self.missing)
        )


class PredicateBackend(ABC):
    """Decides whether a single utterance exhibits a named action."""

    @abstractmethod
    def evaluate(self, utterance_text: str, action: str) -> bool:
        raise NotImplementedError

    def can_resolve(self, action: str) -> bool:
        return True


def _normalize(text: str) -> str:
    return " ".join(text.casefold().split())


class LexiconBackend(PredicateBackend):
    """Deterministic matcher over per-action pattern lists.

    Patterns are case-insensitive substrings; a leading ``^`` anchors at
    the start of the utterance and a trailing ``$`` at the end.
    """

    def __init__(self, lexicon: Mapping[str, Sequence[str]]):
        self.lexicon: dict[str, tuple[str, ...]] = {}
        for action, patterns in lexicon.items():
            if not patterns:
                raise ValueError(f"action {action!r} has an empty pattern list")
            self.lexicon[action] = tuple(_normalize(p) for p in patterns)

    def can_resolve(self, action: str) -> bool:
        return action in self.lexicon

    def evaluate(self, utterance_text: str, action: str) -> bool:
        try:
            patterns = self.lexicon[action]
        except KeyError:
            raise BackendError(f"action {action!r} not in lexicon") from None
        text = _normalize(utterance_text)
        for pattern in patterns:
            anchored_start = pattern.startswith("^")
            anchored_end = pattern.endswith("$")
            body = pattern[1 if anchored_start else 0 : -1 if anchored_end else None]
            if anchored_start and anchored_end:
                hit = text == body
            elif anchored_start:
                hit = text.startswith(body)
            elif anchored_end:
                hit = text.endswith(body)
            else:
                hit = body in text
            if hit:
                return True
        return False


def load_lexicon(content: bytes | str) -> LexiconBackend:
    """Parse the JSON lexicon document (action label -> pattern list)."""
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    try:
        data = json.loads(content)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed lexicon document: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ValueError("lexicon document must be a JSON object")
    for action, patterns in data.items():
        if not isinstance(patterns, list) or not all(isinstance(p, str) for p in patterns):
            raise ValueError(f"patterns for action {action!r} must be a list of strings")
    return LexiconBackend(data)


def serialize_lexicon(backend: LexiconBackend) -> str:
    return json.dumps(
        {a: list(ps) for a, ps in sorted(backend.lexicon.items())},
        indent=2,
        ensure_ascii=False,
    ) + "\n"


def _parse_reply(text: str) -> bool:
    token = text.strip().lower().strip(".,!?")
    if token in _AFFIRMATIVE:
        return True
    if token in _NEGATIVE:
        return False
    raise BackendError(f"unparseable backend reply {text!r}")


class ExternalModelBackend(PredicateBackend):
    """HTTP predicate service client with a content-addressed reply cache.

    Wire contract: POST ``{"prompt": <str>}`` to the endpoint, response
    body ``{"text": <str>}`` where the text reads yes/no (leniently).
    A cached key is never re-requested; the cache optionally persists
    under ``cache_dir`` between runs.
    """

    def __init__(
        self,
        endpoint: str,
        prompt_template: str = DEFAULT_PROMPT_TEMPLATE,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        cache_dir: str | Path | None = None,
    ):
        if "{action}" not in prompt_template or "{utterance}" not in prompt_template:
            raise ValueError("prompt template must contain {action} and {utterance}")
        self.endpoint = endpoint
        self.prompt_template = prompt_template
        self.timeout_ms = timeout_ms
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._memory: dict[str, bool] = {}
        self._lock = threading.Lock()
        self._session = requests.Session()

    @classmethod
    def from_env(cls, env: Mapping[str, str] | None = None) -> "ExternalModelBackend":
        env = os.environ if env is None else env
        endpoint = env.get("PREDICATE_ENDPOINT")
        if not endpoint:
            raise ValueError("PREDICATE_ENDPOINT is not set")
        timeout_ms = int(env.get("PREDICATE_TIMEOUT_MS", DEFAULT_TIMEOUT_MS))
        cache_dir = env.get("PREDICATE_CACHE_DIR") or None
        return cls(endpoint=endpoint, timeout_ms=timeout_ms, cache_dir=cache_dir)

    def _cache_key(self, action: str, utterance_text: str) -> str:
        payload = json.dumps(
            [self.prompt_template, action, utterance_text], ensure_ascii=False
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _disk_path(self, key: str) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"{key}.json"

    def evaluate(self, utterance_text: str, action: str) -> bool:
        key = self._cache_key(action, utterance_text)
        with self._lock:
            if key in self._memory:
                return self._memory[key]
        path = self._disk_path(key)
        if path is not None and path.exists():
            verdict = bool(json.loads(path.read_text(encoding="utf-8"))["holds"])
            with self._lock:
                self._memory[key] = verdict
            return verdict
        prompt = self.prompt_template.format(action=action, utterance=utterance_text)
        try:
            response = self._session.post(
                self.endpoint, json={"prompt": prompt}, timeout=self.timeout_ms / 1000.0
            )
            response.raise_for_status()
            body = response.json()
        except requests.RequestException as exc:
            raise BackendError(f"predicate service request failed: {exc}") from exc
        except ValueError as exc:
            raise BackendError(f"predicate service returned non-JSON body: {exc}") from exc
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise BackendError("predicate service reply missing 'text' field")
        verdict = _parse_reply(body["text"])
        with self._lock:
            self._memory[key] = verdict
        if path is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({"holds": verdict}), encoding="utf-8")
            tmp.replace(path)
        return verdict


@dataclass(frozen=True)
class DetectResult:
    """Outcome of one windowed detection.

    ``witness`` is the smallest index within the supplied window whose
    utterance satisfies the predicate; absent when nothing matched.
    """

    holds: bool
    witness: int | None = None


def detect(
    window_utterances: Sequence[Utterance | str],
    action: str,
    backend: PredicateBackend,
) -> DetectResult:
    """Check whether any utterance in the window exhibits the action."""
    for index, utt in enumerate(window_utterances):
        text = utt.text if isinstance(utt, Utterance) else utt
        try:
            if backend.evaluate(text, action):
                return DetectResult(holds=True, witness=index)
        except BackendError as exc:
            raise BackendError(
                f"backend failed on window index {index} for action {action!r}: {exc}",
                utterance_index=index,
            ) from exc
    return DetectResult(holds=False, witness=None)


@dataclass(frozen=True)
class LinkedSet:
    """Requirement set bound to a backend that can resolve all its labels."""

    requirements: RequirementSet
    backend: PredicateBackend


def link_requirements(
    requirement_set: RequirementSet, backend: PredicateBackend
) -> LinkedSet:
    """Verify every action label resolves; report all misses at once."""
    missing = [
        action
        for action in requirement_set.action_labels()
        if not backend.can_resolve(action)
    ]
    if missing:
        raise LinkError(missing)
    return LinkedSet(requirements=requirement_set, backend=backend)

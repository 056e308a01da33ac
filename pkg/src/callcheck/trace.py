"""Two-party conversation traces with temporal ordering preserved.

A trace is the merged, turn-indexed timeline of one training session.
Utterances carry a global (merged) index; per-speaker projections keep
their relative order and define the party-local indices that windows
in requirement formulas refer to.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence


class Speaker(str, Enum):
    CALLTAKER = "calltaker"
    CALLER = "caller"


class Party(str, Enum):
    """Scope selector for windows: one speaker or the merged timeline."""

    CALLTAKER = "calltaker"
    CALLER = "caller"
    BOTH = "both"

    def matches(self, speaker: Speaker) -> bool:
        return self is Party.BOTH or self.value == speaker.value


class TraceError(ValueError):
    """Invalid trace construction or malformed transcript content."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


_FLAG_PATTERN = re.compile(r"^[a-z][a-z0-9_]*$")


@dataclass(frozen=True)
class Utterance:
    """One turn of the conversation, positioned on the merged timeline."""

    global_index: int
    speaker: Speaker
    text: str
    timestamp_ms: int | None = None

    def __post_init__(self):
        if self.global_index < 0:
            raise TraceError(f"global_index must be >= 0, got {self.global_index}")
        if not self.text.strip():
            raise TraceError(f"utterance text at turn {self.global_index} is empty")
        if self.timestamp_ms is not None and self.timestamp_ms < 0:
            raise TraceError(f"timestamp_ms must be >= 0, got {self.timestamp_ms}")


@dataclass(frozen=True)
class Trace:
    """Immutable, merged utterance sequence for one session.

    Global indices are contiguous from 0 and, where timestamps are
    present, index order agrees with timestamp order.
    """

    session_id: str
    utterances: tuple[Utterance, ...]

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        last_ts: int | None = None
        for expected, utt in enumerate(self.utterances):
            if utt.global_index != expected:
                raise TraceError(
                    f"global_index {utt.global_index} at position {expected}: "
                    "indices must be unique and contiguous from 0"
                )
            if utt.timestamp_ms is not None:
                if last_ts is not None and utt.timestamp_ms < last_ts:
                    raise TraceError(
                        f"timestamp goes backwards at turn {utt.global_index}"
                    )
                last_ts = utt.timestamp_ms

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)

    def project(self, party: Party) -> list[Utterance]:
        """Party-restricted view, in original relative order.

        Positions in the returned list are the party-local indices;
        each utterance still carries its merged ``global_index``.
        """
        if party is Party.BOTH:
            return list(self.utterances)
        return [u for u in self.utterances if party.matches(u.speaker)]


@dataclass(frozen=True)
class ScenarioContext:
    """Scenario conditions a session ran under.

    ``flags`` activate guarded requirements; the two counts feed the
    complexity index (coordinated departments and active caller profiles).
    """

    flags: frozenset[str] = frozenset()
    incident_type: str = ""
    persona_profile_count: int = 0
    department_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "flags", frozenset(self.flags))
        for flag in self.flags:
            if not _FLAG_PATTERN.match(flag):
                raise TraceError(f"flag {flag!r} is not lowercase snake_case")
        if self.persona_profile_count < 0 or self.department_count < 0:
            raise TraceError("context counts must be >= 0")


def merge_traces(
    calltaker_utterances: Sequence[str],
    caller_utterances: Sequence[str],
    interleaving: Sequence[Speaker],
    session_id: str = "",
) -> Trace:
    """Interleave two per-speaker utterance lists into one merged trace.

    ``interleaving`` gives the speaker of each merged turn; tag counts
    must match the list lengths exactly.
    """
    total = len(calltaker_utterances) + len(caller_utterances)
    if len(interleaving) != total:
        raise TraceError(
            f"interleaving has {len(interleaving)} tags for {total} utterances"
        )
    queues = {
        Speaker.CALLTAKER: iter(calltaker_utterances),
        Speaker.CALLER: iter(caller_utterances),
    }
    merged = []
    for position, tag in enumerate(interleaving):
        tag = Speaker(tag)
        try:
            text = next(queues[tag])
        except StopIteration:
            raise TraceError(
                f"interleaving tag {position}: no remaining {tag.value} utterance"
            ) from None
        merged.append(Utterance(global_index=position, speaker=tag, text=text))
    return Trace(session_id=session_id, utterances=tuple(merged))


def project(trace: Trace, party: Party) -> list[Utterance]:
    return trace.project(party)


def parse_transcript(content: bytes | str, session_id: str = "") -> Trace:
    """Parse the line-delimited transcript format into a Trace.

    One JSON object per line with fields ``turn``, ``speaker``, ``text``
    and optional ``t_ms``; ``#`` starts a comment line.
    """
    if isinstance(content, bytes):
        try:
            content = content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TraceError(f"transcript is not valid UTF-8: {exc}") from exc
    utterances: list[Utterance] = []
    seen: set[int] = set()
    for lineno, raw in enumerate(content.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"malformed record: {exc.msg}", line=lineno) from exc
        if not isinstance(record, dict):
            raise TraceError("record must be a JSON object", line=lineno)
        try:
            turn = record["turn"]
            speaker = record["speaker"]
            text = record["text"]
        except KeyError as exc:
            raise TraceError(f"missing field {exc.args[0]!r}", line=lineno) from exc
        if not isinstance(turn, int) or isinstance(turn, bool):
            raise TraceError(f"turn must be an integer, got {turn!r}", line=lineno)
        if turn in seen:
            raise TraceError(f"duplicate turn index {turn}", line=lineno)
        if turn != len(utterances):
            raise TraceError(
                f"turn {turn} out of order (expected {len(utterances)})", line=lineno
            )
        try:
            speaker = Speaker(speaker)
        except ValueError:
            raise TraceError(f"unknown speaker {speaker!r}", line=lineno) from None
        if not isinstance(text, str):
            raise TraceError("text must be a string", line=lineno)
        t_ms = record.get("t_ms")
        if t_ms is not None and (not isinstance(t_ms, int) or isinstance(t_ms, bool)):
            raise TraceError("t_ms must be an integer", line=lineno)
        try:
            utterances.append(
                Utterance(global_index=turn, speaker=speaker, text=text, timestamp_ms=t_ms)
            )
        except TraceError as exc:
            raise TraceError(str(exc), line=lineno) from exc
        seen.add(turn)
    return Trace(session_id=session_id, utterances=tuple(utterances))


def serialize_transcript(trace: Trace) -> str:
    """Render a Trace back to the line-delimited transcript format."""
    lines = []
    for u in trace.utterances:
        record: dict = {"turn": u.global_index, "speaker": u.speaker.value, "text": u.text}
        if u.timestamp_ms is not None:
            record["t_ms"] = u.timestamp_ms
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_context(content: bytes | str) -> ScenarioContext:
    """Parse a scenario-context JSON document."""
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    try:
        data = json.loads(content) if content.strip() else {}
    except json.JSONDecodeError as exc:
        raise TraceError(f"malformed context document: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise TraceError("context document must be a JSON object")
    flags = data.get("flags", [])
    if not isinstance(flags, list) or not all(isinstance(f, str) for f in flags):
        raise TraceError("context flags must be a list of strings")
    if len(flags) != len(set(flags)):
        raise TraceError("context flags contain duplicates")
    return ScenarioContext(
        flags=frozenset(flags),
        incident_type=str(data.get("incident_type", "")),
        persona_profile_count=int(data.get("persona_profile_count", 0)),
        department_count=int(data.get("department_count", 0)),
    )


def serialize_context(context: ScenarioContext) -> str:
    return json.dumps(
        {
            "flags": sorted(context.flags),
            "incident_type": context.incident_type,
            "persona_profile_count": context.persona_profile_count,
            "department_count": context.department_count,
        },
        indent=2,
        ensure_ascii=False,
    ) + "\n"

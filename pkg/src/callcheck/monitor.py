"""Offline evaluation of requirement formulas against finite traces.

Semantics, with ``anchor`` the merged turn a relative window hangs off:

* detect        -- true iff some utterance in the resolved window matches;
                   the witness is the earliest such utterance.
* eventually    -- true iff the inner formula holds anchored at some
                   position of the window (false over an empty window).
* globally      -- true iff the inner formula holds anchored at every
                   position of the window (vacuously true when empty).
* whenever/then -- every window position matching the trigger action must
                   have the response hold anchored there; vacuously true
                   when the trigger never fires. Relative windows cover
                   merged turns (anchor+lo, anchor+hi].
* not/and/or    -- classical; evaluation is eager, so backend errors
                   anywhere in the tree abort the requirement.

Witnesses are collected only from positively satisfied atomic checks
(matched detects and fired trigger turns), so every reported witness
satisfies its predicate when presented alone to the backend.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from . import predicate as predicate_mod
from .formulas import (
    And,
    Bound,
    Detect,
    Eventually,
    Formula,
    FormulaError,
    Globally,
    Implies,
    Not,
    Or,
    Requirement,
    Severity,
    Window,
    WindowMode,
    collect_actions,
    eval_guard,
)
from .predicate import BackendError, LinkedSet, PredicateBackend
from .specdsl import guard_to_source
from .trace import Party, ScenarioContext, Trace, Utterance


class EvaluationError(RuntimeError):
    """Formula evaluated outside its defined context."""


class Outcome(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class Witness:
    role: str
    global_index: int
    text: str


@dataclass(frozen=True)
class Verdict:
    """Per-requirement outcome with its supporting evidence."""

    requirement_id: str
    outcome: Outcome
    witnesses: tuple[Witness, ...]
    rationale: str
    description: str
    window_text: str
    expected_actions: tuple[str, ...]


@dataclass(frozen=True)
class Assessment:
    """All verdicts for one session, plus any per-requirement errors."""

    session_id: str
    verdicts: tuple[Verdict, ...]
    errors: tuple[tuple[str, str], ...] = ()
    score: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "score": self.score,
            "verdicts": [
                {
                    "requirement_id": v.requirement_id,
                    "outcome": v.outcome.value,
                    "description": v.description,
                    "window": v.window_text,
                    "expected_actions": list(v.expected_actions),
                    "witnesses": [
                        {"role": w.role, "turn": w.global_index, "text": w.text}
                        for w in v.witnesses
                    ],
                    "rationale": v.rationale,
                }
                for v in self.verdicts
            ],
            "errors": {req_id: message for req_id, message in self.errors},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False) + "\n"


class EvalResult(NamedTuple):
    holds: bool
    witnesses: tuple[Utterance, ...]


def resolve_window(
    window: Window, trace: Trace, trigger_position: int | None = None
) -> range:
    """Concrete index range for a window.

    Absolute windows resolve to party-local indices over the party
    projection, clamped to its length. Relative windows resolve to
    merged indices ``(anchor+lo, anchor+hi]`` clamped to the trace.
    """
    if window.mode is WindowMode.RELATIVE:
        if trigger_position is None:
            raise EvaluationError("relative window evaluated without a trigger position")
        start = max(0, trigger_position + window.lo.offset + 1)
        stop = min(len(trace), trigger_position + window.hi.offset + 1)
        return range(start, max(start, stop))
    sequence_length = len(trace.project(window.party))
    lo = window.lo.resolve(sequence_length)
    hi = window.hi.resolve(sequence_length)
    return range(lo, max(lo, hi))


def window_utterances(
    window: Window, trace: Trace, trigger_position: int | None = None
) -> list[Utterance]:
    indices = resolve_window(window, trace, trigger_position)
    if window.mode is WindowMode.RELATIVE:
        return [
            trace.utterances[i]
            for i in indices
            if window.party.matches(trace.utterances[i].speaker)
        ]
    projected = trace.project(window.party)
    return [projected[i] for i in indices]


def _merge_witnesses(*groups: tuple[Utterance, ...]) -> tuple[Utterance, ...]:
    seen: dict[int, Utterance] = {}
    for group in groups:
        for utt in group:
            seen.setdefault(utt.global_index, utt)
    return tuple(seen[i] for i in sorted(seen))


def evaluate(
    formula: Formula,
    trace: Trace,
    backend: PredicateBackend,
    anchor: int | None = None,
) -> EvalResult:
    """Evaluate a formula over a trace; see the module docstring for the
    operator semantics. ``anchor`` is the merged position relative
    windows hang off (set internally by temporal operators)."""
    if isinstance(formula, Detect):
        utts = window_utterances(formula.window, trace, anchor)
        result = predicate_mod.detect(utts, formula.action, backend)
        if result.holds:
            return EvalResult(True, (utts[result.witness],))
        return EvalResult(False, ())
    if isinstance(formula, Eventually):
        for utt in window_utterances(formula.window, trace, anchor):
            result = evaluate(formula.inner, trace, backend, anchor=utt.global_index)
            if result.holds:
                return EvalResult(True, result.witnesses)
        return EvalResult(False, ())
    if isinstance(formula, Globally):
        collected: list[tuple[Utterance, ...]] = []
        for utt in window_utterances(formula.window, trace, anchor):
            result = evaluate(formula.inner, trace, backend, anchor=utt.global_index)
            if not result.holds:
                return EvalResult(False, ())
            collected.append(result.witnesses)
        return EvalResult(True, _merge_witnesses(*collected))
    if isinstance(formula, Implies):
        collected = []
        for utt in window_utterances(formula.trigger.window, trace, anchor):
            try:
                fired = backend.evaluate(utt.text, formula.trigger.action)
            except BackendError as exc:
                raise BackendError(
                    f"backend failed on trigger {formula.trigger.action!r} "
                    f"at turn {utt.global_index}: {exc}"
                ) from exc
            if not fired:
                continue
            result = evaluate(formula.response, trace, backend, anchor=utt.global_index)
            if not result.holds:
                return EvalResult(False, ())
            collected.append(_merge_witnesses((utt,), result.witnesses))
        return EvalResult(True, _merge_witnesses(*collected))
    if isinstance(formula, Not):
        result = evaluate(formula.inner, trace, backend, anchor=anchor)
        return EvalResult(not result.holds, ())
    if isinstance(formula, (And, Or)):
        results = [
            evaluate(op, trace, backend, anchor=anchor) for op in formula.operands
        ]
        if isinstance(formula, And):
            if all(r.holds for r in results):
                return EvalResult(True, _merge_witnesses(*(r.witnesses for r in results)))
            return EvalResult(False, ())
        if any(r.holds for r in results):
            return EvalResult(
                True, _merge_witnesses(*(r.witnesses for r in results if r.holds))
            )
        return EvalResult(False, ())
    raise FormulaError(f"unknown formula node {type(formula).__name__}")


# --- plain-language descriptions -------------------------------------------

_PARTY_NAMES = {
    Party.CALLTAKER: "call-taker",
    Party.CALLER: "caller",
    Party.BOTH: "either-party",
}


def describe_window(window: Window) -> str:
    party = _PARTY_NAMES[window.party]
    if window.mode is WindowMode.RELATIVE:
        if window.lo.offset == 0:
            return f"the {window.hi.offset} {party} turn(s) after the trigger"
        return (
            f"{party} turns between {window.lo.offset} and {window.hi.offset} "
            "after the trigger"
        )
    lo, hi = window.lo, window.hi
    if not lo.from_end and lo.offset == 0 and hi.from_end and hi.offset == 0:
        return f"any {party} turn"
    if not lo.from_end and lo.offset == 0 and not hi.from_end:
        return f"the first {hi.offset} {party} turns"
    if lo.from_end and hi.from_end and hi.offset == 0:
        return f"the last {lo.offset} {party} turns"
    def bound_text(b: Bound) -> str:
        if b.from_end:
            return "T" if b.offset == 0 else f"T-{b.offset}"
        return str(b.offset)
    return f"{party} turns [{bound_text(lo)}, {bound_text(hi)})"


def describe_formula(formula: Formula) -> str:
    # Single quotes mark action labels; double quotes are reserved for
    # verbatim trace text so report quotes stay audit-checkable.
    if isinstance(formula, Detect):
        return f"'{formula.action}' in {describe_window(formula.window)}"
    if isinstance(formula, Eventually):
        return (
            f"at some position of {describe_window(formula.window)}: "
            f"{describe_formula(formula.inner)}"
        )
    if isinstance(formula, Globally):
        return (
            f"at every position of {describe_window(formula.window)}: "
            f"{describe_formula(formula.inner)}"
        )
    if isinstance(formula, Implies):
        return (
            f"whenever '{formula.trigger.action}' occurs in "
            f"{describe_window(formula.trigger.window)}, then "
            f"{describe_formula(formula.response)}"
        )
    if isinstance(formula, Not):
        return f"not ({describe_formula(formula.inner)})"
    if isinstance(formula, And):
        return " and ".join(f"({describe_formula(op)})" for op in formula.operands)
    if isinstance(formula, Or):
        return " or ".join(f"({describe_formula(op)})" for op in formula.operands)
    raise FormulaError(f"unknown formula node {type(formula).__name__}")


def _top_window_text(formula: Formula) -> str:
    if isinstance(formula, Detect):
        return describe_window(formula.window)
    if isinstance(formula, (Eventually, Globally)):
        return describe_window(formula.window)
    if isinstance(formula, Implies):
        return describe_window(formula.response.window) if isinstance(
            formula.response, Detect
        ) else describe_window(formula.trigger.window)
    if isinstance(formula, Not):
        return _top_window_text(formula.inner)
    if isinstance(formula, (And, Or)):
        return _top_window_text(formula.operands[0])
    raise FormulaError(f"unknown formula node {type(formula).__name__}")


def _build_rationale(req: Requirement, result: EvalResult | None, guard_ok: bool) -> str:
    expectation = describe_formula(req.formula)
    if not guard_ok:
        guard_src = guard_to_source(req.guard) if req.guard is not None else ""
        return (
            f"Rule '{req.req_id}' not applicable: scenario condition "
            f"'{guard_src}' is inactive."
        )
    assert result is not None
    if result.holds:
        if result.witnesses:
            first = result.witnesses[0]
            return (
                f"Rule '{req.req_id}' satisfied: expected {expectation}; "
                f'evidence at turn {first.global_index} ({first.speaker.value}): "{first.text}"'
            )
        return (
            f"Rule '{req.req_id}' satisfied vacuously: expected {expectation}; "
            "no triggering turn occurred."
        )
    return (
        f"Rule '{req.req_id}' not satisfied: expected {expectation}; "
        "no matching utterance found in the window."
    )


def evaluate_requirement(
    req: Requirement,
    trace: Trace,
    context: ScenarioContext,
    backend: PredicateBackend,
) -> Verdict:
    expected_actions = tuple(sorted(collect_actions(req.formula)))
    window_text = _top_window_text(req.formula)
    if req.guard is not None and not eval_guard(req.guard, context.flags):
        return Verdict(
            requirement_id=req.req_id,
            outcome=Outcome.NOT_APPLICABLE,
            witnesses=(),
            rationale=_build_rationale(req, None, guard_ok=False),
            description=req.description,
            window_text=window_text,
            expected_actions=expected_actions,
        )
    result = evaluate(req.formula, trace, backend)
    return Verdict(
        requirement_id=req.req_id,
        outcome=Outcome.PASS if result.holds else Outcome.FAIL,
        witnesses=tuple(
            Witness(role=u.speaker.value, global_index=u.global_index, text=u.text)
            for u in result.witnesses
        ),
        rationale=_build_rationale(req, result, guard_ok=True),
        description=req.description,
        window_text=window_text,
        expected_actions=expected_actions,
    )


def evaluate_requirement_set(
    linked: LinkedSet, trace: Trace, context: ScenarioContext
) -> Assessment:
    """Evaluate every requirement; backend failures are recorded per
    requirement instead of surfacing as Fail verdicts."""
    verdicts: list[Verdict] = []
    errors: list[tuple[str, str]] = []
    for req in sorted(linked.requirements, key=lambda r: r.req_id):
        try:
            verdicts.append(evaluate_requirement(req, trace, context, linked.backend))
        except BackendError as exc:
            errors.append((req.req_id, str(exc)))
    passed = sum(
        1
        for v in verdicts
        if v.outcome is Outcome.PASS
        and linked.requirements.get(v.requirement_id).severity is Severity.MANDATORY
    )
    failed = sum(
        1
        for v in verdicts
        if v.outcome is Outcome.FAIL
        and linked.requirements.get(v.requirement_id).severity is Severity.MANDATORY
    )
    score = passed / (passed + failed) if (passed + failed) > 0 else None
    return Assessment(
        session_id=trace.session_id,
        verdicts=tuple(verdicts),
        errors=tuple(errors),
        score=score,
    )

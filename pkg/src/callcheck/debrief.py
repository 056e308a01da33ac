"""Balanced debrief reports derived from a session assessment.

Every passed requirement becomes a strength entry quoting its witness
turn; every failed requirement becomes an improvement entry naming the
expected action and window in plain language. Strengths always render
before improvements so sessions with mixed outcomes acknowledge what
went well.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from . import analytics
from .analytics import ComplexityParams
from .monitor import Assessment, Outcome
from .trace import ScenarioContext, Trace


class ReportIntegrityError(RuntimeError):
    """Assessment evidence does not match the trace it claims to describe."""


@dataclass(frozen=True)
class StrengthEntry:
    requirement_id: str
    description: str
    quote: str
    turn: int
    role: str


@dataclass(frozen=True)
class ImprovementEntry:
    requirement_id: str
    description: str
    expected_actions: tuple[str, ...]
    window_text: str
    rationale: str


@dataclass(frozen=True)
class DebriefReport:
    session_id: str
    strengths: tuple[StrengthEntry, ...]
    improvements: tuple[ImprovementEntry, ...]
    not_applicable: tuple[str, ...]
    score: float | None
    complexity: float | None

    def to_json_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "score": self.score,
            "complexity": self.complexity,
            "strengths": [
                {
                    "requirement_id": s.requirement_id,
                    "description": s.description,
                    "quote": s.quote,
                    "turn": s.turn,
                    "role": s.role,
                }
                for s in self.strengths
            ],
            "improvements": [
                {
                    "requirement_id": i.requirement_id,
                    "description": i.description,
                    "expected_actions": list(i.expected_actions),
                    "window": i.window_text,
                    "rationale": i.rationale,
                }
                for i in self.improvements
            ],
            "not_applicable": list(self.not_applicable),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False) + "\n"


def generate_report(
    assessment: Assessment, trace: Trace, scenario: ScenarioContext
) -> DebriefReport:
    """Partition verdicts into strengths / improvements / not-applicable.

    Raises ReportIntegrityError if any witness points at a turn that is
    missing from the trace or quotes text the trace does not contain.
    """
    strengths: list[StrengthEntry] = []
    improvements: list[ImprovementEntry] = []
    not_applicable: list[str] = []
    for verdict in sorted(assessment.verdicts, key=lambda v: v.requirement_id):
        if verdict.outcome is Outcome.NOT_APPLICABLE:
            not_applicable.append(verdict.requirement_id)
            continue
        if verdict.outcome is Outcome.FAIL:
            improvements.append(
                ImprovementEntry(
                    requirement_id=verdict.requirement_id,
                    description=verdict.description,
                    expected_actions=verdict.expected_actions,
                    window_text=verdict.window_text,
                    rationale=verdict.rationale,
                )
            )
            continue
        if verdict.witnesses:
            witness = verdict.witnesses[0]
            if witness.global_index >= len(trace):
                raise ReportIntegrityError(
                    f"witness turn {witness.global_index} for "
                    f"{verdict.requirement_id!r} is not in the trace"
                )
            actual = trace.utterances[witness.global_index]
            if actual.text != witness.text:
                raise ReportIntegrityError(
                    f"witness text for {verdict.requirement_id!r} does not match "
                    f"turn {witness.global_index}"
                )
            quote, turn, role = witness.text, witness.global_index, witness.role
        else:
            # Vacuously satisfied rule (trigger never fired): nothing to quote.
            quote, turn, role = "", -1, ""
        strengths.append(
            StrengthEntry(
                requirement_id=verdict.requirement_id,
                description=verdict.description,
                quote=quote,
                turn=turn,
                role=role,
            )
        )
    applicable = len(strengths) + len(improvements) + len(assessment.errors)
    complexity = analytics.complexity_index(
        ComplexityParams(
            n_requirements=applicable,
            departments=scenario.department_count,
            caller_profiles=scenario.persona_profile_count,
        )
    )
    return DebriefReport(
        session_id=assessment.session_id,
        strengths=tuple(strengths),
        improvements=tuple(improvements),
        not_applicable=tuple(not_applicable),
        score=assessment.score,
        complexity=complexity,
    )


def _format_score(score: float | None) -> str:
    if score is None:
        return "n/a (no applicable mandatory requirements)"
    return f"{score:.0%}"


def render_text(report: DebriefReport) -> str:
    """Deterministic plain-text rendering, strengths before improvements."""
    lines: list[str] = []
    lines.append(f"Debrief report for session {report.session_id or '(unnamed)'}")
    lines.append(f"Score: {_format_score(report.score)}")
    if report.complexity is not None:
        lines.append(f"Complexity index: {report.complexity:.3f}")
    lines.append("")
    if not report.strengths and not report.improvements:
        lines.append("No applicable requirements for this scenario.")
        if report.not_applicable:
            lines.append("")
            lines.append("Not applicable:")
            for req_id in report.not_applicable:
                lines.append(f"  - {req_id}")
        return "\n".join(lines) + "\n"
    lines.append(f"Strengths ({len(report.strengths)})")
    if report.strengths:
        for entry in report.strengths:
            lines.append(f"  [{entry.requirement_id}] {entry.description}")
            if entry.quote:
                lines.append(f'      turn {entry.turn} ({entry.role}): "{entry.quote}"')
            else:
                lines.append("      satisfied (no triggering turn occurred)")
    else:
        lines.append("  (none this session)")
    lines.append("")
    lines.append(f"Areas for improvement ({len(report.improvements)})")
    if report.improvements:
        for entry in report.improvements:
            lines.append(f"  [{entry.requirement_id}] {entry.description}")
            expected = ", ".join(f"'{a}'" for a in entry.expected_actions)
            lines.append(f"      expected {expected} in {entry.window_text}")
    else:
        lines.append("  (none this session)")
    if report.not_applicable:
        lines.append("")
        lines.append("Not applicable:")
        for req_id in report.not_applicable:
            lines.append(f"  - {req_id}")
    return "\n".join(lines) + "\n"

"""Dispute ledger: error reports linked to evidence and QA resolutions.

Reports move forward-only through open -> under_review -> resolved, and
the whole history is an append-only line-delimited file so any state can
be audited or rebuilt by replay. Resolution categories separate genuine
technical failures from stress-induced misattributions and from system
behavior that was correct but uncomfortable.
"""
from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from . import analytics
from .monitor import Assessment, Outcome, Verdict, Witness
from .trace import Trace, parse_transcript, serialize_transcript


class TriageStateError(RuntimeError):
    """Operation not allowed in the report's current status."""


class TriageAuthError(RuntimeError):
    """Operation attempted by a role that is not allowed to perform it."""


class UnknownSessionError(LookupError):
    """Report filed against a session the ledger has never seen."""


class LedgerIntegrityError(RuntimeError):
    """Stored ledger content is inconsistent or incomplete."""


class ReportStatus(str, Enum):
    OPEN = "open"
    UNDER_REVIEW = "under_review"
    RESOLVED = "resolved"


class ReporterRole(str, Enum):
    TRAINEE = "trainee"
    COORDINATOR = "coordinator"
    QA = "qa"


class ResolutionCategory(str, Enum):
    GENUINE_FAILURE = "genuine_failure"
    MISATTRIBUTION = "misattribution"
    EXPECTED_BEHAVIOR = "expected_behavior"


@dataclass(frozen=True)
class Resolution:
    category: ResolutionCategory
    resolver_role: ReporterRole
    note: str
    resolved_at: str

    def __post_init__(self):
        if self.resolver_role is not ReporterRole.QA:
            raise TriageAuthError("only QA may resolve reports")


@dataclass(frozen=True)
class ErrorReport:
    report_id: str
    session_id: str
    requirement_id: str | None
    reporter_role: ReporterRole
    claim: str
    filed_at: str
    status: ReportStatus = ReportStatus.OPEN
    resolution: Resolution | None = None


@dataclass(frozen=True)
class EvidenceBundle:
    """Everything a QA reviewer needs to validate one report."""

    session_id: str
    trace: Trace
    verdicts: tuple[Verdict, ...]
    assessment_rationale: tuple[str, ...]
    recording_ref: str | None = None


@dataclass(frozen=True)
class SessionEntry:
    session_id: str
    trace: Trace
    assessment: Assessment
    complexity: float | None = None
    recording_ref: str | None = None


def _default_clock() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _default_id_factory() -> str:
    return uuid.uuid4().hex[:12]


def _verdict_to_record(v: Verdict) -> dict:
    return {
        "requirement_id": v.requirement_id,
        "outcome": v.outcome.value,
        "witnesses": [
            {"role": w.role, "turn": w.global_index, "text": w.text} for w in v.witnesses
        ],
        "rationale": v.rationale,
        "description": v.description,
        "window": v.window_text,
        "expected_actions": list(v.expected_actions),
    }


def _verdict_from_record(data: dict) -> Verdict:
    return Verdict(
        requirement_id=data["requirement_id"],
        outcome=Outcome(data["outcome"]),
        witnesses=tuple(
            Witness(role=w["role"], global_index=w["turn"], text=w["text"])
            for w in data["witnesses"]
        ),
        rationale=data["rationale"],
        description=data["description"],
        window_text=data["window"],
        expected_actions=tuple(data["expected_actions"]),
    )


class TriageLedger:
    """Single-writer dispute ledger backed by an append-only event file.

    ``path=None`` keeps the ledger in memory (useful for tests and
    property checks). Opening an existing path replays its events.
    """

    def __init__(
        self,
        path: str | Path | None = None,
        clock: Callable[[], str] | None = None,
        id_factory: Callable[[], str] | None = None,
    ):
        self.path = Path(path) if path is not None else None
        self._clock = clock or _default_clock
        self._id_factory = id_factory or _default_id_factory
        self._seq = 0
        self._sessions: dict[str, SessionEntry] = {}
        self._reports: dict[str, ErrorReport] = {}
        self._order: list[str] = []
        if self.path is not None and self.path.exists():
            self._replay(self.path.read_text(encoding="utf-8"))

    # --- persistence -------------------------------------------------------

    def _replay(self, content: str) -> None:
        for lineno, line in enumerate(content.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LedgerIntegrityError(f"ledger line {lineno}: {exc.msg}") from exc
            if event.get("seq") != self._seq + 1:
                raise LedgerIntegrityError(
                    f"ledger line {lineno}: sequence {event.get('seq')} "
                    f"(expected {self._seq + 1})"
                )
            self._seq = event["seq"]
            self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "session":
            entry = SessionEntry(
                session_id=event["session_id"],
                trace=parse_transcript(event["transcript"], session_id=event["session_id"]),
                assessment=Assessment(
                    session_id=event["session_id"],
                    verdicts=tuple(_verdict_from_record(v) for v in event["verdicts"]),
                    errors=tuple((r, m) for r, m in event.get("errors", [])),
                    score=event.get("score"),
                ),
                complexity=event.get("complexity"),
                recording_ref=event.get("recording_ref"),
            )
            self._sessions[entry.session_id] = entry
        elif kind == "filed":
            report = ErrorReport(
                report_id=event["report_id"],
                session_id=event["session_id"],
                requirement_id=event.get("requirement_id"),
                reporter_role=ReporterRole(event["reporter_role"]),
                claim=event["claim"],
                filed_at=event["filed_at"],
            )
            self._reports[report.report_id] = report
            self._order.append(report.report_id)
        elif kind == "review":
            report = self._reports[event["report_id"]]
            self._reports[report.report_id] = replace(
                report, status=ReportStatus.UNDER_REVIEW
            )
        elif kind == "resolved":
            report = self._reports[event["report_id"]]
            self._reports[report.report_id] = replace(
                report,
                status=ReportStatus.RESOLVED,
                resolution=Resolution(
                    category=ResolutionCategory(event["category"]),
                    resolver_role=ReporterRole(event["resolver_role"]),
                    note=event["note"],
                    resolved_at=event["resolved_at"],
                ),
            )
        else:
            raise LedgerIntegrityError(f"unknown ledger event kind {kind!r}")

    def _append(self, event: dict) -> None:
        self._seq += 1
        event = {"seq": self._seq, **event}
        self._apply(event)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def compact(self) -> None:
        """Rewrite the backing file as one event per current fact."""
        if self.path is None:
            return
        events: list[dict] = []
        for entry in self._sessions.values():
            events.append(self._session_event(entry))
        for report_id in self._order:
            report = self._reports[report_id]
            events.append(
                {
                    "kind": "filed",
                    "report_id": report.report_id,
                    "session_id": report.session_id,
                    "requirement_id": report.requirement_id,
                    "reporter_role": report.reporter_role.value,
                    "claim": report.claim,
                    "filed_at": report.filed_at,
                }
            )
            if report.status in (ReportStatus.UNDER_REVIEW, ReportStatus.RESOLVED):
                events.append({"kind": "review", "report_id": report.report_id})
            if report.status is ReportStatus.RESOLVED:
                res = report.resolution
                events.append(
                    {
                        "kind": "resolved",
                        "report_id": report.report_id,
                        "category": res.category.value,
                        "resolver_role": res.resolver_role.value,
                        "note": res.note,
                        "resolved_at": res.resolved_at,
                    }
                )
        lines = [
            json.dumps({"seq": i + 1, **event}, ensure_ascii=False)
            for i, event in enumerate(events)
        ]
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        tmp.replace(self.path)
        self._seq = len(events)

    @staticmethod
    def _session_event(entry: SessionEntry) -> dict:
        return {
            "kind": "session",
            "session_id": entry.session_id,
            "transcript": serialize_transcript(entry.trace),
            "verdicts": [_verdict_to_record(v) for v in entry.assessment.verdicts],
            "errors": [[r, m] for r, m in entry.assessment.errors],
            "score": entry.assessment.score,
            "complexity": entry.complexity,
            "recording_ref": entry.recording_ref,
        }

    # --- queries -----------------------------------------------------------

    @property
    def sessions(self) -> dict[str, SessionEntry]:
        return dict(self._sessions)

    def reports(self) -> list[ErrorReport]:
        return [self._reports[rid] for rid in self._order]

    def get_report(self, report_id: str) -> ErrorReport:
        try:
            return self._reports[report_id]
        except KeyError:
            raise UnknownSessionError(f"no report {report_id!r}") from None

    def status_counts(self) -> dict[str, int]:
        counts = {status.value: 0 for status in ReportStatus}
        for report in self._reports.values():
            counts[report.status.value] += 1
        return counts

    # --- operations --------------------------------------------------------

    def register_session(
        self,
        session_id: str,
        trace: Trace,
        assessment: Assessment,
        complexity: float | None = None,
        recording_ref: str | None = None,
    ) -> None:
        if session_id in self._sessions:
            raise ValueError(f"session {session_id!r} already registered")
        entry = SessionEntry(
            session_id=session_id,
            trace=trace,
            assessment=assessment,
            complexity=complexity,
            recording_ref=recording_ref,
        )
        self._append(self._session_event(entry))

    def file_report(
        self,
        session_id: str,
        reporter_role: ReporterRole,
        claim: str,
        requirement_id: str | None = None,
    ) -> ErrorReport:
        if session_id not in self._sessions:
            raise UnknownSessionError(f"session {session_id!r} is not in the ledger")
        report_id = self._id_factory()
        while report_id in self._reports:  # defensive against custom factories
            report_id = self._id_factory()
        self._append(
            {
                "kind": "filed",
                "report_id": report_id,
                "session_id": session_id,
                "requirement_id": requirement_id,
                "reporter_role": ReporterRole(reporter_role).value,
                "claim": claim,
                "filed_at": self._clock(),
            }
        )
        return self._reports[report_id]

    def assemble_evidence(self, report_id: str) -> EvidenceBundle:
        """Surface the session trace, disputed verdict(s), and rationale;
        moves an open report to under_review."""
        report = self.get_report(report_id)
        if report.status is ReportStatus.RESOLVED:
            raise TriageStateError(
                f"report {report_id!r} is resolved; evidence assembly is closed"
            )
        try:
            entry = self._sessions[report.session_id]
        except KeyError:
            raise LedgerIntegrityError(
                f"session {report.session_id!r} missing for report {report_id!r}"
            ) from None
        if report.requirement_id is not None:
            verdicts = tuple(
                v
                for v in entry.assessment.verdicts
                if v.requirement_id == report.requirement_id
            )
            if not verdicts:
                raise LedgerIntegrityError(
                    f"requirement {report.requirement_id!r} has no verdict in "
                    f"session {report.session_id!r}"
                )
        else:
            verdicts = entry.assessment.verdicts
        if report.status is ReportStatus.OPEN:
            self._append({"kind": "review", "report_id": report_id})
        return EvidenceBundle(
            session_id=report.session_id,
            trace=entry.trace,
            verdicts=verdicts,
            assessment_rationale=tuple(v.rationale for v in verdicts),
            recording_ref=entry.recording_ref,
        )

    def resolve(
        self,
        report_id: str,
        category: ResolutionCategory,
        resolver_role: ReporterRole,
        note: str,
    ) -> ErrorReport:
        report = self.get_report(report_id)
        if ReporterRole(resolver_role) is not ReporterRole.QA:
            raise TriageAuthError(
                f"role {ReporterRole(resolver_role).value!r} may not resolve reports"
            )
        if report.status is not ReportStatus.UNDER_REVIEW:
            raise TriageStateError(
                f"report {report_id!r} is {report.status.value}; only reports under "
                "review can be resolved"
            )
        self._append(
            {
                "kind": "resolved",
                "report_id": report_id,
                "category": ResolutionCategory(category).value,
                "resolver_role": ReporterRole(resolver_role).value,
                "note": note,
                "resolved_at": self._clock(),
            }
        )
        return self._reports[report_id]


@dataclass(frozen=True)
class ComplexityBucket:
    lower: float
    sessions: int
    disputed_sessions: int
    dispute_rate: float


@dataclass(frozen=True)
class TriageSummary:
    open: int
    under_review: int
    resolved: int
    category_counts: dict[str, int]
    phantom_rate: float | None
    dispute_rates_by_complexity: tuple[ComplexityBucket, ...]

    def to_json_dict(self) -> dict:
        return {
            "open": self.open,
            "under_review": self.under_review,
            "resolved": self.resolved,
            "category_counts": dict(self.category_counts),
            "phantom_rate": self.phantom_rate,
            "dispute_rates_by_complexity": [
                {
                    "complexity_bucket": b.lower,
                    "sessions": b.sessions,
                    "disputed_sessions": b.disputed_sessions,
                    "dispute_rate": b.dispute_rate,
                }
                for b in self.dispute_rates_by_complexity
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def triage_summary(
    ledger: TriageLedger,
    bucket_width: float = 0.5,
    include_expected_behavior: bool = True,
) -> TriageSummary:
    """Ledger counters plus the phantom-error rate and per-complexity
    dispute rates (sessions without a stored complexity are skipped)."""
    counts = ledger.status_counts()
    categories = [
        r.resolution.category
        for r in ledger.reports()
        if r.status is ReportStatus.RESOLVED and r.resolution is not None
    ]
    category_counts = {c.value: 0 for c in ResolutionCategory}
    for category in categories:
        category_counts[category.value] += 1
    disputed_sessions = {r.session_id for r in ledger.reports()}
    buckets: dict[int, list[str]] = {}
    for session_id, entry in ledger.sessions.items():
        if entry.complexity is None:
            continue
        buckets.setdefault(int(entry.complexity / bucket_width), []).append(session_id)
    bucket_rows = []
    for index in sorted(buckets):
        session_ids = buckets[index]
        disputed = sum(1 for sid in session_ids if sid in disputed_sessions)
        bucket_rows.append(
            ComplexityBucket(
                lower=index * bucket_width,
                sessions=len(session_ids),
                disputed_sessions=disputed,
                dispute_rate=disputed / len(session_ids),
            )
        )
    return TriageSummary(
        open=counts[ReportStatus.OPEN.value],
        under_review=counts[ReportStatus.UNDER_REVIEW.value],
        resolved=counts[ReportStatus.RESOLVED.value],
        category_counts=category_counts,
        phantom_rate=analytics.phantom_rate(
            categories, include_expected_behavior=include_expected_behavior
        ),
        dispute_rates_by_complexity=tuple(bucket_rows),
    )

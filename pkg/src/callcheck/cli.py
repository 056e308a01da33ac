"""Command-line surface tying the toolkit together.

Subcommands: compile, check, debrief, simulate, stats, and the triage
ledger operations (file / review / resolve / summary).

Exit codes are stable:
    0  success (for ``check``: every applicable mandatory rule passed)
    1  compliance failure (``check``/``debrief`` found failing rules)
    2  spec, input, or state error (parse errors, bad flags, triage misuse)
    3  I/O error (missing or unreadable file)
    4  predicate backend failure
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analytics, debrief as debrief_mod, simgen, specdsl, triage as triage_mod
from .analytics import AnalyticsError, ComplexityParams
from .formulas import FormulaError, Severity
from .monitor import Assessment, Outcome, evaluate_requirement_set
from .predicate import (
    BackendError,
    ExternalModelBackend,
    LexiconBackend,
    LinkError,
    LinkedSet,
    link_requirements,
    load_lexicon,
    serialize_lexicon,
)
from .simgen import GenerationError
from .specdsl import SpecSyntaxError
from .templates import TemplateError
from .trace import (
    ScenarioContext,
    TraceError,
    parse_context,
    parse_transcript,
    serialize_context,
    serialize_transcript,
)
from .triage import (
    LedgerIntegrityError,
    ReporterRole,
    ResolutionCategory,
    TriageAuthError,
    TriageLedger,
    TriageStateError,
    UnknownSessionError,
    triage_summary,
)

EXIT_OK = 0
EXIT_NONCOMPLIANT = 1
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_BACKEND = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc


def _load_backend(args) -> LexiconBackend | ExternalModelBackend:
    if args.backend == "external":
        try:
            return ExternalModelBackend.from_env()
        except ValueError as exc:
            raise CliError(str(exc), EXIT_INPUT) from exc
    if not args.lexicon:
        raise CliError("--lexicon is required with the lexicon backend", EXIT_INPUT)
    return load_lexicon(_read(args.lexicon))


def _load_linked(args) -> LinkedSet:
    requirement_set = specdsl.parse_spec(_read(args.spec))
    backend = _load_backend(args)
    return link_requirements(requirement_set, backend)


def _load_context(path: str | None) -> ScenarioContext:
    if path is None:
        return ScenarioContext()
    return parse_context(_read(path))


def _assessment_text(assessment: Assessment) -> str:
    lines = [f"Assessment for session {assessment.session_id or '(unnamed)'}"]
    score = "n/a" if assessment.score is None else f"{assessment.score:.4f}"
    lines.append(f"score: {score}")
    for verdict in assessment.verdicts:
        lines.append(f"[{verdict.outcome.value}] {verdict.requirement_id}")
        lines.append(f"    {verdict.rationale}")
    if assessment.errors:
        lines.append("backend errors:")
        for req_id, message in assessment.errors:
            lines.append(f"    {req_id}: {message}")
    return "\n".join(lines) + "\n"


def _session_complexity(assessment: Assessment, context: ScenarioContext) -> float:
    applicable = sum(
        1 for v in assessment.verdicts if v.outcome is not Outcome.NOT_APPLICABLE
    ) + len(assessment.errors)
    return analytics.complexity_index(
        ComplexityParams(
            n_requirements=applicable,
            departments=context.department_count,
            caller_profiles=context.persona_profile_count,
        )
    )


def _evaluate_for_args(args):
    linked = _load_linked(args)
    trace = parse_transcript(
        _read(args.transcript), session_id=Path(args.transcript).stem.split(".")[0]
    )
    context = _load_context(args.context)
    assessment = evaluate_requirement_set(linked, trace, context)
    return assessment, context, trace, linked


# --- subcommands ------------------------------------------------------------


def cmd_compile(args) -> int:
    requirement_set = specdsl.parse_spec(_read(args.spec))
    if args.lexicon:
        link_requirements(requirement_set, load_lexicon(_read(args.lexicon)))
    mandatory = sum(1 for r in requirement_set if r.severity is Severity.MANDATORY)
    advisory = len(requirement_set) - mandatory
    print(
        f"{len(requirement_set)} requirements ({mandatory} mandatory, "
        f"{advisory} advisory)"
    )
    if requirement_set.flags:
        print("flags: " + ", ".join(sorted(requirement_set.flags)))
    return EXIT_OK


def cmd_check(args) -> int:
    assessment, context, trace, linked = _evaluate_for_args(args)
    if args.format == "json":
        _write_output(assessment.to_json(), args.out)
    else:
        _write_output(_assessment_text(assessment), args.out)
    if args.ledger:
        ledger = TriageLedger(args.ledger)
        ledger.register_session(
            assessment.session_id,
            trace,
            assessment,
            complexity=_session_complexity(assessment, context),
        )
    if assessment.errors:
        for req_id, message in assessment.errors:
            print(f"error: {req_id}: {message}", file=sys.stderr)
        return EXIT_BACKEND
    mandatory_failed = any(
        v.outcome is Outcome.FAIL
        and linked.requirements.get(v.requirement_id).severity is Severity.MANDATORY
        for v in assessment.verdicts
    )
    return EXIT_NONCOMPLIANT if mandatory_failed else EXIT_OK


def cmd_debrief(args) -> int:
    assessment, context, trace, _linked = _evaluate_for_args(args)
    if assessment.errors:
        for req_id, message in assessment.errors:
            print(f"error: {req_id}: {message}", file=sys.stderr)
        return EXIT_BACKEND
    report = debrief_mod.generate_report(assessment, trace, context)
    if args.format == "json":
        _write_output(report.to_json(), args.out)
    else:
        _write_output(debrief_mod.render_text(report), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    try:
        lo, hi = (float(part) for part in args.complexity.split(":"))
    except ValueError as exc:
        raise CliError(
            f"--complexity must look like LO:HI, got {args.complexity!r}", EXIT_INPUT
        ) from exc
    if args.spec or args.lexicon:
        if not (args.spec and args.lexicon):
            raise CliError("--spec and --lexicon must be given together", EXIT_INPUT)
        requirement_set = specdsl.parse_spec(_read(args.spec))
        backend = load_lexicon(_read(args.lexicon))
        linked = link_requirements(requirement_set, backend)
    else:
        linked = simgen.default_linked_set()
    sessions = simgen.generate_dataset(
        n=args.n,
        complexity_range=(lo, hi),
        seed=args.seed,
        linked=linked,
        min_turns=args.min_turns,
    )
    try:
        sessions_dir = out_dir / "sessions"
        sessions_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "spec.rules").write_text(
            specdsl.serialize_spec(linked.requirements), encoding="utf-8"
        )
        if isinstance(linked.backend, LexiconBackend):
            (out_dir / "lexicon.json").write_text(
                serialize_lexicon(linked.backend), encoding="utf-8"
            )
        (out_dir / "dataset.csv").write_text(
            analytics.save_dataset([s.record for s in sessions]), encoding="utf-8"
        )
        for item in sessions:
            session = item.session
            base = sessions_dir / session.session_id
            base.with_suffix(".transcript.jsonl").write_text(
                serialize_transcript(session.trace), encoding="utf-8"
            )
            base.with_suffix(".context.json").write_text(
                serialize_context(session.context), encoding="utf-8"
            )
            truth = {
                "session_id": session.session_id,
                "outcomes": {
                    req_id: outcome.value
                    for req_id, outcome in sorted(session.ground_truth.items())
                },
            }
            import json as _json

            base.with_suffix(".truth.json").write_text(
                _json.dumps(truth, indent=2) + "\n", encoding="utf-8"
            )
    except OSError as exc:
        raise CliError(f"cannot write into {out_dir}: {exc}", EXIT_IO) from exc
    print(f"wrote {len(sessions)} sessions to {out_dir}")
    return EXIT_OK


def cmd_stats(args) -> int:
    records = analytics.load_dataset(_read(args.dataset))
    if not records:
        raise CliError("dataset is empty", EXIT_INPUT)
    summary = analytics.summarize_sessions(records, trials=args.trials, seed=args.seed)
    if args.format == "json":
        _write_output(summary.to_json(), args.out)
    else:
        data = summary.to_json_dict()
        lines = [
            f"sessions: {data['sessions']}",
            "complexity: min {min:.3f} mean {mean:.3f} max {max:.3f}".format(
                **data["complexity"]
            ),
            f"band occupancy: {data['band_occupancy']:.3f}",
            f"dispute rate: {data['dispute_rate']:.3f}",
            f"score mean: {data['score_mean']:.3f}",
        ]
        for key, title in (
            ("complexity_vs_score", "complexity vs score"),
            ("complexity_vs_dispute", "complexity vs dispute"),
        ):
            block = data[key]
            r = "n/a" if block["r"] is None else f"{block['r']:.4f}"
            slope = "n/a" if block["slope"] is None else f"{block['slope']:.4f}"
            p = "n/a" if block["p"] is None else f"{block['p']:.4f}"
            lines.append(f"{title}: r {r}, slope {slope}, p {p}")
        _write_output("\n".join(lines) + "\n", args.out)
    if args.figures:
        from . import figures  # deferred: pulls in matplotlib

        paths = figures.render_stats_figures(records, summary, args.figures)
        for path in paths:
            print(f"figure: {path}")
    return EXIT_OK


def cmd_triage(args) -> int:
    ledger = TriageLedger(args.ledger)
    if args.triage_cmd == "file":
        report = ledger.file_report(
            session_id=args.session,
            reporter_role=ReporterRole(args.role),
            claim=args.claim,
            requirement_id=args.requirement,
        )
        print(f"filed {report.report_id} ({report.status.value})")
        return EXIT_OK
    if args.triage_cmd == "review":
        bundle = ledger.assemble_evidence(args.report)
        print(f"report {args.report} under review")
        print(f"session: {bundle.session_id} ({len(bundle.trace)} turns)")
        for verdict in bundle.verdicts:
            print(f"[{verdict.outcome.value}] {verdict.requirement_id}")
            print(f"    {verdict.rationale}")
        return EXIT_OK
    if args.triage_cmd == "resolve":
        report = ledger.resolve(
            report_id=args.report,
            category=ResolutionCategory(args.category),
            resolver_role=ReporterRole(args.role),
            note=args.note,
        )
        print(f"resolved {report.report_id} as {report.resolution.category.value}")
        return EXIT_OK
    summary = triage_summary(ledger)
    if args.format == "json":
        _write_output(summary.to_json(), args.out)
    else:
        phantom = "n/a" if summary.phantom_rate is None else f"{summary.phantom_rate:.4f}"
        lines = [
            f"open: {summary.open}",
            f"under review: {summary.under_review}",
            f"resolved: {summary.resolved}",
            f"phantom rate: {phantom}",
        ]
        for category, count in sorted(summary.category_counts.items()):
            lines.append(f"  {category}: {count}")
        for bucket in summary.dispute_rates_by_complexity:
            lines.append(
                f"complexity {bucket.lower:.1f}+: {bucket.disputed_sessions}/"
                f"{bucket.sessions} sessions disputed ({bucket.dispute_rate:.3f})"
            )
        _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="callcheck",
        description="Protocol-compliance checking and debriefing for call transcripts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="parse and link-check a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_compile)

    def add_check_args(p):
        p.add_argument("--spec", required=True)
        p.add_argument("--lexicon")
        p.add_argument("--backend", choices=["lexicon", "external"], default="lexicon")
        p.add_argument("--transcript", required=True)
        p.add_argument("--context")
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--out")

    p = sub.add_parser("check", help="evaluate a transcript against a spec")
    add_check_args(p)
    p.add_argument("--ledger", help="register the session in this triage ledger")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("debrief", help="render the balanced debrief report")
    add_check_args(p)
    p.set_defaults(func=cmd_debrief)

    p = sub.add_parser("simulate", help="generate synthetic sessions with ground truth")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--spec")
    p.add_argument("--lexicon")
    p.add_argument("--min-turns", type=int, default=12)
    p.add_argument("--complexity", default="0.6:2.8", help="target range LO:HI")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="summarize a session dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.add_argument("--figures", help="also render PNG figures into this directory")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("triage", help="operate the dispute ledger")
    tsub = p.add_subparsers(dest="triage_cmd", required=True)
    tp = tsub.add_parser("file", help="file an error report against a session")
    tp.add_argument("--ledger", required=True)
    tp.add_argument("--session", required=True)
    tp.add_argument("--requirement")
    tp.add_argument("--role", choices=[r.value for r in ReporterRole], required=True)
    tp.add_argument("--claim", required=True)
    tp.set_defaults(func=cmd_triage)
    tp = tsub.add_parser("review", help="assemble evidence and start review")
    tp.add_argument("--ledger", required=True)
    tp.add_argument("--report", required=True)
    tp.set_defaults(func=cmd_triage)
    tp = tsub.add_parser("resolve", help="record the QA resolution")
    tp.add_argument("--ledger", required=True)
    tp.add_argument("--report", required=True)
    tp.add_argument(
        "--category", choices=[c.value for c in ResolutionCategory], required=True
    )
    tp.add_argument("--role", choices=[r.value for r in ReporterRole], default="qa")
    tp.add_argument("--note", required=True)
    tp.set_defaults(func=cmd_triage)
    tp = tsub.add_parser("summary", help="print ledger counters and rates")
    tp.add_argument("--ledger", required=True)
    tp.add_argument("--format", choices=["text", "json"], default="text")
    tp.add_argument("--out")
    tp.set_defaults(func=cmd_triage)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (
        SpecSyntaxError,
        FormulaError,
        TemplateError,
        TraceError,
        LinkError,
        AnalyticsError,
        GenerationError,
        TriageStateError,
        TriageAuthError,
        UnknownSessionError,
        LedgerIntegrityError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    raise SystemExit(main())

import random

import pytest

from callcheck.debrief import ReportIntegrityError, generate_report, render_text
from callcheck.monitor import (
    Assessment,
    Outcome,
    Verdict,
    Witness,
    evaluate_requirement_set,
)
from callcheck.simgen import (
    PlanOutcome,
    ScenarioConfig,
    default_linked_set,
    generate_session,
    plan_all,
    random_plan,
)
from callcheck.trace import ScenarioContext
from helpers import make_trace


def _session_and_assessment(seed, plan=None, linked=None):
    linked = linked or default_linked_set()
    plan = plan or plan_all(linked.requirements, PlanOutcome.SATISFY)
    session = generate_session(ScenarioConfig(seed=seed), plan, linked)
    assessment = evaluate_requirement_set(linked, session.trace, session.context)
    return session, assessment


class TestGenerateReport:
    def test_pass_becomes_quoted_strength(self):
        linked = default_linked_set()
        session, assessment = _session_and_assessment(21, linked=linked)
        report = generate_report(assessment, session.trace, session.context)
        strengths = {s.requirement_id: s for s in report.strengths}
        entry = strengths["ask_address_early"]
        assert entry.quote
        assert entry.quote == session.trace.utterances[entry.turn].text

    def test_fail_becomes_improvement_with_window_text(self):
        linked = default_linked_set()
        plan = plan_all(
            linked.requirements,
            PlanOutcome.SATISFY,
            overrides={"verify_address_end": PlanOutcome.VIOLATE},
        )
        session, assessment = _session_and_assessment(22, plan=plan, linked=linked)
        report = generate_report(assessment, session.trace, session.context)
        improvements = {i.requirement_id: i for i in report.improvements}
        entry = improvements["verify_address_end"]
        assert entry.window_text == "the last 4 call-taker turns"
        assert entry.expected_actions == ("ask address",)

    def test_all_not_applicable(self):
        assessment = Assessment(
            session_id="s",
            verdicts=tuple(
                Verdict(
                    requirement_id=f"r{i}",
                    outcome=Outcome.NOT_APPLICABLE,
                    witnesses=(),
                    rationale="guard off",
                    description="d",
                    window_text="w",
                    expected_actions=("a",),
                )
                for i in range(3)
            ),
        )
        trace = make_trace([("ct", "hello")])
        report = generate_report(assessment, trace, ScenarioContext())
        assert report.strengths == () and report.improvements == ()
        assert report.not_applicable == ("r0", "r1", "r2")

    def test_partition_covers_every_verdict_once(self):
        rng = random.Random(88)
        linked = default_linked_set()
        for i in range(15):
            plan = random_plan(linked.requirements, rng)
            session, assessment = _session_and_assessment(300 + i, plan=plan, linked=linked)
            report = generate_report(assessment, session.trace, session.context)
            reported = (
                [s.requirement_id for s in report.strengths]
                + [imp.requirement_id for imp in report.improvements]
                + list(report.not_applicable)
            )
            assert sorted(reported) == sorted(
                v.requirement_id for v in assessment.verdicts
            )

    def test_complexity_uses_applicable_count_and_context(self):
        linked = default_linked_set()
        plan = plan_all(
            linked.requirements,
            PlanOutcome.SATISFY,
            overrides={"cpr_instructions": PlanOutcome.INAPPLICABLE},
        )
        session = generate_session(
            ScenarioConfig(seed=23, department_count=2, persona_profile_count=1),
            plan,
            linked,
        )
        assessment = evaluate_requirement_set(linked, session.trace, session.context)
        report = generate_report(assessment, session.trace, session.context)
        assert report.complexity == pytest.approx(9 / 15.6 + 2 + 1)

    def test_corrupt_witness_index_raises_integrity_error(self):
        verdict = Verdict(
            requirement_id="r",
            outcome=Outcome.PASS,
            witnesses=(Witness(role="calltaker", global_index=40, text="x"),),
            rationale="",
            description="d",
            window_text="w",
            expected_actions=("a",),
        )
        assessment = Assessment(session_id="s", verdicts=(verdict,))
        with pytest.raises(ReportIntegrityError, match="not in the trace"):
            generate_report(assessment, make_trace([("ct", "y")]), ScenarioContext())

    def test_mismatched_witness_text_raises(self):
        verdict = Verdict(
            requirement_id="r",
            outcome=Outcome.PASS,
            witnesses=(Witness(role="calltaker", global_index=0, text="not this"),),
            rationale="",
            description="d",
            window_text="w",
            expected_actions=("a",),
        )
        assessment = Assessment(session_id="s", verdicts=(verdict,))
        with pytest.raises(ReportIntegrityError, match="does not match"):
            generate_report(assessment, make_trace([("ct", "y")]), ScenarioContext())


class TestRenderText:
    def test_sections_in_order(self):
        linked = default_linked_set()
        plan = plan_all(
            linked.requirements,
            PlanOutcome.SATISFY,
            overrides={"ask_address_early": PlanOutcome.VIOLATE},
        )
        session, assessment = _session_and_assessment(24, plan=plan, linked=linked)
        text = render_text(generate_report(assessment, session.trace, session.context))
        assert text.index("Strengths") < text.index("Areas for improvement")
        assert "[ask_address_early]" in text.split("Areas for improvement")[1]

    def test_empty_report_notice(self):
        assessment = Assessment(session_id="s", verdicts=())
        report = generate_report(assessment, make_trace([("ct", "x")]), ScenarioContext())
        assert "No applicable requirements" in render_text(report)

    def test_render_is_deterministic(self):
        session, assessment = _session_and_assessment(25)
        report = generate_report(assessment, session.trace, session.context)
        assert render_text(report) == render_text(report)

    def test_balance_present_when_mixed(self):
        rng = random.Random(99)
        linked = default_linked_set()
        for i in range(10):
            plan = random_plan(linked.requirements, rng)
            session, assessment = _session_and_assessment(500 + i, plan=plan, linked=linked)
            report = generate_report(assessment, session.trace, session.context)
            if report.improvements and any(
                v.outcome is Outcome.PASS for v in assessment.verdicts
            ):
                text = render_text(report)
                strengths_block = text.split("Areas for improvement")[0]
                assert "(none this session)" not in strengths_block

    def test_quote_fidelity(self):
        rng = random.Random(101)
        linked = default_linked_set()
        for i in range(10):
            plan = random_plan(linked.requirements, rng)
            session, assessment = _session_and_assessment(700 + i, plan=plan, linked=linked)
            report = generate_report(assessment, session.trace, session.context)
            text = render_text(report)
            trace_texts = [u.text for u in session.trace]
            for line in text.splitlines():
                if '"' not in line:
                    continue
                quoted = line.split('"', 1)[1].rsplit('"', 1)[0]
                assert any(quoted in t for t in trace_texts)

import random

import pytest

from callcheck.analytics import pearson
from callcheck.monitor import Outcome, evaluate_requirement_set
from callcheck.predicate import LexiconBackend
from callcheck.simgen import (
    AGE_BANDS,
    DEFAULT_LEXICON,
    DISTRACTORS,
    EMOTIONAL_STATES,
    INCIDENT_TYPES,
    LANGUAGE_PROFICIENCY,
    POSITIVE_UTTERANCES,
    VULNERABILITY_FACTORS,
    CompliancePlan,
    GenerationError,
    Persona,
    PlanOutcome,
    ScenarioConfig,
    default_linked_set,
    generate_dataset,
    generate_session,
    persona_combination_count,
    plan_all,
    random_plan,
)
from callcheck.trace import Party, serialize_transcript


def test_catalog_sizes():
    assert len(INCIDENT_TYPES) == 57
    assert persona_combination_count() == 100


def test_persona_validation():
    with pytest.raises(GenerationError, match="age_band"):
        Persona(age_band="infant")


class TestBankHygiene:
    """Planted truth is exact only if banks and lexicon stay disjoint."""

    def test_positive_bank_matches_exactly_its_own_action(self):
        backend = LexiconBackend(DEFAULT_LEXICON)
        for action, sentences in POSITIVE_UTTERANCES.items():
            for sentence in sentences:
                for other in DEFAULT_LEXICON:
                    expected = other == action
                    assert backend.evaluate(sentence, other) is expected, (
                        f"{sentence!r} vs {other!r}"
                    )

    def test_distractors_match_nothing(self):
        backend = LexiconBackend(DEFAULT_LEXICON)
        for bank in DISTRACTORS.values():
            for sentence in bank:
                for action in DEFAULT_LEXICON:
                    assert not backend.evaluate(sentence, action)

    def test_every_action_has_positive_bank(self):
        assert set(POSITIVE_UTTERANCES) == set(DEFAULT_LEXICON)
        linked = default_linked_set()
        assert set(linked.requirements.action_labels()) <= set(DEFAULT_LEXICON)


class TestGenerateSession:
    def test_satisfy_placement_hint_honored(self):
        linked = default_linked_set()
        plan = plan_all(
            linked.requirements,
            PlanOutcome.SATISFY,
            overrides={},
        )
        plan = CompliancePlan(
            outcomes=plan.outcomes, placements={"ask_address_early": 1}
        )
        session = generate_session(ScenarioConfig(seed=61), plan, linked)
        calltakers = session.trace.project(Party.CALLTAKER)
        backend = LexiconBackend(DEFAULT_LEXICON)
        assert backend.evaluate(calltakers[1].text, "ask address")

    def test_all_violate_plan_fails_every_applicable(self):
        linked = default_linked_set()
        session = generate_session(
            ScenarioConfig(seed=62), plan_all(linked.requirements, PlanOutcome.VIOLATE), linked
        )
        assessment = evaluate_requirement_set(linked, session.trace, session.context)
        assert all(v.outcome is Outcome.FAIL for v in assessment.verdicts)

    def test_oracle_closure_on_randomized_plans(self):
        linked = default_linked_set()
        rng = random.Random(63)
        mismatches = 0
        for i in range(100):
            plan = random_plan(linked.requirements, rng)
            session = generate_session(
                ScenarioConfig(seed=6300 + i), plan, linked, validate=False
            )
            assessment = evaluate_requirement_set(linked, session.trace, session.context)
            for verdict in assessment.verdicts:
                if verdict.outcome is not session.ground_truth[verdict.requirement_id]:
                    mismatches += 1
        assert mismatches == 0

    def test_seeded_determinism_byte_identical(self):
        linked = default_linked_set()
        plan = plan_all(linked.requirements, PlanOutcome.SATISFY)
        a = generate_session(ScenarioConfig(seed=64), plan, linked)
        b = generate_session(ScenarioConfig(seed=64), plan, linked)
        assert serialize_transcript(a.trace) == serialize_transcript(b.trace)

    def test_different_seeds_differ(self):
        linked = default_linked_set()
        plan = plan_all(linked.requirements, PlanOutcome.SATISFY)
        a = generate_session(ScenarioConfig(seed=65), plan, linked)
        b = generate_session(ScenarioConfig(seed=66), plan, linked)
        assert serialize_transcript(a.trace) != serialize_transcript(b.trace)

    def test_min_turns_respected(self):
        linked = default_linked_set()
        plan = plan_all(linked.requirements, PlanOutcome.SATISFY)
        for seed in range(40):
            session = generate_session(
                ScenarioConfig(seed=seed, min_turns=12), plan, linked
            )
            assert len(session.trace) >= 12

    def test_unguarded_requirement_cannot_be_inapplicable(self):
        linked = default_linked_set()
        plan = plan_all(
            linked.requirements,
            PlanOutcome.SATISFY,
            overrides={"ask_address_early": PlanOutcome.INAPPLICABLE},
        )
        with pytest.raises(GenerationError, match="cannot be inapplicable"):
            generate_session(ScenarioConfig(seed=67), plan, linked)

    def test_plan_must_cover_requirement_set(self):
        linked = default_linked_set()
        with pytest.raises(GenerationError, match="unplanned"):
            generate_session(
                ScenarioConfig(seed=68),
                CompliancePlan(outcomes={"ask_address_early": PlanOutcome.SATISFY}),
                linked,
            )

    def test_hint_outside_window_rejected(self):
        linked = default_linked_set()
        plan = plan_all(linked.requirements, PlanOutcome.SATISFY)
        plan = CompliancePlan(outcomes=plan.outcomes, placements={"ask_address_early": 9})
        with pytest.raises(GenerationError, match="outside the window"):
            generate_session(ScenarioConfig(seed=69), plan, linked)

    def test_explicit_flags_conflicting_with_plan_rejected(self):
        linked = default_linked_set()
        plan = plan_all(linked.requirements, PlanOutcome.SATISFY)
        with pytest.raises(GenerationError, match="conflict"):
            generate_session(
                ScenarioConfig(seed=70, flags=frozenset()), plan, linked
            )

    def test_inapplicable_guard_flags_absent_from_context(self):
        linked = default_linked_set()
        plan = plan_all(
            linked.requirements,
            PlanOutcome.SATISFY,
            overrides={
                "cpr_instructions": PlanOutcome.INAPPLICABLE,
                "vehicle_description": PlanOutcome.INAPPLICABLE,
            },
        )
        session = generate_session(ScenarioConfig(seed=71), plan, linked)
        assert "patient_not_breathing" not in session.context.flags
        assert "vehicle_involved" not in session.context.flags
        assert "odor_reported" in session.context.flags

    def test_persona_changes_phrasing_not_truth(self):
        linked = default_linked_set()
        plan = plan_all(linked.requirements, PlanOutcome.SATISFY)
        base = generate_session(ScenarioConfig(seed=72), plan, linked)
        styled = generate_session(
            ScenarioConfig(
                seed=72,
                persona=Persona(
                    age_band="older_adult",
                    emotional_state="panicked",
                    language_proficiency="non_native",
                    vulnerability="cognitive_impairment",
                ),
            ),
            plan,
            linked,
        )
        assert base.ground_truth == styled.ground_truth
        assessment = evaluate_requirement_set(linked, styled.trace, styled.context)
        for verdict in assessment.verdicts:
            assert verdict.outcome is styled.ground_truth[verdict.requirement_id]


class TestGenerateDataset:
    def test_record_count_and_filter_fidelity(self):
        sims = generate_dataset(n=25, complexity_range=(0.6, 2.5), seed=80)
        assert len(sims) == 25
        assert all(s.record.turn_count >= 12 for s in sims)
        assert all(s.record.turn_count == len(s.session.trace) for s in sims)

    def test_monotone_complexity_schedule(self):
        sims = generate_dataset(n=40, complexity_range=(0.5, 3.0), seed=81)
        values = [s.record.complexity for s in sims]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_fixed_complexity_is_constant(self):
        sims = generate_dataset(n=10, complexity_range=(1.5, 1.5), seed=82)
        assert len({s.record.complexity for s in sims}) == 1

    def test_negative_score_correlation_by_construction(self):
        sims = generate_dataset(n=100, complexity_range=(0.5, 3.0), seed=83)
        records = [s.record for s in sims]
        r = pearson([r.complexity for r in records], [r.score for r in records])
        assert r < 0

    def test_same_seed_identical_dataset(self):
        a = generate_dataset(n=12, complexity_range=(0.6, 2.0), seed=84)
        b = generate_dataset(n=12, complexity_range=(0.6, 2.0), seed=84)
        assert [s.record for s in a] == [s.record for s in b]
        assert all(
            serialize_transcript(x.session.trace) == serialize_transcript(y.session.trace)
            for x, y in zip(a, b)
        )

    def test_different_seeds_differ(self):
        a = generate_dataset(n=12, complexity_range=(0.6, 2.0), seed=85)
        b = generate_dataset(n=12, complexity_range=(0.6, 2.0), seed=86)
        assert [s.record for s in a] != [s.record for s in b]

    def test_scores_match_planted_outcomes(self):
        from callcheck.formulas import Severity

        linked = default_linked_set()
        mandatory_ids = {
            r.req_id for r in linked.requirements if r.severity is Severity.MANDATORY
        }
        sims = generate_dataset(n=20, complexity_range=(0.5, 2.5), seed=87)
        for sim in sims:
            truth = sim.session.ground_truth
            applicable = [
                rid
                for rid in mandatory_ids
                if truth[rid] is not Outcome.NOT_APPLICABLE
            ]
            passes = sum(1 for rid in applicable if truth[rid] is Outcome.PASS)
            assert sim.record.score == pytest.approx(passes / len(applicable))

    def test_n_must_be_positive(self):
        with pytest.raises(GenerationError):
            generate_dataset(n=0)

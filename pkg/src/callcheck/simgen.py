"""Seeded synthetic session generator with planted ground truth.

Sessions are built so that running the monitor with the same linked
requirement set and lexicon backend reproduces the planned outcome for
every requirement exactly: satisfied rules get a positive utterance
planted inside their window, violated rules get their windows kept free
of matching text (trigger/response rules fire their trigger and withhold
the response), and inapplicable rules have their guard flags left out of
the scenario context. Filler turns come from distractor banks that match
no action pattern, so planted truth is exact under the bundled lexicon.

All randomness flows from the config seed; identical inputs produce
byte-identical traces.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from enum import Enum

from . import monitor as monitor_mod
from .analytics import ComplexityParams, SessionRecord, complexity_index
from .formulas import (
    And,
    Detect,
    Formula,
    Implies,
    Requirement,
    RequirementSet,
    Severity,
    Window,
    WindowMode,
    eval_guard,
    guard_flags,
)
from .monitor import Outcome
from .predicate import LexiconBackend, LinkedSet, link_requirements
from .templates import default_requirement_set
from .trace import Party, ScenarioContext, Speaker, Trace, Utterance


class GenerationError(ValueError):
    """The plan cannot be realized as a concrete session."""


class PlanOutcome(str, Enum):
    SATISFY = "satisfy"
    VIOLATE = "violate"
    INAPPLICABLE = "inapplicable"


_OUTCOME_MAP = {
    PlanOutcome.SATISFY: Outcome.PASS,
    PlanOutcome.VIOLATE: Outcome.FAIL,
    PlanOutcome.INAPPLICABLE: Outcome.NOT_APPLICABLE,
}


# --- scenario catalogs ------------------------------------------------------

INCIDENT_TYPES: tuple[str, ...] = (
    "cardiac arrest", "structure fire", "domestic disturbance", "traffic collision",
    "chest pain", "stroke symptoms", "choking", "drowning", "overdose",
    "allergic reaction", "gas leak", "carbon monoxide alarm", "electrical fire",
    "wildfire report", "kitchen fire", "vehicle fire", "burglary in progress",
    "armed robbery", "assault in progress", "shots fired", "missing child",
    "missing adult", "suicidal person", "mental health crisis", "welfare check",
    "unconscious person", "seizure", "diabetic emergency", "childbirth",
    "fall injury", "industrial accident", "hazardous material spill",
    "downed power line", "road hazard debris", "flooding report", "storm damage",
    "animal attack", "dog bite", "snake bite", "hiker lost", "water rescue",
    "ice rescue", "elevator entrapment", "child locked in vehicle",
    "abandoned vehicle", "suspicious package", "suspicious person", "trespassing",
    "vandalism in progress", "shoplifting detained", "noise complaint escalation",
    "bar fight", "crowd crush risk", "stadium medical", "train incident",
    "aircraft emergency", "bomb threat",
)

AGE_BANDS = ("child", "teen", "adult", "middle_aged", "older_adult")
EMOTIONAL_STATES = ("calm", "anxious", "panicked", "angry", "confused")
LANGUAGE_PROFICIENCY = ("native", "non_native")
VULNERABILITY_FACTORS = ("none", "cognitive_impairment")


@dataclass(frozen=True)
class Persona:
    """Caller profile; influences phrasing choice only, never outcomes."""

    age_band: str = "adult"
    emotional_state: str = "calm"
    language_proficiency: str = "native"
    vulnerability: str = "none"

    def __post_init__(self):
        for value, catalog, name in (
            (self.age_band, AGE_BANDS, "age_band"),
            (self.emotional_state, EMOTIONAL_STATES, "emotional_state"),
            (self.language_proficiency, LANGUAGE_PROFICIENCY, "language_proficiency"),
            (self.vulnerability, VULNERABILITY_FACTORS, "vulnerability"),
        ):
            if value not in catalog:
                raise GenerationError(f"unknown {name} {value!r}")

    def style_index(self) -> int:
        return (
            AGE_BANDS.index(self.age_band)
            + EMOTIONAL_STATES.index(self.emotional_state) * len(AGE_BANDS)
            + LANGUAGE_PROFICIENCY.index(self.language_proficiency) * 25
            + VULNERABILITY_FACTORS.index(self.vulnerability) * 50
        )


def persona_combination_count() -> int:
    return (
        len(AGE_BANDS)
        * len(EMOTIONAL_STATES)
        * len(LANGUAGE_PROFICIENCY)
        * len(VULNERABILITY_FACTORS)
    )


# --- lexicon and utterance banks -------------------------------------------

# Pattern vocabularies are kept disjoint across action labels so one
# planted utterance can never satisfy a second action by accident.
DEFAULT_LEXICON: dict[str, list[str]] = {
    "ask address": [
        "what is the address",
        "where are you located",
        "confirm the address",
    ],
    "provide full name / phone number": [
        "my full name is",
        "my phone number is",
    ],
    "provides name / phone": [
        "you can reach me at",
        "i go by the name",
    ],
    "follows up on name / phone": [
        "let me read that number back",
        "could you spell your name",
    ],
    "scene safety info obtained": [
        "is the scene safe",
        "is anyone in danger right now",
    ],
    "warn caller not to use energized equipment": [
        "do not use any electrical equipment",
        "avoid using energized equipment",
    ],
    "instruct cpr hand position": [
        "place your hands on the center of the chest",
        "put the heel of your hand on the chest",
    ],
    "instruct cpr compressions": [
        "push hard and fast",
        "begin chest compressions",
    ],
    "ask for vehicle description": [
        "what is the license plate",
        "color and make of the vehicle",
    ],
    "warn caller not to move hazard": [
        "do not try to move it",
        "leave the hazard where it is",
    ],
    "ask for patient demographics": [
        "how old is the patient",
        "age and gender of the patient",
    ],
}

POSITIVE_UTTERANCES: dict[str, tuple[str, ...]] = {
    "ask address": (
        "What is the address of your emergency?",
        "Okay, where are you located right now?",
        "I need to confirm the address you gave me.",
    ),
    "provide full name / phone number": (
        "My full name is Jordan Avery.",
        "My phone number is 555-0142.",
    ),
    "provides name / phone": (
        "You can reach me at 555-0197.",
        "I go by the name Sam Rivers.",
    ),
    "follows up on name / phone": (
        "Let me read that number back to you.",
        "Could you spell your name for me?",
    ),
    "scene safety info obtained": (
        "Is the scene safe to approach?",
        "Is anyone in danger right now?",
    ),
    "warn caller not to use energized equipment": (
        "Please do not use any electrical equipment in the building.",
        "Keep clear and avoid using energized equipment.",
    ),
    "instruct cpr hand position": (
        "Place your hands on the center of the chest.",
        "Put the heel of your hand on the chest and lock your elbows.",
    ),
    "instruct cpr compressions": (
        "Push hard and fast, about twice per second.",
        "Begin chest compressions and count out loud with me.",
    ),
    "ask for vehicle description": (
        "What is the license plate on that car?",
        "Can you tell me the color and make of the vehicle?",
    ),
    "warn caller not to move hazard": (
        "Do not try to move it yourself.",
        "Leave the hazard where it is until crews arrive.",
    ),
    "ask for patient demographics": (
        "How old is the patient?",
        "Can you tell me the age and gender of the patient?",
    ),
}

DISTRACTORS: dict[Speaker, tuple[str, ...]] = {
    Speaker.CALLTAKER: (
        "Nine one one, what is your emergency?",
        "Okay, stay on the line with me.",
        "Help is on the way to you.",
        "Take a deep breath for me.",
        "I understand, you are doing fine.",
        "Units have been dispatched already.",
        "Stay with me, you are not alone.",
        "I am updating the responders now.",
    ),
    Speaker.CALLER: (
        "Please hurry, it is getting worse.",
        "I do not know what to do.",
        "It all happened so fast.",
        "Okay, I am trying to stay calm.",
        "There are people gathering outside.",
        "I think I hear sirens now.",
        "Please send someone quickly.",
        "I am still here, waiting.",
    ),
}


def default_linked_set() -> LinkedSet:
    """Stock template catalog linked against the bundled lexicon."""
    return link_requirements(default_requirement_set(), LexiconBackend(DEFAULT_LEXICON))


# --- plans and configs ------------------------------------------------------


@dataclass(frozen=True)
class CompliancePlan:
    """Planned outcome per requirement plus optional placement hints.

    Placement hints are party-local turn indices (merged indices for
    either-party windows) and must land inside the resolved window of a
    requirement planned as satisfied.
    """

    outcomes: Mapping[str, PlanOutcome]
    placements: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioConfig:
    """Deterministic recipe for one synthetic session."""

    seed: int
    incident_type: str = "structure fire"
    persona: Persona = Persona()
    flags: frozenset[str] | None = None  # derived from the plan when None
    min_turns: int = 12
    department_count: int = 1
    persona_profile_count: int = 1
    session_id: str | None = None


@dataclass(frozen=True)
class GeneratedSession:
    session_id: str
    trace: Trace
    context: ScenarioContext
    ground_truth: dict[str, Outcome]
    plan: CompliancePlan


def plan_all(
    requirement_set: RequirementSet,
    outcome: PlanOutcome,
    overrides: Mapping[str, PlanOutcome] | None = None,
) -> CompliancePlan:
    """Plan the same outcome for every requirement (with overrides)."""
    outcomes = {req.req_id: outcome for req in requirement_set}
    if overrides:
        outcomes.update(overrides)
    return CompliancePlan(outcomes=outcomes)


def random_plan(requirement_set: RequirementSet, rng: random.Random) -> CompliancePlan:
    """Random plan: guarded rules may be inapplicable, all may violate."""
    outcomes = {}
    for req in requirement_set:
        choices = [PlanOutcome.SATISFY, PlanOutcome.VIOLATE]
        if req.guard is not None:
            choices.append(PlanOutcome.INAPPLICABLE)
        outcomes[req.req_id] = rng.choice(choices)
    return CompliancePlan(outcomes=outcomes)


# --- generation internals ---------------------------------------------------


def _solve_flags(
    requirements: Sequence[Requirement],
    plan: CompliancePlan,
    explicit: frozenset[str] | None,
) -> frozenset[str]:
    constraints: list[tuple[Requirement, bool]] = []
    for req in requirements:
        outcome = plan.outcomes[req.req_id]
        if outcome is PlanOutcome.INAPPLICABLE:
            if req.guard is None:
                raise GenerationError(
                    f"requirement {req.req_id!r} has no guard and cannot be inapplicable"
                )
            constraints.append((req, False))
        elif req.guard is not None:
            constraints.append((req, True))
    if explicit is not None:
        for req, wanted in constraints:
            if eval_guard(req.guard, explicit) != wanted:
                raise GenerationError(
                    f"explicit flags conflict with plan for requirement {req.req_id!r}"
                )
        return explicit
    universe = sorted({f for req, _ in constraints for f in guard_flags(req.guard)})
    for mask in range(2 ** len(universe)):
        flags = frozenset(f for i, f in enumerate(universe) if mask >> i & 1)
        if all(eval_guard(req.guard, flags) == wanted for req, wanted in constraints):
            return flags
    raise GenerationError("no scenario flag assignment satisfies the plan's guards")


@dataclass(frozen=True)
class _DetectTask:
    window: Window
    action: str


@dataclass(frozen=True)
class _Shape:
    kind: str  # "detect" | "multi" | "followup"
    detects: tuple[_DetectTask, ...] = ()
    trigger: _DetectTask | None = None
    response: _DetectTask | None = None
    horizon: int = 0


def _classify(req: Requirement) -> _Shape:
    formula = req.formula
    if isinstance(formula, Detect) and formula.window.mode is WindowMode.ABSOLUTE:
        return _Shape(kind="detect", detects=(_DetectTask(formula.window, formula.action),))
    if isinstance(formula, And) and all(
        isinstance(op, Detect) and op.window.mode is WindowMode.ABSOLUTE
        for op in formula.operands
    ):
        return _Shape(
            kind="multi",
            detects=tuple(_DetectTask(op.window, op.action) for op in formula.operands),
        )
    if (
        isinstance(formula, Implies)
        and isinstance(formula.response, Detect)
        and formula.trigger.window.mode is WindowMode.ABSOLUTE
        and formula.response.window.mode is WindowMode.RELATIVE
    ):
        return _Shape(
            kind="followup",
            trigger=_DetectTask(formula.trigger.window, formula.trigger.action),
            response=_DetectTask(formula.response.window, formula.response.action),
            horizon=formula.horizon,
        )
    raise GenerationError(
        f"requirement {req.req_id!r}: formula shape is not supported by the generator"
    )


class _SlotPlan:
    """Merged timeline of speaker slots being filled with text."""

    def __init__(self, calltaker_len: int, caller_len: int):
        self.speakers: list[Speaker] = []
        remaining = {Speaker.CALLTAKER: calltaker_len, Speaker.CALLER: caller_len}
        turn = Speaker.CALLTAKER
        while remaining[Speaker.CALLTAKER] or remaining[Speaker.CALLER]:
            if remaining[turn] == 0:
                turn = Speaker.CALLER if turn is Speaker.CALLTAKER else Speaker.CALLTAKER
                continue
            self.speakers.append(turn)
            remaining[turn] -= 1
            turn = Speaker.CALLER if turn is Speaker.CALLTAKER else Speaker.CALLTAKER
        self.texts: list[str | None] = [None] * len(self.speakers)

    def party_slots(self, party: Party) -> list[int]:
        return [i for i, s in enumerate(self.speakers) if party.matches(s)]

    def window_slots(self, window: Window) -> list[int]:
        slots = self.party_slots(window.party)
        lo = window.lo.resolve(len(slots))
        hi = window.hi.resolve(len(slots))
        return slots[lo:hi] if hi > lo else []

    def relative_slots(self, window: Window, trigger_slot: int) -> list[int]:
        start = trigger_slot + window.lo.offset + 1
        stop = trigger_slot + window.hi.offset + 1
        return [
            i
            for i in range(max(0, start), min(len(self.speakers), stop))
            if window.party.matches(self.speakers[i])
        ]


def _pick_text(bank: Sequence[str], rng: random.Random, persona: Persona) -> str:
    # Persona rotates which variant a given draw lands on; it never
    # changes whether the utterance matches an action.
    return bank[(rng.randrange(len(bank)) + persona.style_index()) % len(bank)]


def generate_session(
    config: ScenarioConfig,
    plan: CompliancePlan,
    linked: LinkedSet,
    validate: bool = True,
) -> GeneratedSession:
    """Realize a compliance plan as a concrete trace plus ground truth.

    With ``validate=True`` the generated session is re-checked with the
    monitor and a mismatch raises GenerationError instead of returning
    wrong ground truth.
    """
    requirements = list(linked.requirements)
    planned_ids = set(plan.outcomes)
    actual_ids = {req.req_id for req in requirements}
    if planned_ids != actual_ids:
        missing = sorted(actual_ids - planned_ids)
        extra = sorted(planned_ids - actual_ids)
        detail = []
        if missing:
            detail.append("unplanned: " + ", ".join(missing))
        if extra:
            detail.append("unknown: " + ", ".join(extra))
        raise GenerationError("plan does not cover the requirement set (" + "; ".join(detail) + ")")

    rng = random.Random(config.seed)
    flags = _solve_flags(requirements, plan, config.flags)
    shapes = {req.req_id: _classify(req) for req in requirements}
    active = [
        req
        for req in requirements
        if plan.outcomes[req.req_id] is not PlanOutcome.INAPPLICABLE
    ]

    # Size the two parties so prefix and suffix windows cannot collide.
    def party_needs(party: Party) -> int:
        prefix, suffix = 1, 0
        for req in active:
            shape = shapes[req.req_id]
            tasks = list(shape.detects)
            if shape.trigger is not None:
                tasks.append(shape.trigger)
            for task in tasks:
                if task.window.party is not party:
                    continue
                if not task.window.hi.from_end:
                    prefix = max(prefix, task.window.hi.offset)
                if task.window.lo.from_end:
                    suffix = max(suffix, task.window.lo.offset)
        return prefix + suffix

    both_need = party_needs(Party.BOTH)
    base = max(
        (config.min_turns + 1) // 2,
        party_needs(Party.CALLTAKER),
        party_needs(Party.CALLER),
        (both_need + 1) // 2,
        2,
    ) + rng.randint(0, 2)
    slots = _SlotPlan(calltaker_len=base, caller_len=base)

    # Forbidden slots per action: windows of violated rules stay clean.
    forbidden: dict[str, set[int]] = {}

    def forbid(action: str, slot_list: Sequence[int]) -> None:
        forbidden.setdefault(action, set()).update(slot_list)

    violate_followups: list[Requirement] = []
    for req in active:
        if plan.outcomes[req.req_id] is not PlanOutcome.VIOLATE:
            continue
        shape = shapes[req.req_id]
        if shape.kind in ("detect", "multi"):
            for task in shape.detects:
                forbid(task.action, slots.window_slots(task.window))
        else:
            violate_followups.append(req)

    def place(req_id: str, action: str, eligible: Sequence[int], hint: int | None) -> int:
        blocked = forbidden.get(action, set())
        open_slots = [s for s in eligible if slots.texts[s] is None and s not in blocked]
        if hint is not None:
            if hint not in eligible:
                raise GenerationError(
                    f"requirement {req_id!r}: placement hint {hint} is outside the window"
                )
            if hint not in open_slots:
                raise GenerationError(
                    f"requirement {req_id!r}: placement hint {hint} is occupied or forbidden"
                )
            chosen = hint
        else:
            if not open_slots:
                raise GenerationError(
                    f"requirement {req_id!r}: no free slot for action {action!r}"
                )
            chosen = open_slots[rng.randrange(len(open_slots))]
        slots.texts[chosen] = _pick_text(POSITIVE_UTTERANCES[action], rng, config.persona)
        return chosen

    def hint_to_slot(req_id: str, window: Window, hint: int | None) -> int | None:
        if hint is None:
            return None
        party_list = slots.party_slots(window.party)
        if not 0 <= hint < len(party_list):
            raise GenerationError(
                f"requirement {req_id!r}: placement hint {hint} is outside the trace"
            )
        return party_list[hint]

    # Violated trigger/response rules first: they plant triggers and
    # extend the forbidden zones their responses must stay out of.
    for req in violate_followups:
        shape = shapes[req.req_id]
        trigger_slots = slots.window_slots(shape.trigger.window)
        blocked = forbidden.get(shape.trigger.action, set())
        candidates = [
            s for s in trigger_slots if slots.texts[s] is None and s not in blocked
        ]
        if not candidates:
            raise GenerationError(
                f"requirement {req.req_id!r}: no free slot to plant the trigger"
            )
        trigger_slot = candidates[rng.randrange(len(candidates))]
        slots.texts[trigger_slot] = _pick_text(
            POSITIVE_UTTERANCES[shape.trigger.action], rng, config.persona
        )
        forbid(shape.response.action, slots.relative_slots(shape.response.window, trigger_slot))

    # Satisfied rules, most constrained window first.
    satisfy_tasks = [
        req for req in active if plan.outcomes[req.req_id] is PlanOutcome.SATISFY
    ]

    def constraint_key(req: Requirement) -> tuple[int, str]:
        shape = shapes[req.req_id]
        if shape.kind == "followup":
            return (len(slots.speakers), req.req_id)  # triggers are flexible; go last
        sizes = [len(slots.window_slots(t.window)) for t in shape.detects]
        return (min(sizes), req.req_id)

    for req in sorted(satisfy_tasks, key=constraint_key):
        shape = shapes[req.req_id]
        hint = plan.placements.get(req.req_id)
        if shape.kind in ("detect", "multi"):
            for position, task in enumerate(shape.detects):
                eligible = slots.window_slots(task.window)
                slot_hint = None
                if position == 0 and hint is not None:
                    # Either-party hints are merged indices already.
                    slot_hint = (
                        hint
                        if task.window.party is Party.BOTH
                        else hint_to_slot(req.req_id, task.window, hint)
                    )
                elif task.window.party is Party.BOTH:
                    # Prefer call-taker phrasing for either-party checks.
                    open_ct = [
                        s
                        for s in eligible
                        if slots.speakers[s] is Speaker.CALLTAKER
                        and slots.texts[s] is None
                        and s not in forbidden.get(task.action, set())
                    ]
                    if open_ct:
                        eligible = open_ct
                place(req.req_id, task.action, eligible, slot_hint)
        else:
            fire = hint is not None or rng.random() < 0.5
            if not fire:
                continue  # vacuous satisfaction: the trigger never occurs
            trigger_slots = slots.window_slots(shape.trigger.window)
            trigger_hint = hint_to_slot(req.req_id, shape.trigger.window, hint)
            candidates = (
                [trigger_hint]
                if trigger_hint is not None
                else [s for s in trigger_slots if slots.texts[s] is None]
            )
            rng.shuffle(candidates)
            placed = False
            for trigger_slot in candidates:
                if slots.texts[trigger_slot] is not None:
                    continue
                response_slots = [
                    s
                    for s in slots.relative_slots(shape.response.window, trigger_slot)
                    if slots.texts[s] is None
                    and s not in forbidden.get(shape.response.action, set())
                ]
                if not response_slots:
                    continue
                slots.texts[trigger_slot] = _pick_text(
                    POSITIVE_UTTERANCES[shape.trigger.action], rng, config.persona
                )
                place(req.req_id, shape.response.action, response_slots, None)
                placed = True
                break
            if not placed:
                raise GenerationError(
                    f"requirement {req.req_id!r}: cannot fire the trigger and place "
                    "a response inside the horizon"
                )

    # Fill the rest with distractors and assign timestamps.
    utterances: list[Utterance] = []
    timestamp = 0
    for index, speaker in enumerate(slots.speakers):
        text = slots.texts[index]
        if text is None:
            text = _pick_text(DISTRACTORS[speaker], rng, config.persona)
        timestamp += rng.randint(2_000, 9_000)
        utterances.append(
            Utterance(
                global_index=index, speaker=speaker, text=text, timestamp_ms=timestamp
            )
        )
    session_id = config.session_id or f"sim-{config.seed:x}"
    trace = Trace(session_id=session_id, utterances=tuple(utterances))
    context = ScenarioContext(
        flags=flags,
        incident_type=config.incident_type,
        persona_profile_count=config.persona_profile_count,
        department_count=config.department_count,
    )
    ground_truth = {
        req_id: _OUTCOME_MAP[outcome] for req_id, outcome in plan.outcomes.items()
    }

    if validate:
        assessment = monitor_mod.evaluate_requirement_set(linked, trace, context)
        for verdict in assessment.verdicts:
            if verdict.outcome is not ground_truth[verdict.requirement_id]:
                raise GenerationError(
                    f"requirement {verdict.requirement_id!r}: generated session "
                    f"evaluates to {verdict.outcome.value}, planned "
                    f"{ground_truth[verdict.requirement_id].value}"
                )
    return GeneratedSession(
        session_id=session_id,
        trace=trace,
        context=context,
        ground_truth=ground_truth,
        plan=plan,
    )


# --- dataset generation -----------------------------------------------------


@dataclass(frozen=True)
class SimulatedSession:
    session: GeneratedSession
    record: SessionRecord


def _complexity_combos(
    unguarded: int, total: int
) -> list[tuple[float, int, int, int]]:
    combos = []
    for n in range(unguarded, total + 1):
        for d in range(0, 4):
            for c in range(0, 3):
                ci = complexity_index(
                    ComplexityParams(n_requirements=n, departments=d, caller_profiles=c)
                )
                combos.append((ci, n, d, c))
    combos.sort()
    return combos


def _nearest_combo(
    combos: list[tuple[float, int, int, int]], target: float
) -> tuple[float, int, int, int]:
    best = combos[0]
    best_gap = abs(best[0] - target)
    for combo in combos[1:]:
        gap = abs(combo[0] - target)
        if gap < best_gap - 1e-12:
            best, best_gap = combo, gap
    return best


def generate_dataset(
    n: int,
    complexity_range: tuple[float, float] = (0.6, 2.8),
    seed: int = 0,
    linked: LinkedSet | None = None,
    min_turns: int = 12,
    violation_rates: tuple[float, float] = (0.05, 0.45),
    dispute_rates: tuple[float, float] = (0.02, 0.85),
    validate: bool = True,
) -> list[SimulatedSession]:
    """Generate ``n`` sessions along a monotone complexity schedule.

    Violation and dispute probabilities rise linearly across the
    schedule, so by construction score correlates negatively and dispute
    rate positively with complexity. Deterministic per seed.
    """
    if n < 1:
        raise GenerationError(f"dataset size must be >= 1, got {n}")
    lo, hi = complexity_range
    if hi < lo:
        raise GenerationError("complexity range is inverted")
    linked = linked or default_linked_set()
    requirements = list(linked.requirements)
    unguarded = [r for r in requirements if r.guard is None]
    guarded = sorted(
        (r for r in requirements if r.guard is not None), key=lambda r: r.req_id
    )
    combos = _complexity_combos(len(unguarded), len(requirements))
    master = random.Random(seed)
    sessions: list[SimulatedSession] = []
    for index in range(n):
        target = lo if n == 1 else lo + (hi - lo) * index / (n - 1)
        ramp = 0.5 if hi == lo else (target - lo) / (hi - lo)
        ci, n_req, departments, profiles = _nearest_combo(combos, target)
        rng = random.Random(master.randrange(2**63))
        activate = rng.sample(guarded, n_req - len(unguarded))
        active_ids = {r.req_id for r in unguarded} | {r.req_id for r in activate}
        p_violate = violation_rates[0] + (violation_rates[1] - violation_rates[0]) * ramp
        p_dispute = dispute_rates[0] + (dispute_rates[1] - dispute_rates[0]) * ramp
        outcomes = {}
        for req in requirements:
            if req.req_id not in active_ids:
                outcomes[req.req_id] = PlanOutcome.INAPPLICABLE
            elif rng.random() < p_violate:
                outcomes[req.req_id] = PlanOutcome.VIOLATE
            else:
                outcomes[req.req_id] = PlanOutcome.SATISFY
        plan = CompliancePlan(outcomes=outcomes)
        config = ScenarioConfig(
            seed=rng.randrange(2**63),
            incident_type=rng.choice(INCIDENT_TYPES),
            persona=Persona(
                age_band=rng.choice(AGE_BANDS),
                emotional_state=rng.choice(EMOTIONAL_STATES),
                language_proficiency=rng.choice(LANGUAGE_PROFICIENCY),
                vulnerability=rng.choice(VULNERABILITY_FACTORS),
            ),
            min_turns=min_turns,
            department_count=departments,
            persona_profile_count=profiles,
            session_id=f"sim-{seed:x}-{index:04d}",
        )
        session = generate_session(config, plan, linked, validate=validate)
        mandatory = [
            r for r in requirements
            if r.severity is Severity.MANDATORY and r.req_id in active_ids
        ]
        if not mandatory:
            raise GenerationError(
                "cannot score a session with no applicable mandatory requirements"
            )
        satisfied = sum(
            1 for r in mandatory if outcomes[r.req_id] is PlanOutcome.SATISFY
        )
        record = SessionRecord(
            session_id=session.session_id,
            complexity=ci,
            score=satisfied / len(mandatory),
            disputed=rng.random() < p_dispute,
            turn_count=len(session.trace),
        )
        sessions.append(SimulatedSession(session=session, record=record))
    return sessions

"""Catalog of the ten stock protocol-rule templates.

Each template captures one recurring call-taking check: prefix-window
checks ("in the first k turns"), a suffix re-verification, a whole-call
check, a trigger/response follow-up rule, and six context-guarded rules.
Window widths are adjustable per agency through the ``tau*`` parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .formulas import (
    And,
    Bound,
    Detect,
    END,
    FlagIs,
    Formula,
    Implies,
    Requirement,
    RequirementSet,
    Severity,
    START,
    Window,
    WindowMode,
)
from .trace import Party


class TemplateError(ValueError):
    """Unknown template id or missing/invalid parameters."""


class _Kind(Enum):
    PREFIX = "prefix"      # detect party[0, tau)
    SUFFIX = "suffix"      # detect party[T-tau, T)
    FULL = "full"          # detect party[0, T)
    FOLLOWUP = "followup"  # whenever trigger then within tau response
    MULTI_STEP = "multi"   # conjunction of per-step prefix detects


@dataclass(frozen=True)
class RuleTemplate:
    template_id: str
    description: str
    kind: _Kind
    party: Party
    severity: Severity = Severity.MANDATORY
    guard_flag: str | None = None
    tau_name: str | None = None
    default_tau: int | None = None
    # slot name -> default action label; MULTI_STEP slots are step1, step2, ...
    action_slots: tuple[tuple[str, str], ...] = ()


TEMPLATES: dict[str, RuleTemplate] = {
    t.template_id: t
    for t in (
        RuleTemplate(
            template_id="ask_address_early",
            description="Call-taker asks for the address within the opening turns.",
            kind=_Kind.PREFIX,
            party=Party.CALLTAKER,
            tau_name="tau1",
            default_tau=3,
            action_slots=(("action", "ask address"),),
        ),
        RuleTemplate(
            template_id="caller_provides_contact",
            description="Caller provides a full name or phone number.",
            kind=_Kind.FULL,
            party=Party.CALLER,
            severity=Severity.ADVISORY,
            action_slots=(("action", "provide full name / phone number"),),
        ),
        RuleTemplate(
            template_id="follow_up_contact",
            description="Call-taker follows up whenever a name or phone number is provided.",
            kind=_Kind.FOLLOWUP,
            party=Party.CALLTAKER,
            tau_name="tau2",
            default_tau=2,
            action_slots=(
                ("trigger", "provides name / phone"),
                ("response", "follows up on name / phone"),
            ),
        ),
        RuleTemplate(
            template_id="verify_address_end",
            description="Before the call ends, the call-taker verifies the address again.",
            kind=_Kind.SUFFIX,
            party=Party.CALLTAKER,
            tau_name="tau3",
            default_tau=4,
            action_slots=(("action", "ask address"),),
        ),
        RuleTemplate(
            template_id="scene_safety_info",
            description="Scene safety information is obtained.",
            kind=_Kind.PREFIX,
            party=Party.BOTH,
            guard_flag="scene_unsafe",
            tau_name="tau4",
            default_tau=6,
            action_slots=(("action", "scene safety info obtained"),),
        ),
        RuleTemplate(
            template_id="warn_energized_equipment",
            description="Caller is warned not to use energized equipment.",
            kind=_Kind.PREFIX,
            party=Party.CALLTAKER,
            guard_flag="odor_reported",
            tau_name="tau5",
            default_tau=5,
            action_slots=(("action", "warn caller not to use energized equipment"),),
        ),
        RuleTemplate(
            template_id="cpr_instructions",
            description="Call-taker provides the CPR instruction steps.",
            kind=_Kind.MULTI_STEP,
            party=Party.CALLTAKER,
            guard_flag="patient_not_breathing",
            tau_name="tau6",
            default_tau=8,
            action_slots=(
                ("step1", "instruct cpr hand position"),
                ("step2", "instruct cpr compressions"),
            ),
        ),
        RuleTemplate(
            template_id="vehicle_description",
            description="Call-taker asks for the license plate and color.",
            kind=_Kind.PREFIX,
            party=Party.CALLTAKER,
            guard_flag="vehicle_involved",
            tau_name="tau7",
            default_tau=6,
            action_slots=(("action", "ask for vehicle description"),),
        ),
        RuleTemplate(
            template_id="warn_roadway_hazard",
            description="Caller is warned not to move the hazard manually.",
            kind=_Kind.PREFIX,
            party=Party.CALLTAKER,
            guard_flag="roadway_hazard",
            tau_name="tau8",
            default_tau=5,
            action_slots=(("action", "warn caller not to move hazard"),),
        ),
        RuleTemplate(
            template_id="patient_demographics",
            description="Call-taker collects age and gender for the EMS record.",
            kind=_Kind.PREFIX,
            party=Party.CALLTAKER,
            guard_flag="patient_conscious",
            tau_name="tau9",
            default_tau=7,
            action_slots=(("action", "ask for patient demographics"),),
        ),
    )
}

TEMPLATE_IDS: tuple[str, ...] = tuple(TEMPLATES)

GUARD_FLAGS: frozenset[str] = frozenset(
    t.guard_flag for t in TEMPLATES.values() if t.guard_flag is not None
)


def _resolve_tau(template: RuleTemplate, params: dict[str, int] | None) -> int | None:
    if template.tau_name is None:
        return None
    params = params or {}
    if template.tau_name not in params:
        raise TemplateError(
            f"template {template.template_id!r} requires parameter {template.tau_name!r}"
        )
    tau = params[template.tau_name]
    if not isinstance(tau, int) or isinstance(tau, bool) or tau < 1:
        raise TemplateError(
            f"parameter {template.tau_name!r} must be an integer >= 1, got {tau!r}"
        )
    return tau


def _resolve_labels(
    template: RuleTemplate, action_labels: dict[str, str] | None
) -> dict[str, str]:
    labels = dict(template.action_slots)
    if not action_labels:
        return labels
    for slot, label in action_labels.items():
        if template.kind is _Kind.MULTI_STEP and slot.startswith("step"):
            labels[slot] = label  # extra stepN slots extend the sequence
            continue
        if slot not in labels:
            raise TemplateError(
                f"template {template.template_id!r} has no action slot {slot!r}"
            )
        labels[slot] = label
    return labels


def instantiate_template(
    template_id: str,
    params: dict[str, int] | None = None,
    action_labels: dict[str, str] | None = None,
) -> Requirement:
    """Build a Requirement from a stock template.

    ``params`` supplies the template's ``tau*`` window width; each value
    must be >= 1. ``action_labels`` overrides the default action label
    per slot (multi-step templates accept additional ``stepN`` slots).
    """
    if template_id not in TEMPLATES:
        raise TemplateError(f"unknown template id {template_id!r}")
    template = TEMPLATES[template_id]
    tau = _resolve_tau(template, params)
    labels = _resolve_labels(template, action_labels)
    guard = FlagIs(template.guard_flag) if template.guard_flag else None

    formula: Formula
    if template.kind is _Kind.PREFIX:
        window = Window(party=template.party, lo=START, hi=Bound(tau))
        formula = Detect(window=window, action=labels["action"])
    elif template.kind is _Kind.SUFFIX:
        window = Window(party=template.party, lo=Bound(tau, from_end=True), hi=END)
        formula = Detect(window=window, action=labels["action"])
    elif template.kind is _Kind.FULL:
        window = Window(party=template.party, lo=START, hi=END)
        formula = Detect(window=window, action=labels["action"])
    elif template.kind is _Kind.FOLLOWUP:
        trigger = Detect(
            window=Window(party=Party.CALLER, lo=START, hi=END),
            action=labels["trigger"],
        )
        response = Detect(
            window=Window(
                party=template.party, lo=Bound(0), hi=Bound(tau), mode=WindowMode.RELATIVE
            ),
            action=labels["response"],
        )
        formula = Implies(trigger=trigger, response=response, horizon=tau)
    elif template.kind is _Kind.MULTI_STEP:
        window = Window(party=template.party, lo=START, hi=Bound(tau))
        steps = sorted(
            (slot for slot in labels if slot.startswith("step")),
            key=lambda s: (len(s), s),
        )
        detects = tuple(Detect(window=window, action=labels[s]) for s in steps)
        formula = detects[0] if len(detects) == 1 else And(detects)
    else:  # pragma: no cover - enum is closed
        raise TemplateError(f"unhandled template kind {template.kind}")

    return Requirement(
        req_id=template.template_id,
        description=template.description,
        formula=formula,
        guard=guard,
        severity=template.severity,
    )


DEFAULT_TAUS: dict[str, int] = {
    t.tau_name: t.default_tau for t in TEMPLATES.values() if t.tau_name is not None
}


def default_requirement_set(params: dict[str, int] | None = None) -> RequirementSet:
    """All ten templates instantiated with default (or overridden) widths."""
    merged = dict(DEFAULT_TAUS)
    if params:
        merged.update(params)
    requirements = tuple(
        instantiate_template(tid, params=merged) for tid in TEMPLATE_IDS
    )
    return RequirementSet(requirements=requirements, flags=GUARD_FLAGS)

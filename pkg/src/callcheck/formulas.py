"""Temporal-logic AST for protocol requirements.

Formulas are boolean, evaluated over finite traces indexed by turns.
Windows are half-open ``[lo, hi)`` over party-local turn indices, with
``T`` denoting the end of the projected sequence. Relative windows are
anchored to a trigger position ``t`` and cover merged indices
``(t+lo, t+hi]`` (the turn after the anchor up to and including the
horizon).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .trace import Party

MAX_FORMULA_DEPTH = 8

_ID_PATTERN = re.compile(r"^[a-z][a-z0-9_]*$")


class FormulaError(ValueError):
    """Structurally invalid window, formula, or requirement."""


class WindowMode(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


class Severity(str, Enum):
    MANDATORY = "mandatory"
    ADVISORY = "advisory"


@dataclass(frozen=True)
class Bound:
    """Window endpoint: an offset from the start, or back from the end."""

    offset: int
    from_end: bool = False

    def __post_init__(self):
        if self.offset < 0:
            raise FormulaError(f"bound offset must be >= 0, got {self.offset}")

    def resolve(self, length: int) -> int:
        """Concrete index in [0, length]; end-relative bounds clamp at 0."""
        if self.from_end:
            return max(0, length - self.offset)
        return min(self.offset, length)


START = Bound(0)
END = Bound(0, from_end=True)


@dataclass(frozen=True)
class Window:
    party: Party
    lo: Bound
    hi: Bound
    mode: WindowMode = WindowMode.ABSOLUTE

    def __post_init__(self):
        if self.mode is WindowMode.RELATIVE:
            if self.lo.from_end or self.hi.from_end:
                raise FormulaError("relative windows take plain offsets, not T-relative bounds")
            if self.lo.offset > self.hi.offset:
                raise FormulaError(
                    f"relative window offsets out of order: {self.lo.offset} > {self.hi.offset}"
                )
        elif not self.lo.from_end and not self.hi.from_end:
            if self.lo.offset > self.hi.offset:
                raise FormulaError(
                    f"window bounds out of order: lo {self.lo.offset} > hi {self.hi.offset}"
                )


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Detect(Formula):
    """Atomic check: some utterance in the window exhibits the action."""

    window: Window
    action: str

    def __post_init__(self):
        if not self.action.strip():
            raise FormulaError("detect action label is empty")


@dataclass(frozen=True)
class Eventually(Formula):
    """Holds if the inner formula holds at some position in the window."""

    window: Window
    inner: Formula


@dataclass(frozen=True)
class Globally(Formula):
    """Holds if the inner formula holds at every position in the window.

    Vacuously true over an empty window.
    """

    window: Window
    inner: Formula


@dataclass(frozen=True)
class Implies(Formula):
    """Trigger/response rule: every turn matching the trigger must be
    answered by the response formula within ``horizon`` merged turns.

    The parser keeps relative windows in the response synchronized with
    the horizon; window offsets are the semantic source of truth.
    """

    trigger: Detect
    response: Formula
    horizon: int

    def __post_init__(self):
        if not isinstance(self.trigger, Detect):
            raise FormulaError("implication trigger must be an atomic detect")
        if self.horizon < 1:
            raise FormulaError(f"implication horizon must be >= 1, got {self.horizon}")


@dataclass(frozen=True)
class Not(Formula):
    inner: Formula


@dataclass(frozen=True)
class And(Formula):
    operands: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise FormulaError("conjunction needs at least 2 operands")


@dataclass(frozen=True)
class Or(Formula):
    operands: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise FormulaError("disjunction needs at least 2 operands")


def formula_depth(formula: Formula) -> int:
    if isinstance(formula, Detect):
        return 1
    if isinstance(formula, (Eventually, Globally, Not)):
        return 1 + formula_depth(formula.inner)
    if isinstance(formula, Implies):
        return 1 + max(formula_depth(formula.trigger), formula_depth(formula.response))
    if isinstance(formula, (And, Or)):
        return 1 + max(formula_depth(op) for op in formula.operands)
    raise FormulaError(f"unknown formula node {type(formula).__name__}")


def validate_depth(formula: Formula, max_depth: int = MAX_FORMULA_DEPTH) -> None:
    depth = formula_depth(formula)
    if depth > max_depth:
        raise FormulaError(f"formula nesting depth {depth} exceeds maximum {max_depth}")


def collect_actions(formula: Formula) -> set[str]:
    """All action labels referenced by atomic checks in the tree."""
    if isinstance(formula, Detect):
        return {formula.action}
    if isinstance(formula, (Eventually, Globally, Not)):
        return collect_actions(formula.inner)
    if isinstance(formula, Implies):
        return collect_actions(formula.trigger) | collect_actions(formula.response)
    if isinstance(formula, (And, Or)):
        actions: set[str] = set()
        for op in formula.operands:
            actions |= collect_actions(op)
        return actions
    raise FormulaError(f"unknown formula node {type(formula).__name__}")


# --- Guard conditions over scenario flags ---------------------------------


@dataclass(frozen=True)
class Guard:
    pass


@dataclass(frozen=True)
class FlagIs(Guard):
    name: str

    def __post_init__(self):
        if not _ID_PATTERN.match(self.name):
            raise FormulaError(f"flag {self.name!r} is not lowercase snake_case")


@dataclass(frozen=True)
class GuardNot(Guard):
    inner: Guard


@dataclass(frozen=True)
class GuardAnd(Guard):
    operands: tuple[Guard, ...]

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise FormulaError("guard conjunction needs at least 2 operands")


@dataclass(frozen=True)
class GuardOr(Guard):
    operands: tuple[Guard, ...]

    def __post_init__(self):
        object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 2:
            raise FormulaError("guard disjunction needs at least 2 operands")


def eval_guard(guard: Guard, flags: frozenset[str] | set[str]) -> bool:
    if isinstance(guard, FlagIs):
        return guard.name in flags
    if isinstance(guard, GuardNot):
        return not eval_guard(guard.inner, flags)
    if isinstance(guard, GuardAnd):
        return all(eval_guard(op, flags) for op in guard.operands)
    if isinstance(guard, GuardOr):
        return any(eval_guard(op, flags) for op in guard.operands)
    raise FormulaError(f"unknown guard node {type(guard).__name__}")


def guard_flags(guard: Guard) -> set[str]:
    if isinstance(guard, FlagIs):
        return {guard.name}
    if isinstance(guard, GuardNot):
        return guard_flags(guard.inner)
    if isinstance(guard, (GuardAnd, GuardOr)):
        names: set[str] = set()
        for op in guard.operands:
            names |= guard_flags(op)
        return names
    raise FormulaError(f"unknown guard node {type(guard).__name__}")


# --- Requirements ----------------------------------------------------------


@dataclass(frozen=True)
class Requirement:
    """One checkable protocol rule: optional scenario guard plus formula."""

    req_id: str
    description: str
    formula: Formula
    guard: Guard | None = None
    severity: Severity = Severity.MANDATORY

    def __post_init__(self):
        if not _ID_PATTERN.match(self.req_id):
            raise FormulaError(f"requirement id {self.req_id!r} is not lowercase snake_case")
        validate_depth(self.formula)


@dataclass(frozen=True)
class RequirementSet:
    """Parsed requirement catalog plus its declared scenario flags."""

    requirements: tuple[Requirement, ...]
    flags: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "requirements", tuple(self.requirements))
        object.__setattr__(self, "flags", frozenset(self.flags))
        seen: set[str] = set()
        for req in self.requirements:
            if req.req_id in seen:
                raise FormulaError(f"duplicate requirement id {req.req_id!r}")
            seen.add(req.req_id)
            if req.guard is not None:
                undeclared = guard_flags(req.guard) - self.flags
                if undeclared:
                    raise FormulaError(
                        f"requirement {req.req_id!r} guards on undeclared flags: "
                        + ", ".join(sorted(undeclared))
                    )

    def __len__(self) -> int:
        return len(self.requirements)

    def __iter__(self):
        return iter(self.requirements)

    def get(self, req_id: str) -> Requirement:
        for req in self.requirements:
            if req.req_id == req_id:
                return req
        raise KeyError(req_id)

    def action_labels(self) -> list[str]:
        labels: set[str] = set()
        for req in self.requirements:
            labels |= collect_actions(req.formula)
        return sorted(labels)

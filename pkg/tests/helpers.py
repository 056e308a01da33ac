"""Shared builders for tests: quick traces and random formula fuzzing."""
from __future__ import annotations

import random

from callcheck.formulas import (
    And,
    Bound,
    Detect,
    Eventually,
    Formula,
    Globally,
    Implies,
    Not,
    Or,
    Window,
    WindowMode,
)
from callcheck.predicate import LexiconBackend
from callcheck.trace import Party, Speaker, Trace, Utterance

SPEAKERS = {"ct": Speaker.CALLTAKER, "ca": Speaker.CALLER}


def make_trace(turns, session_id="test"):
    """Build a trace from [('ct'|'ca', text), ...] pairs."""
    utterances = tuple(
        Utterance(global_index=i, speaker=SPEAKERS[tag], text=text)
        for i, (tag, text) in enumerate(turns)
    )
    return Trace(session_id=session_id, utterances=utterances)


# --- fuzzing over a tiny two-action alphabet --------------------------------

FUZZ_ACTIONS = ("alpha", "beta")
FUZZ_TEXTS = ("alpha", "beta", "gamma gamma")
FUZZ_BACKEND = LexiconBackend({"alpha": ["alpha"], "beta": ["beta"]})


def random_trace(rng: random.Random, max_len: int = 8) -> Trace:
    n = rng.randint(0, max_len)
    return Trace(
        session_id="fuzz",
        utterances=tuple(
            Utterance(
                global_index=i,
                speaker=rng.choice((Speaker.CALLTAKER, Speaker.CALLER)),
                text=rng.choice(FUZZ_TEXTS),
            )
            for i in range(n)
        ),
    )


def random_absolute_window(rng: random.Random) -> Window:
    party = rng.choice(tuple(Party))

    def bound() -> Bound:
        if rng.random() < 0.5:
            return Bound(rng.randint(0, 9))
        return Bound(rng.randint(0, 9), from_end=True)

    lo, hi = bound(), bound()
    if not lo.from_end and not hi.from_end and lo.offset > hi.offset:
        lo, hi = hi, lo
    return Window(party=party, lo=lo, hi=hi)


def random_relative_window(rng: random.Random) -> Window:
    lo = rng.randint(0, 2)
    return Window(
        party=rng.choice(tuple(Party)),
        lo=Bound(lo),
        hi=Bound(lo + rng.randint(0, 3)),
        mode=WindowMode.RELATIVE,
    )


def random_window(rng: random.Random, allow_relative: bool) -> Window:
    if allow_relative and rng.random() < 0.4:
        return random_relative_window(rng)
    return random_absolute_window(rng)


def random_formula(
    rng: random.Random, depth: int, allow_relative: bool = False
) -> Formula:
    """Random well-formed formula of at most ``depth`` nesting levels.

    Relative windows only appear where an anchor is guaranteed to exist:
    under a temporal operator or inside an implication response.
    """
    if depth <= 1:
        return Detect(
            window=random_window(rng, allow_relative), action=rng.choice(FUZZ_ACTIONS)
        )
    kind = rng.choice(
        ("detect", "eventually", "globally", "implies", "not", "and", "or")
    )
    if kind == "detect":
        return Detect(
            window=random_window(rng, allow_relative), action=rng.choice(FUZZ_ACTIONS)
        )
    if kind == "eventually":
        return Eventually(
            window=random_window(rng, allow_relative),
            inner=random_formula(rng, depth - 1, allow_relative=True),
        )
    if kind == "globally":
        return Globally(
            window=random_window(rng, allow_relative),
            inner=random_formula(rng, depth - 1, allow_relative=True),
        )
    if kind == "implies":
        trigger = Detect(
            window=random_absolute_window(rng), action=rng.choice(FUZZ_ACTIONS)
        )
        return Implies(
            trigger=trigger,
            response=random_formula(rng, depth - 1, allow_relative=True),
            horizon=rng.randint(1, 3),
        )
    if kind == "not":
        return Not(random_formula(rng, depth - 1, allow_relative))
    operands = tuple(
        random_formula(rng, depth - 1, allow_relative) for _ in range(rng.randint(2, 3))
    )
    return And(operands) if kind == "and" else Or(operands)

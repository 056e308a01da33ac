"""Textual protocol-specification language.

Grammar sketch (full EBNF in docs/spec-language.md):

    document    = [ "flags" ":" id { "," id } ] { requirement } ;
    requirement = "req" id "{" { statement } formula [ ";" ] "}" ;
    statement   = "desc" string ";" | "severity" ("mandatory"|"advisory") ";"
                | "when" guard ";" ;
    formula     = conjunctions joined by "and" / "or", "not", parentheses,
                  and the atoms:
                    detect  party "[" bound "," bound "]" string
                    detect  party string            (relative; responses only)
                    eventually party window formula
                    globally   party window formula
                    whenever  <detect> then within int formula
    bound       = int | "T" [ "-" int ] ;

Windows are half-open ``[lo, hi)`` over party-local turns; ``T`` is the
end of the projected sequence. ``#`` starts a line comment.
"""
from __future__ import annotations

from dataclasses import dataclass

from .formulas import (
    MAX_FORMULA_DEPTH,
    And,
    Bound,
    Detect,
    Eventually,
    FlagIs,
    Formula,
    FormulaError,
    Globally,
    Guard,
    GuardAnd,
    GuardNot,
    GuardOr,
    Implies,
    Not,
    Or,
    Requirement,
    RequirementSet,
    Severity,
    Window,
    WindowMode,
    formula_depth,
    guard_flags,
)
from .trace import Party


class SpecSyntaxError(ValueError):
    """Positioned parse or validation error in a spec document."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


KEYWORDS = {
    "req", "flags", "desc", "severity", "mandatory", "advisory", "when",
    "detect", "eventually", "globally", "whenever", "then", "within",
    "not", "and", "or", "calltaker", "caller", "both",
}

_PUNCT = {"{", "}", "[", "]", "(", ")", ",", ";", ":", "-"}


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "keyword", "int", "string", "punct", "T", "eof"
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] == "\n":
                raise SpecSyntaxError("unterminated string", start_line, start_col)
            value = text[i + 1 : j]
            tokens.append(Token("string", value, start_line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch == "T":
            tokens.append(Token("T", "T", line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "keyword" if word in KEYWORDS else "id"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise SpecSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> SpecSyntaxError:
        tok = tok or self.peek()
        return SpecSyntaxError(message, tok.line, tok.col)

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            got = tok.value if tok.value else tok.kind
            raise self.error(f"expected {want!r}, got {got!r}")
        return self.advance()

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.value in words

    def at_punct(self, ch: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.value == ch

    # --- document ---------------------------------------------------------

    def parse_document(self) -> RequirementSet:
        flags: list[str] = []
        if self.at_keyword("flags"):
            self.advance()
            self.expect("punct", ":")
            flags.append(self.expect("id").value)
            while self.at_punct(","):
                self.advance()
                flags.append(self.expect("id").value)
        declared = frozenset(flags)
        if len(flags) != len(declared):
            raise self.error("duplicate flag declaration")
        requirements: list[Requirement] = []
        seen_ids: set[str] = set()
        while not self.peek().kind == "eof":
            req = self.parse_requirement(declared)
            if req.req_id in seen_ids:
                raise self.error(f"duplicate requirement id {req.req_id!r}")
            seen_ids.add(req.req_id)
            requirements.append(req)
        try:
            return RequirementSet(requirements=tuple(requirements), flags=declared)
        except FormulaError as exc:
            raise self.error(str(exc)) from exc

    def parse_requirement(self, declared: frozenset[str]) -> Requirement:
        self.expect("keyword", "req")
        id_tok = self.expect("id")
        self.expect("punct", "{")
        description = id_tok.value
        severity = Severity.MANDATORY
        guard: Guard | None = None
        while self.at_keyword("desc", "severity", "when"):
            word = self.advance().value
            if word == "desc":
                description = self.expect("string").value
            elif word == "severity":
                tok = self.peek()
                if self.at_keyword("mandatory"):
                    severity = Severity.MANDATORY
                elif self.at_keyword("advisory"):
                    severity = Severity.ADVISORY
                else:
                    raise self.error("expected 'mandatory' or 'advisory'", tok)
                self.advance()
            else:
                guard_tok = self.peek()
                guard = self.parse_guard()
                undeclared = guard_flags(guard) - declared
                if undeclared:
                    raise SpecSyntaxError(
                        "undeclared flag(s) in guard: " + ", ".join(sorted(undeclared)),
                        guard_tok.line,
                        guard_tok.col,
                    )
            self.expect("punct", ";")
        formula_tok = self.peek()
        formula = self.parse_formula(horizon=None)
        if self.at_punct(";"):
            self.advance()
        self.expect("punct", "}")
        depth = formula_depth(formula)
        if depth > MAX_FORMULA_DEPTH:
            raise SpecSyntaxError(
                f"formula nesting depth {depth} exceeds maximum {MAX_FORMULA_DEPTH}",
                formula_tok.line,
                formula_tok.col,
            )
        try:
            return Requirement(
                req_id=id_tok.value,
                description=description,
                formula=formula,
                guard=guard,
                severity=severity,
            )
        except FormulaError as exc:
            raise SpecSyntaxError(str(exc), id_tok.line, id_tok.col) from exc

    # --- guards -----------------------------------------------------------

    def parse_guard(self) -> Guard:
        return self.parse_guard_or()

    def parse_guard_or(self) -> Guard:
        operands = [self.parse_guard_and()]
        while self.at_keyword("or"):
            self.advance()
            operands.append(self.parse_guard_and())
        return operands[0] if len(operands) == 1 else GuardOr(tuple(operands))

    def parse_guard_and(self) -> Guard:
        operands = [self.parse_guard_not()]
        while self.at_keyword("and"):
            self.advance()
            operands.append(self.parse_guard_not())
        return operands[0] if len(operands) == 1 else GuardAnd(tuple(operands))

    def parse_guard_not(self) -> Guard:
        if self.at_keyword("not"):
            self.advance()
            return GuardNot(self.parse_guard_not())
        if self.at_punct("("):
            self.advance()
            inner = self.parse_guard()
            self.expect("punct", ")")
            return inner
        tok = self.expect("id")
        try:
            return FlagIs(tok.value)
        except FormulaError as exc:
            raise SpecSyntaxError(str(exc), tok.line, tok.col) from exc

    # --- formulas ---------------------------------------------------------
    # `horizon` is the enclosing `within k`; None outside a response.

    def parse_formula(self, horizon: int | None) -> Formula:
        operands = [self.parse_and(horizon)]
        while self.at_keyword("or"):
            self.advance()
            operands.append(self.parse_and(horizon))
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def parse_and(self, horizon: int | None) -> Formula:
        operands = [self.parse_not(horizon)]
        while self.at_keyword("and"):
            self.advance()
            operands.append(self.parse_not(horizon))
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def parse_not(self, horizon: int | None) -> Formula:
        if self.at_keyword("not"):
            self.advance()
            return Not(self.parse_not(horizon))
        return self.parse_atom(horizon)

    def parse_atom(self, horizon: int | None) -> Formula:
        if self.at_punct("("):
            self.advance()
            inner = self.parse_formula(horizon)
            self.expect("punct", ")")
            return inner
        if self.at_keyword("detect"):
            return self.parse_detect(horizon)
        if self.at_keyword("eventually"):
            self.advance()
            window = self.parse_window()
            inner = self.parse_not(horizon)
            return Eventually(window=window, inner=inner)
        if self.at_keyword("globally"):
            self.advance()
            window = self.parse_window()
            inner = self.parse_not(horizon)
            return Globally(window=window, inner=inner)
        if self.at_keyword("whenever"):
            self.advance()
            trigger_tok = self.peek()
            if not self.at_keyword("detect"):
                raise self.error("expected 'detect' after 'whenever'")
            trigger = self.parse_detect(horizon=None)
            if trigger.window.mode is not WindowMode.ABSOLUTE:
                raise self.error("trigger detect needs an explicit window", trigger_tok)
            self.expect("keyword", "then")
            self.expect("keyword", "within")
            h_tok = self.expect("int")
            h = int(h_tok.value)
            if h < 1:
                raise SpecSyntaxError("'within' horizon must be >= 1", h_tok.line, h_tok.col)
            response = self.parse_not(horizon=h)
            return Implies(trigger=trigger, response=response, horizon=h)
        raise self.error("expected a formula")

    def parse_detect(self, horizon: int | None) -> Detect:
        self.expect("keyword", "detect")
        party_tok = self.peek()
        party = self.parse_party()
        if self.at_punct("["):
            window = self.parse_window_body(party, party_tok)
        else:
            if horizon is None:
                raise SpecSyntaxError(
                    "detect without a window is only allowed inside a 'whenever ... then' response",
                    party_tok.line,
                    party_tok.col,
                )
            window = Window(
                party=party, lo=Bound(0), hi=Bound(horizon), mode=WindowMode.RELATIVE
            )
        action = self.expect("string")
        try:
            return Detect(window=window, action=action.value)
        except FormulaError as exc:
            raise SpecSyntaxError(str(exc), action.line, action.col) from exc

    def parse_party(self) -> Party:
        tok = self.peek()
        if self.at_keyword("calltaker", "caller", "both"):
            self.advance()
            return Party(tok.value)
        raise self.error("expected party ('calltaker', 'caller' or 'both')")

    def parse_window(self) -> Window:
        party_tok = self.peek()
        party = self.parse_party()
        return self.parse_window_body(party, party_tok)

    def parse_window_body(self, party: Party, party_tok: Token) -> Window:
        self.expect("punct", "[")
        lo = self.parse_bound()
        self.expect("punct", ",")
        hi = self.parse_bound()
        close = self.expect("punct", "]")
        try:
            return Window(party=party, lo=lo, hi=hi)
        except FormulaError as exc:
            raise SpecSyntaxError(str(exc), party_tok.line, party_tok.col) from exc

    def parse_bound(self) -> Bound:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return Bound(int(tok.value))
        if tok.kind == "T":
            self.advance()
            if self.at_punct("-"):
                self.advance()
                k = self.expect("int")
                return Bound(int(k.value), from_end=True)
            return Bound(0, from_end=True)
        raise self.error("expected a window bound (integer, 'T', or 'T-k')")


def parse_spec(text: bytes | str) -> RequirementSet:
    """Parse a spec document; raises SpecSyntaxError with line/column."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SpecSyntaxError(f"not valid UTF-8: {exc}", 1, 1) from exc
    parser = _Parser(_tokenize(text))
    return parser.parse_document()


# --- serialization ----------------------------------------------------------


def bound_to_source(bound: Bound) -> str:
    if bound.from_end:
        return "T" if bound.offset == 0 else f"T-{bound.offset}"
    return str(bound.offset)


def window_to_source(window: Window) -> str:
    return (
        f"{window.party.value}[{bound_to_source(window.lo)},{bound_to_source(window.hi)}]"
    )


def guard_to_source(guard: Guard) -> str:
    if isinstance(guard, FlagIs):
        return guard.name
    if isinstance(guard, GuardNot):
        inner = guard_to_source(guard.inner)
        if isinstance(guard.inner, (GuardAnd, GuardOr)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(guard, (GuardAnd, GuardOr)):
        joiner = " and " if isinstance(guard, GuardAnd) else " or "
        parts = []
        for op in guard.operands:
            src = guard_to_source(op)
            if isinstance(op, (GuardAnd, GuardOr)):
                src = f"({src})"
            parts.append(src)
        return joiner.join(parts)
    raise FormulaError(f"unknown guard node {type(guard).__name__}")


def _atomized(formula: Formula) -> str:
    """Source for a formula in a unary slot; compounds get parentheses."""
    src = formula_to_source(formula)
    if isinstance(formula, (And, Or)):
        return f"({src})"
    return src


def formula_to_source(formula: Formula) -> str:
    if isinstance(formula, Detect):
        if formula.window.mode is WindowMode.RELATIVE:
            return f'detect {formula.window.party.value} "{formula.action}"'
        return f'detect {window_to_source(formula.window)} "{formula.action}"'
    if isinstance(formula, Eventually):
        return f"eventually {window_to_source(formula.window)} {_atomized(formula.inner)}"
    if isinstance(formula, Globally):
        return f"globally {window_to_source(formula.window)} {_atomized(formula.inner)}"
    if isinstance(formula, Implies):
        return (
            f"whenever {formula_to_source(formula.trigger)} "
            f"then within {formula.horizon} {_atomized(formula.response)}"
        )
    if isinstance(formula, Not):
        return f"not {_atomized(formula.inner)}"
    if isinstance(formula, And):
        parts = []
        for op in formula.operands:
            src = formula_to_source(op)
            if isinstance(op, (And, Or)):
                src = f"({src})"
            parts.append(src)
        return " and ".join(parts)
    if isinstance(formula, Or):
        parts = []
        for op in formula.operands:
            src = formula_to_source(op)
            if isinstance(op, Or):
                src = f"({src})"
            parts.append(src)
        return " or ".join(parts)
    raise FormulaError(f"unknown formula node {type(formula).__name__}")


def serialize_spec(requirement_set: RequirementSet) -> str:
    """Render a RequirementSet to spec source; parse_spec round-trips it."""
    lines: list[str] = []
    if requirement_set.flags:
        lines.append("flags: " + ", ".join(sorted(requirement_set.flags)))
        lines.append("")
    for req in requirement_set.requirements:
        lines.append(f"req {req.req_id} {{")
        if req.description != req.req_id:
            lines.append(f'  desc "{req.description}";')
        if req.severity is not Severity.MANDATORY:
            lines.append(f"  severity {req.severity.value};")
        if req.guard is not None:
            lines.append(f"  when {guard_to_source(req.guard)};")
        lines.append(f"  {formula_to_source(req.formula)};")
        lines.append("}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + ("\n" if lines else "")

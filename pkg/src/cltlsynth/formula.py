"""Concrete syntax, AST and static validation for CLTL / prompt-CLTL game specs.

Spec files are block structured::

    domain: dense;          # or Z
    mode: general;          # or single-sided
    env { blind u, v; ahead x; }
    sys { ahead y; }
    spec: G (y < X^1 y);

Formulas use ``! && || -> X U F G FP``, atoms ``t1 (<|<=|=|!=|>|>=) t2`` with
terms ``X^i v`` / ``X v`` (= ``X^1 v``) / ``v``.  Precedence, tightest first:
unary, U, &&, ||, ->.  ``#`` starts a line comment.  Comparison sugar and
``->`` are desugared at parse time; ``F``/``G``/``&&`` stay as AST nodes and
are desugared on demand by :func:`desugar_core`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    MixedAtomError,
    OwnershipError,
    SpecSyntaxError,
    UnknownVariable,
    ValidationError,
)


class Domain(Enum):
    IntZ = "Z"
    Dense = "dense"


class Mode(Enum):
    General = "general"
    SingleSided = "single-sided"


class Rel(Enum):
    Lt = "<"
    Eq = "="


@dataclass(frozen=True)
class Term:
    """A look-ahead term X^depth var; depth 0 is also used for blind variables."""

    depth: int
    var: str

    def __str__(self):
        return self.var if self.depth == 0 else f"X^{self.depth} {self.var}"


class Formula:
    """Base class for formula nodes; all nodes are frozen and hashable."""

    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    rel: Rel
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class Or(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class And(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Next(Formula):
    sub: Formula


@dataclass(frozen=True)
class Until(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Finally(Formula):
    sub: Formula


@dataclass(frozen=True)
class Globally(Formula):
    sub: Formula


@dataclass(frozen=True)
class PromptFinally(Formula):
    sub: Formula


TRUE = TrueF()
FALSE = FalseF()


def lt(a: Term, b: Term) -> Formula:
    return Atom(Rel.Lt, a, b)


def eq(a: Term, b: Term) -> Formula:
    return Atom(Rel.Eq, a, b)


def big_or(parts) -> Formula:
    """Right-nested disjunction; empty input is false."""
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def big_and(parts) -> Formula:
    """Right-nested conjunction; empty input is true."""
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


@dataclass(frozen=True)
class GameSpec:
    domain: Domain
    mode: Mode
    env_blind: tuple[str, ...]
    env_ahead: tuple[str, ...]
    sys_blind: tuple[str, ...]
    sys_ahead: tuple[str, ...]
    winning_condition: Formula
    prompt: bool = False

    @property
    def lookahead_vars(self) -> tuple[str, ...]:
        return self.env_ahead + self.sys_ahead

    @property
    def blind_vars(self) -> tuple[str, ...]:
        return self.env_blind + self.sys_blind

    @property
    def all_vars(self) -> tuple[str, ...]:
        return self.env_blind + self.env_ahead + self.sys_blind + self.sys_ahead


# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<op><=|>=|!=|->|&&|\|\||[<>=!(){};:,^])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(-sided)?)
  | (?P<num>[0-9]+)
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "domain", "mode", "env", "sys", "spec", "blind", "ahead",
    "X", "U", "F", "G", "FP", "true", "false",
}


@dataclass
class _Tok:
    kind: str  # 'op' | 'ident' | 'num' | 'kw' | 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, linestart = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SpecSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - linestart + 1
            )
        if m.lastgroup == "ws":
            chunk = m.group()
            line += chunk.count("\n")
            if "\n" in chunk:
                linestart = m.start() + chunk.rindex("\n") + 1
        else:
            kind = m.lastgroup
            word = m.group()
            if kind == "ident" and word in _KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, word, line, pos - linestart + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - linestart + 1))
    return toks


# --------------------------------------------------------------------------
# parser

_CMP_OPS = {"<", "<=", "=", "!=", ">", ">="}


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, message, expected=()):
        t = self.peek()
        raise SpecSyntaxError(message, t.line, t.col, expected)

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text!r}", (text,))
        return self.next()

    def accept(self, text: str) -> bool:
        if self.peek().text == text:
            self.next()
            return True
        return False

    # ---- spec structure

    def parse_spec(self) -> dict:
        out = {
            "domain": None, "mode": None,
            "env": {"blind": [], "ahead": []},
            "sys": {"blind": [], "ahead": []},
            "formula": None,
        }
        while True:
            t = self.peek()
            if t.text == "domain":
                self.next()
                self.expect(":")
                v = self.next()
                if v.text == "Z":
                    out["domain"] = Domain.IntZ
                elif v.text == "dense":
                    out["domain"] = Domain.Dense
                else:
                    self.error("expected 'Z' or 'dense'", ("Z", "dense"))
                self.expect(";")
            elif t.text == "mode":
                self.next()
                self.expect(":")
                v = self.next()
                if v.text == "general":
                    out["mode"] = Mode.General
                elif v.text == "single-sided":
                    out["mode"] = Mode.SingleSided
                else:
                    self.error("expected 'general' or 'single-sided'",
                               ("general", "single-sided"))
                self.expect(";")
            elif t.text in ("env", "sys"):
                side = self.next().text
                self.expect("{")
                while not self.accept("}"):
                    kind = self.next()
                    if kind.text not in ("blind", "ahead"):
                        self.error("expected 'blind' or 'ahead'", ("blind", "ahead"))
                    names = [self.ident()]
                    while self.accept(","):
                        names.append(self.ident())
                    self.expect(";")
                    out[side][kind.text].extend(names)
            elif t.text == "spec":
                self.next()
                self.expect(":")
                out["formula"] = self.parse_formula()
                self.expect(";")
                break
            else:
                self.error("expected a declaration or 'spec:'",
                           ("domain", "mode", "env", "sys", "spec"))
        if self.peek().kind != "eof":
            self.error("trailing input after the spec formula")
        if out["formula"] is None:
            self.error("missing 'spec:' section")
        return out

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            self.error(f"expected an identifier, found {t.text!r}", ("identifier",))
        return self.next().text

    # ---- formulas (precedence: unary > U > && > || > ->)

    def parse_formula(self) -> Formula:
        lhs = self.parse_or()
        if self.accept("->"):
            rhs = self.parse_formula()
            return Or(Not(lhs), rhs)
        return lhs

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while self.accept("||"):
            f = Or(f, self.parse_and())
        return f

    def parse_and(self) -> Formula:
        f = self.parse_until()
        while self.accept("&&"):
            f = And(f, self.parse_until())
        return f

    def parse_until(self) -> Formula:
        f = self.parse_unary()
        if self.accept("U"):
            return Until(f, self.parse_until())
        return f

    def parse_unary(self) -> Formula:
        t = self.peek()
        if t.text == "!":
            self.next()
            return Not(self.parse_unary())
        if t.text == "F":
            self.next()
            return Finally(self.parse_unary())
        if t.text == "G":
            self.next()
            return Globally(self.parse_unary())
        if t.text == "FP":
            self.next()
            return PromptFinally(self.parse_unary())
        if t.text == "true":
            self.next()
            return TRUE
        if t.text == "false":
            self.next()
            return FALSE
        if t.text == "X":
            # 'X^i v <op> ...' is an atom, anything else is the Next operator
            save = self.i
            term = self.try_term()
            if term is not None and self.peek().text in _CMP_OPS:
                return self.parse_atom_tail(term)
            self.i = save
            self.next()
            return Next(self.parse_unary())
        if t.text == "(":
            self.next()
            f = self.parse_formula()
            self.expect(")")
            return f
        if t.kind == "ident":
            term = self.try_term()
            if term is None or self.peek().text not in _CMP_OPS:
                self.error("expected a comparison after the term", tuple(_CMP_OPS))
            return self.parse_atom_tail(term)
        self.error(f"expected a formula, found {t.text!r}")

    def try_term(self) -> Term | None:
        t = self.peek()
        if t.kind == "ident":
            self.next()
            return Term(0, t.text)
        if t.text == "X":
            self.next()
            depth = 1
            if self.accept("^"):
                n = self.peek()
                if n.kind != "num":
                    self.error("expected a number after '^'", ("number",))
                depth = int(self.next().text)
            v = self.peek()
            if v.kind != "ident":
                return None
            self.next()
            return Term(depth, v.text)
        return None

    def parse_atom_tail(self, lhs: Term) -> Formula:
        op = self.next().text
        rhs = self.try_term()
        if rhs is None:
            self.error("expected a term on the right of the comparison", ("term",))
        if op == "<":
            return Atom(Rel.Lt, lhs, rhs)
        if op == "=":
            return Atom(Rel.Eq, lhs, rhs)
        if op == ">":
            return Atom(Rel.Lt, rhs, lhs)
        if op == "<=":
            return Or(Atom(Rel.Lt, lhs, rhs), Atom(Rel.Eq, lhs, rhs))
        if op == ">=":
            return Or(Atom(Rel.Lt, rhs, lhs), Atom(Rel.Eq, lhs, rhs))
        if op == "!=":
            return Not(Atom(Rel.Eq, lhs, rhs))
        raise AssertionError(op)


def parse_formula_text(text: str) -> Formula:
    """Parse a bare formula (no spec blocks); useful for tests and builders."""
    p = _Parser(_tokenize(text))
    f = p.parse_formula()
    if p.peek().kind != "eof":
        p.error("trailing input after the formula")
    return f


def parse(text: str, prompt: bool = False) -> GameSpec:
    """Parse and validate a full spec file; raises on any static violation."""
    p = _Parser(_tokenize(text))
    raw = p.parse_spec()
    if raw["domain"] is None:
        raise ValidationError("spec does not declare a domain")
    if raw["mode"] is None:
        raise ValidationError("spec does not declare a mode")
    spec = GameSpec(
        domain=raw["domain"],
        mode=raw["mode"],
        env_blind=tuple(raw["env"]["blind"]),
        env_ahead=tuple(raw["env"]["ahead"]),
        sys_blind=tuple(raw["sys"]["blind"]),
        sys_ahead=tuple(raw["sys"]["ahead"]),
        winning_condition=raw["formula"],
        prompt=prompt,
    )
    validate(spec)
    return spec


def validate(spec: GameSpec) -> None:
    names = list(spec.all_vars)
    if len(set(names)) != len(names):
        raise ValidationError("variable sets are not pairwise disjoint")
    if not names:
        raise ValidationError("the spec declares no variables")
    if spec.mode is Mode.SingleSided:
        if spec.env_ahead:
            raise OwnershipError(
                "single-sided mode forbids environment look-ahead variables")
        if spec.domain is not Domain.IntZ:
            raise ValidationError("single-sided mode is only supported over Z")
    if spec.domain is Domain.Dense and spec.blind_vars:
        raise ValidationError(
            "dense mode rejects future-blind variables; "
            "compare at the same position with depth-0 look-ahead terms")
    lookahead = set(spec.lookahead_vars)
    blind = set(spec.blind_vars)
    _validate_formula(spec.winning_condition, lookahead, blind, spec.prompt)


def _validate_formula(f: Formula, lookahead: set, blind: set, prompt: bool) -> None:
    match f:
        case Atom(_, a, b):
            for t in (a, b):
                if t.var not in lookahead and t.var not in blind:
                    raise UnknownVariable(f"unknown variable {t.var!r}")
                if t.depth > 0 and t.var in blind:
                    raise OwnershipError(
                        f"look-ahead term X^{t.depth} {t.var} names a blind variable")
            kinds = {("a" if t.var in lookahead else "b") for t in (a, b)}
            if kinds == {"a", "b"}:
                raise MixedAtomError(
                    f"atom mixes look-ahead and blind terms: {a} vs {b}")
        case Not(s) | Next(s) | Finally(s) | Globally(s):
            _validate_formula(s, lookahead, blind, prompt)
        case PromptFinally(s):
            if not prompt:
                raise ValidationError(
                    "FP occurs but the spec is not flagged prompt")
            _validate_formula(s, lookahead, blind, prompt)
        case Or(a, b) | And(a, b) | Until(a, b):
            _validate_formula(a, lookahead, blind, prompt)
            _validate_formula(b, lookahead, blind, prompt)
        case TrueF() | FalseF():
            pass
        case _:
            raise AssertionError(f"unknown node {f!r}")


# --------------------------------------------------------------------------
# pretty printer (canonical: single spaces, explicit X^i, minimal parens)

_PREC = {"->": 0, "||": 1, "&&": 2, "U": 3, "unary": 4}


def pretty(f: Formula) -> str:
    return _pp(f, 0)


def _pp(f: Formula, ctx: int) -> str:
    match f:
        case TrueF():
            return "true"
        case FalseF():
            return "false"
        case Atom(rel, a, b):
            return f"{a} {rel.value} {b}"
        case Not(s):
            return f"!{_pp(s, _PREC['unary'])}"
        case Next(s):
            return f"X {_pp(s, _PREC['unary'])}"
        case Finally(s):
            return f"F {_pp(s, _PREC['unary'])}"
        case Globally(s):
            return f"G {_pp(s, _PREC['unary'])}"
        case PromptFinally(s):
            return f"FP {_pp(s, _PREC['unary'])}"
        case Until(a, b):
            s = f"{_pp(a, _PREC['U'] + 1)} U {_pp(b, _PREC['U'])}"
            return f"({s})" if ctx > _PREC["U"] else s
        case And(a, b):
            s = f"{_pp(a, _PREC['&&'] + 1)} && {_pp(b, _PREC['&&'])}"
            return f"({s})" if ctx > _PREC["&&"] else s
        case Or(a, b):
            s = f"{_pp(a, _PREC['||'] + 1)} || {_pp(b, _PREC['||'])}"
            return f"({s})" if ctx > _PREC["||"] else s
    raise AssertionError(f)


def pretty_spec(spec: GameSpec) -> str:
    lines = [f"domain: {spec.domain.value};", f"mode: {spec.mode.value};"]
    for side, bl, ah in (("env", spec.env_blind, spec.env_ahead),
                         ("sys", spec.sys_blind, spec.sys_ahead)):
        if bl or ah:
            decls = []
            if bl:
                decls.append(f"blind {', '.join(bl)};")
            if ah:
                decls.append(f"ahead {', '.join(ah)};")
            lines.append(f"{side} {{ {' '.join(decls)} }}")
    lines.append(f"spec: {pretty(spec.winning_condition)};")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# structural operations

def x_length(f: Formula) -> int:
    """Maximum term depth occurring in f (Next does not add to term depth)."""
    match f:
        case Atom(_, a, b):
            return max(a.depth, b.depth)
        case Not(s) | Next(s) | Finally(s) | Globally(s) | PromptFinally(s):
            return x_length(s)
        case Or(a, b) | And(a, b) | Until(a, b):
            return max(x_length(a), x_length(b))
        case _:
            return 0


def terms(f: Formula):
    """All Term nodes of f, in syntactic order."""
    match f:
        case Atom(_, a, b):
            yield a
            yield b
        case Not(s) | Next(s) | Finally(s) | Globally(s) | PromptFinally(s):
            yield from terms(s)
        case Or(a, b) | And(a, b) | Until(a, b):
            yield from terms(a)
            yield from terms(b)


def desugar_core(f: Formula) -> Formula:
    """Rewrite into the core grammar {atom, true, !, ||, X, U}."""
    match f:
        case TrueF() | FalseF() | Atom():
            return f
        case Not(s):
            return Not(desugar_core(s))
        case Or(a, b):
            return Or(desugar_core(a), desugar_core(b))
        case And(a, b):
            return Not(Or(Not(desugar_core(a)), Not(desugar_core(b))))
        case Next(s):
            return Next(desugar_core(s))
        case Until(a, b):
            return Until(desugar_core(a), desugar_core(b))
        case Finally(s):
            return Until(TRUE, desugar_core(s))
        case Globally(s):
            return Not(Until(TRUE, Not(desugar_core(s))))
        case PromptFinally():
            raise ValidationError("FP has no core desugaring; translate it first")
    raise AssertionError(f)


def _negate(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.sub
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    return Not(f)


def closure(f: Formula) -> list[Formula]:
    """Subformulas of the core desugaring and their negations, deduplicated,
    ordered by post-order of first occurrence (each followed by its negation).
    """
    core = desugar_core(f)
    seen: dict[Formula, None] = {}

    def add(g):
        if g not in seen:
            seen[g] = None

    def walk(g):
        match g:
            case Not(s):
                walk(s)
            case Or(a, b) | Until(a, b):
                walk(a)
                walk(b)
            case Next(s):
                walk(s)
        add(g)
        add(_negate(g))

    walk(core)
    return list(seen)


# --------------------------------------------------------------------------
# negation normal form, used by the automata constructions

class NnfOp(Enum):
    TT = "tt"
    FF = "ff"
    LIT = "lit"
    AND = "and"
    OR = "or"
    NEXT = "next"
    UNTIL = "until"
    RELEASE = "release"


@dataclass(frozen=True)
class Nnf:
    op: NnfOp
    atom: Atom | None = None
    neg: bool = False
    subs: tuple["Nnf", ...] = field(default=())


NNF_TT = Nnf(NnfOp.TT)
NNF_FF = Nnf(NnfOp.FF)


def nnf(f: Formula, negated: bool = False) -> Nnf:
    match f:
        case TrueF():
            return NNF_FF if negated else NNF_TT
        case FalseF():
            return NNF_TT if negated else NNF_FF
        case Atom():
            return Nnf(NnfOp.LIT, atom=f, neg=negated)
        case Not(s):
            return nnf(s, not negated)
        case And(a, b):
            op = NnfOp.OR if negated else NnfOp.AND
            return Nnf(op, subs=(nnf(a, negated), nnf(b, negated)))
        case Or(a, b):
            op = NnfOp.AND if negated else NnfOp.OR
            return Nnf(op, subs=(nnf(a, negated), nnf(b, negated)))
        case Next(s):
            return Nnf(NnfOp.NEXT, subs=(nnf(s, negated),))
        case Until(a, b):
            op = NnfOp.RELEASE if negated else NnfOp.UNTIL
            return Nnf(op, subs=(nnf(a, negated), nnf(b, negated)))
        case Finally(s):
            return nnf(Until(TRUE, s), negated)
        case Globally(s):
            return nnf(Not(Until(TRUE, Not(s))), negated)
        case PromptFinally():
            raise ValidationError("FP reached the automata layer; translate it first")
    raise AssertionError(f)


def atoms_of(f: Formula) -> list[Atom]:
    """Distinct atoms in first-occurrence order."""
    out: dict[Atom, None] = {}

    def walk(g):
        match g:
            case Atom():
                out.setdefault(g, None)
            case Not(s) | Next(s) | Finally(s) | Globally(s) | PromptFinally(s):
                walk(s)
            case Or(a, b) | And(a, b) | Until(a, b):
                walk(a)
                walk(b)

    walk(f)
    return list(out)

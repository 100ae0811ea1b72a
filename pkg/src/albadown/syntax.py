"""Formula AST and concrete syntax for hybrid logic with binder.

Three lexical namespaces are kept disjoint by construction and by sigils in
the concrete grammar: a bare identifier is a propositional variable, 'name
is a nominal, $name is a state variable.

Concrete grammar (ASCII)::

    T | F | p | 'i | $x
    ~a | a /\ b | a \/ b | a -> b
    box a | dia a | bbox a | bdia a | A a | E a
    @'i a | @$x a
    down $x . a | all $x . a | ex $x . a
    a <= b                    -- inequality

Precedence: unary > /\ > \/ > -> (right-associative); /\ and \/ associate
to the left; binders extend maximally to the right and must be
parenthesised when used as an operand of a tighter connective.

bbox/bdia are the box/diamond along the inverse relation, A/E the global
modalities, and all/ex quantify state variables; none of these belong to
the base language (see is_base).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return formula_to_text(self)


@dataclass(frozen=True)
class PropVar(Formula):
    name: str


@dataclass(frozen=True)
class Nominal(Formula):
    name: str


@dataclass(frozen=True)
class StateVar(Formula):
    name: str


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    body: Formula


@dataclass(frozen=True)
class Dia(Formula):
    body: Formula


@dataclass(frozen=True)
class AtNom(Formula):
    nom: str
    body: Formula


@dataclass(frozen=True)
class AtSvar(Formula):
    svar: str
    body: Formula


@dataclass(frozen=True)
class Down(Formula):
    svar: str
    body: Formula


@dataclass(frozen=True)
class BBox(Formula):
    body: Formula


@dataclass(frozen=True)
class BDia(Formula):
    body: Formula


@dataclass(frozen=True)
class GlobalA(Formula):
    body: Formula


@dataclass(frozen=True)
class GlobalE(Formula):
    body: Formula


@dataclass(frozen=True)
class ForallSvar(Formula):
    svar: str
    body: Formula


@dataclass(frozen=True)
class ExistsSvar(Formula):
    svar: str
    body: Formula


TOP = Top()
BOT = Bottom()

_UNARY = {Not: "~", Box: "box ", Dia: "dia ", BBox: "bbox ", BDia: "bdia ",
          GlobalA: "A ", GlobalE: "E "}
_BINDER = {Down: "down", ForallSvar: "all", ExistsSvar: "ex"}


# --- statements ---------------------------------------------------------


@dataclass(frozen=True)
class Inequality:
    lhs: Formula
    rhs: Formula

    def __str__(self) -> str:
        return statement_to_text(self)


@dataclass(frozen=True)
class QuasiInequality:
    premises: tuple[Inequality, ...]
    conclusion: Inequality

    def __str__(self) -> str:
        return statement_to_text(self)


class MegaInequality:
    __slots__ = ()

    def __str__(self) -> str:
        return statement_to_text(self)


@dataclass(frozen=True)
class MegaLeaf(MegaInequality):
    ineq: Inequality


@dataclass(frozen=True)
class MegaConj(MegaInequality):
    left: MegaInequality
    right: MegaInequality


@dataclass(frozen=True)
class MegaForall(MegaInequality):
    svar: str
    body: MegaInequality


@dataclass(frozen=True)
class UQInequality:
    """Universally quantified inequality; empty prefix degenerates to Inequality."""

    bound_svars: tuple[str, ...]
    body: Inequality

    def __post_init__(self) -> None:
        if len(set(self.bound_svars)) != len(self.bound_svars):
            raise ValueError(f"duplicate bound state variables: {self.bound_svars}")

    def __str__(self) -> str:
        return statement_to_text(self)


@dataclass(frozen=True)
class QuasiUQInequality:
    premises: tuple[UQInequality, ...]
    conclusion: UQInequality

    def __str__(self) -> str:
        return statement_to_text(self)


Statement = Union[Inequality, QuasiInequality, MegaInequality, UQInequality,
                  QuasiUQInequality]


# --- structural helpers -------------------------------------------------


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Box, Dia, BBox, BDia, GlobalA, GlobalE)):
        return (f.body,)
    if isinstance(f, (And, Or, Implies)):
        return (f.left, f.right)
    if isinstance(f, (AtNom, AtSvar, Down, ForallSvar, ExistsSvar)):
        return (f.body,)
    return ()


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in children(f))


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from subformulas(c)


def is_base(f: Formula) -> bool:
    """True iff f stays inside the base language (no inverse/global/quantifier nodes)."""
    return not any(isinstance(g, (BBox, BDia, GlobalA, GlobalE, ForallSvar, ExistsSvar))
                   for g in subformulas(f))


def is_pure(f: Formula) -> bool:
    """True iff f contains no propositional variable."""
    return not any(isinstance(g, PropVar) for g in subformulas(f))


def prop_vars(f: Formula) -> list[str]:
    """Propositional variables in first-occurrence order."""
    seen: list[str] = []
    for g in subformulas(f):
        if isinstance(g, PropVar) and g.name not in seen:
            seen.append(g.name)
    return seen


def ineq_prop_vars(ineq: Inequality) -> list[str]:
    seen = prop_vars(ineq.lhs)
    for name in prop_vars(ineq.rhs):
        if name not in seen:
            seen.append(name)
    return seen


def nominals(f: Formula) -> list[str]:
    seen: list[str] = []
    for g in subformulas(f):
        name = g.name if isinstance(g, Nominal) else g.nom if isinstance(g, AtNom) else None
        if name is not None and name not in seen:
            seen.append(name)
    return seen


def free_svars(f: Formula) -> set[str]:
    if isinstance(f, StateVar):
        return {f.name}
    if isinstance(f, AtSvar):
        return {f.svar} | free_svars(f.body)
    if isinstance(f, (Down, ForallSvar, ExistsSvar)):
        return free_svars(f.body) - {f.svar}
    out: set[str] = set()
    for c in children(f):
        out |= free_svars(c)
    return out


def all_names(f: Formula) -> set[str]:
    """Every identifier in f (all three namespaces, including bound ones)."""
    out: set[str] = set()
    for g in subformulas(f):
        if isinstance(g, (PropVar, Nominal, StateVar)):
            out.add(g.name)
        elif isinstance(g, AtNom):
            out.add(g.nom)
        elif isinstance(g, AtSvar):
            out.add(g.svar)
        elif isinstance(g, (Down, ForallSvar, ExistsSvar)):
            out.add(g.svar)
    return out


def _rebind(binder: type, svar: str, body: Formula) -> Formula:
    return binder(svar, body)  # type: ignore[call-arg]


def _fresh_rename(base: str, avoid: set[str]) -> str:
    n = 1
    while f"{base}_{n}" in avoid:
        n += 1
    return f"{base}_{n}"


def substitute_svar(f: Formula, x: str, term: Formula) -> Formula:
    """Replace every free occurrence of state variable x by term (Nominal or StateVar).

    Capture-avoiding: binders that would capture a substituted state
    variable are renamed first.
    """
    if not isinstance(term, (Nominal, StateVar)):
        raise TypeError(f"substitute_svar target must be Nominal or StateVar, got {term!r}")
    tname = term.name if isinstance(term, StateVar) else None

    def go(g: Formula) -> Formula:
        if isinstance(g, StateVar):
            return term if g.name == x else g
        if isinstance(g, AtSvar):
            body = go(g.body)
            if g.svar == x:
                if isinstance(term, Nominal):
                    return AtNom(term.name, body)
                return AtSvar(term.name, body)
            return AtSvar(g.svar, body)
        if isinstance(g, (Down, ForallSvar, ExistsSvar)):
            if g.svar == x:
                return g  # x rebound: inner occurrences are untouched
            if tname is not None and g.svar == tname and x in free_svars(g.body):
                rename = _fresh_rename(g.svar, free_svars(g.body) | {x, tname})
                body = substitute_svar(g.body, g.svar, StateVar(rename))
                return _rebind(type(g), rename, go(body))
            return _rebind(type(g), g.svar, go(g.body))
        if isinstance(g, Not):
            return Not(go(g.body))
        if isinstance(g, And):
            return And(go(g.left), go(g.right))
        if isinstance(g, Or):
            return Or(go(g.left), go(g.right))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        if isinstance(g, Box):
            return Box(go(g.body))
        if isinstance(g, Dia):
            return Dia(go(g.body))
        if isinstance(g, AtNom):
            return AtNom(g.nom, go(g.body))
        if isinstance(g, BBox):
            return BBox(go(g.body))
        if isinstance(g, BDia):
            return BDia(go(g.body))
        if isinstance(g, GlobalA):
            return GlobalA(go(g.body))
        if isinstance(g, GlobalE):
            return GlobalE(go(g.body))
        return g

    return go(f)


def substitute_prop(f: Formula, p: str, repl: Formula) -> Formula:
    """Replace every occurrence of propositional variable p by repl.

    Capture-avoiding with respect to repl's free state variables.
    """
    repl_free = free_svars(repl)

    def go(g: Formula) -> Formula:
        if isinstance(g, PropVar):
            return repl if g.name == p else g
        if isinstance(g, (Down, ForallSvar, ExistsSvar)):
            if g.svar in repl_free and p in prop_vars(g.body):
                rename = _fresh_rename(g.svar, free_svars(g.body) | repl_free | {g.svar})
                body = substitute_svar(g.body, g.svar, StateVar(rename))
                return _rebind(type(g), rename, go(body))
            return _rebind(type(g), g.svar, go(g.body))
        if isinstance(g, Not):
            return Not(go(g.body))
        if isinstance(g, And):
            return And(go(g.left), go(g.right))
        if isinstance(g, Or):
            return Or(go(g.left), go(g.right))
        if isinstance(g, Implies):
            return Implies(go(g.left), go(g.right))
        if isinstance(g, Box):
            return Box(go(g.body))
        if isinstance(g, Dia):
            return Dia(go(g.body))
        if isinstance(g, AtNom):
            return AtNom(g.nom, go(g.body))
        if isinstance(g, AtSvar):
            return AtSvar(g.svar, go(g.body))
        if isinstance(g, BBox):
            return BBox(go(g.body))
        if isinstance(g, BDia):
            return BDia(go(g.body))
        if isinstance(g, GlobalA):
            return GlobalA(go(g.body))
        if isinstance(g, GlobalE):
            return GlobalE(go(g.body))
        return g

    return go(f)


POSITIVE = "positive"
NEGATIVE = "negative"
MIXED = "mixed"
ABSENT = "absent"


def polarity(f: Formula, p: str) -> str:
    """Sign pattern of p's occurrences in the positive generation tree of f."""
    signs: set[int] = set()

    def walk(g: Formula, sign: int) -> None:
        if isinstance(g, PropVar):
            if g.name == p:
                signs.add(sign)
        elif isinstance(g, Not):
            walk(g.body, -sign)
        elif isinstance(g, Implies):
            walk(g.left, -sign)
            walk(g.right, sign)
        else:
            for c in children(g):
                walk(c, sign)

    walk(f, 1)
    if not signs:
        return ABSENT
    if signs == {1}:
        return POSITIVE
    if signs == {-1}:
        return NEGATIVE
    return MIXED


def simplify(f: Formula) -> Formula:
    """Constant folding (⊤∧α→α and friends); off the rewrite path by default."""
    cs = [simplify(c) for c in children(f)]
    if isinstance(f, Not):
        b = cs[0]
        if isinstance(b, Top):
            return BOT
        if isinstance(b, Bottom):
            return TOP
        return Not(b)
    if isinstance(f, And):
        l, r = cs
        if isinstance(l, Top):
            return r
        if isinstance(r, Top):
            return l
        if isinstance(l, Bottom) or isinstance(r, Bottom):
            return BOT
        return And(l, r)
    if isinstance(f, Or):
        l, r = cs
        if isinstance(l, Bottom):
            return r
        if isinstance(r, Bottom):
            return l
        if isinstance(l, Top) or isinstance(r, Top):
            return TOP
        return Or(l, r)
    if isinstance(f, Implies):
        l, r = cs
        if isinstance(l, Top):
            return r
        if isinstance(l, Bottom) or isinstance(r, Top):
            return TOP
        return Implies(l, r)
    if isinstance(f, Box):
        return TOP if isinstance(cs[0], Top) else Box(cs[0])
    if isinstance(f, Dia):
        return BOT if isinstance(cs[0], Bottom) else Dia(cs[0])
    if isinstance(f, BBox):
        return TOP if isinstance(cs[0], Top) else BBox(cs[0])
    if isinstance(f, BDia):
        return BOT if isinstance(cs[0], Bottom) else BDia(cs[0])
    if isinstance(f, GlobalA):
        if isinstance(cs[0], (Top, Bottom)):
            return cs[0]  # nonempty domain
        return GlobalA(cs[0])
    if isinstance(f, GlobalE):
        if isinstance(cs[0], (Top, Bottom)):
            return cs[0]
        return GlobalE(cs[0])
    if isinstance(f, (AtNom, AtSvar)):
        if isinstance(cs[0], (Top, Bottom)):
            return cs[0]
        return AtNom(f.nom, cs[0]) if isinstance(f, AtNom) else AtSvar(f.svar, cs[0])
    if isinstance(f, (Down, ForallSvar, ExistsSvar)):
        if isinstance(cs[0], (Top, Bottom)):
            return cs[0]  # nonempty domain makes the quantifier vacuous
        return _rebind(type(f), f.svar, cs[0])
    return f


class FreshNames:
    """Per-run fresh-name supply: nominals i0,i1,i2,... and state variables y1,y2,...

    Skips reserved names; every issued name becomes reserved. Deterministic
    for a given starting reserved set.
    """

    def __init__(self, reserved: set[str] | frozenset[str] = frozenset()):
        self.reserved = set(reserved)
        self._nom_next = 0
        self._svar_next = 1
        self.issued_nominals: list[str] = []
        self.issued_svars: list[str] = []

    def nominal(self) -> str:
        while True:
            name = f"i{self._nom_next}"
            self._nom_next += 1
            if name not in self.reserved:
                self.reserved.add(name)
                self.issued_nominals.append(name)
                return name

    def svar(self) -> str:
        while True:
            name = f"y{self._svar_next}"
            self._svar_next += 1
            if name not in self.reserved:
                self.reserved.add(name)
                self.issued_svars.append(name)
                return name

    def clone(self) -> "FreshNames":
        twin = FreshNames(self.reserved)
        twin._nom_next = self._nom_next
        twin._svar_next = self._svar_next
        return twin


def fresh_names(reserved: set[str]) -> FreshNames:
    return FreshNames(reserved)


# --- printing -----------------------------------------------------------

_PREC_BINDER = 0
_PREC_IMP = 1
_PREC_OR = 2
_PREC_AND = 3
_PREC_UNARY = 4


def _fmt(f: Formula, need: int) -> str:
    text, prec = _fmt1(f)
    return f"({text})" if prec < need else text


def _fmt1(f: Formula) -> tuple[str, int]:
    if isinstance(f, PropVar):
        return f.name, 5
    if isinstance(f, Nominal):
        return f"'{f.name}", 5
    if isinstance(f, StateVar):
        return f"${f.name}", 5
    if isinstance(f, Top):
        return "T", 5
    if isinstance(f, Bottom):
        return "F", 5
    if type(f) in _UNARY:
        return _UNARY[type(f)] + _fmt(f.body, _PREC_UNARY), _PREC_UNARY
    if isinstance(f, AtNom):
        return f"@'{f.nom} " + _fmt(f.body, _PREC_UNARY), _PREC_UNARY
    if isinstance(f, AtSvar):
        return f"@${f.svar} " + _fmt(f.body, _PREC_UNARY), _PREC_UNARY
    if isinstance(f, And):
        return _fmt(f.left, _PREC_AND) + " /\\ " + _fmt(f.right, _PREC_AND + 1), _PREC_AND
    if isinstance(f, Or):
        return _fmt(f.left, _PREC_OR) + " \\/ " + _fmt(f.right, _PREC_OR + 1), _PREC_OR
    if isinstance(f, Implies):
        return _fmt(f.left, _PREC_IMP + 1) + " -> " + _fmt(f.right, _PREC_IMP), _PREC_IMP
    if type(f) in _BINDER:
        return f"{_BINDER[type(f)]} ${f.svar} . " + _fmt(f.body, _PREC_BINDER), _PREC_BINDER
    raise TypeError(f"not a formula: {f!r}")


def formula_to_text(f: Formula) -> str:
    return _fmt(f, 0)


def statement_to_text(s: Statement) -> str:
    if isinstance(s, Inequality):
        return f"{_fmt(s.lhs, 0)} <= {_fmt(s.rhs, 0)}"
    if isinstance(s, MegaLeaf):
        return statement_to_text(s.ineq)
    if isinstance(s, MegaConj):
        return f"{statement_to_text(s.left)} & {statement_to_text(s.right)}"
    if isinstance(s, MegaForall):
        return f"all ${s.svar} . ({statement_to_text(s.body)})"
    if isinstance(s, UQInequality):
        text = statement_to_text(s.body)
        for x in reversed(s.bound_svars):
            text = f"all ${x} . ({text})"
        return text
    if isinstance(s, (QuasiInequality, QuasiUQInequality)):
        if s.premises:
            left = " & ".join(f"({statement_to_text(p)})" for p in s.premises)
        else:
            left = "(T <= T)"
        return f"{left} => ({statement_to_text(s.conclusion)})"
    raise TypeError(f"not a statement: {s!r}")


# --- parsing ------------------------------------------------------------


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: set[str] = frozenset()):
        self.line = line
        self.col = col
        self.expected = set(expected)
        hint = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at line {line}, column {col}{hint}")


_KEYWORDS = {"T", "F", "box", "dia", "bbox", "bdia", "A", "E", "down", "all", "ex"}
_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<imp>->)|(?P<leq><=)|(?P<and>/\\)|(?P<or>\\/)"
    r"|(?P<nom>'[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<svar>\$[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[()~@.])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        value = m.group(0)
        kind = m.lastgroup or "?"
        if kind == "ident":
            kind = "keyword" if value in _KEYWORDS else "prop"
        elif kind == "nom":
            value = value[1:]
        elif kind == "svar":
            value = value[1:]
        elif kind == "punct":
            kind = value
        if kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        newlines = m.group(0).count("\n")
        if newlines:
            line += newlines
            col = len(m.group(0)) - m.group(0).rfind("\n")
        else:
            col += len(m.group(0))
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, expected: set[str]) -> ParseError:
        tok = self.peek()
        what = "end of input" if tok.kind == "eof" else repr(tok.value)
        return ParseError(f"unexpected {what}", tok.line, tok.col, expected)

    def expect(self, kind: str, expected_desc: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise self.error({expected_desc})
        return self.next()

    def formula(self) -> Formula:
        tok = self.peek()
        if tok.kind == "keyword" and tok.value in ("down", "all", "ex"):
            self.next()
            svar = self.expect("svar", "state variable").value
            self.expect(".", "'.'")
            body = self.formula()
            ctor = {"down": Down, "all": ForallSvar, "ex": ExistsSvar}[tok.value]
            return ctor(svar, body)
        return self.implies()

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek().kind == "imp":
            self.next()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek().kind == "or":
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.peek().kind == "and":
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "~":
            self.next()
            return Not(self.unary())
        if tok.kind == "@":
            self.next()
            index = self.peek()
            if index.kind == "nom":
                self.next()
                return AtNom(index.value, self.unary())
            if index.kind == "svar":
                self.next()
                return AtSvar(index.value, self.unary())
            raise self.error({"nominal", "state variable"})
        if tok.kind == "keyword":
            if tok.value == "T":
                self.next()
                return TOP
            if tok.value == "F":
                self.next()
                return BOT
            if tok.value in ("box", "dia", "bbox", "bdia", "A", "E"):
                self.next()
                ctor = {"box": Box, "dia": Dia, "bbox": BBox, "bdia": BDia,
                        "A": GlobalA, "E": GlobalE}[tok.value]
                return ctor(self.unary())
            raise self.error({"formula"})
        if tok.kind == "prop":
            self.next()
            return PropVar(tok.value)
        if tok.kind == "nom":
            self.next()
            return Nominal(tok.value)
        if tok.kind == "svar":
            self.next()
            return StateVar(tok.value)
        if tok.kind == "(":
            self.next()
            inner = self.formula()
            self.expect(")", "')'")
            return inner
        raise self.error({"formula"})


def parse(text: str) -> Formula | Inequality:
    """Parse a formula, or an inequality if a top-level <= is present."""
    p = _Parser(text)
    lhs = p.formula()
    if p.peek().kind == "leq":
        p.next()
        rhs = p.formula()
        if p.peek().kind != "eof":
            raise p.error({"end of input"})
        return Inequality(lhs, rhs)
    if p.peek().kind != "eof":
        raise p.error({"end of input", "'<='"})
    return lhs


def parse_formula(text: str) -> Formula:
    result = parse(text)
    if not isinstance(result, Formula):
        raise ParseError("expected a formula, got an inequality", 1, 1)
    return result


def parse_inequality(text: str) -> Inequality:
    result = parse(text)
    if not isinstance(result, Inequality):
        raise ParseError("expected an inequality (missing '<=')", 1, 1)
    return result

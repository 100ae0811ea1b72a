"""First-order correspondence language: terms, standard translation, closure,
Tarskian evaluation on finite frames, and two printers (ASCII, s-expression).

The signature has one binary predicate R, one unary predicate P_p per
propositional variable p, equality, and one constant per nominal. State
variables translate to individual variables of the same name; translation-
introduced variables are drawn from a counter y1, y2, ... that skips every
state variable of the input, so the side conditions hold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .syntax import (And, AtNom, AtSvar, BBox, BDia, Bottom, Box, Dia, Down,
                     ExistsSvar, ForallSvar, Formula, GlobalA, GlobalE,
                     Implies, Inequality, MegaConj, MegaForall, MegaLeaf,
                     Nominal, Not, Or, PropVar, QuasiInequality,
                     QuasiUQInequality, StateVar, Statement, Top,
                     UQInequality)
from .syntax import all_names as formula_names
from .semantics import KripkeFrame, statement_formulas


@dataclass(frozen=True)
class FOVar:
    name: str


@dataclass(frozen=True)
class FOConst:
    name: str


Term = Union[FOVar, FOConst]


class FOFormula:
    __slots__ = ()

    def __str__(self) -> str:
        return fo_to_text(self)


@dataclass(frozen=True)
class FOTop(FOFormula):
    pass


@dataclass(frozen=True)
class FOBottom(FOFormula):
    pass


@dataclass(frozen=True)
class FOEq(FOFormula):
    left: Term
    right: Term


@dataclass(frozen=True)
class FORel(FOFormula):
    left: Term
    right: Term


@dataclass(frozen=True)
class FOPred(FOFormula):
    pred: str
    term: Term


@dataclass(frozen=True)
class FONot(FOFormula):
    body: FOFormula


@dataclass(frozen=True)
class FOAnd(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOOr(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOImplies(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOForall(FOFormula):
    var: str
    body: FOFormula


@dataclass(frozen=True)
class FOExists(FOFormula):
    var: str
    body: FOFormula


def fo_children(f: FOFormula) -> tuple[FOFormula, ...]:
    if isinstance(f, FONot):
        return (f.body,)
    if isinstance(f, (FOAnd, FOOr, FOImplies)):
        return (f.left, f.right)
    if isinstance(f, (FOForall, FOExists)):
        return (f.body,)
    return ()


class _VarPool:
    def __init__(self, used: set[str]):
        self.used = set(used)
        self._n = 1

    def fresh(self) -> str:
        while True:
            name = f"y{self._n}"
            self._n += 1
            if name not in self.used:
                self.used.add(name)
                return name

    def fresh_like(self, base: str) -> str:
        if base not in self.used:
            self.used.add(base)
            return base
        n = 2
        while f"{base}{n}" in self.used:
            n += 1
        name = f"{base}{n}"
        self.used.add(name)
        return name


def _st(x: str, f: Formula, pool: _VarPool) -> FOFormula:
    v = FOVar(x)
    if isinstance(f, PropVar):
        return FOPred(f.name, v)
    if isinstance(f, Bottom):
        return FOBottom()
    if isinstance(f, Top):
        return FOTop()
    if isinstance(f, Nominal):
        return FOEq(v, FOConst(f.name))
    if isinstance(f, StateVar):
        return FOEq(v, FOVar(f.name))
    if isinstance(f, Not):
        return FONot(_st(x, f.body, pool))
    if isinstance(f, And):
        return FOAnd(_st(x, f.left, pool), _st(x, f.right, pool))
    if isinstance(f, Or):
        return FOOr(_st(x, f.left, pool), _st(x, f.right, pool))
    if isinstance(f, Implies):
        return FOImplies(_st(x, f.left, pool), _st(x, f.right, pool))
    if isinstance(f, Box):
        y = pool.fresh()
        return FOForall(y, FOImplies(FORel(v, FOVar(y)), _st(y, f.body, pool)))
    if isinstance(f, Dia):
        y = pool.fresh()
        return FOExists(y, FOAnd(FORel(v, FOVar(y)), _st(y, f.body, pool)))
    if isinstance(f, AtNom):
        y = pool.fresh()
        return FOExists(y, FOAnd(FOEq(FOVar(y), FOConst(f.nom)), _st(y, f.body, pool)))
    if isinstance(f, AtSvar):
        y = pool.fresh()
        return FOExists(y, FOAnd(FOEq(FOVar(y), FOVar(f.svar)), _st(y, f.body, pool)))
    if isinstance(f, Down):
        # the binder's own name becomes the witness variable, set to x
        return FOExists(f.svar, FOAnd(FOEq(FOVar(f.svar), v), _st(x, f.body, pool)))
    if isinstance(f, BBox):
        y = pool.fresh()
        return FOForall(y, FOImplies(FORel(FOVar(y), v), _st(y, f.body, pool)))
    if isinstance(f, BDia):
        y = pool.fresh()
        return FOExists(y, FOAnd(FORel(FOVar(y), v), _st(y, f.body, pool)))
    if isinstance(f, GlobalA):
        y = pool.fresh()
        return FOForall(y, _st(y, f.body, pool))
    if isinstance(f, GlobalE):
        y = pool.fresh()
        return FOExists(y, _st(y, f.body, pool))
    if isinstance(f, ForallSvar):
        return FOForall(f.svar, _st(x, f.body, pool))
    if isinstance(f, ExistsSvar):
        return FOExists(f.svar, _st(x, f.body, pool))
    raise TypeError(f"not a formula: {f!r}")


def st_formula(x: str, f: Formula) -> FOFormula:
    """Standard translation of f at the individual variable x.

    x must not be one of f's state variables.
    """
    used = formula_names(f)
    if x in used:
        raise ValueError(f"translation variable {x!r} occurs in the formula")
    used.add(x)
    return _st(x, f, _VarPool(used))


def _st_ineq(ineq: Inequality, used: set[str]) -> FOFormula:
    pool = _VarPool(set(used))
    x = pool.fresh_like("x")
    return FOForall(x, FOImplies(_st(x, ineq.lhs, pool), _st(x, ineq.rhs, pool)))


def _conjoin(parts: list[FOFormula]) -> FOFormula:
    if not parts:
        return FOTop()
    out = parts[0]
    for p in parts[1:]:
        out = FOAnd(out, p)
    return out


def st_statement(stmt: Statement) -> FOFormula:
    """Global standard translation of any statement of the family."""
    used: set[str] = set()
    for f in statement_formulas(stmt):
        used |= formula_names(f)

    def go(s: Statement) -> FOFormula:
        if isinstance(s, Inequality):
            return _st_ineq(s, used)
        if isinstance(s, (QuasiInequality, QuasiUQInequality)):
            if not s.premises:
                return go(s.conclusion)
            return FOImplies(_conjoin([go(p) for p in s.premises]), go(s.conclusion))
        if isinstance(s, MegaLeaf):
            return go(s.ineq)
        if isinstance(s, MegaConj):
            return FOAnd(go(s.left), go(s.right))
        if isinstance(s, MegaForall):
            return FOForall(s.svar, go(s.body))
        if isinstance(s, UQInequality):
            out = go(s.body)
            for xvar in reversed(s.bound_svars):
                out = FOForall(xvar, out)
            return out
        raise TypeError(f"not a statement: {s!r}")

    return go(stmt)


def fo_vars(f: FOFormula) -> set[str]:
    """Every variable name occurring in f, bound or free."""
    out: set[str] = set()

    def walk(g: FOFormula) -> None:
        for t in _terms(g):
            if isinstance(t, FOVar):
                out.add(t.name)
        if isinstance(g, (FOForall, FOExists)):
            out.add(g.var)
        for c in fo_children(g):
            walk(c)

    walk(f)
    return out


def _terms(f: FOFormula) -> tuple[Term, ...]:
    if isinstance(f, (FOEq, FORel)):
        return (f.left, f.right)
    if isinstance(f, FOPred):
        return (f.term,)
    return ()


def free_fo_vars(f: FOFormula) -> list[str]:
    """Free variables in first-use order."""
    out: list[str] = []

    def walk(g: FOFormula, bound: frozenset[str]) -> None:
        for t in _terms(g):
            if isinstance(t, FOVar) and t.name not in bound and t.name not in out:
                out.append(t.name)
        if isinstance(g, (FOForall, FOExists)):
            walk(g.body, bound | {g.var})
        else:
            for c in fo_children(g):
                walk(c, bound)

    walk(f, frozenset())
    return out


def fo_constants(f: FOFormula) -> list[str]:
    """Constant names in first-use order."""
    out: list[str] = []

    def walk(g: FOFormula) -> None:
        for t in _terms(g):
            if isinstance(t, FOConst) and t.name not in out:
                out.append(t.name)
        for c in fo_children(g):
            walk(c)

    walk(f)
    return out


def fo_preds(f: FOFormula) -> list[str]:
    out: list[str] = []

    def walk(g: FOFormula) -> None:
        if isinstance(g, FOPred) and g.pred not in out:
            out.append(g.pred)
        for c in fo_children(g):
            walk(c)

    walk(f)
    return out


def _replace_consts(f: FOFormula, mapping: dict[str, str]) -> FOFormula:
    def fix(t: Term) -> Term:
        if isinstance(t, FOConst) and t.name in mapping:
            return FOVar(mapping[t.name])
        return t

    if isinstance(f, FOEq):
        return FOEq(fix(f.left), fix(f.right))
    if isinstance(f, FORel):
        return FORel(fix(f.left), fix(f.right))
    if isinstance(f, FOPred):
        return FOPred(f.pred, fix(f.term))
    if isinstance(f, FONot):
        return FONot(_replace_consts(f.body, mapping))
    if isinstance(f, FOAnd):
        return FOAnd(_replace_consts(f.left, mapping), _replace_consts(f.right, mapping))
    if isinstance(f, FOOr):
        return FOOr(_replace_consts(f.left, mapping), _replace_consts(f.right, mapping))
    if isinstance(f, FOImplies):
        return FOImplies(_replace_consts(f.left, mapping), _replace_consts(f.right, mapping))
    if isinstance(f, FOForall):
        return FOForall(f.var, _replace_consts(f.body, mapping))
    if isinstance(f, FOExists):
        return FOExists(f.var, _replace_consts(f.body, mapping))
    return f


def universal_closure(f: FOFormula, order: list[str] | None = None) -> FOFormula:
    """Replace each constant by a fresh variable, then forall-quantify all
    free variables.

    Default quantifier order is first use; `order` lists constant names to
    quantify first (in that order), remaining free variables follow in
    first-use order.
    """
    consts = fo_constants(f)
    used = fo_vars(f)
    mapping: dict[str, str] = {}
    for c in consts:
        name = c
        n = 2
        while name in used:
            name = f"{c}_{n}"
            n += 1
        used.add(name)
        mapping[c] = name
    g = _replace_consts(f, mapping)
    free = free_fo_vars(g)
    if order is not None:
        front = [mapping[c] for c in order if c in mapping and mapping[c] in free]
        rest = [v for v in free if v not in front]
        ordered = front + rest
    else:
        ordered = free
    for v in reversed(ordered):
        g = FOForall(v, g)
    return g


def fo_eval(fr: KripkeFrame, preds: Mapping[str, frozenset[int] | set[int]],
            env: Mapping[str, int], f: FOFormula) -> bool:
    """Tarskian evaluation; env covers both variables and constants by name."""

    def term(t: Term) -> int:
        try:
            return env[t.name]
        except KeyError:
            raise KeyError(f"unbound symbol {t.name!r} in first-order evaluation") from None

    if isinstance(f, FOTop):
        return True
    if isinstance(f, FOBottom):
        return False
    if isinstance(f, FOEq):
        return term(f.left) == term(f.right)
    if isinstance(f, FORel):
        return (term(f.left), term(f.right)) in fr.rel
    if isinstance(f, FOPred):
        try:
            interp = preds[f.pred]
        except KeyError:
            raise KeyError(f"unbound predicate {f.pred!r}") from None
        return term(f.term) in interp
    if isinstance(f, FONot):
        return not fo_eval(fr, preds, env, f.body)
    if isinstance(f, FOAnd):
        return fo_eval(fr, preds, env, f.left) and fo_eval(fr, preds, env, f.right)
    if isinstance(f, FOOr):
        return fo_eval(fr, preds, env, f.left) or fo_eval(fr, preds, env, f.right)
    if isinstance(f, FOImplies):
        return (not fo_eval(fr, preds, env, f.left)) or fo_eval(fr, preds, env, f.right)
    if isinstance(f, FOForall):
        e = dict(env)
        for w in fr.worlds:
            e[f.var] = w
            if not fo_eval(fr, preds, e, f.body):
                return False
        return True
    if isinstance(f, FOExists):
        e = dict(env)
        for w in fr.worlds:
            e[f.var] = w
            if fo_eval(fr, preds, e, f.body):
                return True
        return False
    raise TypeError(f"not a first-order formula: {f!r}")


# --- printers -------------------------------------------------------------

_P_Q = 0
_P_IMP = 1
_P_OR = 2
_P_AND = 3
_P_NOT = 4


def _fo_fmt(f: FOFormula, need: int) -> str:
    text, prec = _fo_fmt1(f)
    return f"({text})" if prec < need else text


def _term_text(t: Term) -> str:
    return t.name


def _fo_fmt1(f: FOFormula) -> tuple[str, int]:
    if isinstance(f, FOTop):
        return "T", 5
    if isinstance(f, FOBottom):
        return "F", 5
    if isinstance(f, FOEq):
        return f"{_term_text(f.left)} = {_term_text(f.right)}", 5
    if isinstance(f, FORel):
        return f"R({_term_text(f.left)},{_term_text(f.right)})", 5
    if isinstance(f, FOPred):
        return f"P_{f.pred}({_term_text(f.term)})", 5
    if isinstance(f, FONot):
        return "~" + _fo_fmt(f.body, _P_NOT), _P_NOT
    if isinstance(f, FOAnd):
        return _fo_fmt(f.left, _P_AND) + " /\\ " + _fo_fmt(f.right, _P_AND + 1), _P_AND
    if isinstance(f, FOOr):
        return _fo_fmt(f.left, _P_OR) + " \\/ " + _fo_fmt(f.right, _P_OR + 1), _P_OR
    if isinstance(f, FOImplies):
        return _fo_fmt(f.left, _P_IMP + 1) + " -> " + _fo_fmt(f.right, _P_IMP), _P_IMP
    if isinstance(f, FOForall):
        return f"forall {f.var}. " + _fo_fmt(f.body, _P_Q), _P_Q
    if isinstance(f, FOExists):
        return f"exists {f.var}. " + _fo_fmt(f.body, _P_Q), _P_Q
    raise TypeError(f"not a first-order formula: {f!r}")


def fo_to_text(f: FOFormula) -> str:
    return _fo_fmt(f, 0)


def fo_to_sexpr(f: FOFormula) -> str:
    """Machine-diffable s-expression form."""
    if isinstance(f, FOTop):
        return "true"
    if isinstance(f, FOBottom):
        return "false"
    if isinstance(f, FOEq):
        return f"(= {_term_text(f.left)} {_term_text(f.right)})"
    if isinstance(f, FORel):
        return f"(R {_term_text(f.left)} {_term_text(f.right)})"
    if isinstance(f, FOPred):
        return f"(P_{f.pred} {_term_text(f.term)})"
    if isinstance(f, FONot):
        return f"(not {fo_to_sexpr(f.body)})"
    if isinstance(f, FOAnd):
        return f"(and {fo_to_sexpr(f.left)} {fo_to_sexpr(f.right)})"
    if isinstance(f, FOOr):
        return f"(or {fo_to_sexpr(f.left)} {fo_to_sexpr(f.right)})"
    if isinstance(f, FOImplies):
        return f"(-> {fo_to_sexpr(f.left)} {fo_to_sexpr(f.right)})"
    if isinstance(f, FOForall):
        return f"(forall {f.var} {fo_to_sexpr(f.body)})"
    if isinstance(f, FOExists):
        return f"(exists {f.var} {fo_to_sexpr(f.body)})"
    raise TypeError(f"not a first-order formula: {f!r}")

"""The staged rewrite engine that turns an inequality into pure quasi-
(universally quantified) inequalities and a first-order frame correspondent.

Stage 1 preprocesses (distribution over outer +or/-and, top-level splitting,
monotone/antitone variable elimination) and applies the first approximation,
producing one system {i0 <= lhs, rhs <= ~i1} per preprocessed branch.
Stage 2 runs four substages: outer decomposition, inner decomposition (also
inside universal state quantifiers), packing, and Ackermann elimination.
Stage 3 assembles the quasi-inequalities, their standard translation, and
the universally closed first-order sentence.

Determinism: substage 1 is rule-major (splitting before approximation before
negation residuation, items scanned left to right per rule); substages 2 and
3 are item-major (leftmost item decomposed to a fixpoint before moving
right; at most one rule ever matches a given item). Approximation rules fire
only when the side being decomposed carries an eps-critical leaf;
splitting, residuation and packing fire by shape alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import syntax
from .syntax import (And, AtNom, AtSvar, Bottom, Box, Dia, Down, ExistsSvar,
                     Formula, ForallSvar, FreshNames, Implies, Inequality,
                     MegaConj, MegaForall, MegaInequality, MegaLeaf, Nominal,
                     Not, Or, PropVar, QuasiUQInequality, StateVar, Top,
                     UQInequality, all_names, formula_to_text, ineq_prop_vars,
                     is_base, is_pure, free_svars, polarity, prop_vars,
                     statement_to_text, substitute_prop, substitute_svar)
from .sgt import DUAL, ONE, OrderType, find_order_types
from .fol import FOAnd, FOFormula, st_statement, universal_closure

POSITIVE = syntax.POSITIVE
NEGATIVE = syntax.NEGATIVE
ABSENT = syntax.ABSENT


class EngineError(Exception):
    pass


# --- trace ----------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    stage: str
    branch: int            # -1 during preprocessing
    rule: str
    path: str
    before: tuple[str, ...]
    after: tuple[str, ...]


@dataclass
class Trace:
    input_text: str
    epsilon: OrderType
    strategy: str = ("substage-1 approximation restricted to critical branches; "
                     "substage 1 rule-major, substages 2-3 item-major")
    steps: list[TraceStep] = field(default_factory=list)

    def record(self, stage: str, branch: int, rule: str, path: str,
               before: list[str], after: list[str]) -> None:
        self.steps.append(TraceStep(stage, branch, rule, path,
                                    tuple(before), tuple(after)))


def _texts(items: list) -> list[str]:
    return [statement_to_text(it) if isinstance(it, MegaInequality) else str(it)
            for it in items]


# --- mega helpers -----------------------------------------------------------


def mega_wrap(prefix: tuple[str, ...], m: MegaInequality) -> MegaInequality:
    for x in reversed(prefix):
        m = MegaForall(x, m)
    return m


def mega_unwrap(m: MegaInequality) -> tuple[tuple[str, ...], MegaInequality]:
    prefix: list[str] = []
    while isinstance(m, MegaForall):
        prefix.append(m.svar)
        m = m.body
    return tuple(prefix), m


def mega_to_uq(m: MegaInequality) -> UQInequality:
    prefix, core = mega_unwrap(m)
    if not isinstance(core, MegaLeaf):
        raise EngineError(f"item is not a universally quantified inequality: {m}")
    return UQInequality(prefix, core.ineq)


def mega_prop_vars(m: MegaInequality) -> list[str]:
    if isinstance(m, MegaLeaf):
        return ineq_prop_vars(m.ineq)
    if isinstance(m, MegaConj):
        out = mega_prop_vars(m.left)
        for p in mega_prop_vars(m.right):
            if p not in out:
                out.append(p)
        return out
    if isinstance(m, MegaForall):
        return mega_prop_vars(m.body)
    raise TypeError(f"not a mega-inequality: {m!r}")


def mega_is_pure(m: MegaInequality) -> bool:
    return not mega_prop_vars(m)


# --- system ----------------------------------------------------------------


@dataclass
class System:
    """The evolving set of (mega-)inequalities of one branch."""

    items: list[MegaInequality]
    i0: str
    i1: str
    fresh: FreshNames

    def texts(self) -> list[str]:
        return _texts(self.items)


def _is_literal(f: Formula) -> bool:
    return isinstance(f, (Nominal, StateVar))


def _has_critical(f: Formula, sign: int, eps: OrderType) -> bool:
    """Does the signed generation tree of f (at sign) contain a critical leaf?"""
    if isinstance(f, PropVar):
        want = ONE if sign > 0 else DUAL
        return eps.covers(f.name) and eps.of(f.name) == want
    if isinstance(f, Not):
        return _has_critical(f.body, -sign, eps)
    if isinstance(f, Implies):
        return _has_critical(f.left, -sign, eps) or _has_critical(f.right, sign, eps)
    if isinstance(f, (And, Or)):
        return _has_critical(f.left, sign, eps) or _has_critical(f.right, sign, eps)
    for c in syntax.children(f):
        if _has_critical(c, sign, eps):
            return True
    return False


# --- stage 1: distribution ---------------------------------------------------

_SIGN_SAME = 1
_SIGN_FLIP = -1


def _child_signs(f: Formula) -> tuple[int, ...]:
    if isinstance(f, Not):
        return (_SIGN_FLIP,)
    if isinstance(f, Implies):
        return (_SIGN_FLIP, _SIGN_SAME)
    return tuple(_SIGN_SAME for _ in syntax.children(f))


def _dist_rewrite(f: Formula, sign: int) -> Optional[tuple[str, Formula]]:
    """One distribution rewrite at this very node, or None."""
    if sign > 0:
        if isinstance(f, Dia) and isinstance(f.body, Or):
            a, b = f.body.left, f.body.right
            return "dist.dia.or", Or(Dia(a), Dia(b))
        if isinstance(f, And) and isinstance(f.left, Or):
            a, b, c = f.left.left, f.left.right, f.right
            return "dist.and.or", Or(And(a, c), And(b, c))
        if isinstance(f, And) and isinstance(f.right, Or):
            a, b, c = f.left, f.right.left, f.right.right
            return "dist.and.or", Or(And(a, b), And(a, c))
        if isinstance(f, Down) and isinstance(f.body, Or):
            a, b = f.body.left, f.body.right
            return "dist.down.or", Or(Down(f.svar, a), Down(f.svar, b))
        if isinstance(f, AtNom) and isinstance(f.body, Or):
            a, b = f.body.left, f.body.right
            return "dist.at.or", Or(AtNom(f.nom, a), AtNom(f.nom, b))
        if isinstance(f, AtSvar) and isinstance(f.body, Or):
            a, b = f.body.left, f.body.right
            return "dist.at.or", Or(AtSvar(f.svar, a), AtSvar(f.svar, b))
        if isinstance(f, Not) and isinstance(f.body, And):
            a, b = f.body.left, f.body.right
            return "dist.neg.and", Or(Not(a), Not(b))
    else:
        if isinstance(f, Box) and isinstance(f.body, And):
            a, b = f.body.left, f.body.right
            return "dist.box.and", And(Box(a), Box(b))
        if isinstance(f, Or) and isinstance(f.left, And):
            a, b, c = f.left.left, f.left.right, f.right
            return "dist.or.and", And(Or(a, c), Or(b, c))
        if isinstance(f, Or) and isinstance(f.right, And):
            a, b, c = f.left, f.right.left, f.right.right
            return "dist.or.and", And(Or(a, b), Or(a, c))
        if isinstance(f, Down) and isinstance(f.body, And):
            a, b = f.body.left, f.body.right
            return "dist.down.and", And(Down(f.svar, a), Down(f.svar, b))
        if isinstance(f, AtNom) and isinstance(f.body, And):
            a, b = f.body.left, f.body.right
            return "dist.at.and", And(AtNom(f.nom, a), AtNom(f.nom, b))
        if isinstance(f, AtSvar) and isinstance(f.body, And):
            a, b = f.body.left, f.body.right
            return "dist.at.and", And(AtSvar(f.svar, a), AtSvar(f.svar, b))
        if isinstance(f, Not) and isinstance(f.body, Or):
            a, b = f.body.left, f.body.right
            return "dist.neg.or", And(Not(a), Not(b))
        if isinstance(f, Implies) and isinstance(f.left, Or):
            a, b, c = f.left.left, f.left.right, f.right
            return "dist.imp.or", And(Implies(a, c), Implies(b, c))
        if isinstance(f, Implies) and isinstance(f.right, And):
            a, b, c = f.left, f.right.left, f.right.right
            return "dist.imp.and", And(Implies(a, b), Implies(a, c))
    return None


def _dist_redex(f: Formula, sign: int) -> Optional[tuple[str, tuple[int, ...], Formula]]:
    """Leftmost-outermost distribution redex: (rule, path, replacement)."""
    hit = _dist_rewrite(f, sign)
    if hit is not None:
        return hit[0], (), hit[1]
    for idx, (child, s) in enumerate(zip(syntax.children(f), _child_signs(f))):
        sub = _dist_redex(child, sign * s)
        if sub is not None:
            return sub[0], (idx,) + sub[1], sub[2]
    return None


def _replace_at(f: Formula, path: tuple[int, ...], new: Formula) -> Formula:
    if not path:
        return new
    idx, rest = path[0], path[1:]
    kids = list(syntax.children(f))
    kids[idx] = _replace_at(kids[idx], rest, new)
    if isinstance(f, Not):
        return Not(kids[0])
    if isinstance(f, And):
        return And(kids[0], kids[1])
    if isinstance(f, Or):
        return Or(kids[0], kids[1])
    if isinstance(f, Implies):
        return Implies(kids[0], kids[1])
    if isinstance(f, Box):
        return Box(kids[0])
    if isinstance(f, Dia):
        return Dia(kids[0])
    if isinstance(f, AtNom):
        return AtNom(f.nom, kids[0])
    if isinstance(f, AtSvar):
        return AtSvar(f.svar, kids[0])
    if isinstance(f, Down):
        return Down(f.svar, kids[0])
    if isinstance(f, syntax.BBox):
        return syntax.BBox(kids[0])
    if isinstance(f, syntax.BDia):
        return syntax.BDia(kids[0])
    if isinstance(f, syntax.GlobalA):
        return syntax.GlobalA(kids[0])
    if isinstance(f, syntax.GlobalE):
        return syntax.GlobalE(kids[0])
    if isinstance(f, ForallSvar):
        return ForallSvar(f.svar, kids[0])
    if isinstance(f, ExistsSvar):
        return ExistsSvar(f.svar, kids[0])
    raise TypeError(f"cannot rebuild {f!r}")


# --- stage 1: preprocessing ---------------------------------------------------


def preprocess(ineq: Inequality, trace: Trace | None = None,
               simplify: bool = False, max_steps: int = 20000) -> list[Inequality]:
    """Distribution, splitting, and monotone/antitone variable elimination."""
    post = syntax.simplify if simplify else (lambda f: f)
    items: list[Inequality] = [ineq]
    steps = 0

    def bump() -> None:
        nonlocal steps
        steps += 1
        if steps > max_steps:
            raise EngineError("preprocessing exceeded its step budget")

    # (a) distribution, exhaustively, leftmost-outermost, lhs then rhs
    progress = True
    while progress:
        progress = False
        for i, it in enumerate(items):
            for side, sign in (("lhs", 1), ("rhs", -1)):
                f = getattr(it, side)
                hit = _dist_redex(f, sign)
                if hit is None:
                    continue
                rule, path, new = hit
                bump()
                before = _texts(items)
                new_ineq = (Inequality(_replace_at(f, path, new), it.rhs)
                            if side == "lhs"
                            else Inequality(it.lhs, _replace_at(f, path, new)))
                items[i] = new_ineq
                if trace is not None:
                    where = f"{i}:{side}." + ".".join(map(str, path))
                    trace.record("stage1", -1, rule, where, before, _texts(items))
                progress = True
                break
            if progress:
                break

    # (b) splitting, exhaustively
    i = 0
    while i < len(items):
        it = items[i]
        if isinstance(it.rhs, And):
            bump()
            before = _texts(items)
            items[i:i + 1] = [Inequality(it.lhs, it.rhs.left),
                              Inequality(it.lhs, it.rhs.right)]
            if trace is not None:
                trace.record("stage1", -1, "split.and", str(i), before, _texts(items))
            continue
        if isinstance(it.lhs, Or):
            bump()
            before = _texts(items)
            items[i:i + 1] = [Inequality(it.lhs.left, it.rhs),
                              Inequality(it.lhs.right, it.rhs)]
            if trace is not None:
                trace.record("stage1", -1, "split.or", str(i), before, _texts(items))
            continue
        i += 1

    # (c) monotone/antitone variable elimination, strict polarity reading
    for i, it in enumerate(items):
        changed = True
        while changed:
            changed = False
            for p in ineq_prop_vars(items[i]):
                it = items[i]
                pl, pr = polarity(it.lhs, p), polarity(it.rhs, p)
                if pl == NEGATIVE and pr == POSITIVE:
                    rule, repl = "elim.bot", Bottom()
                elif pl == POSITIVE and pr == NEGATIVE:
                    rule, repl = "elim.top", Top()
                else:
                    continue
                bump()
                before = _texts(items)
                items[i] = Inequality(post(substitute_prop(it.lhs, p, repl)),
                                      post(substitute_prop(it.rhs, p, repl)))
                if trace is not None:
                    trace.record("stage1", -1, rule, f"{i}:{p}", before, _texts(items))
                changed = True
                break

    return items


def first_approximation(ineq: Inequality, fresh: FreshNames | None = None,
                        i0: str | None = None, i1: str | None = None) -> System:
    """Build the system {i0 <= lhs, rhs <= ~i1} with designated fresh nominals."""
    if fresh is None:
        fresh = FreshNames(all_names(ineq.lhs) | all_names(ineq.rhs))
    if i0 is None:
        i0 = fresh.nominal()
    if i1 is None:
        i1 = fresh.nominal()
    items: list[MegaInequality] = [MegaLeaf(Inequality(Nominal(i0), ineq.lhs)),
                                   MegaLeaf(Inequality(ineq.rhs, Not(Nominal(i1))))]
    return System(items, i0, i1, fresh)


# --- substage 1: decomposing the outer part ----------------------------------

_RuleHit = tuple[str, list[MegaInequality]]


def _s1_split(item: MegaInequality, eps: OrderType, fresh: FreshNames) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if isinstance(rhs, And):
        return "split.and", [MegaLeaf(Inequality(lhs, rhs.left)),
                             MegaLeaf(Inequality(lhs, rhs.right))]
    if isinstance(lhs, Or):
        return "split.or", [MegaLeaf(Inequality(lhs.left, rhs)),
                            MegaLeaf(Inequality(lhs.right, rhs))]
    return None


def _lit_kind(f: Formula) -> str:
    return "nom" if isinstance(f, Nominal) else "svar"


def _s1_approx_dia(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if _is_literal(lhs) and isinstance(rhs, Dia) and _has_critical(rhs, 1, eps):
        j = Nominal(fresh.nominal())
        return (f"approx.dia.{_lit_kind(lhs)}",
                [MegaLeaf(Inequality(lhs, Dia(j))), MegaLeaf(Inequality(j, rhs.body))])
    return None


def _s1_approx_box(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if (isinstance(rhs, Not) and _is_literal(rhs.body) and isinstance(lhs, Box)
            and _has_critical(lhs, -1, eps)):
        j = Nominal(fresh.nominal())
        return (f"approx.box.{_lit_kind(rhs.body)}",
                [MegaLeaf(Inequality(Box(Not(j)), rhs)),
                 MegaLeaf(Inequality(lhs.body, Not(j)))])
    return None


def _s1_approx_at_right(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if _is_literal(lhs) and isinstance(rhs, (AtNom, AtSvar)) and _has_critical(rhs, 1, eps):
        u = Nominal(rhs.nom) if isinstance(rhs, AtNom) else StateVar(rhs.svar)
        return "approx.at.right", [MegaLeaf(Inequality(u, rhs.body))]
    return None


def _s1_approx_at_left(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if (isinstance(rhs, Not) and _is_literal(rhs.body)
            and isinstance(lhs, (AtNom, AtSvar)) and _has_critical(lhs, -1, eps)):
        u = Nominal(lhs.nom) if isinstance(lhs, AtNom) else StateVar(lhs.svar)
        return "approx.at.left", [MegaLeaf(Inequality(lhs.body, Not(u)))]
    return None


def _s1_approx_down_right(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if _is_literal(lhs) and isinstance(rhs, Down) and _has_critical(rhs, 1, eps):
        return ("approx.down.right",
                [MegaLeaf(Inequality(lhs, substitute_svar(rhs.body, rhs.svar, lhs)))])
    return None


def _s1_approx_down_left(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if (isinstance(rhs, Not) and _is_literal(rhs.body)
            and isinstance(lhs, Down) and _has_critical(lhs, -1, eps)):
        lit = rhs.body
        return ("approx.down.left",
                [MegaLeaf(Inequality(substitute_svar(lhs.body, lhs.svar, lit), rhs))])
    return None


def _s1_approx_imp(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if (isinstance(rhs, Not) and _is_literal(rhs.body)
            and isinstance(lhs, Implies) and _has_critical(lhs, -1, eps)):
        j = Nominal(fresh.nominal())
        k = Nominal(fresh.nominal())
        return ("approx.imp.left",
                [MegaLeaf(Inequality(j, lhs.left)),
                 MegaLeaf(Inequality(lhs.right, Not(k))),
                 MegaLeaf(Inequality(Implies(j, Not(k)), rhs))])
    return None


def _s1_resid_neg_right(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if _is_literal(lhs) and isinstance(rhs, Not) and _has_critical(rhs, 1, eps):
        return "resid1.neg.right", [MegaLeaf(Inequality(rhs.body, Not(lhs)))]
    return None


def _s1_resid_neg_left(item, eps, fresh) -> Optional[_RuleHit]:
    if not isinstance(item, MegaLeaf):
        return None
    lhs, rhs = item.ineq.lhs, item.ineq.rhs
    if (isinstance(rhs, Not) and _is_literal(rhs.body)
            and isinstance(lhs, Not) and _has_critical(lhs, -1, eps)):
        return "resid1.neg.left", [MegaLeaf(Inequality(rhs.body, lhs.body))]
    return None


_S1_RULES: list[Callable] = [
    _s1_split, _s1_approx_dia, _s1_approx_box, _s1_approx_at_right,
    _s1_approx_at_left, _s1_approx_down_right, _s1_approx_down_left,
    _s1_approx_imp, _s1_resid_neg_right, _s1_resid_neg_left,
]


def substage1_outer(system: System, eps: OrderType, trace: Trace | None = None,
                    branch: int = 0, simplify: bool = False,
                    max_steps: int = 20000) -> System:
    post = _item_simplifier(simplify)
    steps = 0
    while True:
        hit = None
        for rule_fn in _S1_RULES:
            for i, item in enumerate(system.items):
                r = rule_fn(item, eps, system.fresh)
                if r is not None:
                    hit = (i, r)
                    break
            if hit is not None:
                break
        if hit is None:
            return system
        steps += 1
        if steps > max_steps:
            raise EngineError("substage 1 exceeded its step budget")
        i, (rule, new_items) = hit
        before = system.texts()
        system.items[i:i + 1] = [post(m) for m in new_items]
        if trace is not None:
            trace.record("substage1", branch, rule, str(i), before, system.texts())


# --- substage 2: decomposing the inner part ----------------------------------


def _s2_rule(item: MegaInequality, fresh: FreshNames) -> Optional[tuple[str, str, list[MegaInequality]]]:
    """(rule id, path, replacement items) for the single matching rule, if any."""
    prefix: list[str] = []
    m = item
    while isinstance(m, MegaForall):
        prefix.append(m.svar)
        m = m.body
    depth = f"q{len(prefix)}" if prefix else "top"
    if isinstance(m, MegaConj):
        return ("split.mega", depth,
                [mega_wrap(tuple(prefix), m.left), mega_wrap(tuple(prefix), m.right)])
    assert isinstance(m, MegaLeaf)
    lhs, rhs = m.ineq.lhs, m.ineq.rhs
    lp, rp = is_pure(lhs), is_pure(rhs)
    if lp == rp:
        return None  # fully pure, or no pure side to residuate against

    def one(ineq: Inequality) -> list[MegaInequality]:
        return [mega_wrap(tuple(prefix), MegaLeaf(ineq))]

    if lp:
        # decompose the right-hand side (positively signed)
        if isinstance(rhs, And):
            halves = MegaConj(MegaLeaf(Inequality(lhs, rhs.left)),
                              MegaLeaf(Inequality(lhs, rhs.right)))
            if prefix:
                return "split.and", depth, [mega_wrap(tuple(prefix), halves)]
            return "split.and", depth, [MegaLeaf(Inequality(lhs, rhs.left)),
                                        MegaLeaf(Inequality(lhs, rhs.right))]
        if isinstance(rhs, Box):
            return "resid.box.right", depth, one(Inequality(syntax.BDia(lhs), rhs.body))
        if isinstance(rhs, Not):
            return "resid.neg.right", depth, one(Inequality(rhs.body, Not(lhs)))
        if isinstance(rhs, AtNom):
            return ("resid.at.right", depth,
                    one(Inequality(And(syntax.GlobalE(lhs), Nominal(rhs.nom)), rhs.body)))
        if isinstance(rhs, AtSvar):
            return ("resid.at.right", depth,
                    one(Inequality(And(syntax.GlobalE(lhs), StateVar(rhs.svar)), rhs.body)))
        if isinstance(rhs, Down):
            y = StateVar(fresh.svar())
            head = Inequality(And(syntax.GlobalA(Implies(y, lhs)), y),
                              substitute_svar(rhs.body, rhs.svar, y))
            return ("resid.down.right", depth,
                    [mega_wrap(tuple(prefix) + (y.name,), MegaLeaf(head))])
        return None
    # decompose the left-hand side (negatively signed)
    if isinstance(lhs, Or):
        halves = MegaConj(MegaLeaf(Inequality(lhs.left, rhs)),
                          MegaLeaf(Inequality(lhs.right, rhs)))
        if prefix:
            return "split.or", depth, [mega_wrap(tuple(prefix), halves)]
        return "split.or", depth, [MegaLeaf(Inequality(lhs.left, rhs)),
                                   MegaLeaf(Inequality(lhs.right, rhs))]
    if isinstance(lhs, Dia):
        return "resid.dia.left", depth, one(Inequality(lhs.body, syntax.BBox(rhs)))
    if isinstance(lhs, Not):
        return "resid.neg.left", depth, one(Inequality(Not(rhs), lhs.body))
    if isinstance(lhs, AtNom):
        return ("resid.at.left", depth,
                one(Inequality(lhs.body, Implies(Nominal(lhs.nom), syntax.GlobalA(rhs)))))
    if isinstance(lhs, AtSvar):
        return ("resid.at.left", depth,
                one(Inequality(lhs.body, Implies(StateVar(lhs.svar), syntax.GlobalA(rhs)))))
    if isinstance(lhs, Down):
        y = StateVar(fresh.svar())
        head = Inequality(substitute_svar(lhs.body, lhs.svar, y),
                          Implies(y, syntax.GlobalE(And(y, rhs))))
        return ("resid.down.left", depth,
                [mega_wrap(tuple(prefix) + (y.name,), MegaLeaf(head))])
    return None


def substage2_inner(system: System, eps: OrderType, trace: Trace | None = None,
                    branch: int = 0, simplify: bool = False,
                    max_steps: int = 20000) -> System:
    post = _item_simplifier(simplify)
    steps = 0
    i = 0
    while i < len(system.items):
        hit = _s2_rule(system.items[i], system.fresh)
        if hit is None:
            i += 1
            continue
        steps += 1
        if steps > max_steps:
            raise EngineError("substage 2 exceeded its step budget")
        rule, depth, new_items = hit
        before = system.texts()
        system.items[i:i + 1] = [post(m) for m in new_items]
        if trace is not None:
            trace.record("substage2", branch, rule, f"{i}:{depth}",
                         before, system.texts())
    return system


# --- substage 3: packing ------------------------------------------------------


def _pack_rule(item: MegaInequality) -> Optional[tuple[str, MegaInequality]]:
    prefix, core = mega_unwrap(item)
    if not prefix or not isinstance(core, MegaLeaf):
        return None
    x = prefix[-1]
    lhs, rhs = core.ineq.lhs, core.ineq.rhs
    if x not in free_svars(lhs):
        new = mega_wrap(prefix[:-1], MegaLeaf(Inequality(lhs, ForallSvar(x, rhs))))
        return "pack.forall", new
    if x not in free_svars(rhs):
        new = mega_wrap(prefix[:-1], MegaLeaf(Inequality(ExistsSvar(x, lhs), rhs)))
        return "pack.exists", new
    return None


def substage3_packing(system: System, trace: Trace | None = None,
                      branch: int = 0) -> System:
    i = 0
    while i < len(system.items):
        hit = _pack_rule(system.items[i])
        if hit is None:
            i += 1
            continue
        rule, new = hit
        before = system.texts()
        system.items[i] = new
        if trace is not None:
            trace.record("substage3", branch, rule, str(i), before, system.texts())
    return system


# --- substage 4: the Ackermann stage ------------------------------------------


@dataclass(frozen=True)
class Stuck:
    """Diagnostics for a variable the Ackermann rules cannot eliminate."""

    variable: str
    reasons: tuple[str, ...]

    def __str__(self) -> str:
        lines = "\n".join(f"  - {r}" for r in self.reasons)
        return f"stuck on variable {self.variable!r}:\n{lines}"


def _try_eliminate(system: System, p: str, eps: OrderType) -> Stuck | list[MegaInequality]:
    right = not eps.covers(p) or eps.of(p) == ONE
    collected: list[Formula] = []
    kept: list[tuple[MegaInequality, bool]] = []   # (item, needs substitution)
    reasons: list[str] = []
    for item in system.items:
        if p not in mega_prop_vars(item):
            kept.append((item, False))
            continue
        prefix, core = mega_unwrap(item)
        if not isinstance(core, MegaLeaf):
            reasons.append(f"item is not a universally quantified inequality: {item}")
            continue
        lhs, rhs = core.ineq.lhs, core.ineq.rhs
        if right and not prefix and rhs == PropVar(p) and is_pure(lhs):
            collected.append(lhs)
            continue
        if not right and not prefix and lhs == PropVar(p) and is_pure(rhs):
            collected.append(rhs)
            continue
        want_lhs = (POSITIVE, ABSENT) if right else (NEGATIVE, ABSENT)
        want_rhs = (NEGATIVE, ABSENT) if right else (POSITIVE, ABSENT)
        if polarity(lhs, p) not in want_lhs or polarity(rhs, p) not in want_rhs:
            side = "positive/negative" if right else "negative/positive"
            reasons.append(f"occurrence of {p!r} violates the {side} side condition in: {item}")
            continue
        kept.append((item, True))
    if reasons:
        return Stuck(p, tuple(reasons))
    if right:
        repl: Formula = Bottom()
        if collected:
            repl = collected[0]
            for a in collected[1:]:
                repl = Or(repl, a)
    else:
        repl = Top()
        if collected:
            repl = collected[0]
            for a in collected[1:]:
                repl = And(repl, a)
    repl_free = free_svars(repl)
    new_items: list[MegaInequality] = []
    for item, subst in kept:
        if not subst:
            new_items.append(item)
            continue
        prefix, core = mega_unwrap(item)
        if repl_free & set(prefix):
            return Stuck(p, (f"substitute for {p!r} contains quantified state "
                             f"variables of: {item}",))
        assert isinstance(core, MegaLeaf)
        head = Inequality(substitute_prop(core.ineq.lhs, p, repl),
                          substitute_prop(core.ineq.rhs, p, repl))
        new_items.append(mega_wrap(prefix, MegaLeaf(head)))
    return new_items


def substage4_ackermann(system: System, eps: OrderType,
                        var_order: list[str] | None = None,
                        trace: Trace | None = None, branch: int = 0,
                        simplify: bool = False) -> Stuck | System:
    """Eliminate every propositional variable, or report why one is stuck."""
    post = _item_simplifier(simplify)

    def remaining() -> list[str]:
        seen: list[str] = []
        for item in system.items:
            for q in mega_prop_vars(item):
                if q not in seen:
                    seen.append(q)
        if var_order:
            ordered = [q for q in var_order if q in seen]
            return ordered + [q for q in seen if q not in ordered]
        return seen

    while True:
        todo = remaining()
        if not todo:
            return system
        progressed = False
        first_stuck: Stuck | None = None
        for p in todo:
            result = _try_eliminate(system, p, eps)
            if isinstance(result, Stuck):
                if first_stuck is None:
                    first_stuck = result
                continue
            rule = "ackermann.right" if (not eps.covers(p) or eps.of(p) == ONE) \
                else "ackermann.left"
            before = system.texts()
            system.items = [post(m) for m in result]
            if trace is not None:
                trace.record("substage4", branch, rule, p, before, system.texts())
            progressed = True
            break
        if not progressed:
            assert first_stuck is not None
            return first_stuck


def _item_simplifier(enabled: bool):
    if not enabled:
        return lambda m: m

    def go(m: MegaInequality) -> MegaInequality:
        if isinstance(m, MegaLeaf):
            return MegaLeaf(Inequality(syntax.simplify(m.ineq.lhs),
                                       syntax.simplify(m.ineq.rhs)))
        if isinstance(m, MegaConj):
            return MegaConj(go(m.left), go(m.right))
        if isinstance(m, MegaForall):
            return MegaForall(m.svar, go(m.body))
        raise TypeError(m)

    return go


# --- stage 3: results ----------------------------------------------------------


@dataclass
class BranchOutcome:
    preprocessed: Inequality
    reduce: tuple[MegaInequality, ...]
    quasi: QuasiUQInequality
    fo: FOFormula
    intro_order: tuple[str, ...]
    stage_systems: dict[str, tuple[MegaInequality, ...]]


@dataclass
class AlbaSuccess:
    ineq: Inequality
    epsilon: OrderType
    i0: str
    i1: str
    branches: list[BranchOutcome]
    fo: FOFormula
    trace: Trace

    @property
    def success(self) -> bool:
        return True


@dataclass
class AlbaFailure:
    ineq: Inequality
    epsilon: OrderType
    branch_index: int
    stuck: Stuck
    system_items: tuple[MegaInequality, ...]
    trace: Trace

    @property
    def success(self) -> bool:
        return False


AlbaResult = AlbaSuccess | AlbaFailure


def _input_nominals(ineq: Inequality) -> list[str]:
    out = syntax.nominals(ineq.lhs)
    for n in syntax.nominals(ineq.rhs):
        if n not in out:
            out.append(n)
    return out


def run_alba(ineq: Inequality, order_type: OrderType | None = None,
             simplify: bool = False) -> AlbaResult:
    """Run the full pipeline; auto mode tries passing order-types
    lexicographically (1 < d) and returns the first success."""
    if not isinstance(ineq, Inequality):
        raise TypeError("run_alba expects an inequality")
    if not (is_base(ineq.lhs) and is_base(ineq.rhs)):
        raise ValueError("input must be a base-language inequality")
    variables = ineq_prop_vars(ineq)
    if order_type is not None:
        for p in variables:
            if not order_type.covers(p):
                raise ValueError(f"order-type does not cover variable {p!r}")
        return _run_with(ineq, order_type, simplify)
    candidates = find_order_types(ineq)
    if not candidates:
        # not Sahlqvist for any order-type: best effort with all-1
        fallback = OrderType(tuple(variables), tuple(ONE for _ in variables))
        return _run_with(ineq, fallback, simplify)
    outcome: AlbaResult | None = None
    for eps in candidates:
        outcome = _run_with(ineq, eps, simplify)
        if outcome.success:
            return outcome
    assert outcome is not None
    return outcome


def _run_with(ineq: Inequality, eps: OrderType, simplify: bool) -> AlbaResult:
    trace = Trace(statement_to_text(ineq), eps)
    fresh = FreshNames(all_names(ineq.lhs) | all_names(ineq.rhs))
    branches_in = preprocess(ineq, trace, simplify)
    i0 = fresh.nominal()
    i1 = fresh.nominal()
    conclusion = UQInequality((), Inequality(Nominal(i0), Not(Nominal(i1))))
    input_noms = _input_nominals(ineq)
    var_order = ineq_prop_vars(ineq)

    outcomes: list[BranchOutcome] = []
    for bi, branch_ineq in enumerate(branches_in):
        system = first_approximation(branch_ineq, fresh.clone(), i0, i1)
        if trace is not None:
            trace.record("first_approx", bi, "first_approx", "0",
                         [statement_to_text(branch_ineq)], system.texts())
        stage_systems: dict[str, tuple[MegaInequality, ...]] = {
            "first_approx": tuple(system.items)}
        substage1_outer(system, eps, trace, bi, simplify)
        stage_systems["substage1"] = tuple(system.items)
        substage2_inner(system, eps, trace, bi, simplify)
        stage_systems["substage2"] = tuple(system.items)
        substage3_packing(system, trace, bi)
        stage_systems["substage3"] = tuple(system.items)
        result = substage4_ackermann(system, eps, var_order, trace, bi, simplify)
        if isinstance(result, Stuck):
            return AlbaFailure(ineq, eps, bi, result, tuple(system.items), trace)
        stage_systems["substage4"] = tuple(system.items)
        if any(not mega_is_pure(m) for m in system.items):
            raise EngineError("internal: Ackermann stage left a propositional variable")
        quasi = QuasiUQInequality(tuple(mega_to_uq(m) for m in system.items), conclusion)
        intro = [i0, i1] + system.fresh.issued_nominals + \
                [n for n in input_noms if n not in (i0, i1)]
        fo = universal_closure(st_statement(quasi), order=intro)
        outcomes.append(BranchOutcome(branch_ineq, tuple(system.items), quasi, fo,
                                      tuple(intro), stage_systems))

    total = outcomes[0].fo
    for oc in outcomes[1:]:
        total = FOAnd(total, oc.fo)
    return AlbaSuccess(ineq, eps, i0, i1, outcomes, total, trace)


# --- rule registry ---------------------------------------------------------------

# Soundness-checking mode per rule id: "model" rules are pointwise
# equivalences, "valuation" rules need an existential witness for the names
# they introduce or discard, "frame" rules are sound only under the
# quantification over all valuations.
RuleInstance_modes: dict[str, str] = {
    "dist.dia.or": "model", "dist.and.or": "model", "dist.down.or": "model",
    "dist.at.or": "model", "dist.neg.and": "model", "dist.box.and": "model",
    "dist.or.and": "model", "dist.down.and": "model", "dist.at.and": "model",
    "dist.neg.or": "model", "dist.imp.or": "model", "dist.imp.and": "model",
    "split.and": "model", "split.or": "model",
    "elim.bot": "frame", "elim.top": "frame",
    "first_approx": "frame",
    "approx.dia.nom": "valuation", "approx.dia.svar": "valuation",
    "approx.box.nom": "valuation", "approx.box.svar": "valuation",
    "approx.at.right": "model", "approx.at.left": "model",
    "approx.down.right": "model", "approx.down.left": "model",
    "approx.imp.left": "valuation",
    "resid1.neg.right": "model", "resid1.neg.left": "model",
    "resid.box.right": "model", "resid.dia.left": "model",
    "resid.neg.right": "model", "resid.neg.left": "model",
    "resid.at.right": "model", "resid.at.left": "model",
    "resid.down.right": "model", "resid.down.left": "model",
    "split.mega": "model",
    "pack.forall": "model", "pack.exists": "model",
    "ackermann.right": "valuation", "ackermann.left": "valuation",
}

ALL_RULE_IDS: tuple[str, ...] = tuple(RuleInstance_modes)


# --- shape checks backing the success-theorem properties -----------------------


def definite_violations(branches: list[Inequality], eps: OrderType) -> list[str]:
    """After stage 1 every branch must be a definite eps-Sahlqvist inequality."""
    from .sgt import build_signed_tree, is_definite
    out = []
    for ineq in branches:
        if not is_definite(build_signed_tree(ineq.lhs, "+"), eps):
            out.append(f"lhs not definite: {ineq}")
        if not is_definite(build_signed_tree(ineq.rhs, "-"), eps):
            out.append(f"rhs not definite: {ineq}")
    return out


def substage1_shape_violations(items: tuple[MegaInequality, ...], eps: OrderType) -> list[str]:
    """After substage 1 every non-pure item has a literal side with the other
    side inner eps-Sahlqvist."""
    from .sgt import build_signed_tree, is_inner
    out = []
    for item in items:
        if not isinstance(item, MegaLeaf):
            out.append(f"not a plain inequality: {item}")
            continue
        lhs, rhs = item.ineq.lhs, item.ineq.rhs
        if is_pure(lhs) and is_pure(rhs):
            continue
        if _is_literal(lhs) and is_inner(build_signed_tree(rhs, "+"), eps):
            continue
        if isinstance(rhs, Not) and _is_literal(rhs.body) \
                and is_inner(build_signed_tree(lhs, "-"), eps):
            continue
        out.append(f"bad substage-1 shape: {item}")
    return out


def substage2_head_violations(items: tuple[MegaInequality, ...], eps: OrderType) -> list[str]:
    """After substage 2 every head matches one of the four canonical forms."""
    from .sgt import build_signed_tree, tree_agrees
    dual = eps.dual()
    out = []
    for item in items:
        prefix, core = mega_unwrap(item)
        if not isinstance(core, MegaLeaf):
            out.append(f"mega-conjunction survived substage 2: {item}")
            continue
        lhs, rhs = core.ineq.lhs, core.ineq.rhs
        if isinstance(rhs, PropVar) and is_pure(lhs) \
                and (not eps.covers(rhs.name) or eps.of(rhs.name) == ONE):
            continue
        if isinstance(lhs, PropVar) and is_pure(rhs) \
                and eps.covers(lhs.name) and eps.of(lhs.name) == DUAL:
            continue
        if is_pure(lhs) and tree_agrees(build_signed_tree(rhs, "+"), dual):
            continue
        if is_pure(rhs) and tree_agrees(build_signed_tree(lhs, "-"), dual):
            continue
        out.append(f"bad substage-2 head: {item}")
    return out

"""Seeded random generators for formulas, models, Sahlqvist inequalities with
excellent critical branches by construction, and per-rule soundness instances.

Everything takes an explicit random.Random so test runs are reproducible.
"""

from __future__ import annotations

import random
from typing import Sequence

from . import alba
from .oracle import RuleInstance
from .semantics import KripkeFrame, Valuation
from .sgt import DUAL, ONE, OrderType
from .syntax import (And, AtNom, AtSvar, Bottom, Box, Dia, Down, ExistsSvar,
                     ForallSvar, Formula, Implies, Inequality, MegaForall,
                     MegaLeaf, Nominal, Not, Or, PropVar, QuasiInequality,
                     StateVar, Top, prop_vars)


def random_frame(rng: random.Random, max_worlds: int = 4,
                 edge_prob: float = 0.5) -> KripkeFrame:
    n = rng.randint(1, max_worlds)
    rel = frozenset((a, b) for a in range(n) for b in range(n)
                    if rng.random() < edge_prob)
    return KripkeFrame(n, rel)


def random_model(rng: random.Random, props: Sequence[str], noms: Sequence[str],
                 svars: Sequence[str] = (), max_worlds: int = 4):
    fr = random_frame(rng, max_worlds)
    val = Valuation(
        {p: frozenset(w for w in fr.worlds if rng.random() < 0.5) for p in props},
        {nm: rng.randrange(fr.size) for nm in noms})
    g = {x: rng.randrange(fr.size) for x in svars}
    return fr, val, g


def random_formula(rng: random.Random, depth: int, props: Sequence[str] = ("p", "q"),
                   noms: Sequence[str] = ("i",), svars: Sequence[str] = (),
                   expanded: bool = False, scope: tuple[str, ...] = ()) -> Formula:
    """Random formula; svars lists free state variables the caller will cover."""
    reachable = list(scope) + list(svars)
    if depth <= 0 or rng.random() < 0.18:
        choices = ["prop"] * 3 + ["nom", "top", "bot"]
        if reachable:
            choices.append("svar")
        kind = rng.choice(choices)
        if kind == "prop" and props:
            return PropVar(rng.choice(list(props)))
        if kind == "nom" and noms:
            return Nominal(rng.choice(list(noms)))
        if kind == "svar":
            return StateVar(rng.choice(reachable))
        return Top() if rng.random() < 0.5 else Bottom()
    kinds = ["not", "and", "or", "imp", "box", "dia", "at", "down"]
    if expanded:
        kinds += ["bbox", "bdia", "ga", "ge", "all", "ex"]
    kind = rng.choice(kinds)
    sub = lambda sc=scope: random_formula(rng, depth - 1, props, noms, svars,
                                          expanded, sc)
    if kind == "not":
        return Not(sub())
    if kind == "and":
        return And(sub(), sub())
    if kind == "or":
        return Or(sub(), sub())
    if kind == "imp":
        return Implies(sub(), sub())
    if kind == "box":
        return Box(sub())
    if kind == "dia":
        return Dia(sub())
    if kind == "bbox":
        from .syntax import BBox
        return BBox(sub())
    if kind == "bdia":
        from .syntax import BDia
        return BDia(sub())
    if kind == "ga":
        from .syntax import GlobalA
        return GlobalA(sub())
    if kind == "ge":
        from .syntax import GlobalE
        return GlobalE(sub())
    if kind == "at":
        if reachable and rng.random() < 0.4:
            return AtSvar(rng.choice(reachable), sub())
        if noms:
            return AtNom(rng.choice(list(noms)), sub())
        return Not(sub())
    binder_var = rng.choice(["u", "v", "w"])
    inner = sub(tuple(scope) + (binder_var,))
    if kind == "down":
        return Down(binder_var, inner)
    if kind == "all":
        return ForallSvar(binder_var, inner)
    return ExistsSvar(binder_var, inner)


def polarized_formula(rng: random.Random, p: str, want: int, depth: int,
                      noms: Sequence[str] = ("i",), scope: tuple[str, ...] = (),
                      others: Sequence[str] = ()) -> Formula:
    """Base-language formula in which every occurrence of p has sign `want`
    (in the positive generation tree); contains at least one occurrence."""

    def go(d: int, sign: int, sc: tuple[str, ...]) -> Formula:
        if d <= 0 or rng.random() < 0.25:
            opts = ["pure"] * 2
            if sign == want:
                opts += ["p"] * 3
            if others:
                opts.append("other")
            kind = rng.choice(opts)
            if kind == "p":
                return PropVar(p)
            if kind == "other":
                return PropVar(rng.choice(list(others)))
            if sc and rng.random() < 0.3:
                return StateVar(rng.choice(sc))
            if noms and rng.random() < 0.5:
                return Nominal(rng.choice(list(noms)))
            return Top() if rng.random() < 0.5 else Bottom()
        kind = rng.choice(["not", "and", "or", "imp", "box", "dia", "at", "down"])
        if kind == "not":
            return Not(go(d - 1, -sign, sc))
        if kind == "and":
            return And(go(d - 1, sign, sc), go(d - 1, sign, sc))
        if kind == "or":
            return Or(go(d - 1, sign, sc), go(d - 1, sign, sc))
        if kind == "imp":
            return Implies(go(d - 1, -sign, sc), go(d - 1, sign, sc))
        if kind == "box":
            return Box(go(d - 1, sign, sc))
        if kind == "dia":
            return Dia(go(d - 1, sign, sc))
        if kind == "at":
            if sc and rng.random() < 0.4:
                return AtSvar(rng.choice(sc), go(d - 1, sign, sc))
            return AtNom(rng.choice(list(noms)), go(d - 1, sign, sc))
        v = rng.choice(["u", "v"])
        return Down(v, go(d - 1, sign, sc + (v,)))

    f = go(depth, 1, scope)
    if p not in prop_vars(f):
        occurrence = PropVar(p) if want > 0 else Not(PropVar(p))
        f = And(f, occurrence) if rng.random() < 0.5 else Or(f, occurrence)
    return f


# --- Sahlqvist instances -------------------------------------------------------

_OUTER_OPTIONS = {
    "+": ["or", "and", "dia", "not", "down", "at"],
    "-": ["and", "or", "box", "not", "down", "at", "imp"],
}
_INNER_OPTIONS = {
    "+": ["and", "box", "not", "down", "at"],
    "-": ["or", "dia", "not", "down", "at"],
}


def _uniform_filler(rng: random.Random, sign: str, eps: OrderType, depth: int,
                    noms: Sequence[str], scope: tuple[str, ...]) -> Formula:
    """A subtree with no eps-critical leaves: + positions only carry d-variables,
    - positions only 1-variables."""

    def leaf(s: str) -> Formula:
        want = DUAL if s == "+" else ONE
        candidates = [v for v, sg in zip(eps.variables, eps.signs) if sg == want]
        opts = ["pure"] * 2 + (["var"] * 2 if candidates else [])
        kind = rng.choice(opts)
        if kind == "var":
            return PropVar(rng.choice(candidates))
        if scope and rng.random() < 0.3:
            return StateVar(rng.choice(scope))
        if noms and rng.random() < 0.4:
            return Nominal(rng.choice(list(noms)))
        return Top() if rng.random() < 0.5 else Bottom()

    def go(d: int, s: str, sc: tuple[str, ...]) -> Formula:
        if d <= 0 or rng.random() < 0.35:
            return leaf(s)
        flip = "-" if s == "+" else "+"
        kind = rng.choice(["not", "and", "or", "imp", "box", "dia", "at", "down"])
        if kind == "not":
            return Not(go(d - 1, flip, sc))
        if kind == "and":
            return And(go(d - 1, s, sc), go(d - 1, s, sc))
        if kind == "or":
            return Or(go(d - 1, s, sc), go(d - 1, s, sc))
        if kind == "imp":
            return Implies(go(d - 1, flip, sc), go(d - 1, s, sc))
        if kind == "box":
            return Box(go(d - 1, s, sc))
        if kind == "dia":
            return Dia(go(d - 1, s, sc))
        if kind == "at":
            if sc and rng.random() < 0.4:
                return AtSvar(rng.choice(sc), go(d - 1, s, sc))
            return AtNom(rng.choice(list(noms)), go(d - 1, s, sc))
        v = rng.choice(["u", "v"])
        return Down(v, go(d - 1, s, sc + (v,)))

    return go(depth, sign, scope)


def _critical_spine(rng: random.Random, sign: str, eps: OrderType, depth: int,
                    mode: str, noms: Sequence[str], scope: tuple[str, ...],
                    binder_counter: list[int]) -> Formula:
    """Grow an excellent branch: outer nodes (possibly switching once to inner)
    then inner nodes, ending in a critical leaf when one is available."""
    want = ONE if sign == "+" else DUAL
    critical_vars = [v for v, sg in zip(eps.variables, eps.signs) if sg == want]
    if depth <= 0 or rng.random() < 0.2:
        if critical_vars:
            return PropVar(rng.choice(critical_vars))
        return _uniform_filler(rng, sign, eps, 1, noms, scope)
    if mode == "outer" and rng.random() < 0.4:
        mode = "inner"
    options = (_OUTER_OPTIONS if mode == "outer" else _INNER_OPTIONS)[sign]
    kind = rng.choice(options)
    flip = "-" if sign == "+" else "+"

    def spine(s: str, m: str, sc: tuple[str, ...] = scope) -> Formula:
        return _critical_spine(rng, s, eps, depth - 1, m, noms, sc, binder_counter)

    def filler(s: str, sc: tuple[str, ...] = scope) -> Formula:
        return _uniform_filler(rng, s, eps, max(depth - 2, 1), noms, sc)

    if kind == "not":
        return Not(spine(flip, mode))
    if kind == "box":
        return Box(spine(sign, mode))
    if kind == "dia":
        return Dia(spine(sign, mode))
    if kind == "and":
        a, b = spine(sign, mode), filler(sign)
        return And(a, b) if rng.random() < 0.5 else And(b, a)
    if kind == "or":
        a, b = spine(sign, mode), filler(sign)
        return Or(a, b) if rng.random() < 0.5 else Or(b, a)
    if kind == "imp":
        # sign is "-": continue through either child
        if rng.random() < 0.5:
            return Implies(spine("+", mode), filler("-"))
        return Implies(filler("+"), spine("-", mode))
    if kind == "at":
        if scope and rng.random() < 0.4:
            return AtSvar(rng.choice(scope), spine(sign, mode))
        return AtNom(rng.choice(list(noms)), spine(sign, mode))
    binder_counter[0] += 1
    v = f"x{binder_counter[0]}"
    return Down(v, spine(sign, mode, scope + (v,)))


def random_sahlqvist(rng: random.Random, max_depth: int = 5, max_vars: int = 3,
                     noms: Sequence[str] = ("i",)) -> tuple[Inequality, OrderType]:
    """A random eps-Sahlqvist inequality: critical branches are excellent by
    construction, non-critical material is eps-dual-uniform."""
    nvars = rng.randint(0, max_vars)
    variables = tuple(f"p{k + 1}" for k in range(nvars))
    eps = OrderType(variables, tuple(rng.choice((ONE, DUAL)) for _ in variables))
    counter = [0]
    lhs = _critical_spine(rng, "+", eps, rng.randint(1, max_depth), "outer",
                          noms, (), counter)
    if rng.random() < 0.3:
        rhs = _uniform_filler(rng, "-", eps, rng.randint(1, max_depth - 1), noms, ())
    else:
        rhs = _critical_spine(rng, "-", eps, rng.randint(1, max_depth), "outer",
                              noms, (), counter)
    return Inequality(lhs, rhs), eps


# --- rule-soundness instances ---------------------------------------------------


def _base(rng: random.Random, depth: int = 2, svars: Sequence[str] = ()) -> Formula:
    return random_formula(rng, depth, props=("p", "q"), noms=("i",), svars=svars)


def _pure(rng: random.Random, depth: int = 2, svars: Sequence[str] = ()) -> Formula:
    return random_formula(rng, depth, props=(), noms=("i", "j"), svars=svars)


def make_rule_instance(rule_id: str, rng: random.Random) -> RuleInstance:
    """Premise/conclusion statements for one engine rule, the conclusion being
    computed by the engine's own rule function wherever one exists."""
    mode = alba.RuleInstance_modes[rule_id]

    if rule_id.startswith("dist."):
        return _dist_instance(rule_id, rng, mode)
    if rule_id == "split.and":
        a, b, c = _base(rng), _base(rng), _base(rng)
        return RuleInstance(rule_id, (Inequality(a, And(b, c)),),
                            (Inequality(a, b), Inequality(a, c)), mode)
    if rule_id == "split.or":
        a, b, c = _base(rng), _base(rng), _base(rng)
        return RuleInstance(rule_id, (Inequality(Or(a, b), c),),
                            (Inequality(a, c), Inequality(b, c)), mode)
    if rule_id in ("elim.bot", "elim.top"):
        want_l, repl = (-1, Bottom()) if rule_id == "elim.bot" else (1, Top())
        lhs = polarized_formula(rng, "p", want_l, 2)
        rhs = polarized_formula(rng, "p", -want_l, 2)
        from .syntax import substitute_prop
        return RuleInstance(rule_id, (Inequality(lhs, rhs),),
                            (Inequality(substitute_prop(lhs, "p", repl),
                                        substitute_prop(rhs, "p", repl)),), mode)
    if rule_id == "first_approx":
        lhs, rhs = _base(rng), _base(rng)
        concl = QuasiInequality(
            (Inequality(Nominal("i0"), lhs), Inequality(rhs, Not(Nominal("i1")))),
            Inequality(Nominal("i0"), Not(Nominal("i1"))))
        return RuleInstance(rule_id, (Inequality(lhs, rhs),), (concl,), mode)
    if rule_id.startswith("approx.") or rule_id.startswith("resid1."):
        return _s1_instance(rule_id, rng, mode)
    if rule_id.startswith("resid.") or rule_id in ("split.mega",):
        return _s2_instance(rule_id, rng, mode)
    if rule_id.startswith("pack."):
        return _pack_instance(rule_id, rng, mode)
    if rule_id.startswith("ackermann."):
        return _ackermann_instance(rule_id, rng, mode)
    raise KeyError(f"no instance factory for rule {rule_id!r}")


_DIST_SHAPES = {
    "dist.dia.or": (1, lambda a, b, c: Dia(Or(a, b))),
    "dist.and.or": (1, lambda a, b, c: And(Or(a, b), c)),
    "dist.down.or": (1, lambda a, b, c: Down("u", Or(a, b))),
    "dist.at.or": (1, lambda a, b, c: AtNom("i", Or(a, b))),
    "dist.neg.and": (1, lambda a, b, c: Not(And(a, b))),
    "dist.box.and": (-1, lambda a, b, c: Box(And(a, b))),
    "dist.or.and": (-1, lambda a, b, c: Or(And(a, b), c)),
    "dist.down.and": (-1, lambda a, b, c: Down("u", And(a, b))),
    "dist.at.and": (-1, lambda a, b, c: AtNom("i", And(a, b))),
    "dist.neg.or": (-1, lambda a, b, c: Not(Or(a, b))),
    "dist.imp.or": (-1, lambda a, b, c: Implies(Or(a, b), c)),
    "dist.imp.and": (-1, lambda a, b, c: Implies(c, And(a, b))),
}


def _dist_instance(rule_id: str, rng: random.Random, mode: str) -> RuleInstance:
    sign, build = _DIST_SHAPES[rule_id]
    a, b, c = _base(rng), _base(rng), _base(rng)
    redex = build(a, b, c)
    hit = alba._dist_rewrite(redex, sign)
    assert hit is not None and hit[0] == rule_id, (rule_id, hit)
    other = _base(rng)
    if sign > 0:
        prem, concl = Inequality(redex, other), Inequality(hit[1], other)
    else:
        prem, concl = Inequality(other, redex), Inequality(other, hit[1])
    return RuleInstance(rule_id, (prem,), (concl,), mode)


def _lit(rng: random.Random, kind: str) -> Formula:
    if kind == "nom":
        return Nominal(rng.choice(("i", "j")))
    return StateVar("z")


def _s1_instance(rule_id: str, rng: random.Random, mode: str) -> RuleInstance:
    from .syntax import FreshNames
    eps = OrderType(("p", "q"), (ONE, ONE))
    fresh = FreshNames({"p", "q", "i", "j", "z", "u", "v"})
    alpha = polarized_formula(rng, "p", 1, 2)       # critical content under +
    nalpha = polarized_formula(rng, "p", -1, 2)     # critical content under -
    if rule_id.startswith("approx.dia"):
        lit = _lit(rng, rule_id.rsplit(".", 1)[1])
        item = MegaLeaf(Inequality(lit, Dia(alpha)))
        hit = alba._s1_approx_dia(item, eps, fresh)
    elif rule_id.startswith("approx.box"):
        lit = _lit(rng, rule_id.rsplit(".", 1)[1])
        item = MegaLeaf(Inequality(Box(nalpha), Not(lit)))
        hit = alba._s1_approx_box(item, eps, fresh)
    elif rule_id == "approx.at.right":
        lit = _lit(rng, rng.choice(("nom", "svar")))
        at = AtNom("j", alpha) if rng.random() < 0.5 else AtSvar("z", alpha)
        item = MegaLeaf(Inequality(lit, at))
        hit = alba._s1_approx_at_right(item, eps, fresh)
    elif rule_id == "approx.at.left":
        lit = _lit(rng, rng.choice(("nom", "svar")))
        at = AtNom("j", nalpha) if rng.random() < 0.5 else AtSvar("z", nalpha)
        item = MegaLeaf(Inequality(at, Not(lit)))
        hit = alba._s1_approx_at_left(item, eps, fresh)
    elif rule_id == "approx.down.right":
        lit = _lit(rng, rng.choice(("nom", "svar")))
        body = polarized_formula(rng, "p", 1, 2, scope=("w0",))
        item = MegaLeaf(Inequality(lit, Down("w0", body)))
        hit = alba._s1_approx_down_right(item, eps, fresh)
    elif rule_id == "approx.down.left":
        lit = _lit(rng, rng.choice(("nom", "svar")))
        body = polarized_formula(rng, "p", -1, 2, scope=("w0",))
        item = MegaLeaf(Inequality(Down("w0", body), Not(lit)))
        hit = alba._s1_approx_down_left(item, eps, fresh)
    elif rule_id == "approx.imp.left":
        lit = _lit(rng, rng.choice(("nom", "svar")))
        item = MegaLeaf(Inequality(Implies(alpha, _base(rng)), Not(lit)))
        hit = alba._s1_approx_imp(item, eps, fresh)
    elif rule_id == "resid1.neg.right":
        lit = _lit(rng, rng.choice(("nom", "svar")))
        item = MegaLeaf(Inequality(lit, Not(nalpha)))
        hit = alba._s1_resid_neg_right(item, eps, fresh)
    elif rule_id == "resid1.neg.left":
        lit = _lit(rng, rng.choice(("nom", "svar")))
        item = MegaLeaf(Inequality(Not(alpha), Not(lit)))
        hit = alba._s1_resid_neg_left(item, eps, fresh)
    else:
        raise KeyError(rule_id)
    assert hit is not None and hit[0] == rule_id, (rule_id, hit)
    return RuleInstance(rule_id, (item.ineq,),
                        tuple(m.ineq for m in hit[1]), mode)


def _s2_instance(rule_id: str, rng: random.Random, mode: str) -> RuleInstance:
    from .syntax import FreshNames, MegaConj
    fresh = FreshNames({"p", "q", "i", "j", "z", "u", "v", "w0"})
    pure = _pure(rng)
    impure = polarized_formula(rng, "p", rng.choice((1, -1)), 2)
    prefix: tuple[str, ...] = ("w0",) if rng.random() < 0.4 else ()
    if rule_id == "split.mega":
        m1 = MegaLeaf(Inequality(_base(rng), _base(rng)))
        m2 = MegaLeaf(Inequality(_base(rng), _base(rng)))
        item = MegaForall("w0", MegaConj(m1, m2))
        hit = alba._s2_rule(item, fresh)
        assert hit is not None and hit[0] == "split.mega"
        return RuleInstance(rule_id, (item,), tuple(hit[2]), mode)
    shapes = {
        "resid.box.right": Inequality(pure, Box(impure)),
        "resid.neg.right": Inequality(pure, Not(impure)),
        "resid.at.right": Inequality(pure, AtNom("j", impure) if rng.random() < 0.5
                                     else AtSvar("z", impure)),
        "resid.down.right": Inequality(pure, Down("u", polarized_formula(
            rng, "p", 1, 2, scope=("u",)))),
        "resid.dia.left": Inequality(Dia(impure), pure),
        "resid.neg.left": Inequality(Not(impure), pure),
        "resid.at.left": Inequality(AtNom("j", impure) if rng.random() < 0.5
                                    else AtSvar("z", impure), pure),
        "resid.down.left": Inequality(Down("u", polarized_formula(
            rng, "p", -1, 2, scope=("u",))), pure),
    }
    head = shapes[rule_id]
    item = MegaLeaf(head)
    for x in reversed(prefix):
        item = MegaForall(x, item)
    hit = alba._s2_rule(item, fresh)
    assert hit is not None and hit[0] == rule_id, (rule_id, hit)
    return RuleInstance(rule_id, (item,), tuple(hit[2]), mode)


def _pack_instance(rule_id: str, rng: random.Random, mode: str) -> RuleInstance:
    body_with_x = _pure(rng, svars=("w0",))
    if "w0" not in str(body_with_x):
        body_with_x = And(body_with_x, StateVar("w0"))
    free_side = _base(rng)
    if rule_id == "pack.forall":
        item = MegaForall("w0", MegaLeaf(Inequality(free_side, body_with_x)))
    else:
        item = MegaForall("w0", MegaLeaf(Inequality(body_with_x, free_side)))
    hit = alba._pack_rule(item)
    assert hit is not None and hit[0] == rule_id, (rule_id, hit)
    return RuleInstance(rule_id, (item,), (hit[1],), mode)


def _ackermann_instance(rule_id: str, rng: random.Random, mode: str) -> RuleInstance:
    from .syntax import FreshNames
    right = rule_id.endswith("right")
    eps = OrderType(("p",), (ONE if right else DUAL,))
    n_collect = rng.randint(0, 2)
    n_targets = rng.randint(1, 2)
    items: list = []
    for _ in range(n_collect):
        a = _pure(rng, depth=1)
        items.append(MegaLeaf(Inequality(a, PropVar("p")) if right
                              else Inequality(PropVar("p"), a)))
    for _ in range(n_targets):
        beta = polarized_formula(rng, "p", 1 if right else -1, 2)
        gamma = polarized_formula(rng, "p", -1 if right else 1, 2)
        head = MegaLeaf(Inequality(beta, gamma))
        items.append(MegaForall("w9", head) if rng.random() < 0.3 else head)
    if rng.random() < 0.5:
        items.append(MegaLeaf(Inequality(_pure(rng, depth=1), _pure(rng, depth=1))))
    system = alba.System(list(items), "i0", "i1",
                         FreshNames({"p", "i", "j", "u", "v", "w9"}))
    result = alba._try_eliminate(system, "p", eps)
    assert not isinstance(result, alba.Stuck), result
    return RuleInstance(rule_id, tuple(items), tuple(result), mode)

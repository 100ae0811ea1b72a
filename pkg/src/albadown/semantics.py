"""Finite Kripke frames/models, satisfaction, and exhaustive frame validity.

Worlds are dense integers 0..n-1. Truth sets are computed as bitmasks over
worlds, which keeps exhaustive valuation enumeration affordable at desk
scale; `satisfies` is the pointwise transcription of the satisfaction
tables and is kept independent of the bitmask path (the two are checked
against each other in the tests).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .syntax import (And, AtNom, AtSvar, BBox, BDia, Bottom, Box, Dia, Down,
                     ExistsSvar, ForallSvar, Formula, GlobalA, GlobalE,
                     Implies, Inequality, MegaConj, MegaForall, MegaInequality,
                     MegaLeaf, Nominal, Not, Or, PropVar, QuasiInequality,
                     QuasiUQInequality, StateVar, Statement, Top, UQInequality,
                     free_svars, nominals, prop_vars)


class BudgetExceeded(Exception):
    """Raised when an exhaustive enumeration would exceed its check budget."""

    def __init__(self, needed: int, budget: int):
        self.needed = needed
        self.budget = budget
        super().__init__(f"enumeration needs {needed} model checks, budget is {budget}")


@dataclass(frozen=True)
class KripkeFrame:
    size: int
    rel: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("a Kripke frame needs a nonempty domain")
        for a, b in self.rel:
            if not (0 <= a < self.size and 0 <= b < self.size):
                raise ValueError(f"edge {(a, b)} outside worlds 0..{self.size - 1}")
        object.__setattr__(self, "rel", frozenset(self.rel))

    @property
    def worlds(self) -> range:
        return range(self.size)

    @cached_property
    def succ_masks(self) -> tuple[int, ...]:
        masks = [0] * self.size
        for a, b in self.rel:
            masks[a] |= 1 << b
        return tuple(masks)

    @cached_property
    def pred_masks(self) -> tuple[int, ...]:
        masks = [0] * self.size
        for a, b in self.rel:
            masks[b] |= 1 << a
        return tuple(masks)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def successors(self, w: int) -> list[int]:
        return [v for v in self.worlds if (w, v) in self.rel]


def frame(size: int, edges: Iterable[tuple[int, int]] = ()) -> KripkeFrame:
    return KripkeFrame(size, frozenset(edges))


@dataclass
class Valuation:
    """prop_map: variable -> set of worlds; nom_map: nominal -> its unique world."""

    prop_map: Mapping[str, frozenset[int]] = field(default_factory=dict)
    nom_map: Mapping[str, int] = field(default_factory=dict)

    def prop(self, name: str) -> frozenset[int]:
        try:
            return self.prop_map[name]
        except KeyError:
            raise KeyError(f"valuation does not cover propositional variable {name!r}") from None

    def nom(self, name: str) -> int:
        try:
            return self.nom_map[name]
        except KeyError:
            raise KeyError(f"valuation does not cover nominal {name!r}") from None


Assignment = Mapping[str, int]


def assign_lookup(g: Assignment, name: str) -> int:
    try:
        return g[name]
    except KeyError:
        raise KeyError(f"assignment does not cover state variable {name!r}") from None


def satisfies(fr: KripkeFrame, val: Valuation, g: Assignment, w: int, f: Formula) -> bool:
    """Pointwise satisfaction, one clause per connective of the two tables."""
    if isinstance(f, PropVar):
        return w in val.prop(f.name)
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Top):
        return True
    if isinstance(f, Nominal):
        return val.nom(f.name) == w
    if isinstance(f, StateVar):
        return assign_lookup(g, f.name) == w
    if isinstance(f, Not):
        return not satisfies(fr, val, g, w, f.body)
    if isinstance(f, And):
        return satisfies(fr, val, g, w, f.left) and satisfies(fr, val, g, w, f.right)
    if isinstance(f, Or):
        return satisfies(fr, val, g, w, f.left) or satisfies(fr, val, g, w, f.right)
    if isinstance(f, Implies):
        return (not satisfies(fr, val, g, w, f.left)) or satisfies(fr, val, g, w, f.right)
    if isinstance(f, Box):
        return all(satisfies(fr, val, g, v, f.body)
                   for v in fr.worlds if fr.succ_masks[w] >> v & 1)
    if isinstance(f, Dia):
        return any(satisfies(fr, val, g, v, f.body)
                   for v in fr.worlds if fr.succ_masks[w] >> v & 1)
    if isinstance(f, AtNom):
        return satisfies(fr, val, g, val.nom(f.nom), f.body)
    if isinstance(f, AtSvar):
        return satisfies(fr, val, g, assign_lookup(g, f.svar), f.body)
    if isinstance(f, Down):
        return satisfies(fr, val, {**g, f.svar: w}, w, f.body)
    if isinstance(f, BBox):
        return all(satisfies(fr, val, g, v, f.body)
                   for v in fr.worlds if fr.pred_masks[w] >> v & 1)
    if isinstance(f, BDia):
        return any(satisfies(fr, val, g, v, f.body)
                   for v in fr.worlds if fr.pred_masks[w] >> v & 1)
    if isinstance(f, GlobalA):
        return all(satisfies(fr, val, g, v, f.body) for v in fr.worlds)
    if isinstance(f, GlobalE):
        return any(satisfies(fr, val, g, v, f.body) for v in fr.worlds)
    if isinstance(f, ForallSvar):
        return all(satisfies(fr, val, {**g, f.svar: v}, w, f.body) for v in fr.worlds)
    if isinstance(f, ExistsSvar):
        return any(satisfies(fr, val, {**g, f.svar: v}, w, f.body) for v in fr.worlds)
    raise TypeError(f"not a formula: {f!r}")


def truth_set(fr: KripkeFrame, val: Valuation, g: Assignment, f: Formula) -> int:
    """Bitmask of the worlds satisfying f; the fast path behind holds()."""
    full = fr.full_mask
    if isinstance(f, PropVar):
        mask = 0
        for w in val.prop(f.name):
            mask |= 1 << w
        return mask
    if isinstance(f, Bottom):
        return 0
    if isinstance(f, Top):
        return full
    if isinstance(f, Nominal):
        return 1 << val.nom(f.name)
    if isinstance(f, StateVar):
        return 1 << assign_lookup(g, f.name)
    if isinstance(f, Not):
        return full & ~truth_set(fr, val, g, f.body)
    if isinstance(f, And):
        return truth_set(fr, val, g, f.left) & truth_set(fr, val, g, f.right)
    if isinstance(f, Or):
        return truth_set(fr, val, g, f.left) | truth_set(fr, val, g, f.right)
    if isinstance(f, Implies):
        return (full & ~truth_set(fr, val, g, f.left)) | truth_set(fr, val, g, f.right)
    if isinstance(f, Box):
        s = truth_set(fr, val, g, f.body)
        return _box_mask(fr.succ_masks, s, full)
    if isinstance(f, Dia):
        s = truth_set(fr, val, g, f.body)
        return _dia_mask(fr.succ_masks, s, full)
    if isinstance(f, BBox):
        s = truth_set(fr, val, g, f.body)
        return _box_mask(fr.pred_masks, s, full)
    if isinstance(f, BDia):
        s = truth_set(fr, val, g, f.body)
        return _dia_mask(fr.pred_masks, s, full)
    if isinstance(f, AtNom):
        return full if truth_set(fr, val, g, f.body) >> val.nom(f.nom) & 1 else 0
    if isinstance(f, AtSvar):
        w = assign_lookup(g, f.svar)
        return full if truth_set(fr, val, g, f.body) >> w & 1 else 0
    if isinstance(f, Down):
        mask = 0
        for w in fr.worlds:
            if truth_set(fr, val, {**g, f.svar: w}, f.body) >> w & 1:
                mask |= 1 << w
        return mask
    if isinstance(f, GlobalA):
        return full if truth_set(fr, val, g, f.body) == full else 0
    if isinstance(f, GlobalE):
        return full if truth_set(fr, val, g, f.body) else 0
    if isinstance(f, ForallSvar):
        mask = full
        for v in fr.worlds:
            mask &= truth_set(fr, val, {**g, f.svar: v}, f.body)
            if not mask:
                break
        return mask
    if isinstance(f, ExistsSvar):
        mask = 0
        for v in fr.worlds:
            mask |= truth_set(fr, val, {**g, f.svar: v}, f.body)
            if mask == full:
                break
        return mask
    raise TypeError(f"not a formula: {f!r}")


def _box_mask(rel_masks: tuple[int, ...], s: int, full: int) -> int:
    mask = 0
    for w, m in enumerate(rel_masks):
        if m & ~s == 0:
            mask |= 1 << w
    return mask & full


def _dia_mask(rel_masks: tuple[int, ...], s: int, full: int) -> int:
    mask = 0
    for w, m in enumerate(rel_masks):
        if m & s:
            mask |= 1 << w
    return mask & full


def holds(fr: KripkeFrame, val: Valuation, g: Assignment, stmt: Statement) -> bool:
    """Global truth of a statement on a model with assignment."""
    if isinstance(stmt, Inequality):
        lhs = truth_set(fr, val, g, stmt.lhs)
        return lhs & ~truth_set(fr, val, g, stmt.rhs) == 0
    if isinstance(stmt, QuasiInequality):
        if all(holds(fr, val, g, p) for p in stmt.premises):
            return holds(fr, val, g, stmt.conclusion)
        return True
    if isinstance(stmt, MegaLeaf):
        return holds(fr, val, g, stmt.ineq)
    if isinstance(stmt, MegaConj):
        return holds(fr, val, g, stmt.left) and holds(fr, val, g, stmt.right)
    if isinstance(stmt, MegaForall):
        return all(holds(fr, val, {**g, stmt.svar: w}, stmt.body) for w in fr.worlds)
    if isinstance(stmt, UQInequality):
        def go(g2: Assignment, rest: tuple[str, ...]) -> bool:
            if not rest:
                return holds(fr, val, g2, stmt.body)
            x, tail = rest[0], rest[1:]
            return all(go({**g2, x: w}, tail) for w in fr.worlds)
        return go(dict(g), stmt.bound_svars)
    if isinstance(stmt, QuasiUQInequality):
        if all(holds(fr, val, g, p) for p in stmt.premises):
            return holds(fr, val, g, stmt.conclusion)
        return True
    raise TypeError(f"not a statement: {stmt!r}")


def statement_formulas(stmt: Statement) -> list[Formula]:
    if isinstance(stmt, Inequality):
        return [stmt.lhs, stmt.rhs]
    if isinstance(stmt, (QuasiInequality, QuasiUQInequality)):
        out: list[Formula] = []
        for p in stmt.premises:
            out.extend(statement_formulas(p))
        out.extend(statement_formulas(stmt.conclusion))
        return out
    if isinstance(stmt, MegaLeaf):
        return statement_formulas(stmt.ineq)
    if isinstance(stmt, MegaConj):
        return statement_formulas(stmt.left) + statement_formulas(stmt.right)
    if isinstance(stmt, MegaForall):
        return statement_formulas(stmt.body)
    if isinstance(stmt, UQInequality):
        return statement_formulas(stmt.body)
    raise TypeError(f"not a statement: {stmt!r}")


def statement_free_svars(stmt: Statement) -> set[str]:
    if isinstance(stmt, Inequality):
        return free_svars(stmt.lhs) | free_svars(stmt.rhs)
    if isinstance(stmt, (QuasiInequality, QuasiUQInequality)):
        out: set[str] = set()
        for p in stmt.premises:
            out |= statement_free_svars(p)
        return out | statement_free_svars(stmt.conclusion)
    if isinstance(stmt, MegaLeaf):
        return statement_free_svars(stmt.ineq)
    if isinstance(stmt, MegaConj):
        return statement_free_svars(stmt.left) | statement_free_svars(stmt.right)
    if isinstance(stmt, MegaForall):
        return statement_free_svars(stmt.body) - {stmt.svar}
    if isinstance(stmt, UQInequality):
        return statement_free_svars(stmt.body) - set(stmt.bound_svars)
    raise TypeError(f"not a statement: {stmt!r}")


def vocabulary(stmt: Statement) -> tuple[list[str], list[str], list[str]]:
    """(prop vars, nominals, free state variables) of a statement, order-stable."""
    props: list[str] = []
    noms: list[str] = []
    for f in statement_formulas(stmt):
        for p in prop_vars(f):
            if p not in props:
                props.append(p)
        for n in nominals(f):
            if n not in noms:
                noms.append(n)
    svars = sorted(statement_free_svars(stmt))
    return props, noms, svars


def all_valuations(fr: KripkeFrame, props: list[str], noms: list[str]):
    """Every valuation over the given vocabulary, deterministic order."""
    n = fr.size
    prop_choices = list(itertools.product(range(1 << n), repeat=len(props)))
    nom_choices = list(itertools.product(range(n), repeat=len(noms)))
    for pm in prop_choices:
        prop_map = {p: frozenset(w for w in range(n) if m >> w & 1)
                    for p, m in zip(props, pm)}
        for nm in nom_choices:
            yield Valuation(prop_map, dict(zip(noms, nm)))


def all_assignments(fr: KripkeFrame, svars: list[str]):
    for ws in itertools.product(range(fr.size), repeat=len(svars)):
        yield dict(zip(svars, ws))


def frame_valid(fr: KripkeFrame, stmt: Statement,
                vocab: tuple[list[str], list[str], list[str]] | None = None,
                budget: int = 10**8) -> bool:
    """Exhaustive validity: holds under every valuation and assignment.

    Refuses with BudgetExceeded when the enumeration would exceed `budget`
    model checks.
    """
    props, noms, svars = vocab if vocab is not None else vocabulary(stmt)
    n = fr.size
    needed = (1 << n) ** len(props) * n ** len(noms) * n ** len(svars)
    if needed > budget:
        raise BudgetExceeded(needed, budget)
    for val in all_valuations(fr, props, noms):
        for g in all_assignments(fr, svars):
            if not holds(fr, val, g, stmt):
                return False
    return True


# --- model fixture text format -------------------------------------------
#
#   worlds: 3
#   edges: (0,1) (1,2)
#   prop p: {0, 2}
#   nom 'i: 1
#   svar $x: 0


def parse_model(text: str) -> tuple[KripkeFrame, Valuation, dict[str, int]]:
    size = None
    edges: list[tuple[int, int]] = []
    prop_map: dict[str, frozenset[int]] = {}
    nom_map: dict[str, int] = {}
    g: dict[str, int] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        rest = rest.strip()
        if key == "worlds":
            size = int(rest)
        elif key == "edges":
            for m in re.finditer(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)", rest):
                edges.append((int(m.group(1)), int(m.group(2))))
        elif key.startswith("prop "):
            name = key[5:].strip()
            inner = rest.strip()
            if not (inner.startswith("{") and inner.endswith("}")):
                raise ValueError(f"bad prop line: {raw!r}")
            body = inner[1:-1].strip()
            worlds = frozenset(int(t) for t in body.split(",") if t.strip()) if body else frozenset()
            prop_map[name] = worlds
        elif key.startswith("nom "):
            name = key[4:].strip()
            if not name.startswith("'"):
                raise ValueError(f"bad nominal line (missing sigil): {raw!r}")
            nom_map[name[1:]] = int(rest)
        elif key.startswith("svar "):
            name = key[5:].strip()
            if not name.startswith("$"):
                raise ValueError(f"bad state-variable line (missing sigil): {raw!r}")
            g[name[1:]] = int(rest)
        else:
            raise ValueError(f"unrecognised model line: {raw!r}")
    if size is None:
        raise ValueError("model text has no 'worlds:' line")
    return KripkeFrame(size, frozenset(edges)), Valuation(prop_map, nom_map), g


def format_model(fr: KripkeFrame, val: Valuation | None = None,
                 g: Assignment | None = None) -> str:
    lines = [f"worlds: {fr.size}"]
    lines.append("edges: " + " ".join(f"({a},{b})" for a, b in sorted(fr.rel)))
    if val is not None:
        for p in sorted(val.prop_map):
            inner = ", ".join(str(w) for w in sorted(val.prop_map[p]))
            lines.append(f"prop {p}: {{{inner}}}")
        for n in sorted(val.nom_map):
            lines.append(f"nom '{n}: {val.nom_map[n]}")
    if g:
        for x in sorted(g):
            lines.append(f"svar ${x}: {g[x]}")
    return "\n".join(lines)

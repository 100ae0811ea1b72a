"""Signed generation trees, order-types, and the Sahlqvist-shape classifiers.

A node of a signed tree carries the sign inherited from the root (+ for the
left side of an inequality, - for the right side) and its outer/inner
capability:

    outer:  +or +and +dia +not +down +at   /  -and -or -box -not -down -at -imp
    inner:  +and +box +not +down +at       /  -or -dia -not -down -at

@ and the binder are both outer and inner for either sign; implication is
outer only negatively; the inverse/global/quantifier connectives are
neither. A branch (leaf up to root) is excellent when it splits into an
inner segment at the leaf followed by an outer segment at the root, leaf
nodes excepted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .syntax import (And, AtNom, AtSvar, BBox, BDia, Bottom, Box, Dia, Down,
                     ExistsSvar, ForallSvar, Formula, GlobalA, GlobalE,
                     Implies, Inequality, Nominal, Not, Or, PropVar, StateVar,
                     Top, ineq_prop_vars)

ONE = "1"
DUAL = "d"


@dataclass(frozen=True)
class OrderType:
    """An assignment of 1/d to each propositional variable of an inequality."""

    variables: tuple[str, ...]
    signs: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.variables) != len(self.signs):
            raise ValueError("order-type arity mismatch")
        for s in self.signs:
            if s not in (ONE, DUAL):
                raise ValueError(f"order-type entries must be '1' or 'd', got {s!r}")

    def of(self, p: str) -> str:
        try:
            return self.signs[self.variables.index(p)]
        except ValueError:
            raise KeyError(f"order-type is not defined on {p!r}") from None

    def covers(self, p: str) -> bool:
        return p in self.variables

    def dual(self) -> "OrderType":
        flip = {ONE: DUAL, DUAL: ONE}
        return OrderType(self.variables, tuple(flip[s] for s in self.signs))

    @classmethod
    def from_map(cls, mapping: dict[str, str], order: list[str] | None = None) -> "OrderType":
        variables = tuple(order if order is not None else sorted(mapping))
        return cls(variables, tuple(mapping[v] for v in variables))

    def __str__(self) -> str:
        return "(" + ", ".join(f"{v}={s}" for v, s in zip(self.variables, self.signs)) + ")"


_LABELS = {
    Not: "not", And: "and", Or: "or", Implies: "imp", Box: "box", Dia: "dia",
    BBox: "bbox", BDia: "bdia", GlobalA: "A", GlobalE: "E",
    Down: "down", ForallSvar: "all", ExistsSvar: "ex",
    AtNom: "at", AtSvar: "at",
}

_OUTER = {("+", "or"), ("+", "and"), ("+", "dia"), ("+", "not"), ("+", "down"), ("+", "at"),
          ("-", "and"), ("-", "or"), ("-", "box"), ("-", "not"), ("-", "down"), ("-", "at"),
          ("-", "imp")}
_INNER = {("+", "and"), ("+", "box"), ("+", "not"), ("+", "down"), ("+", "at"),
          ("-", "or"), ("-", "dia"), ("-", "not"), ("-", "down"), ("-", "at")}


@dataclass(frozen=True)
class SignedNode:
    sign: str                       # "+" or "-"
    label: str                      # connective tag, or "prop:p" / "nom:i" / "svar:x" / "top" / "bot"
    formula: Formula
    children: tuple["SignedNode", ...]
    is_leaf: bool
    outer: bool
    inner: bool

    @property
    def tag(self) -> str:
        if self.is_leaf:
            return "leaf"
        if self.outer and self.inner:
            return "both"
        if self.outer:
            return "outer"
        if self.inner:
            return "inner"
        return "neither"

    def __str__(self) -> str:
        return f"{self.sign}{self.label}"


@dataclass(frozen=True)
class Branch:
    """Path from a signed leaf up to the root; nodes[0] is the leaf."""

    nodes: tuple[SignedNode, ...]

    @property
    def leaf(self) -> SignedNode:
        return self.nodes[0]


def build_signed_tree(f: Formula, root_sign: str = "+") -> SignedNode:
    if root_sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {root_sign!r}")

    def leaf(label: str) -> SignedNode:
        return SignedNode(root_sign, label, f, (), True, False, False)

    if isinstance(f, PropVar):
        return leaf(f"prop:{f.name}")
    if isinstance(f, Nominal):
        return leaf(f"nom:{f.name}")
    if isinstance(f, StateVar):
        return leaf(f"svar:{f.name}")
    if isinstance(f, Top):
        return leaf("top")
    if isinstance(f, Bottom):
        return leaf("bot")

    flip = "-" if root_sign == "+" else "+"
    if isinstance(f, Not):
        kids = (build_signed_tree(f.body, flip),)
    elif isinstance(f, Implies):
        kids = (build_signed_tree(f.left, flip), build_signed_tree(f.right, root_sign))
    elif isinstance(f, (And, Or)):
        kids = (build_signed_tree(f.left, root_sign), build_signed_tree(f.right, root_sign))
    else:
        # all remaining connectives pass the sign through their single child;
        # the @-index is part of the label, not a child
        kids = (build_signed_tree(f.body, root_sign),)

    label = _LABELS[type(f)]
    if isinstance(f, AtNom):
        label = f"at:'{f.nom}"
    elif isinstance(f, AtSvar):
        label = f"at:${f.svar}"
    elif isinstance(f, (Down, ForallSvar, ExistsSvar)):
        label = f"{label}:{f.svar}"
    cls = label.split(":", 1)[0]
    key = (root_sign, "at" if cls == "at" else cls)
    return SignedNode(root_sign, label, f, kids, False, key in _OUTER, key in _INNER)


def branches(tree: SignedNode) -> list[Branch]:
    out: list[Branch] = []

    def walk(node: SignedNode, path: tuple[SignedNode, ...]) -> None:
        if node.is_leaf:
            out.append(Branch((node,) + path))
            return
        for c in node.children:
            walk(c, (node,) + path)

    walk(tree, ())
    return out


def is_critical_leaf(node: SignedNode, eps: OrderType) -> bool:
    if not node.is_leaf or not node.label.startswith("prop:"):
        return False
    p = node.label[5:]
    if not eps.covers(p):
        return False
    want = "+" if eps.of(p) == ONE else "-"
    return node.sign == want


def critical_branches(tree: SignedNode, eps: OrderType) -> list[Branch]:
    return [b for b in branches(tree) if is_critical_leaf(b.leaf, eps)]


def is_excellent(branch: Branch) -> bool:
    """inner* then outer*, skipping leaf nodes; any split point will do."""
    interior = [n for n in branch.nodes if not n.is_leaf]
    for k in range(len(interior) + 1):
        if all(n.inner for n in interior[:k]) and all(n.outer for n in interior[k:]):
            return True
    return False


def tree_agrees(tree: SignedNode, eps: OrderType) -> bool:
    """Every propositional leaf of the signed tree is eps-critical."""
    return all(is_critical_leaf(b.leaf, eps)
               for b in branches(tree) if b.leaf.label.startswith("prop:"))


def is_tree_epsilon_sahlqvist(tree: SignedNode, eps: OrderType) -> bool:
    return all(is_excellent(b) for b in critical_branches(tree, eps))


def is_epsilon_sahlqvist(ineq: Inequality, eps: OrderType) -> bool:
    """Every eps-critical branch of +lhs and -rhs is excellent."""
    for p in ineq_prop_vars(ineq):
        if not eps.covers(p):
            raise KeyError(f"order-type is not defined on {p!r}")
    return (is_tree_epsilon_sahlqvist(build_signed_tree(ineq.lhs, "+"), eps)
            and is_tree_epsilon_sahlqvist(build_signed_tree(ineq.rhs, "-"), eps))


MAX_ORDER_TYPE_VARS = 8


def find_order_types(ineq: Inequality) -> list[OrderType]:
    """All passing order-types over the inequality's variable tuple.

    Variables are taken in first-occurrence order (lhs then rhs);
    candidates are enumerated lexicographically with 1 < d.
    """
    variables = tuple(ineq_prop_vars(ineq))
    if len(variables) > MAX_ORDER_TYPE_VARS:
        raise ValueError(f"too many propositional variables ({len(variables)} > "
                         f"{MAX_ORDER_TYPE_VARS}) for order-type enumeration")
    found = []
    for signs in itertools.product((ONE, DUAL), repeat=len(variables)):
        eps = OrderType(variables, signs)
        if is_epsilon_sahlqvist(ineq, eps):
            found.append(eps)
    return found


def is_sahlqvist(ineq: Inequality) -> bool:
    return bool(find_order_types(ineq))


def is_definite(tree: SignedNode, eps: OrderType) -> bool:
    """eps-Sahlqvist with no +or/-and anywhere on a critical branch.

    Such nodes are outer-only, so any occurrence would sit in the outer
    segment, which is exactly what the definition forbids.
    """
    banned = {("+", "or"), ("-", "and")}
    for b in critical_branches(tree, eps):
        if not is_excellent(b):
            return False
        for n in b.nodes:
            if not n.is_leaf and (n.sign, n.label.split(":", 1)[0]) in banned:
                return False
    return True


def is_inner(tree: SignedNode, eps: OrderType) -> bool:
    """Critical branches consist of inner-capable nodes only (outer segment empty)."""
    return all(all(n.inner for n in b.nodes if not n.is_leaf)
               for b in critical_branches(tree, eps))


def is_uniform(ineq: Inequality, eps: OrderType) -> bool:
    """Every occurrence of each variable carries exactly the sign eps dictates."""
    return (tree_agrees(build_signed_tree(ineq.lhs, "+"), eps)
            and tree_agrees(build_signed_tree(ineq.rhs, "-"), eps))

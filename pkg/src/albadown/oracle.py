"""Brute-force verification at desk scale.

check_correspondence certifies that an inequality and a first-order
sentence define the same class of frames by enumerating every frame up to
n_max worlds, exhausting valuations on the modal side and predicate
interpretations on the first-order side. check_rule_soundness verifies a
single rewrite-rule instance in the mode appropriate to the rule:

  model      holds-equivalence on random models (pointwise rules)
  valuation  equality of the satisfying-(V,g) sets projected onto the
             vocabulary shared by premise and conclusion, exhaustively per
             frame (rules that introduce or discard names)
  frame      frame-validity equivalence (rules sound only under the
             quantification over all valuations)
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union

from .fol import FOFormula, fo_eval, fo_preds, free_fo_vars, fo_constants
from .semantics import (BudgetExceeded, KripkeFrame, Valuation,
                        all_assignments, all_valuations, format_model,
                        frame_valid, holds, vocabulary)
from .syntax import Inequality, Statement

MAX_ENUM_WORLDS = 5


def enumerate_frames(n_max: int) -> Iterator[KripkeFrame]:
    """Every frame with 1..n_max worlds, one per relation bitmask, in order."""
    if not 1 <= n_max <= MAX_ENUM_WORLDS:
        raise ValueError(f"n_max must be within 1..{MAX_ENUM_WORLDS}, got {n_max}")
    for n in range(1, n_max + 1):
        pairs = [(a, b) for a in range(n) for b in range(n)]
        for mask in range(1 << (n * n)):
            rel = frozenset(p for j, p in enumerate(pairs) if mask >> j & 1)
            yield KripkeFrame(n, rel)


def frame_count(n_max: int) -> int:
    return sum(1 << (n * n) for n in range(1, n_max + 1))


@dataclass(frozen=True)
class Equivalent:
    frames_checked: int

    def __str__(self) -> str:
        return f"Equivalent on all {self.frames_checked} frames"


@dataclass(frozen=True)
class Counterexample:
    frame: KripkeFrame
    modal_valid: bool
    fo_valid: bool

    def __str__(self) -> str:
        return (f"Counterexample (inequality valid: {self.modal_valid}, "
                f"sentence valid: {self.fo_valid}):\n{format_model(self.frame)}")


Verdict = Union[Equivalent, Counterexample]


def fo_frame_valid(fr: KripkeFrame, sentence: FOFormula, budget: int = 10**8) -> bool:
    """Validity of a first-order sentence on a frame: every interpretation of
    its unary predicates satisfies it. Individual variables must be closed."""
    if free_fo_vars(sentence):
        raise ValueError(f"not a sentence, free variables: {free_fo_vars(sentence)}")
    if fo_constants(sentence):
        raise ValueError(f"not closed, constants remain: {fo_constants(sentence)}")
    preds = fo_preds(sentence)
    n = fr.size
    needed = (1 << n) ** len(preds)
    if needed > budget:
        raise BudgetExceeded(needed, budget)
    for masks in itertools.product(range(1 << n), repeat=len(preds)):
        interp = {p: frozenset(w for w in range(n) if m >> w & 1)
                  for p, m in zip(preds, masks)}
        if not fo_eval(fr, interp, {}, sentence):
            return False
    return True


def check_correspondence(ineq: Inequality, fo: FOFormula, n_max: int = 3,
                         budget: int = 10**8) -> Verdict:
    """First mismatching frame between inequality-validity and sentence-truth,
    or Equivalent."""
    vocab = vocabulary(ineq)
    checked = 0
    for fr in enumerate_frames(n_max):
        try:
            modal = frame_valid(fr, ineq, vocab, budget)
            fo_ok = fo_frame_valid(fr, fo, budget)
        except BudgetExceeded as exc:
            raise BudgetExceeded(exc.needed, exc.budget) from RuntimeError(
                f"budget exceeded on frame:\n{format_model(fr)}")
        if modal != fo_ok:
            return Counterexample(fr, modal, fo_ok)
        checked += 1
    return Equivalent(checked)


# --- per-rule soundness -------------------------------------------------------


@dataclass(frozen=True)
class RuleInstance:
    rule: str
    premises: tuple[Statement, ...]
    conclusions: tuple[Statement, ...]
    mode: str  # "model" | "valuation" | "frame"

    def __post_init__(self) -> None:
        if self.mode not in ("model", "valuation", "frame"):
            raise ValueError(f"unknown soundness mode {self.mode!r}")


@dataclass(frozen=True)
class RuleViolation:
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"rule {self.rule} violated:\n{self.detail}"


RuleVerdict = Union[Equivalent, RuleViolation]


def _union_vocab(stmts: Sequence[Statement]) -> tuple[list[str], list[str], list[str]]:
    props: list[str] = []
    noms: list[str] = []
    svars: list[str] = []
    for s in stmts:
        ps, ns, xs = vocabulary(s)
        for p in ps:
            if p not in props:
                props.append(p)
        for n in ns:
            if n not in noms:
                noms.append(n)
        for x in xs:
            if x not in svars:
                svars.append(x)
    return props, noms, svars


def _sat_projections(fr: KripkeFrame, stmts: Sequence[Statement],
                     vocab: tuple[list[str], list[str], list[str]],
                     shared: tuple[list[str], list[str], list[str]]) -> set[tuple]:
    props, noms, svars = vocab
    sprops, snoms, ssvars = shared
    out: set[tuple] = set()
    for val in all_valuations(fr, props, noms):
        for g in all_assignments(fr, svars):
            if all(holds(fr, val, g, s) for s in stmts):
                key = (tuple(frozenset(val.prop_map[p]) for p in sprops),
                       tuple(val.nom_map[n] for n in snoms),
                       tuple(g[x] for x in ssvars))
                out.add(key)
    return out


def _random_model(rng: random.Random, max_worlds: int,
                  vocab: tuple[list[str], list[str], list[str]]):
    props, noms, svars = vocab
    n = rng.randint(1, max_worlds)
    rel = frozenset((a, b) for a in range(n) for b in range(n) if rng.random() < 0.5)
    fr = KripkeFrame(n, rel)
    val = Valuation({p: frozenset(w for w in range(n) if rng.random() < 0.5)
                     for p in props},
                    {nm: rng.randrange(n) for nm in noms})
    g = {x: rng.randrange(n) for x in svars}
    return fr, val, g


def check_rule_soundness(instance: RuleInstance, n_max: int = 2,
                         samples: int = 200, seed: int = 0) -> RuleVerdict:
    vocab = _union_vocab(instance.premises + instance.conclusions)
    if instance.mode == "model":
        rng = random.Random(seed)
        for _ in range(samples):
            fr, val, g = _random_model(rng, 4, vocab)
            left = all(holds(fr, val, g, s) for s in instance.premises)
            right = all(holds(fr, val, g, s) for s in instance.conclusions)
            if left != right:
                detail = (f"premises hold: {left}, conclusions hold: {right}\n"
                          f"{format_model(fr, val, g)}")
                return RuleViolation(instance.rule, detail)
        return Equivalent(samples)

    checked = 0
    if instance.mode == "frame":
        for fr in enumerate_frames(n_max):
            left = all(frame_valid(fr, s) for s in instance.premises)
            right = all(frame_valid(fr, s) for s in instance.conclusions)
            if left != right:
                detail = (f"premises valid: {left}, conclusions valid: {right}\n"
                          f"{format_model(fr)}")
                return RuleViolation(instance.rule, detail)
            checked += 1
        return Equivalent(checked)

    # valuation mode: set-of-satisfying-(V,g) equality after projecting onto
    # the shared vocabulary (the existential-witness formulation)
    pv = _union_vocab(instance.premises)
    cv = _union_vocab(instance.conclusions)
    shared = ([p for p in pv[0] if p in cv[0]],
              [n for n in pv[1] if n in cv[1]],
              [x for x in pv[2] if x in cv[2]])
    for fr in enumerate_frames(n_max):
        sp = _sat_projections(fr, instance.premises, pv, shared)
        sc = _sat_projections(fr, instance.conclusions, cv, shared)
        if sp != sc:
            missing = sp.symmetric_difference(sc)
            detail = (f"projected satisfying sets differ ({len(missing)} points) "
                      f"on frame:\n{format_model(fr)}")
            return RuleViolation(instance.rule, detail)
        checked += 1
    return Equivalent(checked)

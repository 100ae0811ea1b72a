"""Command-line front end: classify, run, translate, verify.

Exit codes: 0 ok, 1 parse error, 2 the rewrite engine got stuck,
3 the oracle found a counterexample frame.
"""

from __future__ import annotations

import argparse
import json
import sys

from .alba import AlbaFailure, AlbaResult, AlbaSuccess, run_alba
from .fol import fo_to_sexpr, fo_to_text, st_formula, st_statement
from .oracle import Counterexample, check_correspondence
from .sgt import OrderType, find_order_types
from .syntax import (Formula, Inequality, ParseError, ineq_prop_vars, parse,
                     statement_to_text)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_STUCK = 2
EXIT_COUNTEREXAMPLE = 3


def _read_input(args: argparse.Namespace) -> str:
    if args.file:
        with open(args.file, encoding="utf-8") as fh:
            return fh.read().strip()
    if args.input and args.input != "-":
        return args.input
    return sys.stdin.read().strip()


def _parse_ineq(text: str) -> Inequality:
    result = parse(text)
    if isinstance(result, Formula):
        raise ParseError("expected an inequality (missing '<=')", 1, 1)
    return result


def _parse_order_type(spec: str, ineq: Inequality) -> OrderType:
    variables = tuple(ineq_prop_vars(ineq))
    signs = tuple(s.strip() for s in spec.split(","))
    if len(signs) != len(variables):
        raise ValueError(f"order-type has {len(signs)} entries for "
                         f"{len(variables)} variables {variables}")
    return OrderType(variables, signs)


def _epsilon_json(eps: OrderType) -> list[list[str]]:
    return [[v, s] for v, s in zip(eps.variables, eps.signs)]


def _step_json(step) -> dict:
    return {"stage": step.stage, "rule": step.rule, "path": step.path,
            "before": list(step.before), "after": list(step.after)}


def trace_json(result: AlbaResult) -> dict:
    trace = result.trace
    doc: dict = {
        "input": trace.input_text,
        "epsilon": _epsilon_json(trace.epsilon),
        "strategy": trace.strategy,
        "preprocess": {
            "steps": [_step_json(s) for s in trace.steps if s.stage == "stage1"],
            "result": ([statement_to_text(b.preprocessed) for b in result.branches]
                       if isinstance(result, AlbaSuccess) else []),
        },
        "branches": [],
        "fo_text": "",
    }
    if isinstance(result, AlbaSuccess):
        for bi, branch in enumerate(result.branches):
            doc["branches"].append({
                "preprocessed": statement_to_text(branch.preprocessed),
                "steps": [_step_json(s) for s in trace.steps
                          if s.branch == bi and s.stage != "stage1"],
                "reduce": [statement_to_text(m) for m in branch.reduce],
                "quasi": statement_to_text(branch.quasi),
                "fo": fo_to_text(branch.fo),
            })
        doc["fo_text"] = fo_to_text(result.fo)
    else:
        doc["failure"] = {
            "branch": result.branch_index,
            "variable": result.stuck.variable,
            "reasons": list(result.stuck.reasons),
            "system": [statement_to_text(m) for m in result.system_items],
        }
    return doc


def _print_trace_text(result: AlbaResult, out) -> None:
    for step in result.trace.steps:
        where = "preprocess" if step.stage == "stage1" else f"branch {step.branch}"
        print(f"[{where}] {step.stage} {step.rule} @ {step.path}", file=out)
        print("    {" + ", ".join(step.after) + "}", file=out)


def cmd_classify(args: argparse.Namespace) -> int:
    try:
        ineq = _parse_ineq(_read_input(args))
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    order_types = find_order_types(ineq)
    doc = {"sahlqvist": bool(order_types),
           "variables": list(ineq_prop_vars(ineq)),
           "order_types": [list(eps.signs) for eps in order_types]}
    print(json.dumps(doc))
    return EXIT_OK


def _run(args: argparse.Namespace) -> tuple[AlbaResult | None, int]:
    try:
        ineq = _parse_ineq(_read_input(args))
        eps = None
        if getattr(args, "order_type", None):
            eps = _parse_order_type(args.order_type, ineq)
    except (ParseError, ValueError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return None, EXIT_PARSE
    result = run_alba(ineq, eps, simplify=getattr(args, "simplify", False))
    return result, EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    result, code = _run(args)
    if result is None:
        return code
    if args.trace == "json":
        print(json.dumps(trace_json(result), indent=2))
        return EXIT_OK if result.success else EXIT_STUCK
    if isinstance(result, AlbaFailure):
        print(f"failure on branch {result.branch_index}: {result.stuck}",
              file=sys.stderr)
        if args.trace == "text":
            _print_trace_text(result, sys.stderr)
        return EXIT_STUCK
    assert isinstance(result, AlbaSuccess)
    print(f"epsilon: {result.epsilon}")
    if args.trace == "text":
        _print_trace_text(result, sys.stdout)
    for bi, branch in enumerate(result.branches):
        print(f"branch {bi}: {statement_to_text(branch.preprocessed)}")
        for m in branch.reduce:
            print(f"  reduce: {statement_to_text(m)}")
        print(f"  quasi: {statement_to_text(branch.quasi)}")
        print(f"  fo: {fo_to_text(branch.fo)}")
    print(f"fo: {fo_to_text(result.fo)}")
    return EXIT_OK


def cmd_translate(args: argparse.Namespace) -> int:
    try:
        thing = parse(_read_input(args))
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    fo = st_statement(thing) if isinstance(thing, Inequality) else st_formula("x", thing)
    print(fo_to_sexpr(fo) if args.sexpr else fo_to_text(fo))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    result, code = _run(args)
    if result is None:
        return code
    if isinstance(result, AlbaFailure):
        print(f"failure on branch {result.branch_index}: {result.stuck}",
              file=sys.stderr)
        return EXIT_STUCK
    assert isinstance(result, AlbaSuccess)
    print(f"epsilon: {result.epsilon}")
    print(f"fo: {fo_to_text(result.fo)}")
    verdict = check_correspondence(result.ineq, result.fo, n_max=args.max_worlds)
    print(str(verdict))
    if isinstance(verdict, Counterexample):
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="albadown",
        description="First-order frame correspondents for hybrid logic with binder")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("input", nargs="?", default=None,
                       help="inequality text ('-' or omitted reads stdin)")
        p.add_argument("-f", "--file", default=None, help="read the input from a file")

    p = sub.add_parser("classify", help="Sahlqvist check and passing order-types")
    add_common(p)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("run", help="compute the first-order correspondent")
    add_common(p)
    p.add_argument("--order-type", default=None,
                   help="comma-separated 1/d entries, variables in first-occurrence order")
    p.add_argument("--trace", choices=("text", "json"), default=None)
    p.add_argument("--simplify", action="store_true",
                   help="constant-fold formulas after substitutions")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("translate", help="standard translation only, no rewriting")
    add_common(p)
    p.add_argument("--sexpr", action="store_true", help="s-expression output")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("verify", help="certify the correspondent on all small frames")
    add_common(p)
    p.add_argument("--order-type", default=None)
    p.add_argument("--simplify", action="store_true")
    p.add_argument("--max-worlds", type=int, default=3)
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())

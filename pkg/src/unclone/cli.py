"""``minij``: command-line driver for parsing, analysis, planning and rewriting.

Exit codes: 0 success, 1 syntax or binding error, 2 precondition violated
while applying a plan, 3 clone not removable, 4 verification failed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__
from .errors import MiniJError, PreconditionViolated
from .interp import DEFAULT_FUEL, equivalent, from_json, run
from .pdg import build_pdg, to_dot, to_json
from .plan import DEFAULT_BUDGET, UTILITY_CLASS, FailureReport, synthesize_plan
from .rewrite import apply_plan, write_trace
from .syntax import ast as A
from .syntax import parse_program, print_canonical
from .syntax.ast import MethodRef
from .syntax.binding import check_program
from .unify import RefactoringSet, SignatureFailure, best_alignment, mapping_report, report_json

EXIT_OK, EXIT_SYNTAX, EXIT_PRECONDITION, EXIT_NOT_REMOVABLE, EXIT_VERIFY = 0, 1, 2, 3, 4


@dataclasses.dataclass
class Config:
    refactorings: RefactoringSet = dataclasses.field(default_factory=RefactoringSet)
    budget: int = DEFAULT_BUDGET
    utility: str = UTILITY_CLASS
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


def ast_data(node):
    """Plain JSON-ready view of an AST node."""
    if isinstance(node, A.TypeRef):
        return str(node)
    if isinstance(node, tuple):
        return [ast_data(x) for x in node]
    if dataclasses.is_dataclass(node):
        out = {"node": type(node).__name__}
        for f in dataclasses.fields(node):
            if f.name == "col":
                continue
            out[f.name] = ast_data(getattr(node, f.name))
        return out
    return node


def _refactorings(text):
    if text is None:
        return RefactoringSet()
    names = [t.strip().replace("-", "_") for t in text.split(",") if t.strip()]
    return RefactoringSet.only(*names)


def _config(args) -> Config:
    seed = args.seed
    env = os.environ.get("UNCLONE_SEED")
    if env:
        seed = int(env)
    return Config(_refactorings(getattr(args, "refactorings", None)), getattr(args, "budget", DEFAULT_BUDGET),
                  getattr(args, "utility", UTILITY_CLASS), getattr(args, "trials", 100), seed)


def _load(path):
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def _out(text):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_parse(args, cfg):
    p = _load(args.file)
    _out(json.dumps(ast_data(p), indent=2))
    return EXIT_OK


def cmd_pdg(args, cfg):
    p = _load(args.file)
    g = build_pdg(p, MethodRef.parse(args.method))
    _out(to_json(g) if args.json else to_dot(g))
    return EXIT_OK


def cmd_unify(args, cfg):
    p = _load(args.file)
    typer = check_program(p)
    ra, rb = MethodRef.parse(args.a), MethodRef.parse(args.b)
    ga, gb = build_pdg(p, ra, typer), build_pdg(p, rb, typer)
    try:
        sm, m = best_alignment(ga, gb, cfg.refactorings, typer)
    except SignatureFailure as e:
        _out(json.dumps({"a": str(ra), "b": str(rb), "signature_failure": {"position": e.position,
                                                                          "reason": e.reason}}, indent=2))
        return EXIT_NOT_REMOVABLE
    _out(report_json(mapping_report(ga, gb, m, cfg.refactorings, typer, sm.permutation)))
    return EXIT_OK


def _plan(args, cfg):
    p = _load(args.file)
    return p, synthesize_plan(p, args.a, args.b, cfg.refactorings, cfg.budget, cfg.utility)


def cmd_plan(args, cfg):
    _, pl = _plan(args, cfg)
    if args.json:
        d = pl.to_dict()
        d["listing"] = pl.listing()
        _out(json.dumps(d, indent=2))
    else:
        _out(pl.listing())
    return EXIT_NOT_REMOVABLE if isinstance(pl, FailureReport) else EXIT_OK


def cmd_apply(args, cfg):
    p, pl = _plan(args, cfg)
    if isinstance(pl, FailureReport):
        sys.stderr.write(pl.listing())
        return EXIT_NOT_REMOVABLE
    try:
        result = apply_plan(p, pl)
    except PreconditionViolated as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_PRECONDITION
    if args.emit_trace:
        write_trace(result, args.emit_trace)
    if args.verify:
        for ref in (pl.a, pl.b):
            v = equivalent(p, result.program, ref, cfg.trials, cfg.seed,
                           permutation=pl.argument_order(ref))
            if not v.equivalent:
                sys.stderr.write(f"verification failed for {ref}: {json.dumps(v.counterexample)}\n")
                return EXIT_VERIFY
    text = print_canonical(result.program)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.output != "-":
        sys.stdout.write(pl.listing())
    return EXIT_OK


def cmd_run(args, cfg):
    p = _load(args.file)
    typer = check_program(p)
    ref = MethodRef.parse(args.entry)
    m = p.method(ref)
    raw = json.loads(args.args) if args.args else []
    if not isinstance(raw, list):
        raw = [raw]
    values = [from_json(v, q.type, typer) for v, q in zip(raw, m.params)] + raw[len(m.params):]
    trace = run(p, ref, values, args.fuel, typer=typer)
    _out(json.dumps(trace.to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minij", description="Analyse MiniJ clone pairs and plan their removal.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--seed", type=int, default=0, help="random seed (UNCLONE_SEED overrides)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="print the AST as JSON")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("pdg", help="program dependence graph of one method")
    sp.add_argument("file")
    sp.add_argument("--method", required=True)
    fmt = sp.add_mutually_exclusive_group()
    fmt.add_argument("--dot", action="store_true", help="Graphviz output (default)")
    fmt.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_pdg)

    def pair(sp):
        sp.add_argument("file")
        sp.add_argument("--a", required=True, help="first clone, C.m")
        sp.add_argument("--b", required=True, help="second clone, D.n")
        sp.add_argument("--refactorings", help="comma separated subset of " + ",".join(RefactoringSet.FLAGS))

    sp = sub.add_parser("unify", help="mapping report for a clone pair")
    pair(sp)
    sp.set_defaults(func=cmd_unify)

    for name, func in (("plan", cmd_plan), ("apply", cmd_apply)):
        sp = sub.add_parser(name, help="refactoring plan" if name == "plan" else "apply the plan")
        pair(sp)
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="candidate mappings to try")
        sp.add_argument("--utility", default=UTILITY_CLASS, help="class for unrelated clones")
        sp.set_defaults(func=func)
        if name == "plan":
            sp.add_argument("--json", action="store_true")
        else:
            sp.add_argument("-o", "--output", required=True, help="output file, - for stdout")
            sp.add_argument("--emit-trace", metavar="DIR")
            sp.add_argument("--verify", action="store_true", help="check behaviour on generated inputs")
            sp.add_argument("--trials", type=int, default=100)
            sp.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed for --verify")

    sp = sub.add_parser("run", help="interpret one method")
    sp.add_argument("file")
    sp.add_argument("--entry", required=True)
    sp.add_argument("--args", default="[]", help="JSON list of argument values")
    sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    sp.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (MiniJError, KeyError) as e:
        sys.stderr.write(f"{args.file}: {e}\n")
        return EXIT_SYNTAX
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_SYNTAX
    except ValueError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_SYNTAX


if __name__ == "__main__":
    sys.exit(main())

"""
Removing a clone pair step by step
==================================

Two methods of ``Report`` filter a list of people by age.  They differ in
a predicate, in local names and in one extra ``print``.  This script walks
through every stage of the analysis on that pair and ends with the
refactored program and a behavioural check.
"""

from pathlib import Path

from unclone.flow import can_move, is_extractable
from unclone.interp import equivalent, from_json, run
from unclone.pdg import DATA, build_pdg
from unclone.plan import synthesize_plan
from unclone.rewrite import apply_plan
from unclone.syntax import parse_program, print_canonical
from unclone.syntax.ast import MethodRef
from unclone.syntax.binding import check_program
from unclone.unify import RefactoringSet, UnificationFailure, best_alignment, unify_statements

source = (Path(__file__).parent.parent / "tests" / "fixtures" / "report.minij").read_text()
program = parse_program(source)
typer = check_program(program)
adults, children = MethodRef("Report", "adults"), MethodRef("Report", "children")

# %%
# Dependences
# -----------
# Node ids are source lines.  The result list defined on line 2 reaches
# the return on line 9 directly, because the loop may run zero times.
g = build_pdg(program, adults, typer)
for e in sorted(g.edges_of(DATA), key=lambda e: (e.src, e.dst)):
    print(f"data {e.src} -> {e.dst} on {e.var}")

# %%
# The ``print`` on line 3 touches no variable, so it can sit anywhere
# before the return.
for i in range(4):
    check = can_move(g, 3, i)
    print(i, check.legal, check.reason or "")

# a single predicate statement is a valid extraction region
print(is_extractable(g, {5}))

# %%
# Statement unification
# ---------------------
# The two predicates are different expressions and never unify.  The
# ``add`` calls unify once ``children`` is renamed to ``adults``.
h = build_pdg(program, children, typer)
try:
    unify_statements(g.nodes[5].stmt, h.nodes[14].stmt, RefactoringSet(), None, typer)
except UnificationFailure as e:
    print("5 vs 14:", e)
sigma = unify_statements(g.nodes[7].stmt, h.nodes[16].stmt, RefactoringSet.only("rename"), None, typer)
print("7 vs 16:", sigma.real_renames())

_, mapping = best_alignment(g, h, RefactoringSet(), typer)
print("mapped pairs:", sorted(mapping.pairs))

# %%
# Plan and rewrite
# ----------------
plan = synthesize_plan(program, adults, children)
print(plan.listing())

result = apply_plan(program, plan)
print(print_canonical(result.program))

# %%
# Behaviour is compared on generated inputs, boundary ages included.
for ref in (adults, children):
    print(ref, equivalent(program, result.program, ref, n=100, seed=42).equivalent)

# one run of the refactored method; ages come in as plain JSON
people = from_json([{"age": 17}, {"age": 18}], program.method(adults).params[0].type, typer)
print(run(result.program, adults, [people]).to_dict())

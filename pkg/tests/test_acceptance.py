"""Acceptance criteria, one test each, each printing a PASS/FAIL line.

Run alone with ``python tests/test_acceptance.py`` or ``pytest -s tests/test_acceptance.py``.
"""
import subprocess
import sys
import time
from collections import Counter
from pathlib import Path

import pytest
from conftest import ADULTS, CHILDREN
from corpus import generate_corpus
from oracles import exhaustive_best, path_dependences, pdg_dependences

from unclone.flow import can_move, is_extractable
from unclone.interp import equivalent
from unclone.pdg import ANTI, DATA, build_pdg
from unclone.plan import FailureReport, synthesize_plan
from unclone.rewrite import apply_plan
from unclone.syntax.binding import check_program
from unclone.unify import RefactoringSet, SignatureFailure, UnificationFailure, best_alignment, mapping_cost, \
    unify_statements

CORPUS_SIZE = 500
CORPUS_FUEL = 20000


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail} ({elapsed:.2f}s)")
        return ok
    return emit


def test_pdg_edges(report, program, typer):
    t0 = time.perf_counter()
    g = build_pdg(program, ADULTS, typer)
    data = {(e.src, e.dst, e.var) for e in g.edges_of(DATA)}
    checks = {
        "7->9 adults": (7, 9, "adults") in data,
        "2->9 adults": (2, 9, "adults") in data,
        "no 5->7": not any(s == 5 and d == 7 for s, d, _ in data),
        "3 isolated": not any(3 in (e.src, e.dst) for e in g.edges if e.kind in (DATA, ANTI)),
    }
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 1
    assert report(1, ok, ", ".join(f"{k}={v}" for k, v in checks.items()), elapsed)


def test_extractability(report, program, typer):
    t0 = time.perf_counter()
    g = build_pdg(program, ADULTS, typer)
    res = {"{5,6,7}": is_extractable(g, {5, 6, 7}).ok, "{5}": is_extractable(g, {5}).ok}
    elapsed = time.perf_counter() - t0
    assert report(2, all(res.values()) and elapsed < 1, str(res), elapsed)


def test_print_moves_to_reachable_positions(report, program, typer):
    t0 = time.perf_counter()
    g = build_pdg(program, ADULTS, typer)
    legal = {i: can_move(g, 3, i).legal for i in range(3)}
    elapsed = time.perf_counter() - t0
    assert report("3 (positions 0-2)", all(legal.values()) and elapsed < 1, str(legal), elapsed)


@pytest.mark.xfail(strict=True, reason="the last sibling is the return; code placed after it is unreachable")
def test_print_moves_after_the_return(report, program, typer):
    t0 = time.perf_counter()
    g = build_pdg(program, ADULTS, typer)
    check = can_move(g, 3, 3)
    report("3 (position 3, expected to fail)", check.legal, check.reason or "legal",
           time.perf_counter() - t0)
    assert check.legal


def test_unification_verdicts(report, adults_pdg, children_pdg, typer):
    t0 = time.perf_counter()
    fails = 0
    combos = list(RefactoringSet.all_combinations())
    for rs in combos:
        try:
            unify_statements(adults_pdg.nodes[5].stmt, children_pdg.nodes[14].stmt, rs, None, typer)
        except UnificationFailure:
            fails += 1
    sigma = unify_statements(adults_pdg.nodes[7].stmt, children_pdg.nodes[16].stmt, RefactoringSet.only("rename"),
                             None, typer)
    renames = sigma.real_renames()
    elapsed = time.perf_counter() - t0
    ok = fails == len(combos) and renames == {"children": "adults"} and elapsed < 1
    assert report(4, ok, f"5 vs 14 failed under {fails}/{len(combos)} flag sets, 7 vs 16 renames {renames}",
                  elapsed)


def test_end_to_end_plan(report, program):
    t0 = time.perf_counter()
    plan = synthesize_plan(program, ADULTS, CHILDREN)
    kinds = Counter(s.kind for s in plan.steps)
    moves = [s.node for s in plan.steps if s.kind == "move-statement"]
    out = apply_plan(program, plan).program
    verdicts = [equivalent(program, out, ref, n=100, seed=42).equivalent for ref in (ADULTS, CHILDREN)]
    elapsed = time.perf_counter() - t0
    ok = (kinds["rename-local"] >= 2 and moves == [3] and kinds["extract-lambda"] == 2
          and kinds["extract-method"] == 1 and kinds["redirect-call"] == 2 and all(verdicts) and elapsed < 5)
    assert report(5, ok, f"steps {dict(kinds)}, equivalent {verdicts}", elapsed)


def test_corpus_oracles(report):
    t0 = time.perf_counter()
    pdg_bad, cost_bad, plan_bad = [], [], []
    compared = plans = failures = 0
    for pair in generate_corpus(CORPUS_SIZE):
        p = pair.program
        t = check_program(p)
        ga, gb = build_pdg(p, pair.a, t), build_pdg(p, pair.b, t)
        for ref, g in ((pair.a, ga), (pair.b, gb)):
            if pdg_dependences(g) != path_dependences(p, ref, t):
                pdg_bad.append((pair.seed, str(ref)))
        try:
            sm, m = best_alignment(ga, gb, RefactoringSet(), t)
        except SignatureFailure:
            sm = None
        if sm is not None:
            compared += 1
            if mapping_cost(m.pairs, m.substitution, m.entry)[:4] != exhaustive_best(ga, gb, RefactoringSet(),
                                                                                     sm.sigma, t):
                cost_bad.append(pair.seed)
        plan = synthesize_plan(p, pair.a, pair.b)
        if isinstance(plan, FailureReport):
            failures += 1
            continue
        plans += 1
        out = apply_plan(p, plan).program
        for ref in (pair.a, pair.b):
            v = equivalent(p, out, ref, n=50, seed=pair.seed, fuel=CORPUS_FUEL,
                           permutation=plan.argument_order(ref))
            if not v.equivalent:
                plan_bad.append((pair.seed, str(ref)))
    elapsed = time.perf_counter() - t0
    ok = not pdg_bad and not cost_bad and not plan_bad and elapsed < 300
    detail = (f"{CORPUS_SIZE} pairs; pdg mismatches {len(pdg_bad)}; cost mismatches {len(cost_bad)}/{compared}; "
              f"plans {plans} with {len(plan_bad)} counterexamples, {failures} reported not removable")
    assert report(6, ok, detail, elapsed), (pdg_bad[:5], cost_bad[:5], plan_bad[:5])


def test_property_suites(report):
    t0 = time.perf_counter()
    here = Path(__file__).parent
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(here / "test_properties.py")], capture_output=True, text=True, cwd=here.parent)
    elapsed = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    assert report(7, proc.returncode == 0 and elapsed < 120, summary, elapsed), proc.stdout[-2000:]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

"""Property suites over generated clone pairs (200 derandomized cases each)."""
import random

from corpus import generate_pair
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from oracles import exhaustive_best, path_dependences, pdg_dependences
from sigma import image

from unclone.errors import PreconditionViolated
from unclone.flow import can_move
from unclone.interp import equivalent, run
from unclone.pdg import build_pdg
from unclone.plan import synthesize_plan
from unclone.rewrite import apply_step, method_names
from unclone.steps import MoveStatement, RenameLocal
from unclone.syntax import ast as A
from unclone.syntax import parse_program, print_canonical
from unclone.syntax.binding import check_program
from unclone.syntax.printer import stmt_header
from unclone.unify import (RefactoringSet, SignatureFailure, UnificationFailure, best_alignment, mapping_cost,
                           unify_statements)

CASES = settings(max_examples=200, derandomize=True, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
seeds = st.integers(min_value=0, max_value=10 ** 9)


def loaded(seed):
    pair = generate_pair(seed)
    p = pair.program
    return pair, p, check_program(p)


@CASES
@given(seeds)
def test_round_trip(seed):
    pair, p, _ = loaded(seed)
    text = print_canonical(p)
    assert parse_program(text) == p
    assert print_canonical(parse_program(text)) == text


@CASES
@given(seeds)
def test_lines_increase_within_methods(seed):
    _, p, _ = loaded(seed)
    for c in p.classes:
        for m in c.methods:
            lines = [s.line for s in A.walk_stmts(m.body)]
            assert lines == sorted(lines) and len(set(lines)) == len(lines)


def _shape(g):
    return (g.dependence_edges() | g.edges_of("control"), {n: g.nodes[n].parent for n in g.nodes})


@CASES
@given(seeds, st.randoms(use_true_random=False))
def test_legal_moves_keep_the_pdg(seed, rnd):
    pair, p, t = loaded(seed)
    g = build_pdg(p, pair.a, t)
    movable = [n for n in g.nodes if n != g.entry and len(g.siblings(n)) > 1]
    if not movable:
        return
    node = rnd.choice(sorted(movable))
    legal = [i for i in range(len(g.siblings(node))) if can_move(g, node, i).legal
             and i != g.siblings(node).index(node)]
    if not legal:
        return
    out = apply_step(p, MoveStatement(pair.a, node, rnd.choice(legal)))
    g2 = build_pdg(out, pair.a)
    assert _shape(g2) == _shape(g)
    assert equivalent(p, out, pair.a, n=10, seed=seed, fuel=20000).equivalent


@CASES
@given(seeds, st.randoms(use_true_random=False))
def test_rename_keeps_traces(seed, rnd):
    pair, p, t = loaded(seed)
    m = p.method(pair.a)
    names = sorted(method_names(m))
    if not names:
        return
    old = rnd.choice(names)
    out = apply_step(p, RenameLocal(pair.a, old, "renamed_" + old))
    assert "renamed_" + old in method_names(out.method(pair.a))
    assert equivalent(p, out, pair.a, n=10, seed=seed, fuel=20000).equivalent


@CASES
@given(seeds)
def test_determinism(seed):
    pair, p, t = loaded(seed)
    one = synthesize_plan(p, pair.a, pair.b)
    two = synthesize_plan(parse_program(pair.source), pair.a, pair.b)
    assert one.to_json() == two.to_json()
    ga = build_pdg(p, pair.a, t)
    assert ga.edges == build_pdg(parse_program(pair.source), pair.a).edges
    m = p.method(pair.a)
    if all(q.type == A.INT for q in m.params):
        args = [3] * len(m.params)
        assert run(p, pair.a, args, fuel=20000) == run(p, pair.a, list(args), fuel=20000)


@CASES
@given(seeds)
def test_mapping_is_optimal(seed):
    pair, p, t = loaded(seed)
    ga, gb = build_pdg(p, pair.a, t), build_pdg(p, pair.b, t)
    try:
        sm, m = best_alignment(ga, gb, RefactoringSet(), t)
    except SignatureFailure:
        return
    assert mapping_cost(m.pairs, m.substitution, m.entry)[:4] == exhaustive_best(ga, gb, RefactoringSet(),
                                                                                 sm.sigma, t)


def _pairs(ga, gb, rs, t):
    try:
        return len(best_alignment(ga, gb, rs, t)[1].pairs)
    except SignatureFailure:
        return 0


@CASES
@given(seeds, st.lists(st.booleans(), min_size=4, max_size=4))
def test_disabling_refactorings_never_adds_pairs(seed, keep):
    pair, p, t = loaded(seed)
    ga, gb = build_pdg(p, pair.a, t), build_pdg(p, pair.b, t)
    full = RefactoringSet()
    names = [f for f in RefactoringSet.FLAGS if f != "rename"]
    narrow = RefactoringSet.only("rename", *[n for n, k in zip(names, keep) if k])
    assert _pairs(ga, gb, narrow, t) <= _pairs(ga, gb, full, t)


def _statement_pairs(seed):
    pair, p, t = loaded(seed)
    ga, gb = build_pdg(p, pair.a, t), build_pdg(p, pair.b, t)
    rnd = random.Random(seed)
    out = []
    for a in sorted(ga.nodes):
        for b in sorted(gb.nodes):
            if a != ga.entry and b != gb.entry and ga.nodes[a].kind == gb.nodes[b].kind:
                out.append((ga.nodes[a].stmt, gb.nodes[b].stmt))
    rnd.shuffle(out)
    return out[:6], t


@CASES
@given(seeds)
def test_unification_verdict_is_symmetric(seed):
    pairs, t = _statement_pairs(seed)
    for a, b in pairs:
        try:
            unify_statements(a, b, RefactoringSet(), None, t)
            forward = True
        except UnificationFailure:
            forward = False
        try:
            unify_statements(b, a, RefactoringSet(), None, t)
            backward = True
        except UnificationFailure:
            backward = False
        assert forward == backward


@CASES
@given(seeds)
def test_substitution_makes_statements_equal(seed):
    pairs, t = _statement_pairs(seed)
    for a, b in pairs:
        try:
            sigma = unify_statements(a, b, RefactoringSet(), None, t)
        except UnificationFailure:
            continue
        assert stmt_header(image(a, sigma, "a")) == stmt_header(image(b, sigma, "b"))


@CASES
@given(seeds)
def test_illegal_moves_are_refused(seed):
    pair, p, t = loaded(seed)
    g = build_pdg(p, pair.a, t)
    for n in sorted(g.nodes):
        if n == g.entry:
            continue
        for i in range(len(g.siblings(n))):
            if not can_move(g, n, i).legal:
                try:
                    apply_step(p, MoveStatement(pair.a, n, i))
                except PreconditionViolated:
                    return
                raise AssertionError(f"move of {n} to {i} was applied")


@CASES
@given(seeds)
def test_dependences_match_path_oracle(seed):
    pair, p, t = loaded(seed)
    for ref in (pair.a, pair.b):
        assert pdg_dependences(build_pdg(p, ref, t)) == path_dependences(p, ref, t)

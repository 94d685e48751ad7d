"""Brute-force oracles used to cross-check the analyses on small methods.

The checkers share only the per-statement def/use table and the statement
unifier with the library.  Control flow, dependence propagation and
mapping search are re-derived here the slow way.
"""
from __future__ import annotations

import itertools

from unclone.pdg import ANTI, DATA, THIS, def_use
from unclone.syntax import ast as A
from unclone.unify import Substitution, UnificationFailure, unify_statements

EXIT = "exit"


def control_flow(m: A.MethodDecl) -> dict:
    """Successor lists over statement lines, with the method line as entry."""
    succ = {m.line: set(), EXIT: set()}

    def link(preds, node):
        for p in preds:
            succ.setdefault(p, set()).add(node)

    def block(stmts, preds):
        for s in stmts:
            succ.setdefault(s.line, set())
            link(preds, s.line)
            if isinstance(s, A.Return):
                succ[s.line].add(EXIT)
                preds = []
            elif isinstance(s, A.If):
                then_out = block(s.then, [s.line])
                else_out = block(s.orelse, [s.line]) if s.orelse is not None else [s.line]
                preds = then_out + else_out
            elif isinstance(s, (A.While, A.ForEach)):
                link(block(s.body, [s.line]), s.line)
                preds = [s.line]
            else:
                preds = [s.line]
        return preds

    link(block(m.body, [m.line]), EXIT)
    return succ


def def_use_table(program, ref, typer) -> dict:
    m = program.method(ref)
    envs = typer.method_envs(ref.cls, m)
    table = {m.line: (frozenset([p.name for p in m.params] + [THIS]), frozenset())}
    for s in A.walk_stmts(m.body):
        du = def_use(s, typer, ref.cls, envs[s.line])
        table[s.line] = (du.defs, du.uses)
    return table


def path_dependences(program, ref, typer) -> set:
    """Data/Anti edges found by walking explicit CFG paths.

    Paths are bounded by twice the node count, and each loop back edge is
    taken at most twice per path.  A path from a definition reaches a use
    as long as no node strictly between them redefines the variable; anti
    edges are the same walk started from a use.
    """
    m = program.method(ref)
    succ = control_flow(m)
    table = def_use_table(program, ref, typer)
    limit = 2 * len(table) + 2
    order = {s.line: k for k, s in enumerate(A.walk_stmts(m.body), start=1)}
    order[m.line] = 0
    found = set()

    def walk(start, node, data_live, anti_live, depth, backs):
        if depth > limit or node == EXIT:
            return
        defs, uses = table[node]
        for v in data_live & uses:
            found.add((start, node, DATA, v))
        for v in anti_live & defs:
            found.add((start, node, ANTI, v))
        data_live = data_live - defs
        anti_live = anti_live - defs
        if not data_live and not anti_live:
            return
        for nxt in sorted(succ[node], key=str):
            back = nxt != EXIT and order[nxt] <= order[node]
            if back and backs.get((node, nxt), 0) >= 2:
                continue
            nb = dict(backs)
            if back:
                nb[(node, nxt)] = nb.get((node, nxt), 0) + 1
            walk(start, nxt, data_live, anti_live, depth + 1, nb)

    for a, (defs, uses) in table.items():
        for nxt in sorted(succ[a], key=str):
            back = nxt != EXIT and order[nxt] <= order[a]
            walk(a, nxt, frozenset(defs), frozenset(uses), 1, {(a, nxt): 1} if back else {})
    return found


def pdg_dependences(g) -> set:
    return {(e.src, e.dst, e.kind, e.var) for e in g.edges if e.kind in (DATA, ANTI)}


# -- exhaustive mapping search ----------------------------------------------


def mapping_score(pairs, sigma: Substitution) -> tuple:
    """Lexicographic cost: most pairs, then fewest literal parameters, renames, type changes."""
    renames = sum(1 for b, a in sigma.renames if a != b)
    return (-len(pairs), len(sigma.literal_params), renames, len(sigma.type_gen))


def exhaustive_best(ga, gb, rs, sigma, typer):
    """Best score over every injective, parent-preserving, unifiable mapping."""
    a_ids = sorted(n for n in ga.nodes if n != ga.entry)
    b_ids = sorted(n for n in gb.nodes if n != gb.entry)
    options = []
    for a in a_ids:
        na = ga.nodes[a]
        options.append([None] + [b for b in b_ids if gb.nodes[b].kind == na.kind
                                 and gb.nodes[b].branch == na.branch])
    best = None
    for choice in itertools.product(*options):
        chosen = [b for b in choice if b is not None]
        if len(set(chosen)) != len(chosen):
            continue
        mapped = {ga.entry: gb.entry}
        mapped.update((a, b) for a, b in zip(a_ids, choice) if b is not None)
        if any(mapped.get(ga.nodes[a].parent) != gb.nodes[b].parent
               for a, b in mapped.items() if a != ga.entry):
            continue
        sig = sigma
        try:
            for a in a_ids:
                if a in mapped:
                    sig = unify_statements(ga.nodes[a].stmt, gb.nodes[mapped[a]].stmt, rs, sig, typer)
        except UnificationFailure:
            continue
        score = mapping_score([p for p in mapped.items() if p[0] != ga.entry], sig)
        if best is None or score < best:
            best = score
    return best

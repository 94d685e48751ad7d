"""Turn a node mapping and its separation into an ordered refactoring plan.

The emitted order is: renames, parameter reordering, type and literal
abstraction, statement moves, lambda extractions, extraction of the now
identical span, pull-up, and finally one redirect per original method.
When a mapping cannot be separated, matching is retried with the blamed
pairs excluded (breadth first, bounded by a budget of candidate mappings).
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import PreconditionViolated
from .flow import Separation, SeparationFailure, separate_differences
from .pdg import DATA, THIS, Pdg, build_pdg, node_label
from .rewrite import apply_plan, method_names
from .steps import (AdvisoryNote, ExtractLambda, ExtractMethod, GeneralizeType, IntroduceParameter,
                    IntroduceTypeParameter, MoveStatement, PullUpMethod, RedirectCall, RenameLocal,
                    ReorderParameters)
from .syntax import ast as A
from .syntax.ast import MethodRef, Program
from .syntax.binding import Typer, check_program
from .unify import NodeMapping, RefactoringSet, SignatureFailure, Substitution, best_alignment, match_pdgs

DEFAULT_BUDGET = 1000
UTILITY_CLASS = "CloneSupport"
LAMBDA_LIMIT = 2
LAMBDA_BODY_LIMIT = 3

TEMPLATE_NOTE = "form template method (lambda variant)"


@dataclass(frozen=True)
class ConsolidationTarget:
    kind: str  # "same-class", "common-ancestor" or "utility-class"
    cls: str

    def __str__(self) -> str:
        return f"{self.kind}({self.cls})"


def choose_target(class_a: str, class_b: str, typer: Typer, utility: str = UTILITY_CLASS) -> ConsolidationTarget:
    if class_a == class_b:
        return ConsolidationTarget("same-class", class_a)
    lca = typer.common_ancestor(class_a, class_b)
    if lca is not None:
        return ConsolidationTarget("common-ancestor", lca)
    return ConsolidationTarget("utility-class", utility)


def advisories(target: ConsolidationTarget, lambda_sizes: list) -> list:
    notes = []
    if target.kind == "common-ancestor":
        notes.append(TEMPLATE_NOTE)
    if len(lambda_sizes) > LAMBDA_LIMIT or any(n > LAMBDA_BODY_LIMIT for n in lambda_sizes):
        notes.append(f"strategy pattern alternative: {len(lambda_sizes)} lambda hooks, "
                     f"largest body {max(lambda_sizes)} statements")
    return notes


@dataclass
class Plan:
    a: MethodRef
    b: MethodRef
    steps: list
    target: ConsolidationTarget
    mapping: Optional[NodeMapping] = None
    separation: Optional[Separation] = None
    alternatives: int = 0
    candidates_tried: int = 1

    @property
    def cost(self) -> tuple:
        return plan_cost(self)

    @property
    def advisories(self) -> list:
        return [s.text for s in self.steps if isinstance(s, AdvisoryNote)]

    def argument_order(self, ref: MethodRef):
        """Permutation callers of ``ref`` must apply to their arguments, or None."""
        for s in self.steps:
            if isinstance(s, ReorderParameters) and s.method == ref:
                return s.permutation
        return None

    def count(self, kind) -> int:
        return sum(isinstance(s, kind) for s in self.steps)

    def listing(self) -> str:
        lines = [f"plan for {self.a} and {self.b} into {self.target}, cost {list(self.cost)}"]
        for i, s in enumerate(self.steps, 1):
            lines.append(f"{i:2d}. {s.describe()}")
        if self.alternatives:
            lines.append(f"({self.alternatives} costlier alternative plans discarded)")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        d = {"a": str(self.a), "b": str(self.b), "target": {"kind": self.target.kind, "class": self.target.cls},
             "steps": [s.to_dict() for s in self.steps], "cost": list(self.cost),
             "advisories": self.advisories, "alternatives": self.alternatives,
             "candidates_tried": self.candidates_tried}
        if self.separation is not None:
            d["separation"] = [{"side": x.side, "node": x.node, "action": x.kind, "partner": x.partner,
                                "moved": x.moved} for x in self.separation.actions]
        if self.mapping is not None:
            d["pairs"] = [list(p) for p in self.mapping.non_entry_pairs()]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class FailureReport:
    a: MethodRef
    b: MethodRef
    stage: str
    reason: str
    unresolvable: list = field(default_factory=list)
    candidates_tried: int = 0

    def listing(self) -> str:
        lines = [f"clone pair {self.a} / {self.b} is not removable ({self.stage}): {self.reason}"]
        for u in self.unresolvable:
            edges = f" [{', '.join(u['edges'])}]" if u.get("edges") else ""
            lines.append(f"  {u['method']} statement {u['node']}: {u['text']}: {u['reason']}{edges}")
        lines.append(f"  candidate mappings tried: {self.candidates_tried}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"a": str(self.a), "b": str(self.b), "failure": self.stage, "reason": self.reason,
                "unresolvable": self.unresolvable, "candidates_tried": self.candidates_tried}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def plan_cost(pl: Plan) -> tuple:
    """(separated differences, literal parameters, renames, steps); smaller is better."""
    moves = sum(isinstance(s, MoveStatement) for s in pl.steps)
    hooks = {s.hook for s in pl.steps if isinstance(s, ExtractLambda)}
    literals = {s.name for s in pl.steps if isinstance(s, IntroduceParameter)}
    renames = sum(isinstance(s, RenameLocal) for s in pl.steps)
    return (moves + len(hooks), len(literals), renames, len(pl.steps))


class _BuildFailure(Exception):
    def __init__(self, stage, reason, blame=frozenset(), unresolvable=()):
        self.stage = stage
        self.reason = reason
        self.blame = frozenset(blame)
        self.unresolvable = list(unresolvable)
        super().__init__(reason)


def _region(g: Pdg, tops) -> set:
    out = set()
    for t in tops:
        out |= g.subtree(t)
    return out


def _edges_leaving(g: Pdg, region: set) -> list:
    out = []
    for e in sorted(g.edges):
        if e.src in region and e.dst not in region:
            out.append(f"{e.kind}({e.var}) {e.src}->{e.dst}" if e.var else f"{e.kind} {e.src}->{e.dst}")
    return out


class _Builder:
    def __init__(self, p: Program, typer: Typer, ra: MethodRef, rb: MethodRef, rs: RefactoringSet,
                 ga: Pdg, gb: Pdg, perm: tuple, utility: str):
        self.p, self.typer, self.ra, self.rb, self.rs = p, typer, ra, rb, rs
        self.ga, self.gb, self.perm = ga, gb, perm
        self.utility = utility
        self.names_a = method_names(ga.decl)
        self.names_b = method_names(gb.decl)

    def fresh(self, base: str, taken: set) -> str:
        i = 0
        while f"{base}{i}" in taken:
            i += 1
        return f"{base}{i}"

    def rename_steps(self, sigma: Substitution) -> list:
        real = sigma.real_renames()
        current = set(self.names_b)
        taken = current | self.names_a | set(sigma.rename_map.values())
        steps = []
        images = set(real.values())
        # B-only names that would collide with a rename target move out of the way first
        for name in sorted(current):
            if name in images and name not in sigma.rename_map:
                new = self.fresh(name + "_", taken)
                taken.add(new)
                steps.append(RenameLocal(self.rb, name, new))
                current = (current - {name}) | {new}
        pending = dict(sorted(real.items()))
        while pending:
            safe = [b for b, a in pending.items() if a not in current]
            if safe:
                b = safe[0]
                a = pending.pop(b)
                steps.append(RenameLocal(self.rb, b, a))
                current = (current - {b}) | {a}
                continue
            b = sorted(pending)[0]
            tmp = self.fresh(b + "_", taken | current)
            taken.add(tmp)
            steps.append(RenameLocal(self.rb, b, tmp))
            current = (current - {b}) | {tmp}
            pending[tmp] = pending.pop(b)
        return steps

    def type_steps(self, sigma: Substitution) -> list:
        steps = []
        if self.perm != tuple(range(1, len(self.perm) + 1)):
            steps.append(ReorderParameters(self.rb, self.perm))
        for tv in sigma.type_vars:
            steps.append(IntroduceTypeParameter(self.ra, tv))
            steps.append(IntroduceTypeParameter(self.rb, tv))
        unified = sigma.type_map()
        new_pos = {j - 1: i for i, j in enumerate(self.perm)}
        seen = set()
        for sa, sb, ta, tb in sigma.type_sites:
            u = unified[(ta, tb)]
            if isinstance(sb, str) and sb.startswith("param:"):
                sb = f"param:{new_pos[int(sb.split(':')[1])]}"
            for ref, site, t in ((self.ra, sa, ta), (self.rb, sb, tb)):
                if t != u and (ref, site) not in seen:
                    seen.add((ref, site))
                    steps.append(GeneralizeType(ref, site, t, u))
        return steps

    def literal_steps(self, sigma: Substitution) -> list:
        steps = []
        done = {"a": {}, "b": {}}  # line -> original indexes already replaced

        def adjust(side, line, idx):
            before = sum(1 for k in done[side].get(line, ()) if k < idx)
            done[side].setdefault(line, []).append(idx)
            return idx - before

        for lp in sigma.literal_params:
            sites = [s for s in sigma.literal_sites if s[0] == lp.name]
            sa = tuple((la, adjust("a", la, ia)) for _, la, ia, _, _ in sites)
            sb = tuple((lb, adjust("b", lb, ib)) for _, _, _, lb, ib in sites)
            steps.append(IntroduceParameter(self.ra, lp.name, lp.type, lp.value_a, sa))
            steps.append(IntroduceParameter(self.rb, lp.name, lp.type, lp.value_b, sb))
        return steps

    def move_steps(self, sep: Separation, offset: int) -> list:
        steps = []
        for ref, g, moves in ((self.ra, self.ga, sep.moves_a), (self.rb, self.gb, sep.moves_b)):
            for node, idx in moves:
                top = g.nodes[node].parent == g.entry
                steps.append(MoveStatement(ref, node, idx + offset if top else idx))
        return steps

    def lambda_steps(self, sep: Separation) -> list:
        out = []
        for spec in sep.lambdas:
            ref = self.ra if spec.side == "a" else self.rb
            out.append(ExtractLambda(ref, spec.node, spec.hook, spec.fun_type, spec.params, spec.style,
                                     spec.result, spec.result_type, spec.anchor))
        return out

    def span(self, p1: Program, ref: MethodRef, mapped: set):
        m = p1.method(ref)
        tops = [s.line for s in m.body if s.line in mapped]
        if not tops:
            raise _BuildFailure("extraction", f"{ref} has no statements in common")
        lines = [s.line for s in m.body]
        return lines.index(tops[0]), lines.index(tops[-1])

    def extract(self, p1: Program, m: NodeMapping, target: ConsolidationTarget, hooks: list, literals: list):
        typer1 = check_program(p1)
        a1 = p1.method(self.ra)
        g1 = build_pdg(p1, self.ra, typer1)
        mapped_a = {a for a, _ in m.pairs}
        i, j = self.span(p1, self.ra, mapped_a)
        span = a1.body[i:j + 1]
        region = _region(g1, [s.line for s in span])
        post = a1.body[j + 1:]
        post_region = _region(g1, [s.line for s in post])
        a2b = m.a_to_b()

        def blame_where(pred):
            return {(a, a2b[a]) for a in region if a in a2b and a != self.ga.entry and pred(a)}

        names = set()
        for n in region:
            names |= g1.defuse[n].uses | g1.defuse[n].defs
        declared = set()
        for s in A.walk_stmts(span):
            if isinstance(s, A.VarDecl):
                declared.add(s.name)
            elif isinstance(s, A.ForEach):
                declared.add(s.var)
        if target.kind == "utility-class" and THIS in names:
            raise _BuildFailure("extraction", f"the common statements use this, which {target.cls} cannot provide",
                                blame_where(lambda a: THIS in g1.defuse[a].uses | g1.defuse[a].defs))
        free = names - declared - {THIS}
        env = typer1.method_envs(self.ra.cls, a1)[span[0].line]
        order = [q.name for q in a1.params] + [s.name for s in a1.body[:i] if isinstance(s, A.VarDecl)]
        params = tuple(A.Param(env[v], v) for v in order if v in free)
        missing = free - {q.name for q in params}
        if missing:
            raise _BuildFailure("extraction", f"variables {', '.join(sorted(missing))} are not visible before the span")

        b1 = p1.method(self.rb)
        mapped_b = {b for _, b in m.pairs}
        bi, bj = self.span(p1, self.rb, mapped_b)
        g1b = build_pdg(p1, self.rb, typer1)
        sides = [(g1, region, post_region), (g1b, _region(g1b, [s.line for s in b1.body[bi:bj + 1]]),
                                             _region(g1b, [s.line for s in b1.body[bj + 1:]]))]
        later_code = bool(post) or bool(b1.body[bj + 1:])

        has_return = any(isinstance(s, A.Return) for s in A.walk_stmts(span))
        result = None
        if isinstance(span[-1], A.Return):
            rtype = a1.return_type
        elif has_return:
            if a1.return_type != A.VOID or later_code:
                raise _BuildFailure("extraction", "the common statements return only on some paths",
                                    blame_where(lambda a: self.ga.nodes[a].kind == "return"))
            rtype = A.VOID
        else:
            # variables flowing out of the span in either clone
            outs = set()
            for g, reg, post_reg in sides:
                outs |= {e.var for e in g.edges_of(DATA) if e.src in reg and e.dst not in reg}
                later = set()
                for n in post_reg:
                    later |= g.defuse[n].uses | g.defuse[n].defs
                outs |= declared & later
            outs.discard(THIS)
            if len(outs) > 1:
                raise _BuildFailure("extraction", f"several variables flow out of the common statements: "
                                    f"{', '.join(sorted(outs))}",
                                    blame_where(lambda a: bool(g1.defuse[a].defs & outs)))
            if outs:
                result = outs.pop()
                decl = [s for s in span if isinstance(s, A.VarDecl) and s.name == result]
                rtype = decl[0].type if decl else env[result]
            else:
                rtype = A.VOID

        base = self.ra.name + ("Template" if target.kind == "common-ancestor" else "Shared")
        taken = {mm.name for c in p1.classes for mm in c.methods}
        name, k = base, 1
        while name in taken:
            k += 1
            name = f"{base}{k}"
        home = target.cls if target.kind != "common-ancestor" else self.ra.cls
        if target.kind == "same-class":
            home = self.ra.cls
        steps = [ExtractMethod(home, name, params, self.ra, span[0].line, span[-1].line, rtype, result,
                               a1.type_params)]
        owner = home
        if target.kind == "common-ancestor" and target.cls != self.ra.cls:
            steps.append(PullUpMethod(self.ra.cls, target.cls, name))
            owner = target.cls
        args = tuple(q.name for q in params)
        folded = tuple(v for v in args if v in set(hooks) | set(literals))
        utility = target.kind == "utility-class"
        steps.append(RedirectCall(self.ra, owner, name, args, span[0].line, span[-1].line, folded, utility))
        steps.append(RedirectCall(self.rb, owner, name, args, b1.body[bi].line, b1.body[bj].line, folded,
                                  utility))
        return steps

    def build(self, m: NodeMapping) -> Plan:
        reserved = self.names_a | self.names_b | {lp.name for lp in m.substitution.literal_params}
        sep = separate_differences(self.ga, self.gb, m, self.typer, reserved)
        sigma = sep.sigma
        target = choose_target(self.ra.cls, self.rb.cls, self.typer, self.utility)
        steps = self.rename_steps(sigma)
        steps += self.type_steps(sigma)
        lit = self.literal_steps(sigma)
        steps += lit
        steps += self.move_steps(sep, len(sigma.literal_params))
        steps += self.lambda_steps(sep)
        try:
            p1 = apply_plan(self.p, steps).program
        except PreconditionViolated as e:
            raise _BuildFailure("rewrite", str(e), self._blame_step(e.step, m)) from e
        hooks = sorted({s.hook for s in sep.lambdas})
        literals = [lp.name for lp in sigma.literal_params]
        tail = self.extract(p1, m, target, hooks, literals)
        sizes = [s.body_size for s in sep.lambdas if s.node is not None and s.side == "a"] + \
                [s.body_size for s in sep.lambdas if s.node is not None and s.side == "b" and s.partner is None]
        notes = [AdvisoryNote(t) for t in advisories(target, sizes)] if sizes or target.kind == "common-ancestor" \
            else []
        steps = steps + tail + notes
        try:
            apply_plan(self.p, steps)
        except PreconditionViolated as e:
            raise _BuildFailure("rewrite", str(e), self._blame_step(e.step, m)) from e
        return Plan(self.ra, self.rb, steps, target, m, sep)

    def _blame_step(self, step, m: NodeMapping) -> set:
        a2b, b2a = m.a_to_b(), m.b_to_a()
        node = getattr(step, "node", None)
        method = getattr(step, "method", None)
        out = set()
        if node is None or method is None:
            return out
        g = self.ga if method == self.ra else self.gb
        mp, pair = (a2b, lambda x: (x, a2b[x])) if method == self.ra else (b2a, lambda x: (b2a[x], x))
        if node in g.nodes:
            for e in g.dependence_edges():
                for x, y in ((e.src, e.dst), (e.dst, e.src)):
                    if x == node and y in mp and y != g.entry:
                        out.add(pair(y))
        return out


def _unresolvable(ga: Pdg, gb: Pdg, ra, rb, failure: SeparationFailure) -> list:
    out = []
    for act in failure.unresolvable:
        g, ref = (ga, ra) if act.side == "a" else (gb, rb)
        region = g.subtree(act.node)
        out.append({"side": act.side, "method": str(ref), "node": act.node, "text": node_label(g, act.node),
                    "reason": act.reason, "edges": _edges_leaving(g, region)})
    return out


def synthesize_plan(p: Program, a, b, rs: RefactoringSet = RefactoringSet(), budget: int = DEFAULT_BUDGET,
                    utility: str = UTILITY_CLASS) -> Union[Plan, FailureReport]:
    """Plan the removal of the clone pair ``a``/``b``, or explain why it is not possible."""
    ra = a if isinstance(a, MethodRef) else MethodRef.parse(a)
    rb = b if isinstance(b, MethodRef) else MethodRef.parse(b)
    if budget < 1:
        raise ValueError("budget must be at least 1")
    typer = check_program(p)
    if ra == rb:
        return FailureReport(ra, rb, "input", "a method cannot be merged with itself")
    ga, gb = build_pdg(p, ra, typer), build_pdg(p, rb, typer)
    reserved = method_names(ga.decl) | method_names(gb.decl)
    try:
        sm, _ = best_alignment(ga, gb, rs, typer, reserved)
    except SignatureFailure as e:
        return FailureReport(ra, rb, "signature", str(e))
    builder = _Builder(p, typer, ra, rb, rs, ga, gb, sm.permutation, utility)

    frontier = deque([frozenset()])
    seen = {frozenset()}
    seen_mappings = set()
    tried = 0
    found = []
    first_failure = None
    success_level = None
    while frontier and tried < budget:
        excluded = frontier.popleft()
        if success_level is not None and len(excluded) > success_level:
            break
        m = match_pdgs(ga, gb, rs, sm.sigma, typer, excluded)
        tried += 1
        if m.pairs in seen_mappings:
            continue
        seen_mappings.add(m.pairs)
        try:
            plan = builder.build(m)
        except SeparationFailure as f:
            if first_failure is None:
                first_failure = FailureReport(ra, rb, "separation", str(f), _unresolvable(ga, gb, ra, rb, f))
            blame = f.blame or set(m.non_entry_pairs())
        except _BuildFailure as f:
            if first_failure is None:
                first_failure = FailureReport(ra, rb, f.stage, f.reason, f.unresolvable)
            blame = f.blame
        else:
            found.append(plan)
            if success_level is None:
                success_level = len(excluded)
            continue
        for pair in sorted(blame):
            if pair in m.pairs:
                nxt = excluded | {pair}
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
    if not found:
        report = first_failure or FailureReport(ra, rb, "budget", "no candidate mapping left")
        report.candidates_tried = tried
        if frontier and tried >= budget and report.stage != "budget":
            report.reason += f" (budget of {budget} candidate mappings exhausted)"
        return report
    best = min(found, key=lambda pl: (plan_cost(pl), sorted(pl.mapping.pairs)))
    best.alternatives = len(found) - 1
    best.candidates_tried = tried
    return best

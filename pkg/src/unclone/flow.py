"""Reordering and extraction legality on PDGs, and separation of clone differences.

A statement may move among its siblings as long as no dependence between it
and a sibling it passes over is reversed.  Besides data and anti edges this
covers output dependences (both write the same variable), the relative order
of two output-producing statements, and never moving code across a `return`.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from .pdg import ANTI, DATA, THIS, Pdg, PdgEdge
from .syntax import ast as A
from .syntax.binding import Typer
from .unify import NodeMapping, Substitution, UnificationFailure


class NotContiguous(ValueError):
    pass


@dataclass(frozen=True)
class MoveCheck:
    node: int
    parent: int
    index: int
    legal: bool
    reason: str = ""
    edge: Optional[PdgEdge] = None


def _subtree_defs(g: Pdg, nodes) -> set:
    out = set()
    for n in nodes:
        out |= g.defuse[n].defs
    return out


def _has_return(g: Pdg, nodes) -> bool:
    return any(g.nodes[n].kind == "return" for n in nodes)


def _writes_output(g: Pdg, nodes) -> bool:
    return any(g.defuse[n].writes_output for n in nodes)


def check_move(g: Pdg, order: list, node: int, new_index: int) -> MoveCheck:
    """Move check against an explicit sibling ``order`` (which must contain ``node``)."""
    parent = g.nodes[node].parent
    i = order.index(node)
    if not 0 <= new_index < len(order):
        raise IndexError(f"index {new_index} outside sibling block of size {len(order)}")
    passed = order[new_index:i] if new_index < i else order[i + 1:new_index + 1]
    mine = g.subtree(node)
    my_defs = _subtree_defs(g, mine)
    deps = g.dependence_edges()
    for s in passed:
        theirs = g.subtree(s)
        for e in sorted(deps):
            if (e.src in mine and e.dst in theirs) or (e.src in theirs and e.dst in mine):
                return MoveCheck(node, parent, new_index, False,
                                 f"{e.kind} dependence on {e.var} between {e.src} and {e.dst}", e)
        common = my_defs & _subtree_defs(g, theirs)
        if common:
            v = sorted(common)[0]
            return MoveCheck(node, parent, new_index, False, f"both {node} and {s} write {v}")
        if _writes_output(g, mine) and _writes_output(g, theirs):
            return MoveCheck(node, parent, new_index, False, f"output order of {node} and {s}")
        if _has_return(g, mine) or _has_return(g, theirs):
            return MoveCheck(node, parent, new_index, False, f"cannot move across the return in {s}"
                             if _has_return(g, theirs) else f"{node} contains a return")
    return MoveCheck(node, parent, new_index, True)


def can_move(g: Pdg, node: int, new_index: int) -> MoveCheck:
    """May ``node`` be moved to ``new_index`` among its current siblings?"""
    if node == g.entry:
        raise ValueError("the entry node cannot move")
    return check_move(g, g.siblings(node), node, new_index)


def apply_order(order: list, node: int, new_index: int) -> list:
    out = [x for x in order if x != node]
    out.insert(new_index, node)
    return out


# -- extraction ------------------------------------------------------------


@dataclass(frozen=True)
class Extractability:
    ok: bool
    reason: str
    out_vars: tuple = ()


def _escaping_loop_vars(g: Pdg, region: set) -> set:
    """Variables written in ``region`` that flow back into it around an outside path."""
    out = set()
    for src in region:
        for v in g.defuse[src].defs:
            seen = set()
            queue = deque((s, s not in region) for s in g.cfg.succ.get(src, ()))
            while queue:
                n, left = queue.popleft()
                if (n, left) in seen or n not in g.defuse:
                    continue
                seen.add((n, left))
                if left and n in region and v in g.defuse[n].uses:
                    out.add(v)
                    break
                if v in g.defuse[n].defs:
                    continue
                for s in g.cfg.succ.get(n, ()):
                    queue.append((s, left or s not in region))
    return out


def region_of(g: Pdg, nodes) -> tuple[list, set]:
    """Validate a contiguous sibling region; returns (top nodes in order, full region)."""
    nodes = set(nodes)
    if not nodes or g.entry in nodes:
        raise NotContiguous("region must be non-empty and exclude the entry node")
    tops = [n for n in nodes if g.nodes[n].parent not in nodes]
    parents = {(g.nodes[n].parent, g.nodes[n].branch) for n in tops}
    if len(parents) != 1:
        raise NotContiguous("top statements have different control parents")
    sibs = g.siblings(tops[0])
    idx = sorted(sibs.index(n) for n in tops)
    if idx != list(range(idx[0], idx[-1] + 1)):
        raise NotContiguous("statements are not contiguous siblings")
    full = set()
    for t in tops:
        full |= g.subtree(t)
    if full != nodes:
        raise NotContiguous("region must include all nested statements")
    return [sibs[i] for i in idx], full


def is_extractable(g: Pdg, nodes) -> Extractability:
    """Can the contiguous region ``nodes`` be replaced by a single call?"""
    _, region = region_of(g, nodes)
    control_out = [e for e in g.edges_of("control") if e.src in region and e.dst not in region]
    if control_out:
        return Extractability(False, f"control dependence leaves the region ({control_out[0].src}->{control_out[0].dst})")
    if _has_return(g, region):
        return Extractability(False, "region contains a return")
    data_out = {e.var for e in g.edges_of(DATA) if e.src in region and e.dst not in region}
    data_out |= _escaping_loop_vars(g, region)
    if len(data_out) > 1:
        return Extractability(False, f"data flows out for several variables: {', '.join(sorted(data_out))}",
                              tuple(sorted(data_out)))
    written = _subtree_defs(g, region)
    anti_out = {e.var for e in g.edges_of(ANTI)
                if e.src in region and e.dst not in region and e.var in written}
    if anti_out - data_out and (data_out or len(anti_out) > 1):
        return Extractability(False, f"anti dependence leaves the region for {', '.join(sorted(anti_out - data_out))}",
                              tuple(sorted(data_out | anti_out)))
    out = data_out or anti_out
    return Extractability(True, "", tuple(sorted(out)))


# -- separation ------------------------------------------------------------

MOVE_ABOVE = "move-above"
MOVE_BELOW = "move-below"
LAMBDA = "lambda"
UNRESOLVABLE = "unresolvable"


@dataclass(frozen=True)
class Action:
    side: str  # "a" or "b"
    node: int
    kind: str
    partner: Optional[int] = None
    reason: str = ""
    moved: bool = False  # MoveAbove/MoveBelow that actually needs a move step


@dataclass(frozen=True)
class LambdaSpec:
    side: str
    node: Optional[int]  # None: no-op counterpart inserted at ``anchor``
    hook: str
    fun_type: A.TypeRef
    params: tuple  # lambda parameters, in A names
    style: str  # "decl", "assign" or "effect"
    result: Optional[str] = None  # variable rebound (or declared) from the hook result
    result_type: Optional[A.TypeRef] = None
    partner: Optional[int] = None
    anchor: Optional[tuple] = None  # ("before", id) or ("end", parent, branch)
    body_size: int = 1


@dataclass
class Separation:
    actions: list
    moves_a: list = field(default_factory=list)  # (node, new index) in application order
    moves_b: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    sigma: Optional[Substitution] = None
    preamble: dict = field(default_factory=dict)  # side -> top-level ids before the span
    postamble: dict = field(default_factory=dict)

    def action(self, side: str, node: int) -> Optional[Action]:
        for a in self.actions:
            if a.side == side and a.node == node:
                return a
        return None


class SeparationFailure(Exception):
    def __init__(self, unresolvable: list, blame=frozenset(), reason: str = ""):
        self.unresolvable = unresolvable
        self.blame = frozenset(blame)
        text = reason or "; ".join(f"{a.side}:{a.node} {a.reason}" for a in unresolvable)
        super().__init__(text)


@dataclass
class _Side:
    name: str
    g: Pdg
    envs: dict
    typer: Typer
    mapped: dict  # own id -> other id


def _declared_in(g: Pdg, region) -> set:
    out = set()
    for n in region:
        s = g.nodes[n].stmt
        if isinstance(s, A.VarDecl):
            out.add(s.name)
        elif isinstance(s, A.ForEach):
            out.add(s.var)
    return out


def _free_vars(g: Pdg, region) -> set:
    names = set()
    for n in region:
        names |= g.defuse[n].uses | g.defuse[n].defs
    return names - _declared_in(g, region) - {THIS}


class _Separator:
    def __init__(self, ga, gb, m: NodeMapping, typer: Typer, reserved=frozenset()):
        self.a = _Side("a", ga, typer.method_envs(ga.method.cls, ga.decl), typer, m.a_to_b())
        self.b = _Side("b", gb, typer.method_envs(gb.method.cls, gb.decl), typer, m.b_to_a())
        self.typer = typer
        self.m = m
        self.sigma = m.substitution
        self.actions = []
        self.lambdas = []
        self.moves = {"a": [], "b": []}
        self.blame = set()
        self.orders = {}
        self.reserved = set(reserved)
        self.hooks_used = set()

    def pair_of(self, side, n):
        return (n, side.mapped[n]) if side.name == "a" else (side.mapped[n], n)

    def env_at(self, side, n):
        return side.envs.get(n, {})

    # -- top level moves

    def top_level(self, side: _Side) -> list:
        g = side.g
        order = g.children(g.entry, "body")
        mapped_ids = [n for n in order if n in side.mapped]
        if not mapped_ids:
            raise SeparationFailure([], reason="no statements in common")
        first, last = order.index(mapped_ids[0]), order.index(mapped_ids[-1])
        candidates = []
        for n in list(order[first + 1:last]):
            if n in side.mapped:
                continue
            mapped_now = [x for x in order if x in side.mapped]
            target = order.index(mapped_now[0])
            above = check_move(g, order, n, target)
            if above.legal:
                order = apply_order(order, n, target)
                self.moves[side.name].append((n, target))
                self.actions.append(Action(side.name, n, MOVE_ABOVE, moved=True))
                continue
            target = order.index(mapped_now[-1])
            below = check_move(g, order, n, target)
            if below.legal:
                order = apply_order(order, n, target)
                self.moves[side.name].append((n, target))
                self.actions.append(Action(side.name, n, MOVE_BELOW, moved=True))
                continue
            candidates.append((n, f"cannot move above ({above.reason}) or below ({below.reason})"))
        mapped_ids = [x for x in order if x in side.mapped]
        first, last = order.index(mapped_ids[0]), order.index(mapped_ids[-1])
        for n in order[:first]:
            if all(x != n for x, _ in self.moves[side.name]):
                self.actions.append(Action(side.name, n, MOVE_ABOVE))
        for n in order[last + 1:]:
            if all(x != n for x, _ in self.moves[side.name]):
                self.actions.append(Action(side.name, n, MOVE_BELOW))
        self.orders[(side.name, g.entry, "body")] = order
        return order[:first], order[first:last + 1], order[last + 1:], dict(candidates)

    # -- lambda interfaces

    def interface(self, side: _Side, n: int):
        """(style, result var, result type, params, fun result type, body size) or a reason string."""
        g = side.g
        region = g.subtree(n)
        ext = is_extractable(g, region)
        if not ext.ok:
            return ext.reason
        stmt = g.nodes[n].stmt
        env = self.env_at(side, n)
        out = [v for v in ext.out_vars if v != THIS]
        free = sorted(_free_vars(g, region))
        if any(v not in env for v in free):
            return "refers to variables not visible at the statement"
        if isinstance(stmt, A.VarDecl) and not out and not any(
                stmt.name in du.defs | du.uses for k, du in g.defuse.items() if k not in region):
            # a dead declaration moves into the lambda body whole
            params = tuple(A.Param(env[x], x) for x in free)
            return "effect", None, None, params, A.VOID
        if isinstance(stmt, A.VarDecl):
            if any(v != stmt.name for v in out):
                return f"declaration of {stmt.name} also writes {', '.join(out)}"
            params = tuple(A.Param(env[v], v) for v in free)
            return "decl", stmt.name, stmt.type, params, stmt.type
        if out:
            v = out[0]
            if v not in free:
                free = sorted(set(free) | {v})
            params = tuple(A.Param(env[x], x) for x in free)
            return "assign", v, env[v], params, env[v]
        params = tuple(A.Param(env[x], x) for x in free)
        if isinstance(stmt, A.ExprStmt):
            inner = dict(env)
            rt = self.typer.type_of(stmt.expr, inner, side.g.method.cls) or A.TypeRef("Object")
            return "effect", None, None, params, rt
        return "effect", None, None, params, A.VOID

    def rename(self, name: str) -> str:
        return self.sigma.rename_map.get(name, name)

    def b_interface_in_a_names(self, itf):
        style, result, rtype, params, ftype = itf
        return (style, None if result is None else self.rename(result), rtype,
                tuple(A.Param(p.type, self.rename(p.name)) for p in params), ftype)

    def try_pair(self, ia, ib, stmt_a, stmt_b) -> bool:
        if isinstance(ia, str) or isinstance(ib, str):
            return False
        b_names = [p.name for p in ib[3]]
        if ib[1] is not None:
            b_names.append(ib[1])
        sigma = self.sigma
        for bn in b_names:
            if bn not in sigma.rename_map:
                # only a declared result may gain a new rename
                if not (ib[0] == "decl" and bn == ib[1] and ia[0] == "decl"):
                    return False
                try:
                    sigma = sigma.with_rename(bn, ia[1])
                except UnificationFailure:
                    return False
        old, self.sigma = self.sigma, sigma
        ib2 = self.b_interface_in_a_names(ib)
        if ia != ib2:
            self.sigma = old
            return False
        return True

    def hook_name(self, ftype: A.TypeRef) -> str:
        base = "accept" if ftype.args[-1] == A.BOOLEAN else "hook"
        taken = self.reserved | self.hooks_used
        if base == "accept":
            name, i = "accept", 1
            while name in taken:
                i += 1
                name = f"accept{i}"
        else:
            i = 0
            while f"hook{i}" in taken:
                i += 1
            name = f"hook{i}"
        self.hooks_used.add(name)
        return name

    def spec(self, side, node, itf, partner=None, anchor=None, body_size=1):
        style, result, rtype, params, ret = itf
        ftype = A.fun_of([p.type for p in params], ret)
        return dict(side=side, node=node, fun_type=ftype, params=params, style=style,
                    result=result, result_type=rtype, partner=partner, anchor=anchor,
                    body_size=body_size)

    # -- block alignment

    def align_block(self, pa: int, pb: int, branch: str, seq_a: list, seq_b: list, tail_b: list,
                    base_b: int, top_candidates=None):
        """Align one pair of sibling blocks; ``seq_*`` are the span parts of each block."""
        ga, gb = self.a.g, self.b.g
        top_candidates = top_candidates or {}

        def slots(side, seq):
            out = {}
            cur = None
            for n in seq:
                if n in side.mapped:
                    cur = n if side.name == "a" else side.mapped[n]
                else:
                    out.setdefault(cur, []).append(n)
            return out

        cand_a, cand_b = slots(self.a, seq_a), slots(self.b, seq_b)
        paired_b = {}
        unpaired_a, unpaired_b = [], []
        itfs = {}
        for key in sorted(set(cand_a) | set(cand_b), key=lambda k: (k is not None, k or 0)):
            la, lb = cand_a.get(key, []), list(cand_b.get(key, []))
            for na in la:
                ia = itfs.setdefault(("a", na), self.interface(self.a, na))
                match = None
                for nb in lb:
                    ib = itfs.setdefault(("b", nb), self.interface(self.b, nb))
                    if self.try_pair(ia, ib, ga.nodes[na].stmt, gb.nodes[nb].stmt):
                        match = nb
                        break
                if match is not None:
                    lb.remove(match)
                    paired_b[na] = match
                else:
                    unpaired_a.append(na)
            for nb in lb:
                itfs.setdefault(("b", nb), self.interface(self.b, nb))
                unpaired_b.append(nb)

        failed = []
        for side, nodes in (("a", unpaired_a), ("b", unpaired_b)):
            for n in nodes:
                itf = itfs[(side, n)]
                g = ga if side == "a" else gb
                if isinstance(itf, str):
                    failed.append(Action(side, n, UNRESOLVABLE, reason=top_candidates.get(n, itf)
                                         if n in top_candidates else itf))
                    self._blame_node(side, n)
                elif itf[0] == "decl":
                    failed.append(Action(side, n, UNRESOLVABLE,
                                         reason="declaration has no counterpart in the other clone"))
                    self._blame_node(side, n)
                elif side == "b" and any(p.name not in self.sigma.rename_map for p in itf[3]):
                    failed.append(Action(side, n, UNRESOLVABLE,
                                         reason="uses variables without a counterpart in the other clone"))
                    self._blame_node(side, n)
                elif side == "a" and any(p.name not in self.sigma.rename_map.values() for p in itf[3]):
                    failed.append(Action(side, n, UNRESOLVABLE,
                                         reason="uses variables without a counterpart in the other clone"))
                    self._blame_node(side, n)
        if failed:
            self.actions.extend(failed)
            return

        # target token order, driven by A's sequence
        b_only_at = {}
        cur = None
        for n in seq_b:
            if n in self.b.mapped:
                cur = self.b.mapped[n]
            elif n in unpaired_b:
                b_only_at.setdefault(cur, []).append(n)
        tokens = [("b", n) for n in b_only_at.get(None, [])]
        for n in seq_a:
            if n in self.a.mapped:
                tokens.append(("m", n))
                tokens.extend(("b", x) for x in b_only_at.get(n, []))
            elif n in paired_b:
                tokens.append(("p", n))
            else:
                tokens.append(("a", n))

        # B reorders its existing statements to the token order
        want_b = []
        for kind, n in tokens:
            if kind == "m":
                want_b.append(self.a.mapped[n])
            elif kind == "p":
                want_b.append(paired_b[n])
            elif kind == "b":
                want_b.append(n)
        key = ("b", pb, branch)
        order = self.orders.get(key, gb.children(pb, branch))
        for k, nb in enumerate(want_b):
            idx = base_b + k
            if order[idx] == nb:
                continue
            mc = check_move(gb, order, nb, idx)
            if not mc.legal:
                if nb in self.b.mapped:
                    self.blame.add((self.b.mapped[nb], nb))
                if mc.edge is not None:
                    for x in (mc.edge.src, mc.edge.dst):
                        if x in self.b.mapped:
                            self.blame.add((self.b.mapped[x], x))
                raise SeparationFailure([], self.blame, f"cannot align {nb} in {self.b.g.method}: {mc.reason}")
            order = apply_order(order, nb, idx)
            self.moves["b"].append((nb, idx))
        self.orders[key] = order

        # anchors for insertions: next existing statement in each final block order
        a_order = self.orders.get(("a", pa, branch), ga.children(pa, branch))
        final_a = [n for kind, n in tokens if kind != "b"]
        self._emit_lambdas(tokens, paired_b, itfs, a_order, order, final_a, want_b, pa, pb, branch, seq_a,
                           seq_b, tail_b)

    def _emit_lambdas(self, tokens, paired_b, itfs, a_order, b_order, final_a, want_b, pa, pb, branch,
                      seq_a, seq_b, tail_b):
        a_after = a_order[a_order.index(seq_a[-1]) + 1:] if seq_a else []
        b_after = b_order[b_order.index(want_b[-1]) + 1:] if want_b else list(tail_b)

        def next_existing(existing_after_tokens, fallback_after, parent, br):
            if existing_after_tokens:
                return ("before", existing_after_tokens[0])
            if fallback_after:
                return ("before", fallback_after[0])
            return ("end", parent, br)

        for i, (kind, n) in enumerate(tokens):
            rest = tokens[i + 1:]
            if kind == "p":
                nb = paired_b[n]
                itf = itfs[("a", n)]
                size = len(self.a.g.subtree(n))
                hook = self.hook_name(A.fun_of([p.type for p in itf[3]], itf[4]))
                self.actions.append(Action("a", n, LAMBDA, partner=nb))
                self.actions.append(Action("b", nb, LAMBDA, partner=n))
                self.lambdas.append(LambdaSpec(hook=hook, **self.spec("a", n, itf, nb, body_size=size)))
                self.lambdas.append(LambdaSpec(hook=hook, **self.spec(
                    "b", nb, self.b_interface_in_a_names(itfs[("b", nb)]), n, body_size=size)))
            elif kind == "a":
                itf = itfs[("a", n)]
                hook = self.hook_name(A.fun_of([p.type for p in itf[3]], itf[4]))
                later_b = [self._b_of(k, x, paired_b) for k, x in rest if k != "a"]
                anchor = next_existing(later_b, b_after, pb, branch)
                self.actions.append(Action("a", n, LAMBDA))
                self.lambdas.append(LambdaSpec(hook=hook, **self.spec("a", n, itf, body_size=len(self.a.g.subtree(n)))))
                self.lambdas.append(LambdaSpec(hook=hook, **self.spec("b", None, itf, n, anchor)))
            elif kind == "b":
                itf = self.b_interface_in_a_names(itfs[("b", n)])
                hook = self.hook_name(A.fun_of([p.type for p in itf[3]], itf[4]))
                later_a = [x for k, x in rest if k != "b"]
                anchor = next_existing(later_a, a_after, pa, branch)
                self.actions.append(Action("b", n, LAMBDA))
                self.lambdas.append(LambdaSpec(hook=hook, **self.spec("b", n, itf, body_size=len(self.b.g.subtree(n)))))
                self.lambdas.append(LambdaSpec(hook=hook, **self.spec("a", None, itf, n, anchor)))

    def _b_of(self, kind, n, paired_b):
        if kind == "m":
            return self.a.mapped[n]
        if kind == "p":
            return paired_b[n]
        return n

    def _blame_node(self, side, n):
        s = self.a if side == "a" else self.b
        g = s.g
        region = g.subtree(n)
        for e in g.dependence_edges():
            for x, y in ((e.src, e.dst), (e.dst, e.src)):
                if x in region and y in s.mapped and y != g.entry:
                    self.blame.add(self.pair_of(s, y))
        parent = g.nodes[n].parent
        if parent in s.mapped and parent != g.entry:
            self.blame.add(self.pair_of(s, parent))
        for sib in g.siblings(n):
            if sib in s.mapped:
                self.blame.add(self.pair_of(s, sib))

    # -- driver

    def run(self) -> Separation:
        ga, gb = self.a.g, self.b.g
        pre_a, span_a, post_a, cand_a = self.top_level(self.a)
        pre_b, span_b, post_b, cand_b = self.top_level(self.b)
        self.align_block(ga.entry, gb.entry, "body", span_a, span_b, post_b, len(pre_b),
                         {**cand_a, **cand_b})
        for a in sorted(x for x in self.a.mapped if x != ga.entry):
            b = self.a.mapped[a]
            for (label, block_a), (_, block_b) in zip(ga.blocks(a), gb.blocks(b)):
                self.align_block(a, b, label, block_a, block_b, [], 0)
        # nodes nested under a lambda-extracted or moved statement travel with it
        bad = [x for x in self.actions if x.kind == UNRESOLVABLE]
        if bad:
            raise SeparationFailure(bad, self.blame)
        return Separation(self.actions, self.moves["a"], self.moves["b"], self.lambdas, self.sigma,
                          {"a": pre_a, "b": pre_b}, {"a": post_a, "b": post_b})


def separate_differences(ga: Pdg, gb: Pdg, m: NodeMapping, typer: Typer, reserved=frozenset()) -> Separation:
    """Assign a separation action to every unmapped statement whose parent is mapped.

    Raises SeparationFailure listing the unresolvable statements; its
    ``blame`` holds mapped pairs whose removal could help.
    """
    return _Separator(ga, gb, m, typer, reserved).run()

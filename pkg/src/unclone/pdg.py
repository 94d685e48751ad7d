"""Program dependence graphs for MiniJ methods.

Node ids are source lines; the entry node uses the method's declaration line
and is the definition site of all parameters (and of ``this``).

Invocations follow the receiver heuristic: a pure call reads its receiver, an
impure call reads and writes it.  State is tracked per receiver variable, with
no alias analysis.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .syntax import ast as A
from .syntax.binding import Typer
from .syntax.printer import stmt_header

EXIT = -(1 << 40)
THIS = "this"

CONTROL = "control"
DATA = "data"
ANTI = "anti"

_KIND = {
    A.VarDecl: "var-decl", A.Assign: "assign", A.ExprStmt: "call", A.If: "if",
    A.While: "while", A.ForEach: "for-each", A.Return: "return",
}


@dataclass(frozen=True)
class DefUse:
    defs: frozenset
    uses: frozenset
    # print, or an impure call whose effects on output are unknown
    writes_output: bool = False


def receiver_root(e) -> Optional[str]:
    """The variable whose state a receiver expression belongs to."""
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.This):
        return THIS
    if isinstance(e, A.FieldAccess):
        return receiver_root(e.receiver)
    if isinstance(e, A.Call):
        return THIS if e.receiver is None else receiver_root(e.receiver)
    return None


def lambda_free_vars(lam: A.Lambda) -> set:
    bound = {p.name for p in lam.params}
    names = set()
    body = lam.body
    if isinstance(body, tuple):
        for s in A.walk_stmts(body):
            if isinstance(s, A.VarDecl):
                bound.add(s.name)
            elif isinstance(s, A.ForEach):
                bound.add(s.var)
    for x in A.subexprs(lam):
        if isinstance(x, A.Var):
            names.add(x.name)
        elif isinstance(x, A.This):
            names.add(THIS)
        elif isinstance(x, A.Call) and x.receiver is None and x.method != "print":
            names.add(THIS)
    return names - bound


class _Collector:
    def __init__(self, typer: Typer, cls: str, env: dict):
        self.typer, self.cls, self.env = typer, cls, env
        self.defs, self.uses = set(), set()
        self.writes_output = False

    def expr(self, e) -> None:
        if isinstance(e, A.Var):
            self.uses.add(e.name)
        elif isinstance(e, A.This):
            self.uses.add(THIS)
        elif isinstance(e, A.FieldAccess):
            self.expr(e.receiver)
        elif isinstance(e, A.Call):
            info = self.typer.resolve_call(e, self.env, self.cls)
            if e.receiver is None:
                if e.method != "print":
                    self.uses.add(THIS)
                    if not info.pure:
                        self.defs.add(THIS)
            else:
                self.expr(e.receiver)
                if not info.pure:
                    root = receiver_root(e.receiver)
                    if root is not None:
                        self.defs.add(root)
                        self.uses.add(root)
            for a in e.args:
                self.expr(a)
            self.writes_output |= info.writes_output
        elif isinstance(e, A.New):
            for a in e.args:
                self.expr(a)
        elif isinstance(e, A.Unary):
            self.expr(e.operand)
        elif isinstance(e, A.Binary):
            self.expr(e.left)
            self.expr(e.right)
        elif isinstance(e, A.Lambda):
            # the body only runs when applied; creating the closure reads captures
            self.uses |= lambda_free_vars(e)


def def_use(s, typer: Typer, cls: str, env: dict) -> DefUse:
    """Variables written and read by statement ``s`` itself (nested blocks excluded).

    ``env`` holds the variable types visible before ``s``; it is needed to
    resolve invocations and their purity.  Raises UnknownCallee for calls
    that cannot be bound.
    """
    c = _Collector(typer, cls, env)
    if isinstance(s, A.VarDecl):
        c.expr(s.init)
        c.defs.add(s.name)
    elif isinstance(s, A.Assign):
        if isinstance(s.target, A.Var):
            c.expr(s.value)
            c.defs.add(s.target.name)
        else:
            c.expr(s.target.receiver)
            c.expr(s.value)
            root = receiver_root(s.target.receiver)
            c.defs.add(root)
            c.uses.add(root)
    elif isinstance(s, A.ExprStmt):
        c.expr(s.expr)
    elif isinstance(s, (A.If, A.While)):
        c.expr(s.cond)
    elif isinstance(s, A.ForEach):
        c.expr(s.iterable)
        c.defs.add(s.var)
    elif isinstance(s, A.Return):
        if s.value is not None:
            c.expr(s.value)
    else:
        raise TypeError(s)
    return DefUse(frozenset(c.defs), frozenset(c.uses), c.writes_output)


# -- control flow ----------------------------------------------------------


@dataclass
class Cfg:
    entry: int
    succ: dict = field(default_factory=dict)
    back_edges: set = field(default_factory=set)

    def add(self, a: int, b: int, back: bool = False) -> None:
        self.succ.setdefault(a, [])
        if b not in self.succ[a]:
            self.succ[a].append(b)
        self.succ.setdefault(b, [])
        if back:
            self.back_edges.add((a, b))

    def successors(self, n: int) -> list:
        return sorted(self.succ.get(n, ()), key=lambda x: (x == EXIT, x))

    def predecessors(self) -> dict:
        preds = {n: [] for n in self.succ}
        for a, bs in self.succ.items():
            for b in bs:
                preds[b].append(a)
        return preds

    @property
    def nodes(self) -> list:
        return list(self.succ)


def build_cfg(m: A.MethodDecl) -> Cfg:
    """Intra-procedural CFG over statement lines, plus ``EXIT``."""
    cfg = Cfg(m.line)
    cfg.succ.setdefault(m.line, [])

    def stmt(s, preds):
        for p in preds:
            cfg.add(p, s.line)
        cfg.succ.setdefault(s.line, [])
        if isinstance(s, A.If):
            out = seq(s.then, [s.line])
            out += seq(s.orelse, [s.line]) if s.orelse is not None else [s.line]
            return list(dict.fromkeys(out))
        if isinstance(s, (A.While, A.ForEach)):
            for b in seq(s.body, [s.line]):
                cfg.add(b, s.line, back=True)
            return [s.line]
        if isinstance(s, A.Return):
            cfg.add(s.line, EXIT)
            return []
        return [s.line]

    def seq(block, preds):
        for s in block:
            preds = stmt(s, preds)
        return preds

    for p in seq(m.body, [m.line]):
        cfg.add(p, EXIT)
    cfg.succ.setdefault(EXIT, [])
    return cfg


# -- dependence graph ------------------------------------------------------


@dataclass(frozen=True)
class PdgNode:
    id: int
    kind: str
    stmt: object  # None for the entry node
    parent: Optional[int]
    branch: str  # "body", "then" or "else" within the parent
    index: int  # position among siblings of the same branch


@dataclass(frozen=True, order=True)
class PdgEdge:
    src: int
    dst: int
    kind: str
    var: Optional[str] = None


@dataclass
class Pdg:
    method: A.MethodRef
    decl: A.MethodDecl
    entry: int
    nodes: dict
    edges: frozenset
    defuse: dict
    cfg: Cfg

    def children(self, nid: int, branch: Optional[str] = None) -> list:
        out = [n for n in self.nodes.values() if n.parent == nid and (branch is None or n.branch == branch)]
        return [n.id for n in sorted(out, key=lambda n: (n.branch == "else", n.index))]

    def blocks(self, nid: int) -> list:
        """(branch, ordered child ids) for each statement block owned by ``nid``."""
        if nid == self.entry:
            return [("body", self.children(nid, "body"))]
        return [(label, [s.line for s in block]) for label, block in A.child_blocks(self.nodes[nid].stmt)]

    def siblings(self, nid: int) -> list:
        n = self.nodes[nid]
        return self.children(n.parent, n.branch)

    def subtree(self, nid: int) -> set:
        out = {nid}
        stack = [nid]
        while stack:
            cur = stack.pop()
            for c in self.children(cur):
                out.add(c)
                stack.append(c)
        return out

    def control_parent(self, nid: int) -> Optional[int]:
        return self.nodes[nid].parent

    def edges_of(self, kind: str) -> set:
        return {e for e in self.edges if e.kind == kind}

    def dependence_edges(self) -> set:
        return {e for e in self.edges if e.kind != CONTROL}


def _flow(cfg: Cfg, gen, kill) -> dict:
    """Forward may-analysis; returns IN sets of (var, node) facts."""
    preds = cfg.predecessors()
    nodes = cfg.nodes
    out = {n: frozenset() for n in nodes}
    inn = {n: frozenset() for n in nodes}
    work = list(nodes)
    while work:
        n = work.pop(0)
        new_in = frozenset().union(*(out[p] for p in preds[n])) if preds[n] else frozenset()
        inn[n] = new_in
        killed = kill(n)
        new_out = gen(n) | frozenset(f for f in new_in if f[0] not in killed)
        if new_out != out[n]:
            out[n] = new_out
            work.extend(s for s in cfg.succ[n] if s not in work)
    return inn


def build_pdg(program: A.Program, ref: A.MethodRef, typer: Optional[Typer] = None) -> Pdg:
    typer = typer or Typer(program)
    m = program.method(ref)
    envs = typer.method_envs(ref.cls, m)
    nodes = {m.line: PdgNode(m.line, "entry", None, None, "body", 0)}
    defuse = {m.line: DefUse(frozenset([p.name for p in m.params] + [THIS]), frozenset())}
    edges = set()

    def visit(block, parent, branch):
        for i, s in enumerate(block):
            if s.line in nodes:
                raise ValueError(f"duplicate statement id {s.line} in {ref}")
            nodes[s.line] = PdgNode(s.line, _KIND[type(s)], s, parent, branch, i)
            defuse[s.line] = def_use(s, typer, ref.cls, envs[s.line])
            edges.add(PdgEdge(parent, s.line, CONTROL))
            for label, inner in A.child_blocks(s):
                visit(inner, s.line, label)

    visit(m.body, m.line, "body")
    cfg = build_cfg(m)
    none = DefUse(frozenset(), frozenset())
    du = lambda n: defuse.get(n, none)  # noqa: E731

    reach = _flow(cfg, lambda n: frozenset((v, n) for v in du(n).defs), lambda n: du(n).defs)
    for b in nodes:
        for v, a in reach[b]:
            if v in du(b).uses:
                edges.add(PdgEdge(a, b, DATA, v))

    exposed = _flow(cfg, lambda n: frozenset((v, n) for v in du(n).uses), lambda n: du(n).defs)
    for b in nodes:
        for v, a in exposed[b]:
            if v in du(b).defs:
                edges.add(PdgEdge(a, b, ANTI, v))

    return Pdg(ref, m, m.line, nodes, frozenset(edges), defuse, cfg)


def node_label(g: Pdg, nid: int) -> str:
    n = g.nodes[nid]
    if n.stmt is None:
        params = ", ".join(f"{p.type} {p.name}" for p in g.decl.params)
        return f"{nid}: entry {g.decl.name}({params})"
    return f"{nid}: {stmt_header(n.stmt)}"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(g: Pdg) -> str:
    lines = [f'digraph "{g.method}" {{', "    node [shape=box];"]
    for nid in sorted(g.nodes):
        lines.append(f'    n{_id(nid)} [label="{_dot_escape(node_label(g, nid))}"];')
    for e in sorted(g.edges, key=lambda e: (e.kind != CONTROL, e.src, e.dst, e.kind, e.var or "")):
        src, dst = _id(e.src), _id(e.dst)
        if e.kind == CONTROL:
            lines.append(f"    n{src} -> n{dst};")
        else:
            style = "dashed" if e.kind == DATA else "dotted"
            lines.append(f'    n{src} -> n{dst} [style={style}, label="{_dot_escape(e.var)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _id(nid: int) -> str:
    return str(nid) if nid >= 0 else f"m{-nid}"


def to_json(g: Pdg) -> str:
    nodes = [{"id": nid, "kind": g.nodes[nid].kind, "parent": g.nodes[nid].parent,
              "text": node_label(g, nid).split(": ", 1)[1]} for nid in sorted(g.nodes)]
    edges = []
    for e in sorted(g.edges):
        d = {"from": e.src, "to": e.dst, "kind": e.kind}
        if e.var is not None:
            d["var"] = e.var
        edges.append(d)
    return json.dumps({"method": str(g.method), "nodes": nodes, "edges": edges}, indent=2)

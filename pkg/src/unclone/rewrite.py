"""Apply refactoring steps to a program, checking each one.

Every step is validated by binding the result and by checking that its
canonical print parses back to the same tree.  ``apply_plan`` is all or
nothing: the first violated precondition aborts and the input is returned
untouched to the caller.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import MiniJError, PreconditionViolated
from .flow import can_move, is_extractable, NotContiguous
from .pdg import build_pdg
from .steps import (AdvisoryNote, ExtractLambda, ExtractMethod, GeneralizeType, IntroduceParameter,
                    IntroduceTypeParameter, MoveStatement, PullUpMethod, RedirectCall, RenameLocal,
                    ReorderParameters, _literal)
from .syntax import ast as A
from .syntax.ast import MethodRef, Program
from .syntax.binding import check_program
from .syntax.parser import parse_program
from .syntax.printer import print_canonical, print_stmt

_FIELD_OF = {"then": "then", "else": "orelse", "body": "body"}


# -- generic tree rewriting ------------------------------------------------


def map_expr(e, f: Callable):
    """Rebuild ``e`` bottom-up, applying ``f`` to every node (lambda bodies included)."""
    if isinstance(e, A.FieldAccess):
        e = replace(e, receiver=map_expr(e.receiver, f))
    elif isinstance(e, A.Call):
        e = replace(e, receiver=None if e.receiver is None else map_expr(e.receiver, f),
                    args=tuple(map_expr(a, f) for a in e.args))
    elif isinstance(e, A.New):
        e = replace(e, args=tuple(map_expr(a, f) for a in e.args))
    elif isinstance(e, A.Unary):
        e = replace(e, operand=map_expr(e.operand, f))
    elif isinstance(e, A.Binary):
        e = replace(e, left=map_expr(e.left, f), right=map_expr(e.right, f))
    elif isinstance(e, A.Lambda):
        body = map_block(e.body, lambda s: map_stmt_exprs(s, f)) if isinstance(e.body, tuple) \
            else map_expr(e.body, f)
        e = replace(e, body=body)
    return f(e)


def map_stmt_exprs(s, f):
    """Apply ``f`` through the header expressions of ``s`` (not nested blocks)."""
    if isinstance(s, A.VarDecl):
        return replace(s, init=map_expr(s.init, f))
    if isinstance(s, A.Assign):
        return replace(s, target=map_expr(s.target, f), value=map_expr(s.value, f))
    if isinstance(s, A.ExprStmt):
        return replace(s, expr=map_expr(s.expr, f))
    if isinstance(s, (A.If, A.While)):
        return replace(s, cond=map_expr(s.cond, f))
    if isinstance(s, A.ForEach):
        return replace(s, iterable=map_expr(s.iterable, f))
    if isinstance(s, A.Return):
        return s if s.value is None else replace(s, value=map_expr(s.value, f))
    raise TypeError(s)


def map_block(block, g: Callable) -> tuple:
    """Apply the statement transformer ``g`` to every statement, nested ones first."""
    out = []
    for s in block:
        for label, inner in A.child_blocks(s):
            s = replace(s, **{_FIELD_OF[label]: map_block(inner, g)})
        out.append(g(s))
    return tuple(out)


def edit_block_at(block, line: int, fn: Callable):
    """Rebuild ``block`` with ``fn(list_of_siblings, index)`` applied where ``line`` lives.

    Returns (new block, found flag).  Lambda bodies are not searched.
    """
    items = list(block)
    for i, s in enumerate(items):
        if s.line == line:
            return tuple(fn(items, i)), True
    for i, s in enumerate(items):
        for label, inner in A.child_blocks(s):
            new, found = edit_block_at(inner, line, fn)
            if found:
                items[i] = replace(s, **{_FIELD_OF[label]: new})
                return tuple(items), True
    return tuple(items), False


def edit_child_block(block, parent: int, branch: str, fn: Callable):
    """Apply ``fn(list)`` to the ``branch`` block of the statement at line ``parent``."""
    items = list(block)
    for i, s in enumerate(items):
        for label, inner in A.child_blocks(s):
            if s.line == parent and label == branch:
                items[i] = replace(s, **{_FIELD_OF[label]: tuple(fn(list(inner)))})
                return tuple(items), True
            new, found = edit_child_block(inner, parent, branch, fn)
            if found:
                items[i] = replace(s, **{_FIELD_OF[label]: new})
                return tuple(items), True
    return tuple(items), False


def find_stmt(block, line: int):
    for s in A.walk_stmts(block):
        if s.line == line:
            return s
    return None


def _all_stmts(block):
    """Every statement, including those inside lambda bodies."""
    for s in A.walk_stmts(block):
        yield s
        for h in A.header_exprs(s):
            for x in A.subexprs(h):
                if isinstance(x, A.Lambda) and isinstance(x.body, tuple):
                    yield from A.walk_stmts(x.body)


def method_names(m: A.MethodDecl) -> set:
    """Every local name declared anywhere in ``m``, lambda parameters included."""
    names = {p.name for p in m.params}
    for s in _all_stmts(m.body):
        if isinstance(s, A.VarDecl):
            names.add(s.name)
        elif isinstance(s, A.ForEach):
            names.add(s.var)
        for h in A.header_exprs(s):
            for x in A.subexprs(h):
                if isinstance(x, A.Lambda):
                    names.update(p.name for p in x.params)
    return names


def _min_line(p: Program) -> int:
    low = 0
    for c in p.classes:
        for m in c.methods:
            low = min(low, m.line)
            for s in _all_stmts(m.body):
                low = min(low, s.line)
    return low


class _Lines:
    """Synthetic (negative) lines for inserted statements."""

    def __init__(self, p: Program):
        self.next = _min_line(p) - 1

    def take(self) -> int:
        n = self.next
        self.next -= 1
        return n


def _fail(step, reason):
    raise PreconditionViolated(step, reason)


# -- individual steps ------------------------------------------------------


def _rename(step: RenameLocal, p: Program) -> Program:
    m = p.method(step.method)
    names = method_names(m)
    if step.old not in names:
        _fail(step, f"{step.old} is not a local of {step.method}")
    if step.new in names:
        _fail(step, f"{step.new} already names a local of {step.method}")
    old, new = step.old, step.new

    def decl(s):
        if isinstance(s, A.VarDecl) and s.name == old:
            return replace(s, name=new)
        if isinstance(s, A.ForEach) and s.var == old:
            return replace(s, var=new)
        return s

    def on_expr(e):
        if isinstance(e, A.Var) and e.name == old:
            return replace(e, name=new)
        if isinstance(e, A.Lambda):
            body = map_block(e.body, decl) if isinstance(e.body, tuple) else e.body
            return replace(e, params=tuple(replace(q, name=new) if q.name == old else q for q in e.params),
                           body=body)
        return e

    def on_stmt(s):
        return decl(map_stmt_exprs(s, on_expr))

    params = tuple(replace(q, name=new) if q.name == old else q for q in m.params)
    return p.replace_method(step.method, replace(m, params=params, body=map_block(m.body, on_stmt)))


def _replace_literal(s, index: int, expected, name: str, step):
    lits = A.header_literals(s)
    if index >= len(lits):
        _fail(step, f"statement {s.line} has no literal #{index}")
    target = lits[index]
    if type(target) is not type(expected) or target.value != expected.value:
        _fail(step, f"literal #{index} at {s.line} is not {expected.value!r}")
    hit = [False]

    def swap(e):
        # header_literals hands out the tree's own leaf objects
        if e is target and not hit[0]:
            hit[0] = True
            return A.Var(name)
        return e

    out = _map_preserving_leaves(s, swap)
    if not hit[0]:
        _fail(step, f"literal site {s.line}#{index} not found")
    return out


def _map_preserving_leaves(s, f):
    def walk(e):
        if isinstance(e, (A.IntLit, A.BoolLit, A.StrLit)):
            return f(e)
        if isinstance(e, A.FieldAccess):
            return replace(e, receiver=walk(e.receiver))
        if isinstance(e, A.Call):
            return replace(e, receiver=None if e.receiver is None else walk(e.receiver),
                           args=tuple(walk(a) for a in e.args))
        if isinstance(e, A.New):
            return replace(e, args=tuple(walk(a) for a in e.args))
        if isinstance(e, A.Unary):
            return replace(e, operand=walk(e.operand))
        if isinstance(e, A.Binary):
            return replace(e, left=walk(e.left), right=walk(e.right))
        if isinstance(e, A.Lambda):
            if isinstance(e.body, tuple):
                return replace(e, body=tuple(_walk_stmt_all(x, walk) for x in e.body))
            return replace(e, body=walk(e.body))
        return e
    return _header_map(s, walk)


def _walk_stmt_all(s, walk):
    s = _header_map(s, walk)
    for label, inner in A.child_blocks(s):
        s = replace(s, **{_FIELD_OF[label]: tuple(_walk_stmt_all(x, walk) for x in inner)})
    return s


def _header_map(s, walk):
    if isinstance(s, A.VarDecl):
        return replace(s, init=walk(s.init))
    if isinstance(s, A.Assign):
        return replace(s, target=walk(s.target), value=walk(s.value))
    if isinstance(s, A.ExprStmt):
        return replace(s, expr=walk(s.expr))
    if isinstance(s, (A.If, A.While)):
        return replace(s, cond=walk(s.cond))
    if isinstance(s, A.ForEach):
        return replace(s, iterable=walk(s.iterable))
    if isinstance(s, A.Return):
        return s if s.value is None else replace(s, value=walk(s.value))
    raise TypeError(s)


def _introduce_parameter(step: IntroduceParameter, p: Program, lines: _Lines) -> Program:
    m = p.method(step.method)
    if step.name in method_names(m):
        _fail(step, f"{step.name} already names a local of {step.method}")
    lit = _literal(step.value)
    body = m.body
    for line, index in step.sites:
        def fn(items, i, index=index):
            items[i] = _replace_literal(items[i], index, lit, step.name, step)
            return items
        body, found = edit_block_at(body, line, fn)
        if not found:
            _fail(step, f"no statement at line {line}")
    decl = A.VarDecl(step.type, step.name, lit, line=lines.take())
    return p.replace_method(step.method, replace(m, body=(decl,) + body))


def _generalize_type(step: GeneralizeType, p: Program) -> Program:
    m = p.method(step.method)
    site = step.site
    if site == "return":
        if m.return_type != step.old:
            _fail(step, f"return type is {m.return_type}, not {step.old}")
        return p.replace_method(step.method, replace(m, return_type=step.new))
    if isinstance(site, str) and site.startswith("param:"):
        i = int(site.split(":")[1])
        if i >= len(m.params) or m.params[i].type != step.old:
            _fail(step, f"parameter {i} is not of type {step.old}")
        params = list(m.params)
        params[i] = replace(params[i], type=step.new)
        return p.replace_method(step.method, replace(m, params=tuple(params)))

    def fn(items, i):
        s = items[i]
        if not isinstance(s, (A.VarDecl, A.ForEach)) or s.type != step.old:
            _fail(step, f"statement {site} does not declare type {step.old}")
        items[i] = replace(s, type=step.new)
        return items

    body, found = edit_block_at(m.body, site, fn)
    if not found:
        _fail(step, f"no statement at line {site}")
    return p.replace_method(step.method, replace(m, body=body))


def _introduce_type_parameter(step: IntroduceTypeParameter, p: Program) -> Program:
    m = p.method(step.method)
    if step.name in m.type_params or p.cls(step.name) is not None:
        _fail(step, f"type name {step.name} is taken")
    return p.replace_method(step.method, replace(m, type_params=m.type_params + (step.name,)))


def _reorder(step: ReorderParameters, p: Program) -> Program:
    m = p.method(step.method)
    perm = [i - 1 for i in step.permutation]
    if sorted(perm) != list(range(len(m.params))):
        _fail(step, "not a permutation of the parameters")
    owners = [c.name for c in p.classes if c.method(m.name) is not None]
    if owners != [step.method.cls]:
        _fail(step, f"method name {m.name} is declared in several classes")
    problems = []

    def on_expr(e):
        if isinstance(e, A.Call) and e.method == m.name and len(e.args) == len(perm):
            for a in e.args:
                if any(isinstance(x, (A.Call, A.New)) for x in A.subexprs(a)):
                    problems.append(a)
            return replace(e, args=tuple(e.args[j] for j in perm))
        return e

    classes = []
    for c in p.classes:
        methods = []
        for mm in c.methods:
            body = map_block(mm.body, lambda s: map_stmt_exprs(s, on_expr))
            if c.name == step.method.cls and mm.name == m.name:
                mm = replace(mm, params=tuple(mm.params[j] for j in perm))
            methods.append(replace(mm, body=body))
        classes.append(replace(c, methods=tuple(methods)))
    if problems:
        _fail(step, "a call site passes arguments with side effects")
    return Program(tuple(classes))


def _move(step: MoveStatement, p: Program) -> Program:
    m = p.method(step.method)
    g = build_pdg(p, step.method)
    if step.node not in g.nodes or step.node == g.entry:
        _fail(step, f"no statement {step.node}")
    try:
        check = can_move(g, step.node, step.new_index)
    except IndexError as e:
        _fail(step, str(e))
    if not check.legal:
        _fail(step, check.reason)

    def fn(items, i):
        s = items.pop(i)
        items.insert(step.new_index, s)
        return items

    body, _ = edit_block_at(m.body, step.node, fn)
    return p.replace_method(step.method, replace(m, body=body))


def _default_expr(t: A.TypeRef):
    if t == A.INT:
        return A.IntLit(0)
    if t == A.BOOLEAN:
        return A.BoolLit(False)
    return A.NullLit()


def _extract_lambda(step: ExtractLambda, p: Program, lines: _Lines) -> Program:
    m = p.method(step.method)
    if step.hook in method_names(m):
        _fail(step, f"{step.hook} already names a local of {step.method}")
    args = tuple(A.Var(q.name) for q in step.params)
    call = A.Call(A.Var(step.hook), "apply", args)
    result_t = step.fun_type.args[-1]
    body = m.body
    if step.node is not None:
        g = build_pdg(p, step.method)
        if step.node not in g.nodes or step.node == g.entry:
            _fail(step, f"no statement {step.node}")
        try:
            ext = is_extractable(g, g.subtree(step.node))
        except NotContiguous as e:
            _fail(step, str(e))
        if not ext.ok:
            _fail(step, ext.reason)
        outs = [v for v in ext.out_vars if v != "this"]
        if any(v != step.result for v in outs):
            _fail(step, f"statement writes {', '.join(outs)} used later")
        stmt = g.nodes[step.node].stmt
        line = stmt.line
        if step.style == "decl":
            if not isinstance(stmt, A.VarDecl):
                _fail(step, "not a declaration")
            fun_body, repl = stmt.init, A.VarDecl(stmt.type, stmt.name, call, line=line)
        elif step.style == "assign":
            if isinstance(stmt, A.Assign) and isinstance(stmt.target, A.Var) and stmt.target.name == step.result:
                fun_body = stmt.value
            else:
                fun_body = (stmt, A.Return(A.Var(step.result), line=lines.take()))
            repl = A.Assign(A.Var(step.result), call, line=line)
        else:
            fun_body = stmt.expr if isinstance(stmt, A.ExprStmt) else (stmt,)
            repl = A.ExprStmt(call, line=line)

        def fn(items, i):
            items[i] = repl
            return items
        body, _ = edit_block_at(body, step.node, fn)
    else:
        if step.style == "assign":
            fun_body = A.Var(step.result)
            new = A.Assign(A.Var(step.result), call, line=lines.take())
        elif step.style == "effect":
            fun_body = () if result_t == A.VOID else _default_expr(result_t)
            new = A.ExprStmt(call, line=lines.take())
        else:
            _fail(step, "a declaration cannot be mirrored by a no-op")
        body = _insert_at_anchor(step, m, body, new)
    lam = A.Lambda(tuple(step.params), fun_body)
    decl = A.VarDecl(step.fun_type, step.hook, lam, line=lines.take())
    return p.replace_method(step.method, replace(m, body=(decl,) + body))


def _insert_at_anchor(step, m, body, new):
    anchor = step.anchor
    if anchor is None:
        _fail(step, "no insertion point")
    if anchor[0] == "before":
        def fn(items, i):
            items.insert(i, new)
            return items
        body, found = edit_block_at(body, anchor[1], fn)
    else:
        _, parent, branch = anchor
        if parent == m.line:
            return body + (new,)

        def fn(items):
            return items + [new]
        body, found = edit_child_block(body, parent, branch, fn)
    if not found:
        _fail(step, f"insertion point {anchor} not found")
    return body


def _span(step, m: A.MethodDecl, first: int, last: int):
    lines = [s.line for s in m.body]
    if first not in lines or last not in lines:
        _fail(step, f"span {first}..{last} is not at the top level of {m.name}")
    i, j = lines.index(first), lines.index(last)
    if j < i:
        _fail(step, "span is reversed")
    return i, j


def _hierarchy_methods(p: Program, cls: str) -> set:
    """Method names in ``cls``, its ancestors and its descendants."""
    typer = check_program(p) if p.cls(cls) is not None else None
    related = set()
    if typer is not None:
        for c in p.classes:
            anc = typer.ancestors(c.name)
            if cls in anc or c.name in typer.ancestors(cls) or c.name == cls:
                related.add(c.name)
    names = set()
    for c in p.classes:
        if c.name in related:
            names.update(m.name for m in c.methods)
    return names


def _extract_method(step: ExtractMethod, p: Program, lines: _Lines) -> Program:
    src = p.method(step.source)
    i, j = _span(step, src, step.first, step.last)
    body = tuple(src.body[i:j + 1])
    if step.result is not None:
        body = body + (A.Return(A.Var(step.result), line=lines.take()),)
    if step.name in _hierarchy_methods(p, step.target):
        _fail(step, f"method name {step.name} is already used around {step.target}")
    new = A.MethodDecl(step.return_type, step.name, tuple(step.params), body, False,
                       tuple(step.type_params), line=lines.take())
    c = p.cls(step.target)
    if c is None:
        return Program(p.classes + (A.ClassDecl(step.target, None, (), (new,), line=lines.take()),))
    return p.replace_class(replace(c, methods=c.methods + (new,)))


def _pull_up(step: PullUpMethod, p: Program) -> Program:
    src, dst = p.cls(step.source), p.cls(step.target)
    if src is None or dst is None or src.method(step.name) is None:
        _fail(step, "unknown class or method")
    typer = check_program(p)
    if step.target == step.source or step.target not in typer.ancestors(step.source):
        _fail(step, f"{step.target} is not a superclass of {step.source}")
    if dst.method(step.name) is not None:
        _fail(step, f"{step.target} already has a method {step.name}")
    m = src.method(step.name)
    p = p.replace_class(replace(src, methods=tuple(x for x in src.methods if x.name != step.name)))
    dst = p.cls(step.target)
    return p.replace_class(replace(dst, methods=dst.methods + (m,)))


def _redirect(step: RedirectCall, p: Program) -> Program:
    m = p.method(step.method)
    owner = p.cls(step.owner)
    shared = owner.method(step.name) if owner is not None else None
    if shared is None:
        _fail(step, f"no method {step.owner}.{step.name}")
    i, j = _span(step, m, step.first, step.last)
    span = m.body[i:j + 1]
    mine = [print_stmt(s) for s in span]
    theirs = [print_stmt(s) for s in shared.body]
    extra = theirs[len(mine):]
    if theirs[:len(mine)] != mine or len(extra) > 1:
        _fail(step, f"statements {step.first}..{step.last} differ from {step.owner}.{step.name}")
    if extra and not (isinstance(shared.body[-1], A.Return) and isinstance(shared.body[-1].value, A.Var)):
        _fail(step, f"{step.owner}.{step.name} ends with more than the span")
    if len(step.args) != len(shared.params) or list(step.args) != [q.name for q in shared.params]:
        _fail(step, "arguments do not match the shared parameters")
    pre, post = list(m.body[:i]), list(m.body[j + 1:])
    args = []
    for name in step.args:
        if name in step.folded:
            found = [k for k, s in enumerate(pre) if isinstance(s, A.VarDecl) and s.name == name]
            if not found:
                _fail(step, f"no declaration of {name} before the span")
            args.append(pre.pop(found[0]).init)
        else:
            args.append(A.Var(name))
    recv = A.New(A.TypeRef(step.owner), ()) if step.utility else None
    call = A.Call(recv, step.name, tuple(args))
    line = span[0].line
    last = span[-1]
    if extra:
        ret = shared.body[-1]
        v = ret.value.name
        declared = [s for s in span if isinstance(s, A.VarDecl) and s.name == v]
        new = [A.VarDecl(declared[0].type, v, call, line=line)] if declared \
            else [A.Assign(A.Var(v), call, line=line)]
    elif isinstance(last, A.Return):
        if last.value is not None:
            new = [A.Return(call, line=line)]
        else:
            new = [A.ExprStmt(call, line=line)]
            if post:
                new.append(A.Return(None, line=last.line))
    else:
        new = [A.ExprStmt(call, line=line)]
    return p.replace_method(step.method, replace(m, body=tuple(pre + new + post)))


def _dispatch(p: Program, step, lines: _Lines) -> Program:
    if isinstance(step, RenameLocal):
        return _rename(step, p)
    if isinstance(step, IntroduceParameter):
        return _introduce_parameter(step, p, lines)
    if isinstance(step, GeneralizeType):
        return _generalize_type(step, p)
    if isinstance(step, IntroduceTypeParameter):
        return _introduce_type_parameter(step, p)
    if isinstance(step, ReorderParameters):
        return _reorder(step, p)
    if isinstance(step, MoveStatement):
        return _move(step, p)
    if isinstance(step, ExtractLambda):
        return _extract_lambda(step, p, lines)
    if isinstance(step, ExtractMethod):
        return _extract_method(step, p, lines)
    if isinstance(step, PullUpMethod):
        return _pull_up(step, p)
    if isinstance(step, RedirectCall):
        return _redirect(step, p)
    if isinstance(step, AdvisoryNote):
        return p
    raise TypeError(f"not a refactoring step: {step!r}")


def validate(p: Program, step=None) -> None:
    """The program must bind and survive a print/parse round trip."""
    try:
        check_program(p)
        again = parse_program(print_canonical(p))
    except MiniJError as e:
        raise PreconditionViolated(step, f"result is not well-formed: {e}") from e
    if again != p:
        raise PreconditionViolated(step, "result does not survive a print/parse round trip")


def apply_step(p: Program, step) -> Program:
    """Apply one step; raises PreconditionViolated without side effects."""
    try:
        out = _dispatch(p, step, _Lines(p))
    except KeyError as e:
        raise PreconditionViolated(step, f"unknown entity: {e}") from e
    except PreconditionViolated:
        raise
    except MiniJError as e:
        raise PreconditionViolated(step, str(e)) from e
    validate(out, step)
    return out


@dataclass
class RewriteResult:
    program: Program
    # (step, canonical text after the step); the input text comes first with no step
    trace: list = field(default_factory=list)

    def snapshots(self):
        return [text for _, text in self.trace]


def apply_plan(p: Program, plan) -> RewriteResult:
    """Left fold of apply_step; the first violation aborts with its step index."""
    steps = plan.steps if hasattr(plan, "steps") else list(plan)
    trace = [(None, print_canonical(p))]
    cur = p
    for k, step in enumerate(steps):
        try:
            cur = apply_step(cur, step)
        except PreconditionViolated as e:
            e.index = k
            raise
        trace.append((step, print_canonical(cur)))
    return RewriteResult(cur, trace)


def write_trace(result: RewriteResult, directory: str) -> list:
    """One file per step, ``NN-<stepkind>.minij``; ``00-original.minij`` holds the input."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for k, (step, text) in enumerate(result.trace):
        kind = "original" if step is None else step.kind
        path = os.path.join(directory, f"{k:02d}-{kind}.minij")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)
    return paths

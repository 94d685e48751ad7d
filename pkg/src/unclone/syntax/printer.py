"""Canonical pretty printer: 4-space indent, one statement per line."""
from __future__ import annotations

from . import ast as A

INDENT = "    "

_LEVEL = {
    "||": 1, "&&": 2, "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_UNARY_LEVEL = 7
_POSTFIX_LEVEL = 8


def _level(e) -> int:
    if isinstance(e, A.Lambda):
        return 0
    if isinstance(e, A.Binary):
        return _LEVEL[e.op]
    if isinstance(e, A.Unary):
        return _UNARY_LEVEL
    return 9


def quote(s: str) -> str:
    body = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def _params(params) -> str:
    return ", ".join(f"{p.type} {p.name}" for p in params)


def print_expr(e, depth: int = 0) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.StrLit):
        return quote(e.value)
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.FieldAccess):
        return f"{_receiver(e.receiver, depth)}.{e.field}"
    if isinstance(e, A.Call):
        args = ", ".join(print_expr(a, depth) for a in e.args)
        if e.receiver is None:
            return f"{e.method}({args})"
        return f"{_receiver(e.receiver, depth)}.{e.method}({args})"
    if isinstance(e, A.New):
        return f"new {e.type}({', '.join(print_expr(a, depth) for a in e.args)})"
    if isinstance(e, A.Unary):
        inner = print_expr(e.operand, depth)
        if _level(e.operand) < _UNARY_LEVEL:
            inner = f"({inner})"
        return f"{e.op}{inner}"
    if isinstance(e, A.Binary):
        lvl = _LEVEL[e.op]
        left = print_expr(e.left, depth)
        right = print_expr(e.right, depth)
        if _level(e.left) < lvl:
            left = f"({left})"
        # left-associative chain: an equal-level right operand needs parens
        if _level(e.right) <= lvl:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    if isinstance(e, A.Lambda):
        head = f"({_params(e.params)}) ->"
        if isinstance(e.body, tuple):
            lines = [head + " {"]
            for s in e.body:
                lines.extend(_stmt_lines(s, depth + 1))
            lines.append(INDENT * depth + "}")
            return "\n".join(lines)
        return f"{head} {print_expr(e.body, depth)}"
    raise TypeError(f"not an expression: {e!r}")


def _receiver(e, depth) -> str:
    text = print_expr(e, depth)
    return f"({text})" if _level(e) < _POSTFIX_LEVEL and not _is_atomic(e) else text


def _is_atomic(e) -> bool:
    return not isinstance(e, (A.Binary, A.Unary, A.Lambda))


def stmt_header(s) -> str:
    """One-line rendering of a statement without its nested blocks."""
    if isinstance(s, A.VarDecl):
        return f"{s.type} {s.name} = {print_expr(s.init)};"
    if isinstance(s, A.Assign):
        return f"{print_expr(s.target)} = {print_expr(s.value)};"
    if isinstance(s, A.ExprStmt):
        return f"{print_expr(s.expr)};"
    if isinstance(s, A.If):
        return f"if ({print_expr(s.cond)})"
    if isinstance(s, A.While):
        return f"while ({print_expr(s.cond)})"
    if isinstance(s, A.ForEach):
        return f"for ({s.type} {s.var} : {print_expr(s.iterable)})"
    if isinstance(s, A.Return):
        return "return;" if s.value is None else f"return {print_expr(s.value)};"
    raise TypeError(f"not a statement: {s!r}")


def _stmt_lines(s, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, A.If):
        lines = [f"{pad}if ({print_expr(s.cond, depth)}) {{"]
        lines += _block_lines(s.then, depth + 1)
        if s.orelse is not None:
            lines.append(f"{pad}}} else {{")
            lines += _block_lines(s.orelse, depth + 1)
        lines.append(pad + "}")
        return lines
    if isinstance(s, A.While):
        return ([f"{pad}while ({print_expr(s.cond, depth)}) {{"]
                + _block_lines(s.body, depth + 1) + [pad + "}"])
    if isinstance(s, A.ForEach):
        head = f"{pad}for ({s.type} {s.var} : {print_expr(s.iterable, depth)}) {{"
        return [head] + _block_lines(s.body, depth + 1) + [pad + "}"]
    if isinstance(s, A.VarDecl):
        return [f"{pad}{s.type} {s.name} = {print_expr(s.init, depth)};"]
    if isinstance(s, A.Assign):
        return [f"{pad}{print_expr(s.target, depth)} = {print_expr(s.value, depth)};"]
    if isinstance(s, A.ExprStmt):
        return [f"{pad}{print_expr(s.expr, depth)};"]
    if isinstance(s, A.Return):
        if s.value is None:
            return [pad + "return;"]
        return [f"{pad}return {print_expr(s.value, depth)};"]
    raise TypeError(f"not a statement: {s!r}")


def _block_lines(block, depth: int) -> list[str]:
    out = []
    for s in block:
        out.extend(_stmt_lines(s, depth))
    return out


def print_stmt(s, depth: int = 0) -> str:
    return "\n".join(_stmt_lines(s, depth))


def print_block(block, depth: int = 0) -> str:
    return "\n".join(_block_lines(block, depth))


def method_lines(m: A.MethodDecl, depth: int = 1) -> list[str]:
    pad = INDENT * depth
    mods = "pure " if m.pure else ""
    tps = f"<{', '.join(m.type_params)}> " if m.type_params else ""
    head = f"{pad}{mods}{tps}{m.return_type} {m.name}({_params(m.params)}) {{"
    return [head] + _block_lines(m.body, depth + 1) + [pad + "}"]


def print_method(m: A.MethodDecl) -> str:
    return "\n".join(method_lines(m, 0)) + "\n"


def print_canonical(program: A.Program) -> str:
    chunks = []
    for c in program.classes:
        head = f"class {c.name}" + (f" extends {c.superclass}" if c.superclass else "") + " {"
        lines = [head]
        for f in c.fields:
            lines.append(f"{INDENT}{f.type} {f.name};")
        for i, m in enumerate(c.methods):
            if i or c.fields:
                lines.append("")
            lines.extend(method_lines(m))
        lines.append("}")
        chunks.append("\n".join(lines) + "\n")
    return "\n".join(chunks)

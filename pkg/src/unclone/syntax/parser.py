"""Tokenizer and recursive-descent parser for MiniJ."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import MiniJSyntaxError
from . import ast as A

KEYWORDS = {
    "class", "extends", "pure", "int", "boolean", "String", "void", "if", "else",
    "while", "for", "return", "true", "false", "null", "this", "new",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\];,.:])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # int, str, ident, kw, op, eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise MiniJSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident" and text in KEYWORDS:
            tokens.append(Token("kw", text, line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unescape(text: str) -> str:
    out, i = [], 1
    while i < len(text) - 1:
        ch = text[i]
        if ch == "\\":
            i += 1
            out.append(_ESCAPES.get(text[i], text[i]))
        else:
            out.append(ch)
        i += 1
    return "".join(out)


class _Backtrack(Exception):
    pass


_PRECEDENCE = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]

_TYPE_KEYWORDS = ("int", "boolean", "String", "void")


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        # a speculative parse raises _Backtrack instead of a user-facing error
        self.speculating = 0

    # -- token plumbing

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, text: str, offset: int = 0) -> bool:
        t = self.tokens[min(self.pos + offset, len(self.tokens) - 1)]
        return t.kind in ("op", "kw") and t.text == text

    def accept(self, text: str) -> bool:
        if self.peek(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.peek(text):
            self.fail(f"unexpected {self.describe()}", [text])
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail(f"unexpected {self.describe()}", ["identifier"])
        t = self.tok
        self.pos += 1
        return t

    def describe(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.text)

    def fail(self, message, expected=()):
        if self.speculating:
            raise _Backtrack()
        raise MiniJSyntaxError(message, self.tok.line, self.tok.col, expected)

    def attempt(self, rule):
        """Run ``rule`` speculatively; restore position and return None on failure."""
        saved = self.pos
        self.speculating += 1
        try:
            return rule()
        except _Backtrack:
            self.pos = saved
            return None
        finally:
            self.speculating -= 1

    # -- declarations

    def program(self) -> A.Program:
        classes = []
        while self.tok.kind != "eof":
            classes.append(self.class_decl())
        if not classes:
            self.fail("empty program", ["class"])
        return A.Program(tuple(classes))

    def class_decl(self) -> A.ClassDecl:
        start = self.expect("class")
        name = self.ident().text
        superclass = self.ident().text if self.accept("extends") else None
        self.expect("{")
        fields, methods = [], []
        while not self.accept("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated class body", ["}"])
            member = self.member()
            (methods if isinstance(member, A.MethodDecl) else fields).append(member)
        return A.ClassDecl(name, superclass, tuple(fields), tuple(methods), start.line, start.col)

    def member(self):
        start = self.tok
        pure = self.accept("pure")
        type_params = ()
        if self.accept("<"):
            names = [self.ident().text]
            while self.accept(","):
                names.append(self.ident().text)
            self.expect(">")
            type_params = tuple(names)
        t = self.type()
        name = self.ident().text
        if not pure and not type_params and self.accept(";"):
            return A.FieldDecl(t, name)
        self.expect("(")
        params = []
        if not self.peek(")"):
            params.append(self.param())
            while self.accept(","):
                params.append(self.param())
        self.expect(")")
        body = self.block()
        return A.MethodDecl(t, name, tuple(params), body, pure, type_params, start.line, start.col)

    def param(self) -> A.Param:
        t = self.type()
        return A.Param(t, self.ident().text)

    def type(self) -> A.TypeRef:
        if self.tok.kind == "kw" and self.tok.text in _TYPE_KEYWORDS:
            name = self.tok.text
            self.pos += 1
        elif self.tok.kind == "ident":
            name = self.ident().text
        else:
            self.fail(f"unexpected {self.describe()}", ["type"])
        args = []
        if self.accept("<"):
            args.append(self.type())
            while self.accept(","):
                args.append(self.type())
            self.expect(">")
        return A.TypeRef(name, tuple(args))

    # -- statements

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated block", ["}"])
            stmts.append(self.statement())
        return tuple(stmts)

    def statement(self):
        start = self.tok
        ln, col = start.line, start.col
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = self.block() if self.accept("else") else None
            return A.If(cond, then, orelse, ln, col)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return A.While(cond, self.block(), ln, col)
        if self.accept("for"):
            self.expect("(")
            t = self.type()
            var = self.ident().text
            self.expect(":")
            iterable = self.expr()
            self.expect(")")
            return A.ForEach(t, var, iterable, self.block(), ln, col)
        if self.accept("return"):
            value = None if self.peek(";") else self.expr()
            self.expect(";")
            return A.Return(value, ln, col)

        decl = self.attempt(self._decl_head)
        if decl is not None:
            t, name = decl
            init = self.expr()
            self.expect(";")
            return A.VarDecl(t, name, init, ln, col)

        e = self.expr()
        if self.accept("="):
            if not isinstance(e, (A.Var, A.FieldAccess)):
                raise MiniJSyntaxError("invalid assignment target", ln, col)
            value = self.expr()
            self.expect(";")
            return A.Assign(e, value, ln, col)
        if not self.peek(";"):
            self.fail(f"unexpected {self.describe()}", [";", "="])
        if not isinstance(e, A.Call):
            raise MiniJSyntaxError("expression statement must be a method invocation", ln, col)
        self.expect(";")
        return A.ExprStmt(e, ln, col)

    def _decl_head(self):
        t = self.type()
        name = self.ident().text
        self.expect("=")
        return t, name

    # -- expressions

    def expr(self):
        if self.peek("("):
            lam = self.attempt(self._lambda_head)
            if lam is not None:
                if self.peek("{"):
                    return A.Lambda(lam, self.block())
                return A.Lambda(lam, self.expr())
        return self.binary(0)

    def _lambda_head(self):
        self.expect("(")
        params = []
        if not self.peek(")"):
            params.append(self.param())
            while self.accept(","):
                params.append(self.param())
        self.expect(")")
        self.expect("->")
        return tuple(params)

    def binary(self, level: int):
        if level == len(_PRECEDENCE):
            return self.unary()
        left = self.binary(level + 1)
        ops = _PRECEDENCE[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.tok.text
            self.pos += 1
            left = A.Binary(op, left, self.binary(level + 1))
        return left

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in A.UNARY_OPS:
            op = self.tok.text
            self.pos += 1
            return A.Unary(op, self.unary())
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while self.accept("."):
            name = self.ident().text
            if self.peek("("):
                e = A.Call(e, name, self.args())
            else:
                e = A.FieldAccess(e, name)
        return e

    def args(self) -> tuple:
        self.expect("(")
        out = []
        if not self.peek(")"):
            out.append(self.expr())
            while self.accept(","):
                out.append(self.expr())
        self.expect(")")
        return tuple(out)

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.pos += 1
            return A.IntLit(int(t.text))
        if t.kind == "str":
            self.pos += 1
            return A.StrLit(_unescape(t.text))
        if self.accept("true"):
            return A.BoolLit(True)
        if self.accept("false"):
            return A.BoolLit(False)
        if self.accept("null"):
            return A.NullLit()
        if self.accept("this"):
            return A.This()
        if self.accept("new"):
            typ = self.type()
            return A.New(typ, self.args())
        if t.kind == "ident":
            self.pos += 1
            if self.peek("("):
                return A.Call(None, t.text, self.args())
            return A.Var(t.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.fail(f"unexpected {self.describe()}", ["expression"])


def _check_lines(program: A.Program) -> None:
    for c in program.classes:
        for m in c.methods:
            last = m.line
            for s in A.walk_stmts(m.body):
                if s.line <= last:
                    raise MiniJSyntaxError(
                        "each statement must start on its own line", s.line, s.col)
                last = s.line


def parse_program(source: str, check: bool = True) -> A.Program:
    """Parse MiniJ source; with ``check`` also resolve names and purity."""
    p = Parser(source)
    program = p.program()
    _check_lines(program)
    if check:
        from .binding import check_program
        check_program(program)
    return program

"""Abstract syntax of MiniJ.

Nodes are frozen dataclasses, so ``==`` is structural equality.  Source
positions (``line``, ``col``) are excluded from comparison: two trees that
differ only in layout compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

BUILTIN_TYPES = ("int", "boolean", "String", "void")
GENERIC_BUILTINS = ("List", "Fun")


@dataclass(frozen=True)
class TypeRef:
    name: str
    args: tuple[TypeRef, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}<{', '.join(str(a) for a in self.args)}>"

    @property
    def is_primitive(self) -> bool:
        return self.name in ("int", "boolean")


INT = TypeRef("int")
BOOLEAN = TypeRef("boolean")
STRING = TypeRef("String")
VOID = TypeRef("void")


def list_of(t: TypeRef) -> TypeRef:
    return TypeRef("List", (t,))


def fun_of(params, result: TypeRef) -> TypeRef:
    return TypeRef("Fun", tuple(params) + (result,))


# -- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class NullLit:
    pass


@dataclass(frozen=True)
class This:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class FieldAccess:
    receiver: Expr
    field: str


@dataclass(frozen=True)
class Call:
    receiver: Optional[Expr]
    method: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class New:
    type: TypeRef
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Param:
    type: TypeRef
    name: str


@dataclass(frozen=True)
class Lambda:
    params: tuple[Param, ...]
    # an expression, or a tuple of statements for a block body
    body: Union[Expr, tuple]


Literal = Union[IntLit, BoolLit, StrLit, NullLit]
Expr = Union[IntLit, BoolLit, StrLit, NullLit, This, Var, FieldAccess, Call,
             New, Unary, Binary, Lambda]

LITERALS = (IntLit, BoolLit, StrLit, NullLit)
UNARY_OPS = ("!", "-")
BINARY_OPS = ("||", "&&", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%")


# -- statements ------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    type: TypeRef
    name: str
    init: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assign:
    target: Union[Var, FieldAccess]
    value: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExprStmt:
    expr: Call
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    orelse: Optional[tuple] = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ForEach:
    type: TypeRef
    var: str
    iterable: Expr
    body: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Stmt = Union[VarDecl, Assign, ExprStmt, If, While, ForEach, Return]
CONTROL_STMTS = (If, While, ForEach)


# -- declarations ----------------------------------------------------------


@dataclass(frozen=True)
class MethodDecl:
    return_type: TypeRef
    name: str
    params: tuple[Param, ...]
    body: tuple
    pure: bool = False
    type_params: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class FieldDecl:
    type: TypeRef
    name: str


@dataclass(frozen=True)
class ClassDecl:
    name: str
    superclass: Optional[str] = None
    fields: tuple[FieldDecl, ...] = ()
    methods: tuple[MethodDecl, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...] = ()

    def cls(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def method(self, ref: MethodRef) -> MethodDecl:
        c = self.cls(ref.cls)
        m = c.method(ref.name) if c is not None else None
        if m is None:
            raise KeyError(f"no method {ref}")
        return m

    def source_map(self) -> dict:
        """Map of (class, method, statement-line) keys to (line, column)."""
        out = {}
        for c in self.classes:
            out[(c.name,)] = (c.line, c.col)
            for m in c.methods:
                out[(c.name, m.name)] = (m.line, m.col)
                for s in walk_stmts(m.body):
                    out[(c.name, m.name, s.line)] = (s.line, s.col)
        return out

    def replace_class(self, new: ClassDecl) -> Program:
        return Program(tuple(new if c.name == new.name else c for c in self.classes))

    def replace_method(self, ref: MethodRef, new: MethodDecl) -> Program:
        c = self.cls(ref.cls)
        methods = tuple(new if m.name == ref.name else m for m in c.methods)
        return self.replace_class(ClassDecl(c.name, c.superclass, c.fields, methods, c.line, c.col))


@dataclass(frozen=True, order=True)
class MethodRef:
    cls: str
    name: str

    @classmethod
    def parse(cls, text: str) -> MethodRef:
        owner, sep, name = text.partition(".")
        if not sep or not owner or not name:
            raise ValueError(f"method reference must look like Class.method, got {text!r}")
        return cls(owner, name)

    def __str__(self) -> str:
        return f"{self.cls}.{self.name}"


# -- traversal helpers -----------------------------------------------------


def child_blocks(s) -> list[tuple[str, tuple]]:
    """Nested statement blocks of ``s`` with their branch label."""
    if isinstance(s, If):
        blocks = [("then", s.then)]
        if s.orelse is not None:
            blocks.append(("else", s.orelse))
        return blocks
    if isinstance(s, (While, ForEach)):
        return [("body", s.body)]
    return []


def walk_stmts(block) -> Iterator:
    """Pre-order walk of statements in ``block``; lambda bodies are not entered."""
    for s in block:
        yield s
        for _, inner in child_blocks(s):
            yield from walk_stmts(inner)


def header_exprs(s) -> tuple:
    """Expressions evaluated by the statement itself (not by nested blocks)."""
    if isinstance(s, VarDecl):
        return (s.init,)
    if isinstance(s, Assign):
        return (s.target, s.value)
    if isinstance(s, ExprStmt):
        return (s.expr,)
    if isinstance(s, (If, While)):
        return (s.cond,)
    if isinstance(s, ForEach):
        return (s.iterable,)
    if isinstance(s, Return):
        return () if s.value is None else (s.value,)
    raise TypeError(s)


def subexprs(e) -> Iterator:
    """Pre-order walk of an expression tree, entering lambda bodies."""
    yield e
    if isinstance(e, FieldAccess):
        yield from subexprs(e.receiver)
    elif isinstance(e, Call):
        if e.receiver is not None:
            yield from subexprs(e.receiver)
        for a in e.args:
            yield from subexprs(a)
    elif isinstance(e, New):
        for a in e.args:
            yield from subexprs(a)
    elif isinstance(e, Unary):
        yield from subexprs(e.operand)
    elif isinstance(e, Binary):
        yield from subexprs(e.left)
        yield from subexprs(e.right)
    elif isinstance(e, Lambda):
        if isinstance(e.body, tuple):
            for s in walk_stmts(e.body):
                for h in header_exprs(s):
                    yield from subexprs(h)
        else:
            yield from subexprs(e.body)


def header_literals(s) -> list:
    """Literals of a statement header in pre-order; indexes are literal sites."""
    out = []
    for h in header_exprs(s):
        out.extend(x for x in subexprs(h) if isinstance(x, (IntLit, BoolLit, StrLit)))
    return out

"""The MiniJ language: AST, parser, canonical printer, and binder."""
from .ast import *  # noqa: F401,F403
from .ast import MethodRef, Program, TypeRef
from .binding import Typer, check_program
from .parser import parse_program, tokenize
from .printer import print_canonical, print_expr, print_method, print_stmt, stmt_header

__all__ = [
    "MethodRef", "Program", "TypeRef", "Typer", "check_program", "parse_program",
    "tokenize", "print_canonical", "print_expr", "print_method", "print_stmt",
    "stmt_header",
]

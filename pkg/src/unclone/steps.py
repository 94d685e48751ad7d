"""Refactoring steps.  Each step names only entities that exist when it runs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .syntax import ast as A
from .syntax.ast import MethodRef
from .syntax.printer import print_expr


def _type(t) -> Optional[str]:
    return None if t is None else str(t)


@dataclass(frozen=True)
class RenameLocal:
    method: MethodRef
    old: str
    new: str
    kind = "rename-local"

    def describe(self) -> str:
        return f"rename local {self.old} to {self.new} in {self.method}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "old": self.old, "new": self.new}


@dataclass(frozen=True)
class IntroduceParameter:
    """Abstract literal ``sites`` of one method into a local ``name`` declared first.

    A site is (line, index) where index counts the literals still present in
    that statement header, in preorder.
    """
    method: MethodRef
    name: str
    type: A.TypeRef
    value: object
    sites: tuple
    kind = "introduce-parameter"

    def describe(self) -> str:
        lit = print_expr(_literal(self.value))
        return f"introduce parameter {self.type} {self.name} = {lit} in {self.method}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "name": self.name,
                "type": str(self.type), "value": self.value, "sites": [list(s) for s in self.sites]}


def _literal(v):
    if isinstance(v, bool):
        return A.BoolLit(v)
    if isinstance(v, int):
        return A.IntLit(v)
    return A.StrLit(v)


@dataclass(frozen=True)
class GeneralizeType:
    """Replace a declared type; ``site`` is a statement line, ``param:i`` or ``return``."""
    method: MethodRef
    site: object
    old: A.TypeRef
    new: A.TypeRef
    kind = "generalize-type"

    def describe(self) -> str:
        return f"generalize type {self.old} to {self.new} at {self.site} in {self.method}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "site": self.site,
                "from": str(self.old), "to": str(self.new)}


@dataclass(frozen=True)
class IntroduceTypeParameter:
    method: MethodRef
    name: str
    kind = "introduce-type-parameter"

    def describe(self) -> str:
        return f"introduce type parameter {self.name} in {self.method}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "name": self.name}


@dataclass(frozen=True)
class ReorderParameters:
    """``permutation[i]`` is the 1-based current position of the new i-th parameter."""
    method: MethodRef
    permutation: tuple
    kind = "reorder-parameters"

    def describe(self) -> str:
        return f"reorder parameters of {self.method} to {list(self.permutation)}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "permutation": list(self.permutation)}


@dataclass(frozen=True)
class MoveStatement:
    method: MethodRef
    node: int
    new_index: int
    kind = "move-statement"

    def describe(self) -> str:
        return f"move statement {self.node} to position {self.new_index} in {self.method}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "node": self.node, "new_index": self.new_index}


@dataclass(frozen=True)
class ExtractLambda:
    """Replace statement ``node`` by a call of a hook lambda declared first in the method.

    With ``node`` None a no-op hook call is inserted at ``anchor`` instead;
    it mirrors a lambda extracted in the other clone.
    """
    method: MethodRef
    node: Optional[int]
    hook: str
    fun_type: A.TypeRef
    params: tuple
    style: str
    result: Optional[str] = None
    result_type: Optional[A.TypeRef] = None
    anchor: Optional[tuple] = None
    kind = "extract-lambda"

    def describe(self) -> str:
        where = f"statement {self.node}" if self.node is not None else "a no-op counterpart"
        return f"extract lambda {self.hook} : {self.fun_type} from {where} in {self.method}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "node": self.node, "hook": self.hook,
                "fun_type": str(self.fun_type),
                "params": [f"{p.type} {p.name}" for p in self.params], "style": self.style,
                "result": self.result, "result_type": _type(self.result_type),
                "anchor": list(self.anchor) if self.anchor else None}


@dataclass(frozen=True)
class ExtractMethod:
    """Create ``target.name`` from the statements ``first``..``last`` of ``source``."""
    target: str
    name: str
    params: tuple
    source: MethodRef
    first: int
    last: int
    return_type: A.TypeRef
    result: Optional[str] = None
    type_params: tuple = ()
    kind = "extract-method"

    def describe(self) -> str:
        ps = ", ".join(f"{p.type} {p.name}" for p in self.params)
        return (f"extract method {self.return_type} {self.target}.{self.name}({ps}) "
                f"from statements {self.first}..{self.last} of {self.source}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target, "name": self.name,
                "params": [f"{p.type} {p.name}" for p in self.params], "source": str(self.source),
                "span": [self.first, self.last], "return_type": str(self.return_type),
                "result": self.result, "type_params": list(self.type_params)}


@dataclass(frozen=True)
class PullUpMethod:
    source: str
    target: str
    name: str
    kind = "pull-up-method"

    def describe(self) -> str:
        return f"pull up method {self.name} from {self.source} to {self.target}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "from": self.source, "to": self.target, "method": self.name}


@dataclass(frozen=True)
class RedirectCall:
    """Replace ``first``..``last`` of ``method`` with one call of ``owner.name``.

    Arguments are the named locals; those in ``folded`` are hook or literal
    declarations whose initializers are passed directly.
    """
    method: MethodRef
    owner: str
    name: str
    args: tuple
    first: int
    last: int
    folded: tuple = ()
    utility: bool = False
    kind = "redirect-call"

    def describe(self) -> str:
        return f"redirect {self.method} to {self.owner}.{self.name}({', '.join(self.args)})"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "method": str(self.method), "owner": self.owner, "name": self.name,
                "args": list(self.args), "span": [self.first, self.last], "folded": list(self.folded),
                "utility": self.utility}


@dataclass(frozen=True)
class AdvisoryNote:
    text: str
    kind = "advisory"

    def describe(self) -> str:
        return f"note: {self.text}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "text": self.text}


STEP_TYPES = (RenameLocal, IntroduceParameter, GeneralizeType, IntroduceTypeParameter, ReorderParameters,
              MoveStatement, ExtractLambda, ExtractMethod, PullUpMethod, RedirectCall, AdvisoryNote)

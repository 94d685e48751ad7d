"""Name resolution, light type inference, and purity checking.

MiniJ has no overloading, so a call resolves from the receiver's static type
and the method name alone.  Types are only inferred far enough to bind calls
and fields; assignment compatibility is not checked.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import BindingError, UnknownCallee
from . import ast as A

OBJECT = "Object"

LIST_METHODS = {
    # name: (arity, pure)
    "add": (1, False),
    "get": (1, True),
    "size": (0, True),
    "isEmpty": (0, True),
}


@dataclass(frozen=True)
class CallInfo:
    """What a resolved invocation does."""
    return_type: Optional[A.TypeRef]
    pure: bool
    # may append to observable output (print, or an impure call whose body is not inspected)
    writes_output: bool
    owner: Optional[str] = None  # declaring class of a user method


class Typer:
    def __init__(self, program: A.Program):
        self.program = program
        self.classes = {c.name: c for c in program.classes}

    # -- hierarchy

    def ancestors(self, name: str) -> list[str]:
        """``name`` followed by its superclasses, nearest first."""
        out = []
        seen = set()
        while name is not None and name in self.classes and name not in seen:
            seen.add(name)
            out.append(name)
            name = self.classes[name].superclass
        return out

    def is_class(self, name: str) -> bool:
        return name in self.classes

    def common_ancestor(self, a: str, b: str) -> Optional[str]:
        bs = set(self.ancestors(b))
        for c in self.ancestors(a):
            if c in bs:
                return c
        return None

    def lookup_method(self, cls: str, name: str):
        for c in self.ancestors(cls):
            m = self.classes[c].method(name)
            if m is not None:
                return c, m
        return None

    def all_fields(self, cls: str) -> list[A.FieldDecl]:
        out = []
        for c in reversed(self.ancestors(cls)):
            out.extend(self.classes[c].fields)
        return out

    def field_type(self, cls: str, name: str) -> Optional[A.TypeRef]:
        for f in self.all_fields(cls):
            if f.name == name:
                return f.type
        return None

    # -- types

    def check_type(self, t: A.TypeRef, tparams=()) -> None:
        if t.name in A.BUILTIN_TYPES or t.name in tparams:
            if t.args:
                raise BindingError(f"type {t.name} takes no type arguments")
            return
        if t.name == "List":
            if len(t.args) != 1:
                raise BindingError("List takes exactly one type argument")
        elif t.name == "Fun":
            if not t.args:
                raise BindingError("Fun needs at least a result type")
        elif t.name in self.classes or t.name == OBJECT:
            if t.args:
                raise BindingError(f"class {t.name} is not generic")
        else:
            raise BindingError(f"unknown type {t.name}")
        for a in t.args:
            self.check_type(a, tparams)

    def type_of(self, e, env: dict, cls: str) -> Optional[A.TypeRef]:
        if isinstance(e, A.IntLit):
            return A.INT
        if isinstance(e, A.BoolLit):
            return A.BOOLEAN
        if isinstance(e, A.StrLit):
            return A.STRING
        if isinstance(e, A.NullLit):
            return None
        if isinstance(e, A.This):
            return A.TypeRef(cls)
        if isinstance(e, A.Var):
            if e.name not in env:
                raise BindingError(f"unknown variable {e.name}")
            return env[e.name]
        if isinstance(e, A.FieldAccess):
            rt = self.type_of(e.receiver, env, cls)
            if rt is None or rt.name not in self.classes:
                raise BindingError(f"field access .{e.field} on non-object type {rt}")
            ft = self.field_type(rt.name, e.field)
            if ft is None:
                raise BindingError(f"class {rt.name} has no field {e.field}")
            return ft
        if isinstance(e, A.Call):
            for a in e.args:
                self.type_of(a, env, cls)
            return self.resolve_call(e, env, cls).return_type
        if isinstance(e, A.New):
            for a in e.args:
                self.type_of(a, env, cls)
            if e.type.name == "List":
                self.check_type(e.type)
                if e.args:
                    raise BindingError("new List takes no arguments")
            elif e.type.name in self.classes:
                if len(e.args) > len(self.all_fields(e.type.name)):
                    raise BindingError(f"too many constructor arguments for {e.type.name}")
            else:
                raise BindingError(f"cannot instantiate {e.type}")
            return e.type
        if isinstance(e, A.Unary):
            self.type_of(e.operand, env, cls)
            return A.BOOLEAN if e.op == "!" else A.INT
        if isinstance(e, A.Binary):
            lt = self.type_of(e.left, env, cls)
            rt = self.type_of(e.right, env, cls)
            if e.op == "+" and A.STRING in (lt, rt):
                return A.STRING
            if e.op in ("+", "-", "*", "/", "%"):
                return A.INT
            return A.BOOLEAN
        if isinstance(e, A.Lambda):
            inner = dict(env)
            for p in e.params:
                inner[p.name] = p.type
            if isinstance(e.body, tuple):
                result = self._check_block(e.body, inner, cls, None, (), lambda_body=True)
                rt = result if result is not None else A.VOID
            else:
                rt = self.type_of(e.body, inner, cls) or A.TypeRef(OBJECT)
            return A.fun_of([p.type for p in e.params], rt)
        raise TypeError(e)

    def resolve_call(self, call: A.Call, env: dict, cls: str) -> CallInfo:
        if call.receiver is None:
            if call.method == "print":
                if len(call.args) != 1:
                    raise BindingError("print takes one argument")
                return CallInfo(A.VOID, pure=False, writes_output=True)
            found = self.lookup_method(cls, call.method)
            if found is None:
                raise UnknownCallee(f"no method {call.method} in class {cls}")
            return self._user_call(found, call)
        rt = self.type_of(call.receiver, env, cls)
        if rt is None:
            raise UnknownCallee(f"cannot resolve receiver of {call.method}")
        if rt.name == "List":
            spec = LIST_METHODS.get(call.method)
            if spec is None or spec[0] != len(call.args):
                raise UnknownCallee(f"List has no method {call.method}/{len(call.args)}")
            ret = {"add": A.VOID, "get": rt.args[0] if rt.args else None,
                   "size": A.INT, "isEmpty": A.BOOLEAN}[call.method]
            return CallInfo(ret, pure=spec[1], writes_output=False)
        if rt.name == "Fun":
            if call.method != "apply" or len(call.args) != len(rt.args) - 1:
                raise UnknownCallee(f"Fun has no method {call.method}/{len(call.args)}")
            # the bound lambda is not known statically: treat as impure
            return CallInfo(rt.args[-1], pure=False, writes_output=True)
        if rt.name in self.classes:
            found = self.lookup_method(rt.name, call.method)
            if found is None:
                raise UnknownCallee(f"no method {call.method} in class {rt.name}")
            return self._user_call(found, call)
        raise UnknownCallee(f"type {rt} has no method {call.method}")

    def _user_call(self, found, call) -> CallInfo:
        owner, m = found
        if m.arity != len(call.args):
            raise BindingError(f"{owner}.{m.name} expects {m.arity} arguments, got {len(call.args)}")
        ret = None if m.return_type.name in m.type_params else m.return_type
        return CallInfo(ret, pure=m.pure, writes_output=not m.pure, owner=owner)

    # -- statements

    def _check_block(self, block, env, cls, method, tparams, lambda_body=False, envs=None):
        """Check a block; returns the type of the first returned value, if any."""
        env = dict(env)
        ret = None
        for s in block:
            if envs is not None:
                envs[s.line] = dict(env)
            r = self._check_stmt(s, env, cls, method, tparams, lambda_body, envs)
            if ret is None and r is not None:
                ret = r
        return ret

    def _declare(self, env, name, t, lambda_body):
        if name in env and not lambda_body:
            raise BindingError(f"variable {name} is already defined")
        env[name] = t

    def _check_stmt(self, s, env, cls, method, tparams, lambda_body, envs):
        ty = lambda e: self.type_of(e, env, cls)  # noqa: E731
        if isinstance(s, A.VarDecl):
            self.check_type(s.type, tparams)
            ty(s.init)
            self._declare(env, s.name, s.type, lambda_body)
        elif isinstance(s, A.Assign):
            if isinstance(s.target, A.Var) and s.target.name not in env:
                raise BindingError(f"assignment to undeclared variable {s.target.name}")
            ty(s.target)
            ty(s.value)
        elif isinstance(s, A.ExprStmt):
            ty(s.expr)
        elif isinstance(s, (A.If, A.While)):
            ct = ty(s.cond)
            if ct is not None and ct != A.BOOLEAN:
                raise BindingError(f"condition must be boolean, got {ct}")
            for _, inner in A.child_blocks(s):
                self._check_block(inner, env, cls, method, tparams, lambda_body, envs)
        elif isinstance(s, A.ForEach):
            self.check_type(s.type, tparams)
            it = ty(s.iterable)
            if it is not None and it.name != "List":
                raise BindingError(f"for-each needs a List, got {it}")
            inner = dict(env)
            self._declare(inner, s.var, s.type, lambda_body)
            self._check_block(s.body, inner, cls, method, tparams, lambda_body, envs)
        elif isinstance(s, A.Return):
            if s.value is None:
                if method is not None and method.return_type != A.VOID:
                    raise BindingError(f"method {method.name} must return a value")
                return None
            t = ty(s.value)
            if method is not None and method.return_type == A.VOID:
                raise BindingError(f"void method {method.name} cannot return a value")
            return t if t is not None else A.TypeRef(OBJECT)
        return None

    def method_env(self, m: A.MethodDecl) -> dict:
        return {p.name: p.type for p in m.params}

    def method_envs(self, cls: str, m: A.MethodDecl) -> dict:
        """Variables visible before each body statement, keyed by statement line."""
        envs = {}
        self._check_block(m.body, self.method_env(m), cls, m, m.type_params, envs=envs)
        return envs

    def check_method(self, cls: str, m: A.MethodDecl) -> None:
        names = [p.name for p in m.params]
        if len(set(names)) != len(names):
            raise BindingError(f"duplicate parameter name in {cls}.{m.name}")
        self.check_type(m.return_type, m.type_params)
        for p in m.params:
            self.check_type(p.type, m.type_params)
        envs = self.method_envs(cls, m)
        if m.pure:
            self._check_purity(cls, m, envs)

    def _check_purity(self, cls, m, envs) -> None:
        for s in A.walk_stmts(m.body):
            env = envs[s.line]
            if isinstance(s, A.ForEach):
                env = dict(env)
            if isinstance(s, A.Assign) and isinstance(s.target, A.FieldAccess):
                raise BindingError(f"pure method {cls}.{m.name} assigns a field")
            for h in A.header_exprs(s):
                for call in _calls_outside_lambdas(h):
                    info = self.resolve_call(call, env, cls)
                    if not info.pure:
                        raise BindingError(
                            f"pure method {cls}.{m.name} calls impure {call.method}")


def _calls_outside_lambdas(e):
    if isinstance(e, A.Lambda):
        return
    if isinstance(e, A.Call):
        yield e
        if e.receiver is not None:
            yield from _calls_outside_lambdas(e.receiver)
        for a in e.args:
            yield from _calls_outside_lambdas(a)
    elif isinstance(e, A.FieldAccess):
        yield from _calls_outside_lambdas(e.receiver)
    elif isinstance(e, A.New):
        for a in e.args:
            yield from _calls_outside_lambdas(a)
    elif isinstance(e, A.Unary):
        yield from _calls_outside_lambdas(e.operand)
    elif isinstance(e, A.Binary):
        yield from _calls_outside_lambdas(e.left)
        yield from _calls_outside_lambdas(e.right)


def calls_outside_lambdas(e):
    return list(_calls_outside_lambdas(e))


def check_program(program: A.Program) -> Typer:
    """Validate names, hierarchy, and purity; raises BindingError."""
    seen = set()
    for c in program.classes:
        if c.name in seen or c.name in A.BUILTIN_TYPES + A.GENERIC_BUILTINS + (OBJECT,):
            raise BindingError(f"duplicate or reserved class name {c.name}")
        seen.add(c.name)
    typer = Typer(program)
    for c in program.classes:
        if c.superclass is not None and c.superclass != OBJECT and c.superclass not in seen:
            raise BindingError(f"class {c.name} extends unknown class {c.superclass}")
        if c.name in typer.ancestors(c.superclass) if c.superclass else False:
            raise BindingError(f"cyclic inheritance at {c.name}")
        names = [m.name for m in c.methods]
        if len(set(names)) != len(names):
            raise BindingError(f"duplicate method name in class {c.name}")
        fnames = [f.name for f in c.fields]
        if len(set(fnames)) != len(fnames):
            raise BindingError(f"duplicate field name in class {c.name}")
        for f in c.fields:
            typer.check_type(f.type)
    for c in program.classes:
        for m in c.methods:
            typer.check_method(c.name, m)
    return typer
